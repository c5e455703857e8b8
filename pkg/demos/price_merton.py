"""Price a European call under lognormal jumps and check it against the
jump-count series oracle.

Runs a short ladder of simultaneous (dt, h) halvings so the observed
convergence order is visible next to the errors.  Takes a few seconds.
"""
import math

from levypide.measures import make_merton
from levypide.pricing import MarketSpec, merton_series_oracle, price_european
from levypide.solver import SchemeConfig


def main() -> None:
    market = MarketSpec(S0=100.0, K=100.0, T=1.0, r=0.05, sigma=0.2,
                        option_type="call")
    jumps = (0.5, -0.1, 0.2)  # intensity, jump mean, jump std (log space)
    measure = make_merton(*jumps)

    oracle = merton_series_oracle(market, jumps)
    print(f"series oracle     : {oracle:.10f}")

    prev = None
    for n_core, dt in ((512, 4e-2), (1024, 2e-2), (2048, 1e-2)):
        res = price_european(market, measure, n_core=n_core,
                             scheme=SchemeConfig(dt=dt))
        err = abs(res.price - oracle) / oracle
        order = "" if prev is None else f"  order {math.log2(prev / err):.2f}"
        print(f"n={n_core:5d} dt={dt:.3g}: price {res.price:.10f}"
              f"  rel err {err:.3e}{order}")
        prev = err


if __name__ == "__main__":
    main()
