"""Market-coordinate layer: contract specs, transforms, and price assembly.

Prices live in spot/calendar coordinates (S, t); the solver works in
log-moneyness and time-to-maturity, x = ln(S/K), tau = T - t, with the
discounting peeled off: V(t, S) = e^(-r tau) u(tau, x).  This module owns
that round trip, the jump-compensated closed-form series for lognormal jump
sizes (the solver's independent ground truth), and a one-call European
pricer.

The series and the solver share one drift convention: the first-order
coefficient compensates the jump expectation with integral (e^z - 1) nu(dz),
so both price the same martingale dynamics.  The convention is settable on
CauchyProblem (delta_sign) but the series is only valid for the default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blackscholes import BlackScholesClosedForm
from .errors import (NoSolutionError, ParameterDomainError,
                     ToleranceNotMetError)
from .grids import Grid, GridField, field_interp, make_grid
from .measures import LevyMeasure
from .shift import ShiftModel
from .solver import CauchyProblem, SchemeConfig, SolveResult, solve_shifted

__all__ = [
    "MarketSpec", "PriceResult", "transform_to_pide", "report_price",
    "bs_closed_form", "merton_series_oracle", "price_european",
    "estimate_reach",
]


@dataclass(frozen=True)
class MarketSpec:
    """European option contract and flat market parameters."""

    S0: float
    K: float
    T: float
    r: float
    sigma: float
    option_type: str = "call"

    def __post_init__(self):
        if self.S0 <= 0:
            raise ParameterDomainError("spot S0 must be positive")
        if self.K <= 0:
            raise ParameterDomainError("strike K must be positive")
        if self.T <= 0:
            raise ParameterDomainError("maturity T must be positive")
        if self.sigma <= 0:
            raise ParameterDomainError("volatility sigma must be positive")
        if self.option_type not in ("call", "put"):
            raise ParameterDomainError("option_type must be call or put")

    @property
    def log_moneyness(self) -> float:
        return math.log(self.S0 / self.K)


@dataclass(frozen=True)
class PriceResult:
    """Price in spot coordinates plus the solve it came from."""

    price: float
    market: MarketSpec
    result: SolveResult


def transform_to_pide(market: MarketSpec, grid: Grid,
                      measure: LevyMeasure | None = None,
                      shift: ShiftModel | None = None,
                      delta_sign: float = -1.0) -> CauchyProblem:
    """Market data to forward Cauchy problem on the supplied grid.

    The initial field is the payoff in log-moneyness units (K(e^x - 1)^+ or
    K(1 - e^x)^+); shifted solves ignore it and regenerate the closed form
    internally, direct experiments can march it as-is.
    """
    bs = BlackScholesClosedForm(market.K, market.r, market.sigma,
                                market.option_type)
    payoff = GridField(grid, bs.payoff(grid.axis()), 0.0) if grid.dim == 1 \
        else None
    return CauchyProblem(grid=grid, sigma=market.sigma, horizon=market.T,
                         rate=market.r, measure=measure, shift=shift,
                         initial=payoff, strike=market.K,
                         option_type=market.option_type,
                         delta_sign=delta_sign)


def report_price(market: MarketSpec, result: SolveResult) -> float:
    """V(0, S0) = e^(-rT) u(T, ln(S0/K)), cubic-interpolated off-node."""
    u = field_interp(result.field, np.array([market.log_moneyness]))
    return float(math.exp(-market.r * market.T) * u[0])


def bs_closed_form(market: MarketSpec) -> float:
    """Jump-free closed-form price of the contract."""
    bs = BlackScholesClosedForm(market.K, market.r, market.sigma,
                                market.option_type)
    return float(bs.price(market.S0, market.T))


def merton_series_oracle(market: MarketSpec, merton, terms: int = 120,
                         tail_tol: float = 1e-12) -> float:
    """Closed-form price under lognormal jumps by conditioning on jump count.

    merton is (intensity, jump_mean, jump_std).  Each count k contributes a
    Poisson-weighted price with variance and rate adjusted by the realized
    jumps; the drift uses the compensator kappa = e^(m + s^2/2) - 1 matching
    the solver's convention.  The series is summed until the remaining
    Poisson tail is below tail_tol relative; exhausting `terms` first raises
    a tolerance error.
    """
    lam, m, s = (float(v) for v in merton)
    if lam < 0 or s < 0:
        raise ParameterDomainError("need intensity >= 0 and jump_std >= 0")
    if terms < 30:
        raise ParameterDomainError("terms must be at least 30")
    gexp = m + 0.5 * s * s
    kappa = math.expm1(gexp)
    lam_star = lam * (1.0 + kappa)
    T = market.T
    if lam_star * T == 0.0:
        return bs_closed_form(market)
    total = 0.0
    log_weight = -lam_star * T  # log of e^(-lam* T) (lam* T)^k / k!
    for k in range(terms):
        if k > 0:
            log_weight += math.log(lam_star * T) - math.log(k)
        weight = math.exp(log_weight)
        sigma_k = math.sqrt(market.sigma ** 2 + k * s * s / T)
        r_k = market.r - lam * kappa + k * gexp / T
        bs_k = BlackScholesClosedForm(market.K, r_k, sigma_k,
                                      market.option_type)
        total += weight * float(bs_k.price(market.S0, T))
        if k >= 30:
            # Poisson tail beyond k is below (lam* T)^(k+1)/(k+1)! e^(...)
            tail = weight * lam_star * T / (k + 1.0)
            if tail * max(market.S0, market.K) < tail_tol * max(total, 1e-300):
                return total
    raise ToleranceNotMetError(
        f"jump-count series not converged within {terms} terms",
        estimate=total, error=float("nan"))


def estimate_reach(measure: LevyMeasure | None, shift: ShiftModel | None,
                   half_width: float, tail_tol: float = 1e-10) -> float:
    """Padding needed so shifted jumps stay inside the extended box.

    Identity shifts need the measure's tail radius; active shifts widen it by
    how far the displaced level can be pushed toward zero by the strategy
    swing.  Infeasible (rho, strategy) pairs are rejected here with the same
    no-solution diagnosis the resolver would give.
    """
    if measure is None:
        return 0.0
    base = measure.shape.tail_radius(measure.dim, tail_tol)
    if shift is None or shift.rho == 0.0:
        return 1.1 * base + 0.1
    xs = np.linspace(-half_width, half_width, 257)
    psi_vals = np.asarray(shift.strategy.psi(0.0, xs), dtype=float)
    swing = float(np.max(psi_vals) - np.min(psi_vals))
    margin = math.exp(-base) - shift.rho * swing
    if margin <= 0.0:
        raise NoSolutionError(
            "shift strategy swing can push the displaced level nonpositive "
            f"within the jump range (rho*swing = {shift.rho * swing:.3g} >= "
            f"e^(-tail radius) = {math.exp(-base):.3g})",
            residual=-margin)
    return 1.15 * max(base, -math.log(margin)) + 0.1


def price_european(market: MarketSpec, measure: LevyMeasure | None = None,
                   shift: ShiftModel | None = None, *,
                   half_width: float = 6.0, n_core: int = 1024,
                   scheme: SchemeConfig | None = None,
                   delta_sign: float = -1.0) -> PriceResult:
    """One-call European price: grid sizing, shifted solve, reassembly."""
    reach = estimate_reach(measure, shift, half_width)
    grid = make_grid(half_width, n_core, reach=reach)
    problem = transform_to_pide(market, grid, measure, shift, delta_sign)
    if scheme is None:
        scheme = SchemeConfig(scheme="imex_bdf2", dt=market.T / 500.0)
    result = solve_shifted(problem, scheme)
    return PriceResult(report_price(market, result), market, result)
