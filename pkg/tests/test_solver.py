import math

import numpy as np
import pytest

from levypide.blackscholes import BlackScholesClosedForm
from levypide.errors import (BlowUpError, ParameterDomainError,
                             StabilityError, ToleranceNotMetError,
                             UnsupportedConfigurationError)
from levypide.grids import GridField, make_grid
from levypide.measures import make_merton
from levypide.shift import ShiftModel, strategy_tanh_ramp
from levypide.solver import (CauchyProblem, SchemeConfig, build_time_mesh,
                             duhamel_gap, heat_semigroup,
                             singular_source_decay_probe, solve_direct,
                             solve_shifted, step_imex, step_mild)

MERTON = make_merton(0.5, -0.1, 0.2)


def _merton_grid(n=512, half_width=4.0):
    return make_grid(half_width, n, reach=2.3)


def _gaussian(grid, s0=0.3):
    x = grid.axis()
    return GridField(grid, np.exp(-x ** 2 / (2.0 * s0 ** 2)))


def test_heat_semigroup_spreads_gaussian_variance():
    g = make_grid(8.0, 1024)
    s0, sigma, dt = 0.3, 0.4, 0.5
    out = heat_semigroup(_gaussian(g, s0), sigma, dt)
    s1 = math.sqrt(s0 ** 2 + sigma ** 2 * dt)
    x = g.axis()
    want = (s0 / s1) * np.exp(-x ** 2 / (2.0 * s1 ** 2))
    assert np.max(np.abs(out.values - want)) < 1e-12
    assert out.time_tag == 0.5


def test_build_time_mesh_uniform_and_graded():
    taus = build_time_mesh(1.0, 0.03)
    assert taus[0] == 0.0 and taus[-1] == 1.0
    steps = np.diff(taus)
    assert np.all(steps > 0)
    assert np.max(steps) <= 0.03 + 1e-15
    graded = build_time_mesh(2.0, 0.01, grade=True, fraction=0.05)
    assert graded[0] == 0.0 and abs(graded[-1] - 2.0) < 1e-14
    gsteps = np.diff(graded)
    assert np.all(gsteps > 0)
    # variable-step BDF2 needs consecutive ratios below 1 + sqrt(2)
    ratios = gsteps[1:] / gsteps[:-1]
    assert np.max(ratios) < 1.0 + math.sqrt(2.0) - 1e-9
    with pytest.raises(ParameterDomainError):
        build_time_mesh(1.0, -0.1)


def test_problem_validation():
    g = _merton_grid(128)
    with pytest.raises(ParameterDomainError):
        CauchyProblem(g, sigma=0.0, horizon=1.0)
    with pytest.raises(ParameterDomainError):
        CauchyProblem(g, sigma=0.2, horizon=1.0, delta_sign=0.5)
    with pytest.raises(ParameterDomainError):
        CauchyProblem(g, sigma=0.2, horizon=1.0, diffusion_mode="feedback")
    with pytest.raises(ParameterDomainError):
        SchemeConfig(scheme="crank_nicolson")


def test_measure_free_shifted_solve_is_exactly_zero():
    # without jumps the closed form solves the equation, so the evolved
    # difference never leaves zero
    g = make_grid(4.0, 256)
    problem = CauchyProblem(g, sigma=0.2, horizon=1.0, rate=0.05)
    res = solve_shifted(problem, SchemeConfig(dt=0.05))
    assert np.max(np.abs(res.difference.values)) == 0.0
    bs = BlackScholesClosedForm(1.0, 0.05, 0.2, "call")
    assert np.max(np.abs(res.field.values - bs.u(1.0, g.axis()))) < 1e-14


def test_shifted_solve_converges_to_series_price():
    g = _merton_grid(512)
    problem = CauchyProblem(g, sigma=0.2, horizon=1.0, rate=0.05,
                            measure=MERTON)
    res = solve_shifted(problem, SchemeConfig(dt=4e-2))
    # undiscounted series value of the terminal field at x = 0
    from levypide.pricing import MarketSpec, merton_series_oracle
    mkt = MarketSpec(1.0, 1.0, 1.0, 0.05, 0.2, "call")
    want = merton_series_oracle(mkt, (0.5, -0.1, 0.2)) * math.exp(0.05)
    i0 = int(np.argmin(np.abs(g.axis())))
    assert abs(res.field.values[i0] - want) / want < 2e-4


def test_schemes_agree_to_second_order():
    g = _merton_grid(256)
    problem = CauchyProblem(g, sigma=0.2, horizon=0.5, rate=0.03,
                            measure=MERTON)
    a = solve_shifted(problem, SchemeConfig(scheme="imex_bdf2", dt=0.01))
    b = solve_shifted(problem, SchemeConfig(scheme="mild_etd2", dt=0.01))
    den = float(np.linalg.norm(a.field.values))
    assert float(np.linalg.norm(a.field.values - b.field.values)) / den < 1e-5


def test_cross_check_attaches_gap():
    g = _merton_grid(256)
    problem = CauchyProblem(g, sigma=0.2, horizon=0.5, rate=0.03,
                            measure=MERTON)
    res = solve_shifted(problem, SchemeConfig(dt=0.01, cross_check=True))
    assert res.cross_check_gap is not None
    assert 0.0 <= res.cross_check_gap < 1e-4
    with pytest.raises(ToleranceNotMetError):
        solve_shifted(problem, SchemeConfig(dt=0.01, cross_check=True,
                                            cross_check_tol=1e-18))


def test_single_steps_match_march():
    g = _merton_grid(256)
    problem = CauchyProblem(g, sigma=0.2, horizon=1.0, rate=0.03,
                            measure=MERTON, initial=_gaussian(g))
    sch = SchemeConfig(dt=0.02)
    res = solve_direct(problem, sch, store_stride=1)
    times = [t for t, _ in res.trajectory]
    vals = [v for _, v in res.trajectory]
    one = step_imex(problem, sch, GridField(g, vals[0], times[0]))
    assert np.array_equal(one.values, vals[1])
    # the BDF2 continuation re-transforms the stored real field, so exact
    # bit equality is lost to one irfft/rfft round trip
    two = step_imex(problem, sch, one,
                    history=GridField(g, vals[0], times[0]))
    assert np.max(np.abs(two.values - vals[2])) < 1e-13
    mild = solve_direct(problem, SchemeConfig(scheme="mild_etd2", dt=0.02),
                        store_stride=1)
    mvals = [v for _, v in mild.trajectory]
    mone = step_mild(problem, SchemeConfig(scheme="mild_etd2", dt=0.02),
                     GridField(g, mvals[0], 0.0))
    assert np.array_equal(mone.values, mvals[1])


def test_duhamel_identity_on_trajectory():
    g = _merton_grid(256)
    problem = CauchyProblem(g, sigma=0.2, horizon=0.5, rate=0.03,
                            measure=MERTON, initial=_gaussian(g))
    sch = SchemeConfig(dt=0.005)
    res = solve_direct(problem, sch, store_stride=1)
    gap = duhamel_gap(problem, sch, res)
    assert gap < 1e-4
    with pytest.raises(ParameterDomainError):
        duhamel_gap(problem, sch, solve_direct(problem, sch))


def test_rho_zero_shift_is_bit_identical_to_no_shift():
    g = make_grid(4.0, 256, reach=3.2)
    base = CauchyProblem(g, sigma=0.2, horizon=0.5, rate=0.03, measure=MERTON)
    with_model = CauchyProblem(g, sigma=0.2, horizon=0.5, rate=0.03,
                               measure=MERTON,
                               shift=ShiftModel(strategy_tanh_ramp(0.3), rho=0.0))
    sch = SchemeConfig(dt=0.01)
    a = solve_shifted(base, sch)
    b = solve_shifted(with_model, sch)
    assert np.array_equal(a.field.values, b.field.values)


def test_active_shift_moves_price_continuously():
    g = make_grid(4.0, 256, reach=3.2)
    sch = SchemeConfig(dt=0.02)
    strat = strategy_tanh_ramp(0.3)

    def price(rho):
        shift = ShiftModel(strat, rho=rho) if rho else None
        problem = CauchyProblem(g, sigma=0.2, horizon=0.5, rate=0.03,
                                measure=MERTON, shift=shift)
        res = solve_shifted(problem, sch)
        return float(res.field.values[int(np.argmin(np.abs(g.axis())))])

    p0, p1, p2 = price(0.0), price(0.02), price(0.04)
    assert p1 != p0
    # impact enters at first order: doubling rho roughly doubles the move
    assert abs((p2 - p0) / (p1 - p0) - 2.0) < 0.25


def test_stability_guard_rejects_huge_steps():
    g = _merton_grid(256)
    problem = CauchyProblem(g, sigma=0.2, horizon=1.0, rate=0.03,
                            measure=MERTON, initial=_gaussian(g),
                            shift=ShiftModel(strategy_tanh_ramp(0.1), rho=0.01))
    with pytest.raises(StabilityError):
        solve_direct(problem, SchemeConfig(dt=0.5))


def test_blow_up_is_reported():
    g = make_grid(4.0, 128)

    def quadratic(tau, x, u, du):
        return u * u

    problem = CauchyProblem(g, sigma=0.2, horizon=2.0,
                            nonlinearity=quadratic,
                            initial=GridField(g, np.full(g.n_total, 30.0)))
    with pytest.raises(BlowUpError):
        with np.errstate(over="ignore", invalid="ignore"):
            solve_direct(problem, SchemeConfig(dt=0.05))


def test_custom_nonlinearity_matches_logistic_ode():
    # spatially constant data turns the PIDE into u' = u(1 - u)
    g = make_grid(4.0, 128)

    def logistic(tau, x, u, du):
        return u * (1.0 - u)

    u0 = 0.2
    problem = CauchyProblem(g, sigma=0.2, horizon=1.0, nonlinearity=logistic,
                            initial=GridField(g, np.full(g.n_total, u0)))
    res = solve_direct(problem, SchemeConfig(dt=0.002))
    want = u0 * math.exp(1.0) / (1.0 - u0 + u0 * math.exp(1.0))
    assert np.max(np.abs(res.field.values - want)) < 1e-5


def test_checkpoints_are_recorded():
    g = _merton_grid(256)
    problem = CauchyProblem(g, sigma=0.2, horizon=1.0, rate=0.03,
                            measure=MERTON)
    res = solve_shifted(problem, SchemeConfig(dt=0.01, checkpoint_count=5,
                                              monitor_gamma=0.5))
    assert len(res.checkpoints) == 5
    taus = [t for t, _ in res.checkpoints]
    assert abs(taus[-1] - 1.0) < 1e-12
    assert all(b > a for a, b in zip(taus, taus[1:]))
    assert all(np.isfinite(v) for _, v in res.checkpoints)


def test_decay_probe_skips_without_measure_and_passes_with():
    g = make_grid(3.0, 2048)
    plain = CauchyProblem(g, sigma=0.2, horizon=1.0, rate=0.05)
    rep0 = singular_source_decay_probe(plain, 0.75)
    assert rep0.skipped and rep0.passed
    gm = make_grid(3.0, 2048, reach=2.3)
    problem = CauchyProblem(gm, sigma=0.2, horizon=1.0, rate=0.05,
                            measure=MERTON)
    rep = singular_source_decay_probe(problem, 0.75)
    assert not rep.skipped
    assert rep.passed
    assert rep.slope >= rep.bound
    with pytest.raises(ParameterDomainError):
        singular_source_decay_probe(problem, 0.3)


def test_feedback_diffusion_runs_and_guards_margin():
    g = make_grid(4.0, 512, reach=3.2)
    payoff = GridField(g, np.maximum(np.exp(g.axis()) - 1.0, 0.0))
    ok = CauchyProblem(g, sigma=0.25, horizon=0.25, rate=0.03, measure=MERTON,
                       shift=ShiftModel(strategy_tanh_ramp(0.3), rho=0.05),
                       initial=payoff, diffusion_mode="feedback")
    res = solve_direct(ok, SchemeConfig(dt=0.005))
    assert np.all(np.isfinite(res.field.values))
    assert len(res.checkpoints) > 0
    # rho grad(psi) beyond the margin is refused upfront; the small swing
    # keeps the jump-shift balance itself solvable
    steep = ShiftModel(strategy_tanh_ramp(0.1, width=0.01), rho=0.2)
    bad = CauchyProblem(g, sigma=0.25, horizon=0.25, rate=0.03, measure=MERTON,
                        shift=steep, initial=payoff,
                        diffusion_mode="feedback")
    with pytest.raises(ParameterDomainError):
        solve_direct(bad, SchemeConfig(dt=0.005))
    with pytest.raises(UnsupportedConfigurationError):
        solve_shifted(ok, SchemeConfig(dt=0.005))


def test_two_dim_diffusion_matches_heat_semigroup():
    g = make_grid(5.0, 64, dim=2)
    xx, yy = g.meshes()
    u0 = GridField(g, np.exp(-(xx ** 2 + yy ** 2) / 0.5))
    problem = CauchyProblem(g, sigma=0.4, horizon=0.5,
                            nonlinearity=lambda tau, x, u, du: 0.0 * u,
                            initial=u0)
    res = solve_direct(problem, SchemeConfig(scheme="mild_etd2", dt=0.05))
    exact = heat_semigroup(u0, 0.4, 0.5)
    assert np.max(np.abs(res.field.values - exact.values)) < 1e-12
