import math

import numpy as np
import pytest

from levypide.bessel import synthetic_smooth_field
from levypide.errors import (OutOfDomainError, ParameterDomainError,
                             PlanInvalidError, UnsupportedConfigurationError)
from levypide.grids import GridField, make_grid
from levypide.jump_operator import (apply_f, apply_f_tilde, apply_f_tilde_fn,
                                    build_plan, delta_on_plan_nodes,
                                    f_bound_probe, plan_symbol_table,
                                    reference_symbol, small_jump_compensation)
from levypide.measures import (levy_pair, make_exponential_tail, make_kou,
                               make_merton, moments)
from levypide.shift import ShiftModel, strategy_tanh_ramp

MERTON = make_merton(0.5, -0.1, 0.2)
KOU = make_kou(0.4, 0.6, 8.0, 4.0)


def _grid_for(measure, half_width=4.0, n=512):
    reach = measure.shape.tail_radius(1, 1e-10)
    return make_grid(half_width, n, reach=reach)


def test_reference_symbol_matches_merton_closed_form():
    lam, m, s = 0.5, -0.1, 0.2
    for k in (0.5, 1.0, 3.0):
        got = reference_symbol(MERTON, k)
        want = lam * (np.exp(1j * k * m - 0.5 * (s * k) ** 2) - 1.0 - 1j * k * m)
        assert abs(got - want) < 1e-9


def test_plan_symbol_table_gaps():
    g = _grid_for(MERTON)
    plan = build_plan(g, MERTON)
    for k, node_sym, ref, gap in plan_symbol_table(plan, [1.0, 2.0, 4.0]):
        assert gap < 1e-8, (k, gap)


def test_operator_annihilates_compensated_exponential():
    # the compensated operator applied to c e^x vanishes node-by-node
    for nu in (MERTON, KOU):
        g = _grid_for(nu)
        plan = build_plan(g, nu, force_quadrature=True)
        c = 37.5
        vals = apply_f_tilde_fn(plan, lambda x: c * np.exp(x),
                                lambda x: c * np.exp(x), 0.0)
        scale = c * math.exp(g.half_width + g.pad * g.dx)
        assert np.max(np.abs(vals)) < 1e-10 * scale


def test_fft_and_quadrature_paths_agree():
    g = _grid_for(MERTON)
    fast = build_plan(g, MERTON)
    slow = build_plan(g, MERTON, force_quadrature=True)
    assert fast.uses_fft and not slow.uses_fft
    for idx in range(10):
        u = synthetic_smooth_field(g, idx)
        a = apply_f(fast, u).values
        b = apply_f(slow, u).values
        scale = max(np.max(np.abs(a)), 1e-30)
        assert np.max(np.abs(a - b)) < 1e-5 * scale, idx


def test_operator_is_linear_and_kills_constants():
    g = _grid_for(KOU)
    plan = build_plan(g, KOU)
    u = synthetic_smooth_field(g, 2)
    v = synthetic_smooth_field(g, 5)
    w = GridField(g, 1.7 * u.values - 0.4 * v.values)
    combo = apply_f(plan, w).values
    parts = 1.7 * apply_f(plan, u).values - 0.4 * apply_f(plan, v).values
    assert np.max(np.abs(combo - parts)) < 1e-10 * max(np.max(np.abs(parts)), 1.0)
    const = GridField(g, np.full(g.n_total, 3.3))
    assert np.max(np.abs(apply_f(plan, const).values)) < 1e-12


def test_translation_equivariance_on_the_lattice():
    g = _grid_for(MERTON)
    plan = build_plan(g, MERTON, force_quadrature=True)
    u = synthetic_smooth_field(g, 4)
    shift_cells = 17
    rolled = GridField(g, np.roll(u.values, shift_cells))
    a = apply_f(plan, rolled).values
    b = np.roll(apply_f(plan, u).values, shift_cells)
    assert np.max(np.abs(a - b)) < 1e-11 * max(np.max(np.abs(b)), 1.0)


def test_compensated_equals_plain_minus_drift_term():
    g = _grid_for(MERTON)
    plan = build_plan(g, MERTON, force_quadrature=True)
    u = synthetic_smooth_field(g, 7)
    from levypide.grids import gradient
    du = gradient(u, "spectral")[0]
    lhs = apply_f_tilde(plan, u).values
    rhs = apply_f(plan, u).values - plan.delta0 * du
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(np.max(np.abs(rhs)), 1.0)


def test_delta_on_plan_nodes_identity_shift():
    g = _grid_for(MERTON)
    plan = build_plan(g, MERTON)
    vals = delta_on_plan_nodes(plan, 0.0)
    assert np.all(vals == vals[0])
    want = float(moments(MERTON).compensated_exp_moment)
    assert abs(vals[0] - want) < 1e-8


def test_shifted_plan_reduces_to_identity_at_rho_zero():
    g = _grid_for(MERTON)
    base = build_plan(g, MERTON)
    shifted = build_plan(g, MERTON,
                         shift=ShiftModel(strategy_tanh_ramp(0.3), rho=0.0))
    assert shifted.shift is None
    u = synthetic_smooth_field(g, 1)
    assert np.array_equal(apply_f(base, u).values, apply_f(shifted, u).values)


def test_small_jump_compensation_scaling():
    # for density ~ c0 |z|^-alpha near zero the inner second moment scales
    # like eps^(3 - alpha)
    nu = make_exponential_tail(1.0, 0.5, 1.0)
    s_full, drift = small_jump_compensation(nu, 1e-3)
    s_half, _ = small_jump_compensation(nu, 5e-4)
    assert np.all(drift == 0.0)
    assert abs(s_full / s_half - 2.0 ** 2.5) < 0.05 * 2.0 ** 2.5
    with pytest.raises(ParameterDomainError):
        small_jump_compensation(nu, 0.0)


def test_build_plan_validations():
    g1 = _grid_for(MERTON)
    with pytest.raises(ParameterDomainError):
        build_plan(g1, MERTON, grad_method="fd2")
    with pytest.raises(ParameterDomainError):
        build_plan(g1, make_exponential_tail(0.5, 3.2, 1.0))
    with pytest.raises(PlanInvalidError):
        build_plan(g1, make_exponential_tail(0.5, 1.5, 1.0),
                   small_jump_policy="drop")
    tight = make_grid(4.0, 512)  # stencil-only padding, far below the reach
    with pytest.raises(OutOfDomainError):
        build_plan(tight, MERTON)
    g2 = make_grid(4.0, 64, reach=2.0, dim=2)
    with pytest.raises(UnsupportedConfigurationError):
        build_plan(g2, levy_pair(MERTON, MERTON),
                   shift=ShiftModel(strategy_tanh_ramp(0.3), rho=0.1))
    with pytest.raises(ParameterDomainError):
        build_plan(g2, MERTON)  # measure dim 1 on a dim-2 grid


def test_two_dim_plan_on_x_only_field_matches_one_dim():
    # a field constant in y only feels the x-axis jumps
    pair = levy_pair(MERTON, make_merton(0.2, 0.1, 0.15))
    g2 = make_grid(4.0, 128, reach=MERTON.shape.tail_radius(1, 1e-10), dim=2)
    g1 = make_grid(4.0, 128, reach=MERTON.shape.tail_radius(1, 1e-10), dim=1)
    assert g1.n_total == g2.n_total
    plan2 = build_plan(g2, pair)
    plan1 = build_plan(g1, MERTON)
    u1 = synthetic_smooth_field(g1, 3)
    u2 = GridField(g2, np.repeat(u1.values[:, None], g2.n_total, axis=1))
    out2 = apply_f(plan2, u2).values
    out1 = apply_f(plan1, u1).values
    col = out2[:, g2.n_total // 2]
    scale = max(np.max(np.abs(out1)), 1e-30)
    assert np.max(np.abs(col - out1)) < 1e-8 * scale
    # and constancy in y is preserved
    assert np.max(np.abs(out2 - out2[:, :1])) < 1e-10 * scale


def test_f_bound_probe_ratios_and_domain():
    g = _grid_for(MERTON)
    plan = build_plan(g, MERTON)
    fields = [synthetic_smooth_field(g, i) for i in range(5)]
    rep = f_bound_probe(plan, fields, 0.75)
    assert rep.passed
    assert all(math.isfinite(r) and r > 0 for r in rep.ratios)
    with pytest.raises(ParameterDomainError):
        f_bound_probe(plan, fields, 0.4)
    # regularity below the singular-envelope floor is refused
    rough = make_exponential_tail(0.5, 2.5, 3.0)
    gr = _grid_for(rough)
    rough_plan = build_plan(gr, rough)
    with pytest.raises(ParameterDomainError):
        f_bound_probe(rough_plan, fields, 0.6)
