import math

import numpy as np
import pytest
from scipy.special import k0

from levypide.bessel import (BesselKernel, FractionalNorm, kernel_eval,
                             modulus_of_continuity_probe, q_estimate_probe,
                             synthetic_bounded_shift, synthetic_smooth_field,
                             xgamma_norm)
from levypide.errors import ParameterDomainError
from levypide.grids import make_grid


def test_kernel_mass_is_one():
    for order in (0.5, 1.0, 1.6, 2.0):
        for dim in (1, 2):
            m = BesselKernel(order, dim).mass()
            assert abs(m - 1.0) < 1e-6, (order, dim, m)


def test_order_two_line_kernel_closed_form():
    # on the line the order-2 kernel is the two-sided exponential
    for x in (0.25, 1.0, 2.5):
        got = kernel_eval(2.0, 1, x)
        assert abs(got - 0.5 * math.exp(-abs(x))) < 1e-10


def test_order_one_line_kernel_closed_form():
    # order 1 instead has the modified-Bessel-function form K0(|x|)/pi
    for x in (0.25, 1.0, 2.5):
        got = kernel_eval(1.0, 1, x)
        assert abs(got - float(k0(abs(x))) / math.pi) < 1e-10


def test_fourier_symbol_shape():
    kern = BesselKernel(1.2, 1)
    xi = np.array([0.0, 1.0, 3.0])
    got = kern.fourier_symbol(xi)
    want = (1.0 + xi ** 2) ** (-0.6)
    assert np.max(np.abs(got - want)) < 1e-14


def test_eval_batch_matches_scalar_eval():
    kern = BesselKernel(0.7, 2)
    radii = np.array([0.1, 0.5, 1.5, 4.0])
    batch = kern.eval_batch(radii)
    for r, b in zip(radii, batch):
        assert abs(b - kern.eval(np.array([r, 0.0]))) < 1e-12


def test_kernel_order_domain():
    with pytest.raises(ParameterDomainError):
        BesselKernel(0.0, 1)
    with pytest.raises(ParameterDomainError):
        BesselKernel(2.5, 1)


def test_modulus_of_continuity_spreads():
    shifts = np.geomspace(1e-3, 1e-1, 7)
    for alpha in (0.3, 0.5, 0.8):
        rep = modulus_of_continuity_probe(alpha, 1, shifts)
        assert rep.passed
        assert rep.spread < 10.0


def test_fractional_norm_plane_wave_scaling():
    from levypide.grids import Grid, GridField
    g = Grid(dim=1, half_width=np.pi * 4.0, n_core=512, pad=0)
    k0_mode = 3.0  # exact lattice mode for the pi-multiple pad-free box
    fld = GridField(g, np.cos(k0_mode * g.axis()))
    n_half = FractionalNorm(g, 0.5)(fld)
    n_zero = FractionalNorm(g, 0.0)(fld)
    want = (1.0 + k0_mode ** 2) ** 0.5
    assert abs(n_half / n_zero - want) < 1e-10
    # gamma = 0 is the plain L2 norm
    assert abs(n_zero - fld.l2()) < 1e-12


def test_xgamma_norm_monotone_in_gamma():
    g = make_grid(4.0, 256)
    fld = synthetic_smooth_field(g, 3)
    norms = [xgamma_norm(fld, gm) for gm in (-0.5, 0.0, 0.5, 1.0)]
    assert all(a < b for a, b in zip(norms, norms[1:]))


def test_q_estimate_probe_finite_on_synthetic_family():
    g = make_grid(4.0, 512, reach=0.5)
    gamma = 0.75
    ratios = []
    for idx in range(5):
        u = synthetic_smooth_field(g, idx)
        xi1 = synthetic_bounded_shift(g, idx, 0.2)
        xi2 = synthetic_bounded_shift(g, idx + 7, 0.1)
        r = q_estimate_probe(u, xi1, xi2, gamma)
        assert np.isfinite(r) and r > 0.0
        ratios.append(r)
    assert max(ratios) / min(ratios) < 25.0


def test_synthetic_fields_are_deterministic():
    g = make_grid(4.0, 128)
    a = synthetic_smooth_field(g, 11).values
    b = synthetic_smooth_field(g, 11).values
    assert np.array_equal(a, b)
    s = synthetic_bounded_shift(g, 4, 0.3)
    assert abs(np.max(np.abs(s)) - 0.3) < 1e-14
