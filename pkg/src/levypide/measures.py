"""Jump-activity measures: built-in families, envelope checks, moments, exponents.

Every measure carries a density h together with shape parameters
(c0, alpha, d, mu) certifying the pointwise envelope

    0 <= h(z) <= c0 * |z|^(-alpha) * exp(-d*|z| - mu*|z|^2).

The envelope drives all analytic classification: activity is finite iff
alpha < dim, variation is finite iff alpha < dim + 1, and exponential moments
of e^z exist iff mu > 0 or d > 1.  Divergent moments are flagged from the
shape parameters instead of being discovered by a failing quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterDomainError, UnsupportedConfigurationError
from .quadrature import adaptive_quad, quad_full_line, quad_half_line, quad_left_unit

__all__ = [
    "ShapeParams", "LevyMeasure", "AxisJumpPair", "MeasureMoments",
    "AdmissibilityReport", "make_merton", "make_exponential_tail", "make_kou",
    "make_custom", "levy_pair", "check_admissibility", "moments",
    "levy_exponent", "truncated_mass",
]


@dataclass(frozen=True)
class ShapeParams:
    """Envelope parameters (c0, alpha, d, mu) of an admissible jump density."""

    c0: float
    alpha: float
    d: float
    mu: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise ParameterDomainError("c0 must be positive")
        if self.mu < 0:
            raise ParameterDomainError("mu must be nonnegative")
        if self.mu == 0 and self.d <= 0:
            raise ParameterDomainError("d must be positive when mu == 0")

    def envelope(self, r):
        """Envelope value at radius r > 0."""
        r = np.asarray(r, dtype=float)
        return self.c0 * r ** (-self.alpha) * np.exp(-self.d * r - self.mu * r * r)

    def tail_mass(self, radius: float, dim: int) -> float:
        """Envelope mass beyond the given radius (exact up to quadrature)."""
        if dim == 1:
            return 2.0 * adaptive_quad(lambda z: self.envelope(z), radius, np.inf,
                                       rel_tol=1e-9, abs_tol=1e-250)
        return 2.0 * np.pi * adaptive_quad(lambda p: p * self.envelope(p), radius,
                                           np.inf, rel_tol=1e-9, abs_tol=1e-250)

    def tail_radius(self, dim: int, rel_tol: float = 1e-10) -> float:
        """Smallest doubling radius whose envelope tail is rel_tol of the
        unit-ball-exterior envelope mass."""
        scale = max(self.tail_mass(1.0, dim), 1e-250)
        r = 1.0
        for _ in range(60):
            if self.tail_mass(r, dim) <= rel_tol * scale:
                # refine downward a little so radii stay tight
                lo, hi = r / 2.0, r
                for _ in range(20):
                    mid = 0.5 * (lo + hi)
                    if self.tail_mass(mid, dim) <= rel_tol * scale:
                        hi = mid
                    else:
                        lo = mid
                return hi
            r *= 2.0
        raise ParameterDomainError("envelope tail does not decay; check shape parameters")


@dataclass(frozen=True)
class LevyMeasure:
    """A jump measure with density `density` on R^dim and a certified envelope.

    density is vectorized: one array argument for dim=1, two broadcastable
    coordinate arrays for dim=2.  `radial_profile`, when present, gives
    h(|z|) for radially symmetric 2-D densities; `product_factors` holds the
    two 1-D measures of a separable 2-D density h(z) = h1(z1) * h2(z2).
    """

    density: Callable
    dim: int
    shape: ShapeParams
    family_tag: str
    params: dict = field(default_factory=dict)
    radial_profile: Callable | None = None
    product_factors: tuple | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterDomainError("dim must be 1 or 2")

    def __call__(self, *coords):
        return self.density(*coords)

    @property
    def finite_activity(self) -> bool:
        return self.shape.alpha < self.dim

    @property
    def finite_variation(self) -> bool:
        return self.shape.alpha < self.dim + 1

    @property
    def has_exp_moment(self) -> bool:
        """True when int e^z h(z) dz converges at +infinity (certified by the
        envelope: Gaussian taper, or linear taper faster than e^z)."""
        return self.shape.mu > 0 or self.shape.d > 1


@dataclass(frozen=True)
class AxisJumpPair:
    """Two independent 1-D jump measures acting along the coordinate axes.

    Models a 2-D process whose components jump independently; the measure is
    supported on the axes (no joint density), so each axis is compensated
    separately.  Exactly this structure makes separable initial data evolve
    as a tensor product of 1-D solutions.
    """

    axis_x: LevyMeasure
    axis_y: LevyMeasure
    dim: int = 2

    def __post_init__(self):
        if self.axis_x.dim != 1 or self.axis_y.dim != 1:
            raise ParameterDomainError("axis measures must be one-dimensional")


def levy_pair(axis_x: LevyMeasure, axis_y: LevyMeasure) -> AxisJumpPair:
    return AxisJumpPair(axis_x, axis_y)


def make_merton(intensity: float, jump_mean, jump_std: float, dim: int = 1) -> LevyMeasure:
    """Gaussian jump family: intensity * N(jump_mean, jump_std^2) density.

    The envelope uses |z - m|^2 >= |z|^2 / 2 - |m|^2, giving
    c0 = intensity * (2 pi s^2)^(-dim/2) * exp(|m|^2 / (2 s^2)), alpha = 0,
    d = 0, mu = 1/(4 s^2).
    """
    if intensity <= 0:
        raise ParameterDomainError("intensity must be positive")
    if jump_std <= 0:
        raise ParameterDomainError("jump_std must be positive")
    s2 = jump_std * jump_std
    m = np.atleast_1d(np.asarray(jump_mean, dtype=float))
    if m.size != dim:
        raise ParameterDomainError(f"jump_mean must have {dim} component(s)")
    norm = intensity * (2.0 * np.pi * s2) ** (-dim / 2.0)
    shape = ShapeParams(
        c0=norm * math.exp(float(m @ m) / (2.0 * s2)),
        alpha=0.0, d=0.0, mu=1.0 / (4.0 * s2))
    if dim == 1:
        m0 = float(m[0])
        density = lambda z: norm * np.exp(-((np.asarray(z) - m0) ** 2) / (2.0 * s2))
        return LevyMeasure(density, 1, shape, "merton",
                           {"intensity": intensity, "jump_mean": m0, "jump_std": jump_std})
    m1, m2 = float(m[0]), float(m[1])
    density = lambda z1, z2: norm * np.exp(
        -((np.asarray(z1) - m1) ** 2 + (np.asarray(z2) - m2) ** 2) / (2.0 * s2))
    factors = (make_merton(intensity, m1, jump_std),
               make_merton(1.0, m2, jump_std))  # unit-mass second factor
    radial = None
    if m1 == 0.0 and m2 == 0.0:
        radial = lambda p: norm * np.exp(-np.asarray(p) ** 2 / (2.0 * s2))
    return LevyMeasure(density, 2, shape, "merton",
                       {"intensity": intensity, "jump_mean": (m1, m2), "jump_std": jump_std},
                       radial_profile=radial, product_factors=factors)


def make_exponential_tail(c0: float, alpha: float, decay: float, dim: int = 1) -> LevyMeasure:
    """Power-singular family with exponential taper: c0 |z|^(-alpha) e^(-decay |z|)."""
    if decay <= 0:
        raise ParameterDomainError("decay must be positive")
    shape = ShapeParams(c0=c0, alpha=alpha, d=decay, mu=0.0)
    if dim == 1:
        density = lambda z: c0 * np.abs(z) ** (-alpha) * np.exp(-decay * np.abs(z))
        return LevyMeasure(density, 1, shape, "exponential_tail",
                           {"c0": c0, "alpha": alpha, "decay": decay})
    profile = lambda p: c0 * np.asarray(p) ** (-alpha) * np.exp(-decay * np.asarray(p))
    density = lambda z1, z2: profile(np.hypot(z1, z2))
    return LevyMeasure(density, 2, shape, "exponential_tail",
                       {"c0": c0, "alpha": alpha, "decay": decay},
                       radial_profile=profile)


def make_kou(intensity: float, p_up: float, eta_plus: float, eta_minus: float) -> LevyMeasure:
    """Double-exponential family (1-D):

        h(z) = intensity * [p_up eta_plus e^(-eta_plus z)   for z > 0,
                            (1-p_up) eta_minus e^(eta_minus z) for z < 0].

    eta_plus > 1 is required so that e^z jumps have finite expectation.
    """
    if intensity <= 0:
        raise ParameterDomainError("intensity must be positive")
    if not 0.0 <= p_up <= 1.0:
        raise ParameterDomainError("p_up must lie in [0, 1]")
    if eta_plus <= 1.0:
        raise ParameterDomainError("eta_plus must exceed 1 for finite e^z moments")
    if eta_minus <= 0.0:
        raise ParameterDomainError("eta_minus must be positive")
    c0 = intensity * max(p_up * eta_plus, (1.0 - p_up) * eta_minus)
    shape = ShapeParams(c0=c0, alpha=0.0, d=min(eta_plus, eta_minus), mu=0.0)

    def density(z):
        z = np.asarray(z, dtype=float)
        up = intensity * p_up * eta_plus * np.exp(-eta_plus * np.clip(z, 0.0, None))
        dn = intensity * (1.0 - p_up) * eta_minus * np.exp(eta_minus * np.clip(z, None, 0.0))
        return np.where(z > 0, up, np.where(z < 0, dn, 0.0))

    return LevyMeasure(density, 1, shape, "kou",
                       {"intensity": intensity, "p_up": p_up,
                        "eta_plus": eta_plus, "eta_minus": eta_minus})


def make_custom(density: Callable, shape: ShapeParams, dim: int = 1,
                radial_profile: Callable | None = None,
                product_factors: tuple | None = None) -> LevyMeasure:
    """Wrap a user density with a claimed envelope; check_admissibility tests it."""
    return LevyMeasure(density, dim, shape, "custom", {},
                       radial_profile=radial_profile, product_factors=product_factors)


@dataclass(frozen=True)
class AdmissibilityReport:
    holds: bool
    worst_ratio: float
    worst_z: tuple


def check_admissibility(measure: LevyMeasure, z_grid) -> AdmissibilityReport:
    """Test h(z) |z|^alpha e^(d|z| + mu|z|^2) <= c0 pointwise on a sample grid.

    The grid must exclude z = 0 whenever alpha > 0.
    """
    sh = measure.shape
    if measure.dim == 1:
        z = np.asarray(z_grid, dtype=float).ravel()
        r = np.abs(z)
        pts = z[:, None]
        h = measure(z)
    else:
        pts = np.asarray(z_grid, dtype=float).reshape(-1, 2)
        r = np.hypot(pts[:, 0], pts[:, 1])
        h = measure(pts[:, 0], pts[:, 1])
    if sh.alpha > 0 and np.any(r == 0.0):
        raise ParameterDomainError("sample grid must exclude z = 0 when alpha > 0")
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        i = int(np.argmin(h))
        return AdmissibilityReport(False, -np.inf, tuple(pts[i]))
    with np.errstate(over="ignore", invalid="ignore"):
        weight = np.where(r > 0, r ** sh.alpha * np.exp(sh.d * r + sh.mu * r * r), 0.0)
        ratio = h * weight / sh.c0
    ratio = np.where(np.isfinite(ratio), ratio, np.where(h > 0, np.inf, 0.0))
    i = int(np.argmax(ratio))
    worst = float(ratio[i])
    return AdmissibilityReport(worst <= 1.0 + 1e-12, worst, tuple(pts[i]))


@dataclass(frozen=True)
class MeasureMoments:
    """Key integrals of a jump measure; divergent entries are +-inf."""

    total_mass: float
    first_abs_moment_near_0: float
    compensated_exp_moment: float | None
    mean_jump: np.ndarray


def _polar_integral(measure: LevyMeasure, radial_fn, rel_tol: float,
                    n_theta: int = 128) -> float:
    """2-D integral int radial_fn(rho) * h(z) dz via polar coordinates.

    Periodic trapezoid in angle (spectrally accurate), adaptive in radius.
    """
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    ct, st = np.cos(theta), np.sin(theta)

    def ring(p: float) -> float:
        return float(np.mean(measure(p * ct, p * st))) * 2.0 * np.pi

    f = lambda p: radial_fn(p) * ring(p) * p
    inner = quad_left_unit(f, rel_tol)
    outer = adaptive_quad(f, 1.0, np.inf, rel_tol)
    return inner + outer


def moments(measure: LevyMeasure, tol: float = 1e-10) -> MeasureMoments:
    """Total mass, small-jump |z| moment, compensated e^z moment, and mean jump.

    Divergence is decided from the shape parameters; only convergent entries
    are sent to quadrature.
    """
    sh, n = measure.shape, measure.dim

    if sh.alpha >= n:
        total = np.inf
    elif n == 1:
        total = quad_full_line(lambda z: measure(z), tol)
    elif measure.radial_profile is not None:
        total = 2.0 * np.pi * quad_half_line(
            lambda p: p * measure.radial_profile(p), tol)
    elif measure.product_factors is not None:
        f1, f2 = measure.product_factors
        total = (quad_full_line(lambda z: f1(z), tol)
                 * quad_full_line(lambda z: f2(z), tol))
    else:
        total = _polar_integral(measure, lambda p: 1.0, tol)

    if sh.alpha >= n + 1:
        small = np.inf
    elif n == 1:
        small = (quad_left_unit(lambda z: z * measure(z), tol)
                 + quad_left_unit(lambda z: z * measure(-z), tol))
    elif measure.radial_profile is not None:
        small = 2.0 * np.pi * quad_left_unit(
            lambda p: p * p * measure.radial_profile(p), tol)
    else:
        theta = np.linspace(0.0, 2.0 * np.pi, 128, endpoint=False)
        ct, st = np.cos(theta), np.sin(theta)
        ring = lambda p: float(np.mean(measure(p * ct, p * st))) * 2.0 * np.pi
        small = quad_left_unit(lambda p: p * p * ring(p), tol)

    if sh.alpha >= n + 1:
        mean = np.full(n, np.nan)
    elif n == 1:
        mean = np.array([
            quad_left_unit(lambda z: z * measure(z), tol)
            - quad_left_unit(lambda z: z * measure(-z), tol)
            + adaptive_quad(lambda z: z * measure(z), 1.0, np.inf, tol)
            - adaptive_quad(lambda z: z * measure(-z), 1.0, np.inf, tol)])
    elif measure.radial_profile is not None:
        mean = np.zeros(2)
    elif measure.product_factors is not None:
        f1, f2 = measure.product_factors
        m1 = moments(f1, tol)
        m2 = moments(f2, tol)
        mean = np.array([m1.mean_jump[0] * m2.total_mass,
                         m1.total_mass * m2.mean_jump[0]])
    else:
        theta = np.linspace(0.0, 2.0 * np.pi, 128, endpoint=False)
        ct, st = np.cos(theta), np.sin(theta)
        comp = []
        for trig in (ct, st):
            ring = lambda p: float(np.mean(trig * measure(p * ct, p * st))) * 2.0 * np.pi
            comp.append(quad_left_unit(lambda p: p * p * ring(p), tol)
                        + adaptive_quad(lambda p: p * p * ring(p), 1.0, np.inf, tol))
        mean = np.array(comp)

    if n != 1:
        comp_exp: float | None = None
    elif not measure.has_exp_moment:
        comp_exp = np.inf
    else:
        zc = exp_moment_cutoff(sh)
        comp_exp = (quad_left_unit(lambda z: (np.exp(z) - 1.0 - z) * measure(z), tol)
                    + quad_left_unit(lambda z: (np.exp(-z) - 1.0 + z) * measure(-z), tol)
                    + adaptive_quad(lambda z: (np.exp(z) - 1.0 - z) * measure(z),
                                    1.0, zc, tol)
                    + adaptive_quad(lambda z: (np.exp(-z) - 1.0 + z) * measure(-z),
                                    1.0, np.inf, tol))

    return MeasureMoments(total, small, comp_exp, mean)


def exp_moment_cutoff(shape: ShapeParams, log_floor: float = 740.0) -> float:
    """Upper limit beyond which e^z * envelope(z) underflows; keeps
    e^z-weighted quadratures from overflowing before the taper wins."""
    c = log_floor + max(np.log(shape.c0), 0.0)
    if shape.mu > 0:
        drift = 1.0 - shape.d
        return (drift + np.sqrt(drift * drift + 4.0 * shape.mu * c)) / (2.0 * shape.mu)
    return c / (shape.d - 1.0)  # has_exp_moment guarantees d > 1 here


def truncated_mass(measure: LevyMeasure, eps: float, outer: float = 1.0,
                   tol: float = 1e-10) -> float:
    """Mass of the annulus eps < |z| < outer."""
    if not 0 < eps < outer:
        raise ParameterDomainError("need 0 < eps < outer")
    if measure.dim == 1:
        return (adaptive_quad(lambda z: measure(z), eps, outer, tol)
                + adaptive_quad(lambda z: measure(-z), eps, outer, tol))
    if measure.radial_profile is not None:
        return 2.0 * np.pi * adaptive_quad(
            lambda p: p * measure.radial_profile(p), eps, outer, tol)
    raise UnsupportedConfigurationError(
        "annulus mass requires dim=1 or a radial profile")


def levy_exponent(measure: LevyMeasure, y, drift=0.0, diffusion=0.0,
                  tol: float = 1e-10) -> complex:
    """Characteristic exponent

        phi(y) = i b.y + sum_ij a_ij y_i y_j
                 + int (1 - e^(i y.z) + i y.z 1_{|z|<=1}) h(z) dz.

    The jump integrand is O(|z|^2) at the origin, so any admissible measure
    with alpha < dim + 2 integrates; the split at |z| = 1 matches the
    compensator's indicator.
    """
    n = measure.dim
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != n:
        raise ParameterDomainError(f"y must have {n} component(s)")
    b = np.atleast_1d(np.asarray(drift, dtype=float))
    if b.size == 1 and n == 2:
        b = np.full(2, float(b[0]))
    if b.size != n:
        raise ParameterDomainError(f"drift must have {n} component(s)")
    a = np.atleast_2d(np.asarray(diffusion, dtype=float))
    if a.shape == (1, 1) and n == 2:
        a = float(a[0, 0]) * np.eye(2)
    if a.shape != (n, n):
        raise ParameterDomainError(f"diffusion must be a {n}x{n} matrix")
    if np.min(np.linalg.eigvalsh(0.5 * (a + a.T))) < -1e-12:
        raise ParameterDomainError("diffusion matrix must be positive semidefinite")

    quad_form = float(y @ a @ y)
    lin = float(b @ y)

    if n == 1:
        k = float(y[0])
        re = (quad_left_unit(lambda z: (1.0 - np.cos(k * z)) * measure(z), tol)
              + quad_left_unit(lambda z: (1.0 - np.cos(k * z)) * measure(-z), tol)
              + adaptive_quad(lambda z: (1.0 - np.cos(k * z)) * measure(z), 1.0, np.inf, tol)
              + adaptive_quad(lambda z: (1.0 - np.cos(k * z)) * measure(-z), 1.0, np.inf, tol))
        im = (quad_left_unit(lambda z: (k * z - np.sin(k * z)) * measure(z), tol)
              + quad_left_unit(lambda z: (np.sin(k * z) - k * z) * measure(-z), tol)
              + adaptive_quad(lambda z: -np.sin(k * z) * measure(z), 1.0, np.inf, tol)
              + adaptive_quad(lambda z: np.sin(k * z) * measure(-z), 1.0, np.inf, tol))
        return complex(quad_form + re, lin + im)

    # 2-D: polar coordinates; angular average by periodic trapezoid.
    ky = float(np.hypot(y[0], y[1]))
    theta_y = math.atan2(y[1], y[0])
    theta = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
    ct, st = np.cos(theta), np.sin(theta)
    cos_rel = np.cos(theta - theta_y)

    def ring_re(p: float) -> float:
        hvals = np.asarray(measure(p * ct, p * st), dtype=float)
        return float(np.mean((1.0 - np.cos(ky * p * cos_rel)) * hvals)) * 2.0 * np.pi

    def ring_im_inner(p: float) -> float:
        hvals = np.asarray(measure(p * ct, p * st), dtype=float)
        return float(np.mean((ky * p * cos_rel - np.sin(ky * p * cos_rel)) * hvals)) * 2.0 * np.pi

    def ring_im_outer(p: float) -> float:
        hvals = np.asarray(measure(p * ct, p * st), dtype=float)
        return float(np.mean(-np.sin(ky * p * cos_rel) * hvals)) * 2.0 * np.pi

    re = (quad_left_unit(lambda p: p * ring_re(p), tol)
          + adaptive_quad(lambda p: p * ring_re(p), 1.0, np.inf, tol))
    im = (quad_left_unit(lambda p: p * ring_im_inner(p), tol)
          + adaptive_quad(lambda p: p * ring_im_outer(p), 1.0, np.inf, tol))
    return complex(quad_form + re, lin + im)
