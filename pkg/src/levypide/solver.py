"""Time integration of the transformed jump-diffusion Cauchy problems.

Two interchangeable marchers evolve either the solution itself (direct mode)
or the difference U = u - u_closed_form (shifted mode, for kinked payoff
data):

* imex_bdf2 — diffusion and the constant drift are inverted as a Fourier
  multiplier each step; the jump operator, drift excess, source, and any user
  nonlinearity are explicit with variable-step BDF2 extrapolation (Euler
  startup).
* mild_etd2 — a two-stage exponential integrator discretizing the
  variation-of-constants integral; the linear multiplier is exponentiated
  exactly and the explicit terms enter through phi-function weights.

In shifted mode U starts at zero and is forced by the compensated operator
acting on the closed form, evaluated analytically at shifted arguments (no
interpolation of the kink); the early-time steepness of that source is met
with a quadratically graded startup mesh.  The feedback diffusion coefficient
sigma^2 / (2 (1 - rho dpsi/dx)^2) runs in a frozen-coefficient IMEX variant
with a cyclic tridiagonal solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bessel import FractionalNorm
from .blackscholes import BlackScholesClosedForm
from .errors import (BlowUpError, ParameterDomainError, SingularityError,
                     StabilityError, ToleranceNotMetError,
                     UnsupportedConfigurationError)
from .grids import Grid, GridField, gradient
from .jump_operator import (OperatorPlan, apply_f, apply_f_tilde_fn,
                            build_plan, delta_on_plan_nodes)
from .measures import AxisJumpPair
from .shift import ShiftModel

__all__ = [
    "CauchyProblem", "SchemeConfig", "SolveResult", "DecayReport",
    "heat_semigroup", "build_time_mesh", "step_imex", "step_mild",
    "solve_direct", "solve_shifted", "multid_solve",
    "singular_source_decay_probe", "duhamel_gap",
]


@dataclass(frozen=True)
class CauchyProblem:
    """Problem data for one parabolic solve on a fixed padded grid.

    With nonlinearity None (pricing form) the first-order term is the
    risk-neutral drift r - sigma^2/2 together with the jump drift correction,
    whose sign convention is settable through delta_sign; a callable
    nonlinearity g(tau, x, u, grad_u) replaces that drift entirely.
    """

    grid: Grid
    sigma: float
    horizon: float
    rate: float = 0.0
    measure: object | None = None
    shift: ShiftModel | None = None
    nonlinearity: Callable | None = None
    initial: GridField | None = None
    strike: float = 1.0
    option_type: str = "call"
    diffusion_mode: str = "constant"
    delta_sign: float = -1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ParameterDomainError("sigma must be positive")
        if self.horizon <= 0:
            raise ParameterDomainError("horizon must be positive")
        if self.strike <= 0:
            raise ParameterDomainError("strike must be positive")
        if self.option_type not in ("call", "put"):
            raise ParameterDomainError("option_type must be call or put")
        if self.diffusion_mode not in ("constant", "feedback"):
            raise ParameterDomainError("diffusion_mode must be constant or feedback")
        if self.delta_sign not in (-1.0, 1.0):
            raise ParameterDomainError("delta_sign must be -1.0 or +1.0")
        if self.diffusion_mode == "feedback":
            if self.grid.dim != 1:
                raise UnsupportedConfigurationError("feedback diffusion is 1-D only")
            if self.shift is None or self.shift.rho == 0.0:
                raise ParameterDomainError(
                    "feedback diffusion needs a shift model with rho > 0")

    @property
    def dim(self) -> int:
        return self.grid.dim


@dataclass(frozen=True)
class SchemeConfig:
    """Marching scheme selection and step control."""

    scheme: str = "imex_bdf2"
    dt: float = 1e-3
    grad_method: str = "spectral"
    startup_grading: bool = True
    startup_fraction: float = 0.05
    startup_density: float = 8.0
    stability_limit: float = 1.0
    checkpoint_count: int = 10
    monitor_gamma: float = 0.0
    cross_check: bool = False
    cross_check_tol: float = 1e-3

    def __post_init__(self):
        if self.scheme not in ("imex_bdf2", "mild_etd2"):
            raise ParameterDomainError("scheme must be imex_bdf2 or mild_etd2")
        if self.dt <= 0:
            raise ParameterDomainError("dt must be positive")
        if not 0.0 < self.startup_fraction < 0.5:
            raise ParameterDomainError("startup_fraction must lie in (0, 1/2)")
        if self.startup_density < 1.0:
            raise ParameterDomainError("startup_density must be >= 1")
        if self.checkpoint_count < 1:
            raise ParameterDomainError("checkpoint_count must be >= 1")


@dataclass(frozen=True)
class SolveResult:
    """Terminal state plus checkpoint diagnostics of one solve."""

    field: GridField
    checkpoints: tuple
    taus: np.ndarray
    scheme: SchemeConfig
    plan: OperatorPlan | None
    background: GridField | None = None
    difference: GridField | None = None
    trajectory: tuple = ()
    cross_check_gap: float | None = None


def heat_semigroup(u: GridField, sigma: float, dt: float) -> GridField:
    """Exact diffusion propagation exp(-(sigma^2/2)|k|^2 dt) on the padded box."""
    if dt < 0:
        raise ParameterDomainError("dt must be nonnegative")
    if dt == 0.0:
        return u
    g = u.grid
    if g.dim == 1:
        k2 = g.wavenumbers() ** 2
        out = np.fft.irfft(np.exp(-0.5 * sigma ** 2 * k2 * dt) * np.fft.rfft(u.values),
                           n=g.n_total)
    else:
        k2 = g.wavenumbers_full()[:, None] ** 2 + g.wavenumbers()[None, :] ** 2
        out = np.fft.irfft2(np.exp(-0.5 * sigma ** 2 * k2 * dt) * np.fft.rfft2(u.values),
                            s=u.values.shape)
    return u.with_values(out, time_tag=u.time_tag + dt)


def build_time_mesh(horizon: float, dt: float, grade: bool = False,
                    fraction: float = 0.05, tau0: float = 0.0,
                    density: float = 8.0) -> np.ndarray:
    """Time levels from tau0 to horizon.

    Uniform by default (dt shrunk to divide the span).  Graded meshes spend
    the first `fraction` of the span on quadratically growing steps
    tau_j ~ j (j+1), whose step ratios stay below the variable-step BDF2
    stability threshold, then continue uniformly; `density` scales how many
    steps the graded head gets relative to dt.
    """
    span = horizon - tau0
    if span <= 0 or dt <= 0:
        raise ParameterDomainError("need horizon > tau0 and dt > 0")
    if not grade:
        n = max(1, math.ceil(span / dt - 1e-12))
        return tau0 + span * np.arange(n + 1) / n
    head = fraction * span
    j_max = max(2, round(density * head / dt))
    j = np.arange(j_max + 1, dtype=float)
    graded = tau0 + head * (j * (j + 1.0)) / (j_max * (j_max + 1.0))
    # geometric ramp from the graded tail step up to dt keeps the junction
    # ratio at or below 2 before the uniform stretch takes over
    levels = [float(graded[-1])]
    end = tau0 + span
    step = 2.0 * head / (j_max + 1.0)
    while True:
        remaining = end - levels[-1]
        n_left = max(1, math.ceil(remaining / dt - 1e-12))
        du = remaining / n_left
        if du <= 2.0 * step * (1.0 + 1e-12):
            levels.extend((levels[-1] + remaining * np.arange(1, n_left + 1)
                           / n_left).tolist())
            break
        step = min(2.0 * step, dt, 0.5 * remaining)
        levels.append(levels[-1] + step)
    return np.concatenate([graded[:-1], np.asarray(levels)])


def _phis(z: np.ndarray):
    """exp, phi1, phi2 of a complex multiplier array, series-stable near 0."""
    e = np.exp(z)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    p1 = np.where(small, 1.0 + z / 2.0 + z * z / 6.0 + z ** 3 / 24.0,
                  (e - 1.0) / zs)
    p2 = np.where(small, 0.5 + z / 6.0 + z * z / 24.0 + z ** 3 / 120.0,
                  (e - 1.0 - z) / (zs * zs))
    return e, p1, p2


class _Transforms:
    """Real-FFT helpers bound to one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        if grid.dim == 1:
            self.fwd = np.fft.rfft
            self.inv = lambda a: np.fft.irfft(a, n=grid.n_total)
            self.ik = 1j * grid.wavenumbers()
        else:
            self.fwd = np.fft.rfft2
            shape = (grid.n_total, grid.n_total)
            self.inv = lambda a: np.fft.irfft2(a, s=shape)
            self.ikx = 1j * grid.wavenumbers_full()[:, None]
            self.iky = 1j * grid.wavenumbers()[None, :]

    def grad(self, u_hat: np.ndarray):
        if self.grid.dim == 1:
            return self.inv(self.ik * u_hat)
        return (self.inv(self.ikx * u_hat), self.inv(self.iky * u_hat))


def _march(grid: Grid, L_hat: np.ndarray, N_fn, v0: np.ndarray,
           taus: np.ndarray, scheme: SchemeConfig, needs_grad: bool,
           on_level=None, store_stride: int = 0):
    """Advance v0 across taus; returns (terminal values, stored trajectory).

    N_fn(tau, values, grad_values_or_None) is the full explicit right side.
    """
    tr = _Transforms(grid)
    v = np.array(v0, dtype=float)
    u_hat = tr.fwd(v)
    stored = []
    if store_stride:
        stored.append((float(taus[0]), v.copy()))
    mild = scheme.scheme == "mild_etd2"
    u_hat_prev = None
    n_prev = None
    dt_prev = None
    cached_dt = None
    E = P1 = P2 = None
    for i in range(taus.size - 1):
        tau = float(taus[i])
        dt = float(taus[i + 1] - taus[i])
        dv = tr.grad(u_hat) if needs_grad else None
        n_cur = N_fn(tau, v, dv)
        if mild:
            if dt != cached_dt:
                E, P1, P2 = _phis(dt * L_hat)
                cached_dt = dt
            n_cur_hat = tr.fwd(n_cur)
            a_hat = E * u_hat + dt * P1 * n_cur_hat
            va = tr.inv(a_hat)
            dva = tr.grad(a_hat) if needs_grad else None
            n_stage = N_fn(tau + dt, va, dva)
            u_hat = a_hat + dt * P2 * (tr.fwd(n_stage) - n_cur_hat)
        elif u_hat_prev is None or dt_prev is None:
            u_hat_new = (u_hat + dt * tr.fwd(n_cur)) / (1.0 - dt * L_hat)
            u_hat_prev, u_hat = u_hat, u_hat_new
        else:
            rho = dt / dt_prev
            a0 = (1.0 + 2.0 * rho) / (1.0 + rho)
            a2 = rho * rho / (1.0 + rho)
            n_ext = (1.0 + rho) * n_cur - rho * n_prev
            u_hat_new = ((1.0 + rho) * u_hat - a2 * u_hat_prev
                         + dt * tr.fwd(n_ext)) / (a0 - dt * L_hat)
            u_hat_prev, u_hat = u_hat, u_hat_new
        v = tr.inv(u_hat)
        if not np.all(np.isfinite(v)):
            raise BlowUpError("state became non-finite", step=i + 1,
                              tau=float(taus[i + 1]))
        n_prev = n_cur
        dt_prev = dt
        if on_level is not None:
            on_level(i + 1, float(taus[i + 1]), v)
        if store_stride and ((i + 1) % store_stride == 0 or i + 1 == taus.size - 1):
            stored.append((float(taus[i + 1]), v.copy()))
    return v, stored


def _feedback_coefficient(problem: CauchyProblem, tau: float,
                          x: np.ndarray) -> np.ndarray:
    psi = problem.shift.strategy.psi
    rho = problem.shift.rho
    eps = problem.grid.dx
    dpsi = (8.0 * (np.asarray(psi(tau, x + eps)) - np.asarray(psi(tau, x - eps)))
            - (np.asarray(psi(tau, x + 2 * eps)) - np.asarray(psi(tau, x - 2 * eps)))
            ) / (12.0 * eps)
    gap = 1.0 - rho * dpsi
    worst = float(np.max(np.abs(rho * dpsi)))
    if worst > 0.9:
        raise ParameterDomainError(
            "feedback diffusion denominator margin violated: "
            f"sup |rho dpsi/dx| = {worst:.3f} > 0.9")
    return problem.sigma ** 2 / (2.0 * gap ** 2)


def _solve_cyclic_tridiag(sub: np.ndarray, dia: np.ndarray, sup: np.ndarray,
                          rhs: np.ndarray) -> np.ndarray:
    """Solve a periodic tridiagonal system by rank-one correction.

    sub[i] couples row i to i-1 (sub[0] is the wrap corner), sup[i] to i+1
    (sup[-1] is the wrap corner).
    """
    n = dia.size
    gamma = -dia[0]
    d = dia.copy()
    d[0] -= gamma
    d[-1] -= sub[0] * sup[-1] / gamma

    def plain(b):
        c = np.zeros(n)
        y = np.zeros(n)
        beta = d[0]
        y[0] = b[0] / beta
        for i in range(1, n):
            c[i] = sup[i - 1] / beta
            beta = d[i] - sub[i] * c[i]
            y[i] = (b[i] - sub[i] * y[i - 1]) / beta
        for i in range(n - 2, -1, -1):
            y[i] -= c[i + 1] * y[i + 1]
        return y

    y = plain(rhs)
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = sup[-1]
    q = plain(u)
    factor = (y[0] + sub[0] * y[-1] / gamma) / (1.0 + q[0] + sub[0] * q[-1] / gamma)
    return y - factor * q


def _prepare_rhs(problem: CauchyProblem, scheme: SchemeConfig, shifted: bool):
    """Assemble (plan, L_hat, N_fn, needs_grad, source_cache) for one solve.

    The implicit multiplier carries diffusion plus, in pricing form, the
    constant part of the drift (identity-shift drift correction folded in so
    the explicit remainder is bounded); N_fn carries the jump operator's
    bounded part, the x-dependent drift excess, the analytic source (shifted
    mode), and any user nonlinearity.
    """
    g = problem.grid
    plan = None
    if problem.measure is not None:
        plan = build_plan(g, problem.measure, problem.shift,
                          grad_method=scheme.grad_method)
    sigma2 = problem.sigma ** 2
    corr = plan.sigma2_correction if plan is not None else 0.0
    if g.dim == 1 and np.ndim(corr) == 0:
        sigma2 += float(corr)

    pricing = problem.nonlinearity is None
    sign = problem.delta_sign
    mean0 = delta00 = 0.0
    if plan is not None and g.dim == 1:
        if plan.uses_fft:
            mean0, delta00 = plan.fft_mean[0], plan.fft_exp_mean - plan.fft_mean[0]
        else:
            mean0, delta00 = float(plan.mean_jump[0]), plan.delta0

    if g.dim == 1:
        k = g.wavenumbers()
        drift = (problem.rate - 0.5 * sigma2 + sign * delta00 - mean0) if pricing else 0.0
        L_hat = -0.5 * sigma2 * k ** 2 + 1j * k * drift
    else:
        k2 = g.wavenumbers_full()[:, None] ** 2 + g.wavenumbers()[None, :] ** 2
        L_hat = -0.5 * sigma2 * k2 + 0j

    source_bs = None
    if shifted:
        # call and put share the source: the compensated operator kills the
        # affine gap between the two closed forms, and the put profile keeps
        # the evaluation free of exponential growth
        source_bs = BlackScholesClosedForm(problem.strike, problem.rate,
                                           problem.sigma, "put")

    h_cache: dict[float, np.ndarray] = {}
    axis = g.axis() if g.dim == 1 else None
    meshes = g.meshes() if g.dim == 2 else None
    delta_static = plan is not None and plan.shift is not None \
        and not plan.shift.strategy.time_dependent
    delta_cache: dict[float, np.ndarray] = {}

    def source(tau: float) -> np.ndarray:
        got = h_cache.get(tau)
        if got is None:
            got = apply_f_tilde_fn(plan, lambda p: source_bs.u(tau, p),
                                   lambda p: source_bs.du_dx(tau, p), tau)
            if not np.all(np.isfinite(got)):
                raise SingularityError(
                    f"compensated source is non-finite at tau={tau:.3e}; "
                    "use a finer graded startup mesh")
            if len(h_cache) > 6:
                h_cache.pop(next(iter(h_cache)))
            h_cache[tau] = got
        return got

    def delta_x(tau: float) -> np.ndarray:
        key = 0.0 if delta_static else tau
        got = delta_cache.get(key)
        if got is None:
            got = delta_on_plan_nodes(plan, tau)
            if len(delta_cache) > 6:
                delta_cache.pop(next(iter(delta_cache)))
            delta_cache[key] = got
        return got

    fft_fast = plan is not None and plan.uses_fft
    bounded = plan.bounded_multiplier() if fft_fast else None
    tr = _Transforms(g)
    needs_grad = (not fft_fast and plan is not None) or (not pricing) \
        or (plan is not None and plan.shift is not None)

    def N_fn(tau: float, v: np.ndarray, dv):
        out = None
        if fft_fast:
            out = tr.inv(bounded * tr.fwd(v))
        elif plan is not None:
            fld = GridField(g, v, tau)
            f_val = apply_f(plan, fld, dv, tau).values
            if pricing:
                excess = mean0 + (sign * (delta_x(tau) - delta00)
                                  if plan.shift is not None else 0.0)
                f_val = f_val + excess * dv
            out = f_val
        if not pricing:
            coords = axis if g.dim == 1 else meshes
            gval = problem.nonlinearity(tau, coords, v, dv)
            out = gval if out is None else out + gval
        if shifted and plan is not None:
            out = source(tau) if out is None else out + source(tau)
        if out is None:
            out = np.zeros_like(v)
        return out

    return plan, L_hat, N_fn, needs_grad


def _check_stability(problem: CauchyProblem, scheme: SchemeConfig,
                     plan: OperatorPlan | None) -> None:
    """Explicit-part Lipschitz estimate vs the step, before any marching."""
    if scheme.scheme != "imex_bdf2" or plan is None:
        return
    mass = plan.fft_mass if plan.uses_fft else plan.nu_mass
    lip = 2.0 * mass
    if not plan.uses_fft and plan.dim == 1:
        k_max = math.pi / problem.grid.dx
        dvals = delta_on_plan_nodes(plan, 0.0)
        lip += k_max * (abs(float(plan.mean_jump[0]))
                        + float(np.max(np.abs(dvals - plan.delta0))))
    if lip > 0 and scheme.dt > scheme.stability_limit / lip:
        raise StabilityError(
            f"dt = {scheme.dt:.3e} exceeds the explicit-part bound "
            f"{scheme.stability_limit / lip:.3e}")


def _run(problem: CauchyProblem, scheme: SchemeConfig, v0: np.ndarray,
         taus: np.ndarray, shifted: bool, store_stride: int):
    plan, L_hat, N_fn, needs_grad = _prepare_rhs(problem, scheme, shifted)
    _check_stability(problem, scheme, plan)
    norm = FractionalNorm(problem.grid, scheme.monitor_gamma)
    T = float(taus[-1])
    marks = [T * (j + 1) / scheme.checkpoint_count
             for j in range(scheme.checkpoint_count)]
    mark_idx = np.unique([int(np.argmin(np.abs(taus - m))) for m in marks])
    mark_set = {int(i) for i in mark_idx if i > 0}
    checkpoints = []

    def on_level(i, tau, v):
        if i in mark_set:
            checkpoints.append((tau, norm(GridField(problem.grid, v, tau))))

    v_T, stored = _march(problem.grid, L_hat, N_fn, v0, taus, scheme,
                         needs_grad, on_level, store_stride)
    return plan, v_T, tuple(checkpoints), stored


def solve_direct(problem: CauchyProblem, scheme: SchemeConfig,
                 store_stride: int = 0) -> SolveResult:
    """March the problem's initial field to the horizon.

    Smooth initial data; uniform time mesh.  The kinked-payoff pricing path
    is solve_shifted.
    """
    if problem.initial is None:
        raise ParameterDomainError("direct solves need an initial field")
    if problem.initial.grid != problem.grid:
        raise ParameterDomainError("initial field lives on a different grid")
    if problem.diffusion_mode == "feedback":
        return _solve_feedback(problem, scheme, store_stride)
    tau0 = problem.initial.time_tag
    taus = build_time_mesh(problem.horizon, scheme.dt, grade=False, tau0=tau0)
    plan, v_T, checkpoints, stored = _run(problem, scheme,
                                          problem.initial.values, taus,
                                          shifted=False,
                                          store_stride=store_stride)
    gap = None
    if scheme.cross_check:
        other = "mild_etd2" if scheme.scheme == "imex_bdf2" else "imex_bdf2"
        alt = solve_direct(problem, _replace_scheme(scheme, other))
        gap = _rel_l2(v_T, alt.field.values)
        if gap > scheme.cross_check_tol:
            raise ToleranceNotMetError(
                f"scheme cross-check gap {gap:.3e} exceeds "
                f"{scheme.cross_check_tol:.3e}", error=gap)
    return SolveResult(GridField(problem.grid, v_T, float(taus[-1])),
                       checkpoints, taus, scheme, plan,
                       trajectory=tuple(stored), cross_check_gap=gap)


def solve_shifted(problem: CauchyProblem, scheme: SchemeConfig,
                  store_stride: int = 0) -> SolveResult:
    """Price with kinked payoff data by evolving U = u - u_closed_form.

    U starts identically zero; the payoff kink and the exponential growth
    both live in the closed form, which also supplies the analytic source.
    Returns the reassembled u as `field`, with the difference and background
    attached.
    """
    if problem.dim != 1:
        raise UnsupportedConfigurationError("shifted solves are 1-D only")
    if problem.diffusion_mode == "feedback":
        raise UnsupportedConfigurationError(
            "feedback diffusion runs through solve_direct")
    if problem.nonlinearity is not None:
        raise UnsupportedConfigurationError(
            "shifted solves use the built-in pricing drift")
    T = problem.horizon
    taus = build_time_mesh(T, scheme.dt, grade=scheme.startup_grading,
                           fraction=scheme.startup_fraction,
                           density=scheme.startup_density)
    v0 = np.zeros(problem.grid.n_total)
    plan, U_T, checkpoints, stored = _run(problem, scheme, v0, taus,
                                          shifted=True,
                                          store_stride=store_stride)
    bs = BlackScholesClosedForm(problem.strike, problem.rate, problem.sigma,
                                problem.option_type)
    background = GridField(problem.grid, bs.u(T, problem.grid.axis()), T)
    u_field = GridField(problem.grid, U_T + background.values, T)
    gap = None
    if scheme.cross_check:
        other = "mild_etd2" if scheme.scheme == "imex_bdf2" else "imex_bdf2"
        alt = solve_shifted(problem, _replace_scheme(scheme, other))
        gap = _rel_l2(u_field.values, alt.field.values)
        if gap > scheme.cross_check_tol:
            raise ToleranceNotMetError(
                f"scheme cross-check gap {gap:.3e} exceeds "
                f"{scheme.cross_check_tol:.3e}", error=gap)
    return SolveResult(u_field, checkpoints, taus, scheme, plan,
                       background=background,
                       difference=GridField(problem.grid, U_T, T),
                       trajectory=tuple(stored), cross_check_gap=gap)


def multid_solve(problem: CauchyProblem, scheme: SchemeConfig,
                 store_stride: int = 0) -> SolveResult:
    """Two-dimensional tensor-grid solve (identity shift, smooth data)."""
    if problem.dim != 2:
        raise ParameterDomainError("multid_solve expects a 2-D problem")
    if problem.shift is not None and problem.shift.rho != 0.0:
        raise UnsupportedConfigurationError(
            "feedback shifts are unsupported on two-dimensional grids")
    return solve_direct(problem, scheme, store_stride)


def _replace_scheme(scheme: SchemeConfig, name: str) -> SchemeConfig:
    from dataclasses import replace
    return replace(scheme, scheme=name, cross_check=False)


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    den = float(np.linalg.norm(a))
    return float(np.linalg.norm(a - b)) / (den if den > 0 else 1.0)


def step_imex(problem: CauchyProblem, scheme: SchemeConfig, state: GridField,
              history: GridField | None = None) -> GridField:
    """One IMEX step from state.time_tag; supply the previous level to take a
    BDF2 step instead of the Euler startup step."""
    plan, L_hat, N_fn, needs_grad = _prepare_rhs(problem, scheme, shifted=False)
    _check_stability(problem, scheme, plan)
    sch = _replace_scheme(scheme, "imex_bdf2")
    if history is None:
        taus = np.array([state.time_tag, state.time_tag + scheme.dt])
        v, _ = _march(problem.grid, L_hat, N_fn, state.values, taus, sch,
                      needs_grad)
        return state.with_values(v, state.time_tag + scheme.dt)
    taus = np.array([history.time_tag, state.time_tag,
                     state.time_tag + scheme.dt])
    tr = _Transforms(problem.grid)
    dt_prev = state.time_tag - history.time_tag
    dt = scheme.dt
    rho = dt / dt_prev
    a0 = (1.0 + 2.0 * rho) / (1.0 + rho)
    a2 = rho * rho / (1.0 + rho)
    dv_h = tr.grad(tr.fwd(history.values)) if needs_grad else None
    dv_s = tr.grad(tr.fwd(state.values)) if needs_grad else None
    n_prev = N_fn(history.time_tag, history.values, dv_h)
    n_cur = N_fn(state.time_tag, state.values, dv_s)
    n_ext = (1.0 + rho) * n_cur - rho * n_prev
    u_hat = ((1.0 + rho) * tr.fwd(state.values) - a2 * tr.fwd(history.values)
             + dt * tr.fwd(n_ext)) / (a0 - dt * L_hat)
    return state.with_values(tr.inv(u_hat), state.time_tag + dt)


def step_mild(problem: CauchyProblem, scheme: SchemeConfig,
              state: GridField) -> GridField:
    """One exponential-integrator step from state.time_tag."""
    plan, L_hat, N_fn, needs_grad = _prepare_rhs(problem, scheme, shifted=False)
    sch = _replace_scheme(scheme, "mild_etd2")
    taus = np.array([state.time_tag, state.time_tag + scheme.dt])
    v, _ = _march(problem.grid, L_hat, N_fn, state.values, taus, sch, needs_grad)
    return state.with_values(v, state.time_tag + scheme.dt)


def _solve_feedback(problem: CauchyProblem, scheme: SchemeConfig,
                    store_stride: int) -> SolveResult:
    """Frozen-coefficient IMEX with the feedback diffusion coefficient.

    The x-dependent diffusion breaks the Fourier diagonalization, so each
    step solves a cyclic tridiagonal system; drift and jump terms go
    explicit.  Experimental: imex_bdf2 only, direct mode, uniform mesh.
    """
    if scheme.scheme != "imex_bdf2":
        raise UnsupportedConfigurationError(
            "feedback diffusion is implemented for imex_bdf2 only")
    g = problem.grid
    x = g.axis()
    plan = build_plan(g, problem.measure, problem.shift,
                      grad_method=scheme.grad_method) \
        if problem.measure is not None else None
    sign = problem.delta_sign
    pricing = problem.nonlinearity is None

    def explicit(tau, v, dv):
        out = np.zeros_like(v)
        if plan is not None:
            fld = GridField(g, v, tau)
            out += apply_f(plan, fld, dv, tau).values
            if pricing:
                out += (sign * delta_on_plan_nodes(plan, tau)) * dv
        if pricing:
            out += (problem.rate - 0.5 * problem.sigma ** 2) * dv
        else:
            out += problem.nonlinearity(tau, x, v, dv)
        return out

    # explicit advection bound
    b_est = abs(problem.rate) + 0.5 * problem.sigma ** 2
    if scheme.dt > scheme.stability_limit * g.dx / max(b_est, 1e-12):
        raise StabilityError(
            f"dt = {scheme.dt:.3e} violates the explicit advection bound "
            f"{scheme.stability_limit * g.dx / b_est:.3e} of feedback mode")

    tau0 = problem.initial.time_tag
    taus = build_time_mesh(problem.horizon, scheme.dt, grade=False, tau0=tau0)
    tr = _Transforms(g)
    norm = FractionalNorm(g, scheme.monitor_gamma)
    v = np.array(problem.initial.values, dtype=float)
    v_prev = None
    n_prev = None
    dt_prev = None
    stored = [(float(tau0), v.copy())] if store_stride else []
    checkpoints = []
    T = float(taus[-1])
    marks = {int(np.argmin(np.abs(taus - T * (j + 1) / scheme.checkpoint_count)))
             for j in range(scheme.checkpoint_count)}
    inv_dx2 = 1.0 / g.dx ** 2
    for i in range(taus.size - 1):
        tau = float(taus[i])
        dt = float(taus[i + 1] - taus[i])
        c = _feedback_coefficient(problem, tau, x)
        dv = tr.grad(tr.fwd(v))
        n_cur = explicit(tau, v, dv)
        if v_prev is None:
            dia = 1.0 + 2.0 * dt * c * inv_dx2
            off = -dt * c * inv_dx2
            rhs = v + dt * n_cur
            v_new = _solve_cyclic_tridiag(off, dia, off, rhs)
        else:
            rho = dt / dt_prev
            a0 = (1.0 + 2.0 * rho) / (1.0 + rho)
            a2 = rho * rho / (1.0 + rho)
            n_ext = (1.0 + rho) * n_cur - rho * n_prev
            dia = a0 + 2.0 * dt * c * inv_dx2
            off = -dt * c * inv_dx2
            rhs = (1.0 + rho) * v - a2 * v_prev + dt * n_ext
            v_new = _solve_cyclic_tridiag(off, dia, off, rhs)
        v_prev, v = v, v_new
        if not np.all(np.isfinite(v)):
            raise BlowUpError("state became non-finite", step=i + 1,
                              tau=float(taus[i + 1]))
        n_prev, dt_prev = n_cur, dt
        if (i + 1) in marks:
            checkpoints.append((float(taus[i + 1]),
                                norm(GridField(g, v, float(taus[i + 1])))))
        if store_stride and (i + 1) % store_stride == 0:
            stored.append((float(taus[i + 1]), v.copy()))
    return SolveResult(GridField(g, v, T), tuple(checkpoints), taus, scheme,
                       plan, trajectory=tuple(stored))


@dataclass(frozen=True)
class DecayReport:
    slope: float
    bound: float
    passed: bool
    skipped: bool
    taus: tuple
    norms: tuple


def singular_source_decay_probe(problem: CauchyProblem, gamma: float,
                                p: int = 2, tau_lo: float = 1e-4,
                                tau_hi: float = 1e-1,
                                samples: int = 9) -> DecayReport:
    """Log-log slope of the compensated-source L2 norm over early times.

    Passes when the fitted slope is no steeper than
    -(2 gamma - 1)(1/2 - 1/(2p)) minus a 0.1 slack; a measure-free problem is
    reported as skipped.
    """
    if not 0.5 <= gamma < 1.0:
        raise ParameterDomainError("gamma must satisfy 1/2 <= gamma < 1")
    if p != 2:
        raise UnsupportedConfigurationError("only p = 2 norms are wired up")
    bound = -(2.0 * gamma - 1.0) * (0.5 - 0.5 / p) - 0.1
    if problem.measure is None:
        return DecayReport(0.0, bound, True, True, (), ())
    plan = build_plan(problem.grid, problem.measure, problem.shift)
    bs = BlackScholesClosedForm(problem.strike, problem.rate, problem.sigma,
                                "put")
    taus = np.geomspace(tau_lo, tau_hi, samples)
    norms = []
    dx = problem.grid.dx
    for tau in taus:
        h = apply_f_tilde_fn(plan, lambda q: bs.u(float(tau), q),
                             lambda q: bs.du_dx(float(tau), q), float(tau))
        norms.append(float(np.sqrt(np.sum(h ** 2) * dx)))
    slope = float(np.polyfit(np.log(taus), np.log(norms), 1)[0])
    return DecayReport(slope, bound, slope >= bound, False,
                       tuple(taus.tolist()), tuple(norms))


def duhamel_gap(problem: CauchyProblem, scheme: SchemeConfig,
                result: SolveResult, checkpoints: int = 3,
                shifted: bool | None = None) -> float:
    """Residual of the variation-of-constants identity along the trajectory.

    Re-integrates the stored trajectory's explicit terms against the exact
    semigroup by trapezoid and compares with the stored terminal state;
    needs a solve run with store_stride.  Returns the worst relative L2 gap
    over `checkpoints` target times.
    """
    if len(result.trajectory) < 3:
        raise ParameterDomainError("run the solve with store_stride to use this")
    if shifted is None:
        shifted = result.difference is not None
    plan, L_hat, N_fn, needs_grad = _prepare_rhs(problem, scheme, shifted)
    tr = _Transforms(problem.grid)
    times = [t for t, _ in result.trajectory]
    vals = [v for _, v in result.trajectory]
    n_hats = []
    for t, v in result.trajectory:
        dv = tr.grad(tr.fwd(v)) if needs_grad else None
        n_hats.append(tr.fwd(N_fn(t, v, dv)))
    targets = np.linspace(len(times) // checkpoints, len(times) - 1,
                          checkpoints).astype(int)
    worst = 0.0
    u0_hat = tr.fwd(vals[0])
    for m in targets:
        tm = times[m]
        acc = np.exp(L_hat * (tm - times[0])) * u0_hat
        for i in range(m):
            dt = times[i + 1] - times[i]
            acc += 0.5 * dt * (np.exp(L_hat * (tm - times[i])) * n_hats[i]
                               + np.exp(L_hat * (tm - times[i + 1])) * n_hats[i + 1])
        rec = tr.inv(acc)
        den = float(np.linalg.norm(vals[m]))
        gap = float(np.linalg.norm(rec - vals[m])) / (den if den > 0 else 1.0)
        worst = max(worst, gap)
    return worst
