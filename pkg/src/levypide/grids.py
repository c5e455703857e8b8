"""Uniform periodic grids with padding, and the field container used everywhere.

A grid covers a core window [-half_width, half_width) plus `pad` extra cells on
each side; the padded box is treated as periodic by every spectral operation.
The pad exists so that non-local operators can reach `x + xi` for core points
without wrap-around contaminating the core region.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.fft import next_fast_len

from .errors import OutOfDomainError, ParameterDomainError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a padded periodic box, 1-D or square 2-D tensor."""

    dim: int
    half_width: float
    n_core: int
    pad: int = 0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterDomainError("dim must be 1 or 2")
        if self.half_width <= 0:
            raise ParameterDomainError("half_width must be positive")
        if self.n_core < 8 or self.n_core % 2:
            raise ParameterDomainError("n_core must be an even integer >= 8")
        if self.pad < 0:
            raise ParameterDomainError("pad must be nonnegative")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_core

    @property
    def n_total(self) -> int:
        return self.n_core + 2 * self.pad

    @property
    def x_lo(self) -> float:
        """Left edge of the padded box."""
        return -self.half_width - self.pad * self.dx

    @property
    def length(self) -> float:
        """Period of the padded box."""
        return self.n_total * self.dx

    def axis(self) -> np.ndarray:
        """Padded coordinates along one axis (identical in both axes for dim=2)."""
        return self.x_lo + self.dx * np.arange(self.n_total)

    def meshes(self):
        ax = self.axis()
        if self.dim == 1:
            return (ax,)
        return np.meshgrid(ax, ax, indexing="ij")

    def core_slice(self):
        s = slice(self.pad, self.pad + self.n_core)
        return s if self.dim == 1 else (s, s)

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers matching the real FFT along one axis."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n_total, d=self.dx)

    def wavenumbers_full(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_total, d=self.dx)

    def index_of(self, x: float) -> int:
        i = round((x - self.x_lo) / self.dx)
        if not (0 <= i < self.n_total) or abs(self.x_lo + i * self.dx - x) > 1e-9 * max(1.0, abs(x)):
            raise OutOfDomainError(f"x={x} is not a grid point")
        return int(i)


def make_grid(half_width: float, n_core: int, reach: float = 0.0,
              stencil_margin: int = 4, dim: int = 1) -> Grid:
    """Build a grid whose padding covers a non-local reach.

    Pad cells are sized to ceil(reach / dx) plus a stencil margin, then rounded
    so the padded length is FFT-friendly.
    """
    dx = 2.0 * half_width / n_core
    pad = int(np.ceil(max(reach, 0.0) / dx)) + stencil_margin if reach > 0 or stencil_margin else 0
    n_tot = next_fast_len(n_core + 2 * pad, real=True)
    extra = n_tot - (n_core + 2 * pad)
    pad += extra // 2
    if extra % 2:  # keep pads symmetric; shrink back to an even split
        n_tot = n_core + 2 * pad
    return Grid(dim=dim, half_width=half_width, n_core=n_core, pad=pad)


@dataclass(frozen=True)
class GridField:
    """Real field sampled on a padded grid, tagged with its time coordinate."""

    grid: Grid
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_total,) if self.grid.dim == 1 else (self.grid.n_total,) * 2
        if v.shape != expected:
            raise ParameterDomainError(
                f"values shape {v.shape} does not match grid shape {expected}")
        if not np.all(np.isfinite(v)):
            raise ParameterDomainError("field values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn, time_tag: float = 0.0) -> "GridField":
        return cls(grid, fn(*grid.meshes()), time_tag)

    @classmethod
    def zeros(cls, grid: Grid, time_tag: float = 0.0) -> "GridField":
        shape = (grid.n_total,) if grid.dim == 1 else (grid.n_total,) * 2
        return cls(grid, np.zeros(shape), time_tag)

    def core(self) -> np.ndarray:
        return self.values[self.grid.core_slice()]

    def with_values(self, values: np.ndarray, time_tag: float | None = None) -> "GridField":
        return replace(self, values=values,
                       time_tag=self.time_tag if time_tag is None else time_tag)

    def l2(self) -> float:
        """Grid-weighted L2 norm over the padded box."""
        return float(np.sqrt(np.sum(self.values ** 2) * self.grid.dx ** self.grid.dim))

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))


def spectral_gradient(u: GridField) -> tuple[np.ndarray, ...]:
    """Gradient by Fourier differentiation on the padded periodic box."""
    g = u.grid
    if g.dim == 1:
        uh = np.fft.rfft(u.values)
        return (np.fft.irfft(1j * g.wavenumbers() * uh, n=g.n_total),)
    kx = g.wavenumbers_full()[:, None]
    ky = g.wavenumbers()[None, :]
    uh = np.fft.rfft2(u.values)
    d1 = np.fft.irfft2(1j * kx * uh, s=u.values.shape)
    d2 = np.fft.irfft2(1j * ky * uh, s=u.values.shape)
    return d1, d2


def fd4_gradient(u: GridField) -> tuple[np.ndarray, ...]:
    """Fourth-order central differences with periodic wrap."""
    g = u.grid

    def d(axis: int) -> np.ndarray:
        v = u.values
        return (8.0 * (np.roll(v, -1, axis) - np.roll(v, 1, axis))
                - (np.roll(v, -2, axis) - np.roll(v, 2, axis))) / (12.0 * g.dx)

    return tuple(d(a) for a in range(g.dim))


def gradient(u: GridField, method: str = "spectral") -> tuple[np.ndarray, ...]:
    if method == "spectral":
        return spectral_gradient(u)
    if method == "fd4":
        return fd4_gradient(u)
    raise ParameterDomainError(f"unknown gradient method {method!r}")


def cubic_interp_periodic(values: np.ndarray, x_lo: float, dx: float,
                          query: np.ndarray) -> np.ndarray:
    """Local cubic Lagrange interpolation on a uniform periodic grid (1-D).

    Fourth-order accurate for smooth data; queries wrap around the box.
    """
    n = values.shape[0]
    s = (np.asarray(query) - x_lo) / dx
    base = np.floor(s).astype(np.int64)
    t = s - base
    out = np.zeros_like(t)
    # Lagrange basis on offsets -1, 0, 1, 2 evaluated at local coordinate t
    w = (
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    )
    for j, wj in zip((-1, 0, 1, 2), w):
        out += wj * values[(base + j) % n]
    return out


def field_interp(u: GridField, query: np.ndarray) -> np.ndarray:
    if u.grid.dim != 1:
        raise ParameterDomainError("cubic interpolation is 1-D only")
    return cubic_interp_periodic(u.values, u.grid.x_lo, u.grid.dx, query)
