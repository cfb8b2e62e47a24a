"""Grids, field containers, spectral derivatives and the Madelung maps.

All fields live on a uniform periodic lattice.  Point ``i`` along axis ``d``
sits at ``-L_d/2 + i * dx_d``, so the origin is the grid point with index
``N_d // 2`` on every axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import factorial
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateDensityError, DomainError, NodeError

TOL_NORM = 1e-10
EPS_NODE = 1e-12
TOL_PHASE = 1e-8

# boundary-jump polynomial used by aperiodic_derivative
_JUMP_ORDERS = 3
_STENCIL = 6


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice in 1 to 3 dimensions."""

    points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(n) for n in self.points))
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        if len(self.points) != len(self.lengths):
            raise ConfigurationError("points and lengths must have the same number of axes")
        if not 1 <= len(self.points) <= 3:
            raise ConfigurationError("only 1, 2 or 3 dimensions are supported")
        for n in self.points:
            if n < 8 or n & (n - 1):
                raise ConfigurationError(f"points per axis must be a power of two >= 8, got {n}")
        for length in self.lengths:
            if not np.isfinite(length) or length <= 0:
                raise ConfigurationError(f"axis length must be positive, got {length}")

    @property
    def n_dims(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(length / n for length, n in zip(self.lengths, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def origin_index(self) -> tuple[int, ...]:
        return tuple(n // 2 for n in self.points)

    def coords(self, axis: int = 0) -> np.ndarray:
        return -self.lengths[axis] / 2 + np.arange(self.points[axis]) * self.spacing[axis]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.coords(d) for d in range(self.n_dims)), indexing="ij"))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Coordinates along ``axis`` shaped to broadcast against a field."""
        shape = [1] * self.n_dims
        shape[axis] = self.points[axis]
        return self.coords(axis).reshape(shape)

    def wavenumbers(self, axis: int = 0) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.points[axis], d=self.spacing[axis])

    def momentum_grid(self, hbar: float) -> "Grid":
        """Conjugate lattice with spacing 2*pi*hbar/L, ordered like fftshift."""
        return Grid(self.points, tuple(2 * np.pi * hbar / dx for dx in self.spacing))

    def point(self, index: Sequence[int]) -> tuple[float, ...]:
        return tuple(float(self.coords(d)[i]) for d, i in enumerate(index))


def make_grid(n_dims: int, points_per_dim: Sequence[int], length_per_dim: Sequence[float]) -> Grid:
    if n_dims < 1 or len(points_per_dim) != n_dims or len(length_per_dim) != n_dims:
        raise ConfigurationError("n_dims must match the number of point counts and lengths")
    return Grid(tuple(points_per_dim), tuple(length_per_dim))


@dataclass(frozen=True)
class PhysParams:
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.hbar > 0):
            raise ConfigurationError("mass and hbar must be positive")

    @property
    def C(self) -> float:
        """Fluctuation constant, (hbar/2)**2."""
        return self.hbar**2 / 4


def _as_grid_array(grid: Grid, values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != grid.shape:
        raise ConfigurationError(f"field shape {arr.shape} does not match grid {grid.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class DensityField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _as_grid_array(self.grid, self.values)
        if not np.all(np.isfinite(arr)):
            raise DomainError("density contains non-finite values")
        if np.any(arr < 0):
            idx = tuple(int(i) for i in np.unravel_index(np.argmin(arr), arr.shape))
            raise DomainError(f"density is negative at grid index {idx}")
        object.__setattr__(self, "values", arr)

    def total(self) -> float:
        return integrate(self.values, self.grid)

    def is_normalized(self, tol: float = TOL_NORM) -> bool:
        return abs(self.total() - 1.0) <= tol


@dataclass(frozen=True, eq=False)
class PhaseField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _as_grid_array(self.grid, self.values)
        if not np.all(np.isfinite(arr)):
            raise DomainError("phase field contains non-finite values")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True, eq=False)
class EnsembleState:
    """Hydrodynamic pair (P, S) at time ``t``."""

    P: DensityField
    S: PhaseField
    t: float = 0.0

    def __post_init__(self):
        if self.P.grid != self.S.grid:
            raise ConfigurationError("P and S must share one grid")

    @classmethod
    def from_arrays(cls, grid: Grid, P, S=None, t: float = 0.0) -> "EnsembleState":
        if S is None:
            S = np.zeros(grid.shape)
        return cls(DensityField(grid, P), PhaseField(grid, S), float(t))

    @property
    def grid(self) -> Grid:
        return self.P.grid


@dataclass(frozen=True, eq=False)
class WaveState:
    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid_array(self.grid, self.values, complex))

    def norm(self) -> float:
        return integrate(np.abs(self.values) ** 2, self.grid)


def integrate(values, grid: Grid) -> float:
    """Riemann sum times cell volume (exact for trigonometric polynomials)."""
    return float(np.sum(values) * grid.cell_volume)


def normalize_density(P: DensityField) -> DensityField:
    total = P.total()
    if not total > 0:
        raise DegenerateDensityError(f"cannot normalize a density with total {total}")
    return DensityField(P.grid, P.values / total)


def check_node_free(P: np.ndarray, grid: Grid, eps: float = EPS_NODE, what: str = "density"):
    """Raise NodeError if ``P < eps * max(P)`` anywhere."""
    peak = np.max(P)
    if not peak > 0:
        raise NodeError(f"{what} is identically zero")
    bad = P < eps * peak
    if np.any(bad):
        idx = tuple(int(i) for i in np.unravel_index(np.argmax(bad), P.shape))
        raise NodeError(
            f"{what} has a node at grid index {idx} (x = {grid.point(idx)}): "
            f"value {P[idx]:.3e} < {eps:g} * max",
            index=idx,
        )


def _values_of(field) -> np.ndarray:
    return field.values if hasattr(field, "values") else np.asarray(field)


def spectral_derivative(field, grid: Grid, axis: int = 0, order: int = 1) -> np.ndarray:
    """Fourier-collocation derivative of a periodic field along ``axis``."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    values = _values_of(field)
    n = grid.points[axis]
    k = grid.wavenumbers(axis)
    if order == 1:
        mult = 1j * k
        mult[n // 2] = 0.0  # Nyquist mode has no consistent odd derivative
    else:
        mult = -(k**2)
    shape = [1] * values.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(values, axis=axis) * mult.reshape(shape), axis=axis)
    return out if np.iscomplexobj(values) else out.real


@lru_cache(maxsize=None)
def _one_sided_weights(orders: int, stencil: int) -> tuple[np.ndarray, np.ndarray]:
    """Derivative weights (in units of dx**-r) at the two ends of a line.

    ``end`` extrapolates to one spacing past the last sample (the periodic
    image of the first point); ``start`` evaluates at the first sample.
    """
    end_nodes = -np.arange(stencil, 0, -1, dtype=float)
    start_nodes = np.arange(stencil, dtype=float)
    out = []
    for nodes in (end_nodes, start_nodes):
        vander = np.vander(nodes, stencil, increasing=True).T
        weights = np.empty((orders, stencil))
        for r in range(orders):
            rhs = np.zeros(stencil)
            rhs[r] = factorial(r)
            weights[r] = np.linalg.solve(vander, rhs)
        out.append(weights)
    return out[0], out[1]


@lru_cache(maxsize=None)
def _jump_matrix(orders: int) -> np.ndarray:
    # jump of d^r/dxi^r xi^d between xi = -1/2 and xi = +1/2, for d = 1..orders
    m = np.zeros((orders, orders))
    for r in range(orders):
        for d in range(1, orders + 1):
            if d > r:
                p = d - r
                m[r, d - 1] = factorial(d) / factorial(p) * (0.5**p - (-0.5) ** p)
    return m


def _seam_polynomial(values: np.ndarray, grid: Grid, axis: int):
    """Coefficients of the polynomial in xi = x/L carrying the seam mismatch.

    ``values`` has ``axis`` moved last.  Value, slope and curvature jumps
    across the periodic seam are estimated with one-sided stencils.
    """
    dx, length = grid.spacing[axis], grid.lengths[axis]
    w_end, w_start = _one_sided_weights(_JUMP_ORDERS, _STENCIL)
    scale = dx ** -np.arange(_JUMP_ORDERS)
    jumps = (values[..., -_STENCIL:] @ w_end.T - values[..., :_STENCIL] @ w_start.T) * scale
    # derivative r of xi^d carries a factor L**-r
    rhs = (jumps * length ** np.arange(_JUMP_ORDERS))[..., None]
    coeffs = np.linalg.solve(_jump_matrix(_JUMP_ORDERS), rhs)[..., 0]
    xi = grid.coords(axis) / length
    degrees = np.arange(1, _JUMP_ORDERS + 1)
    return coeffs, xi, degrees


def aperiodic_derivative(field, grid: Grid, axis: int = 0, orders=(1, 2)):
    """Spectral derivatives of a smooth field that need not be periodic.

    A low-degree polynomial carrying the mismatch of value, slope and
    curvature across the periodic seam is removed first, the periodic
    remainder is differentiated spectrally and the polynomial is
    differentiated exactly.  Quadratic fields (the phase and log-density of
    any Gaussian packet) come out exact to rounding.

    Returns one array per requested order.
    """
    values = np.moveaxis(_values_of(field), axis, -1)
    length = grid.lengths[axis]
    coeffs, xi, degrees = _seam_polynomial(values, grid, axis)
    poly = coeffs @ xi[None, :] ** degrees[:, None]
    remainder = np.moveaxis(values - poly, -1, axis)

    results = []
    for order in orders:
        if order == 1:
            basis = degrees[:, None] * xi[None, :] ** (degrees[:, None] - 1) / length
        elif order == 2:
            basis = degrees[:, None] * (degrees[:, None] - 1) * xi[None, :] ** np.maximum(degrees[:, None] - 2, 0) / length**2
        else:
            raise ValueError("order must be 1 or 2")
        exact = np.moveaxis(coeffs @ basis, -1, axis)
        results.append(spectral_derivative(remainder, grid, axis, order) + exact)
    return results if len(results) > 1 else results[0]


def spectral_filter(field, grid: Grid, order: int = 8, strength: float = 36.0, aperiodic: bool = False) -> np.ndarray:
    """Exponential low-pass filter exp(-strength (|k|/k_max)^order) on every axis.

    With ``aperiodic`` the seam polynomial is taken out before filtering and
    restored afterwards, so only the periodic remainder is touched.
    """
    values = np.asarray(_values_of(field), dtype=float)
    for axis in range(grid.n_dims):
        moved = np.moveaxis(values, axis, -1)
        poly = 0.0
        if aperiodic:
            coeffs, xi, degrees = _seam_polynomial(moved, grid, axis)
            poly = coeffs @ xi[None, :] ** degrees[:, None]
        k = np.abs(grid.wavenumbers(axis))
        sigma = np.exp(-strength * (k / k.max()) ** order)
        smooth = np.fft.ifft(np.fft.fft(moved - poly, axis=-1) * sigma, axis=-1).real + poly
        values = np.moveaxis(smooth, -1, axis)
    return values


def to_wave(state: EnsembleState, params: PhysParams) -> WaveState:
    psi = np.sqrt(state.P.values) * np.exp(1j * state.S.values / params.hbar)
    return WaveState(state.grid, psi, state.t)


def velocity_potential_gradient(psi: np.ndarray, grid: Grid, params: PhysParams, axis: int = 0) -> np.ndarray:
    """hbar * Im(conj(psi) dpsi) / |psi|^2 along ``axis``."""
    dpsi = spectral_derivative(psi, grid, axis, 1)
    return params.hbar * np.imag(np.conj(psi) * dpsi) / np.abs(psi) ** 2


def accumulated_phase(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Continuous branch of arg(values) built by grid-path continuity.

    Starts from the principal argument at the origin point, then walks along
    axis 0 through the origin, then along axis 1 from every point reached so
    far, and so on.  Each step adds arg(z_{i+1} conj(z_i)).
    """
    origin = grid.origin_index
    phase = np.full(values.shape, np.nan)
    seed = tuple(slice(None) if d == 0 else origin[d] for d in range(grid.n_dims))
    line = values[seed]
    phase_line = _walk(line, origin[0], np.angle(values[origin]))
    phase[seed] = phase_line
    known = phase_line
    for axis in range(1, grid.n_dims):
        sl = tuple(slice(None) if d <= axis else origin[d] for d in range(grid.n_dims))
        slab = np.moveaxis(values[sl], axis, -1)
        walked = _walk(slab, origin[axis], known)
        walked = np.moveaxis(walked, -1, axis)
        phase[sl] = walked
        known = walked
    return phase


def _walk(line: np.ndarray, start: int, base) -> np.ndarray:
    """Accumulate phase increments along the last axis, pinned at ``start``."""
    inc = np.angle(line[..., 1:] * np.conj(line[..., :-1]))
    out = np.empty(line.shape)
    base = np.asarray(base, dtype=float)
    out[..., start] = base
    if start + 1 < line.shape[-1]:
        out[..., start + 1 :] = base[..., None] + np.cumsum(inc[..., start:], axis=-1)
    if start > 0:
        out[..., :start] = base[..., None] - np.cumsum(inc[..., :start][..., ::-1], axis=-1)[..., ::-1]
    return out


def from_wave(wave: WaveState, params: PhysParams) -> EnsembleState:
    """Inverse Madelung map for node-free wavefunctions.

    S is fixed to hbar * arg(psi) at the origin and continued along the grid
    path; any 2*pi*hbar winding is left for ``transforms.winding_number``.
    """
    grid = wave.grid
    P = np.abs(wave.values) ** 2
    check_node_free(P, grid, what="|psi|^2")
    S = params.hbar * accumulated_phase(wave.values, grid)
    return EnsembleState.from_arrays(grid, P, S, wave.t)


def gaussian_density(grid: Grid, x0=0.0, sigma=1.0) -> DensityField:
    """Product Gaussian with centre ``x0`` and rms width ``sigma`` per axis."""
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (grid.n_dims,))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (grid.n_dims,))
    P = np.ones(grid.shape)
    for d in range(grid.n_dims):
        x = grid.axis_coords(d)
        P = P * np.exp(-((x - x0[d]) ** 2) / (2 * sigma[d] ** 2)) / np.sqrt(2 * np.pi * sigma[d] ** 2)
    return DensityField(grid, P)


def gaussian_state(grid: Grid, x0=0.0, sigma=1.0, p0=0.0, t: float = 0.0) -> EnsembleState:
    """Gaussian density carrying the uniform momentum ``p0`` (S = p0 . x)."""
    p0 = np.broadcast_to(np.asarray(p0, dtype=float), (grid.n_dims,))
    S = sum(p0[d] * grid.axis_coords(d) for d in range(grid.n_dims)) * np.ones(grid.shape)
    return EnsembleState(gaussian_density(grid, x0, sigma), PhaseField(grid, S), t)
