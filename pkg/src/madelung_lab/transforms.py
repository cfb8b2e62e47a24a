"""k-scaling, displacements, the (phi, chi) normal modes and phase winding."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AlignmentError, ConsistencyError, InversionError, NodeError, PreconditionError, ResolutionError
from .fields import (
    EPS_NODE,
    DensityField,
    EnsembleState,
    Grid,
    PhysParams,
    WaveState,
    accumulated_phase,
    check_node_free,
    integrate,
    spectral_derivative,
    to_wave,
)
from . import statistics as stats

MIN_POINTS_PER_WIDTH = 16
# largest edge value (relative to the peak) for which a widened density still fits the box
SUPPORT_TOL = 1e-6
ALIGN_TOL = 1e-9
TOL_REAL = 1e-10
TOL_WINDING = 1e-8
# largest phase step along a loop that still counts as resolved (4 samples per turn)
MAX_PHASE_STEP = np.pi / 2


def _interpolate(values: np.ndarray, grid: Grid, axis: int, targets: np.ndarray) -> np.ndarray:
    """Band-limited interpolant of ``values`` along ``axis`` evaluated at ``targets``."""
    n = grid.points[axis]
    k = grid.wavenumbers(axis)
    shift = targets - grid.coords(axis)[0]
    basis = np.exp(1j * np.outer(shift, k))
    # split the Nyquist mode evenly between +k and -k so real data stays real
    basis[:, n // 2] = np.cos(k[n // 2] * shift)
    coeffs = np.fft.fft(values, axis=axis)
    out = np.tensordot(basis, coeffs, axes=([1], [axis])).real / n
    return np.moveaxis(out, 0, axis)


def k_scale(P: DensityField, k: float) -> DensityField:
    """P_k(x) = k^n P(k x), resampled by Fourier interpolation and renormalized.

    Where k x leaves the box (k > 1) the density is continued by its value at
    the nearest edge, which is the decayed floor for any density that fits.
    """
    P = getattr(P, "P", P)
    if not k > 0:
        raise ValueError("k must be positive")
    grid = P.grid
    for axis in range(grid.n_dims):
        width = stats.rms_width(P, axis) / k
        if width < MIN_POINTS_PER_WIDTH * grid.spacing[axis]:
            raise ResolutionError(
                f"k = {k:g} leaves {width / grid.spacing[axis]:.1f} points per rms width on axis {axis}; "
                f"at least {MIN_POINTS_PER_WIDTH} are needed"
            )
    values = P.values
    for axis in range(grid.n_dims):
        half = grid.lengths[axis] / 2
        targets = np.clip(k * grid.coords(axis), -half, half - grid.spacing[axis])
        values = _interpolate(values, grid, axis, targets)
    values = values * k**grid.n_dims
    peak = values.max()
    for axis in range(grid.n_dims):
        edge = max(np.take(values, 0, axis).max(), np.take(values, -1, axis).max())
        if edge > SUPPORT_TOL * peak:
            raise PreconditionError(f"scaled density does not decay inside the box along axis {axis}")
    values = np.clip(values, 0.0, None)
    return DensityField(grid, values / integrate(values, grid))


def _lattice_steps(shift, spacing, what: str) -> np.ndarray:
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    steps = shift / np.asarray(spacing)
    rounded = np.rint(steps)
    if np.any(np.abs(steps - rounded) > ALIGN_TOL * np.maximum(1.0, np.abs(steps))):
        raise AlignmentError(f"{what} {shift.tolist()} is not a multiple of the lattice spacing {list(spacing)}")
    return rounded.astype(int)


def displace_position(wave: WaveState, a) -> WaveState:
    """psi(x) -> psi(x - a) for lattice-aligned a (a cyclic shift of samples)."""
    grid = wave.grid
    a = np.broadcast_to(np.atleast_1d(np.asarray(a, dtype=float)), (grid.n_dims,))
    steps = _lattice_steps(a, grid.spacing, "displacement")
    return WaveState(grid, np.roll(wave.values, tuple(steps), axis=tuple(range(grid.n_dims))), wave.t)


def displace_momentum(wave: WaveState, q, params: PhysParams) -> WaveState:
    """psi -> exp(i q.x / hbar) psi for q on the momentum lattice 2 pi hbar / L."""
    grid = wave.grid
    q = np.broadcast_to(np.atleast_1d(np.asarray(q, dtype=float)), (grid.n_dims,))
    _lattice_steps(q, grid.momentum_grid(params.hbar).spacing, "momentum kick")
    phase = sum(q[d] * grid.axis_coords(d) for d in range(grid.n_dims)) / params.hbar
    return WaveState(grid, wave.values * np.exp(1j * phase), wave.t)


@dataclass(frozen=True)
class NormalModeParams:
    """Constants of the (phi, chi) map.

    ``G`` defaults to i alpha hbar / 2m.  Passing an explicit value breaks
    canonicity on purpose and exists so that the check can be seen to fail.
    """

    alpha: int = -1
    a: complex = 1.0
    K: complex = 0.0
    L: complex = 0.0
    G: complex | None = None

    def __post_init__(self):
        if self.alpha not in (1, -1):
            raise ValueError("alpha must be +1 or -1")
        if self.a == 0:
            raise ValueError("a must be nonzero")

    def coupling(self, params: PhysParams) -> complex:
        if self.G is not None:
            return complex(self.G)
        return 1j * self.alpha * params.hbar / (2 * params.mass)

    def density_factor(self, params: PhysParams) -> complex:
        """dP/d(chi) per unit (phi + K): (2/hbar)^2 (m/2) G."""
        return 2 * params.mass * self.coupling(params) / params.hbar**2


DEFAULT_MODES = NormalModeParams()


@dataclass(frozen=True, eq=False)
class ModePair:
    phi: np.ndarray
    chi: np.ndarray
    grid: Grid = field(repr=False)
    t: float = 0.0


def _mode_amplitudes(state: EnsembleState, params: PhysParams, modes: NormalModeParams):
    check_node_free(state.P.values, state.grid)
    amp = np.sqrt(state.P.values)
    rot = np.exp(1j * modes.alpha * state.S.values / params.hbar)
    A = modes.a * amp / rot
    B = modes.alpha * params.hbar / (1j * modes.a) * amp * rot
    return A, B


def to_normal_modes(state: EnsembleState, params: PhysParams, modes: NormalModeParams = DEFAULT_MODES) -> ModePair:
    """phi = a sqrt(P) e^{-i alpha S/hbar} - K,  chi = (alpha hbar / i a) sqrt(P) e^{i alpha S/hbar} - L."""
    A, B = _mode_amplitudes(state, params, modes)
    return ModePair(A - modes.K, B - modes.L, state.grid, state.t)


def mode_density(pair: ModePair, params: PhysParams, modes: NormalModeParams = DEFAULT_MODES) -> np.ndarray:
    """Complex P reconstructed as (2/hbar)^2 (m/2) G (phi + K)(chi + L)."""
    return modes.density_factor(params) * (pair.phi + modes.K) * (pair.chi + modes.L)


def from_normal_modes(pair: ModePair, params: PhysParams, modes: NormalModeParams = DEFAULT_MODES) -> EnsembleState:
    """Invert the normal-mode map.

    S = b + i alpha (hbar/2) ln((phi+K)/(chi+L)) is continued along the grid
    path from the origin; b is fixed so that S at the origin equals
    -alpha hbar arg((phi+K)/a) in (-pi hbar, pi hbar].
    """
    grid = pair.grid
    P = mode_density(pair, params, modes)
    scale = np.max(np.abs(P))
    if scale == 0 or np.max(np.abs(P.imag)) > TOL_REAL * scale or np.min(P.real) < -TOL_REAL * scale:
        raise InversionError("mode pair does not reconstruct a real non-negative density")
    P = P.real
    try:
        check_node_free(P, grid)
    except NodeError as exc:
        raise InversionError(f"reconstructed density has a node: {exc}") from exc
    A = pair.phi + modes.K
    ratio = A / (pair.chi + modes.L)
    # i alpha (hbar/2) ln(ratio) has real part -alpha (hbar/2) arg(ratio); ln|ratio| is constant and goes into b
    S = -modes.alpha * params.hbar / 2 * accumulated_phase(ratio, grid)
    origin = grid.origin_index
    S0 = -modes.alpha * params.hbar * np.angle(A[origin] / modes.a)
    S = S + (S0 - S[origin])
    return EnsembleState.from_arrays(grid, P, S, pair.t)


def canonicity_jacobian(state: EnsembleState, modes: NormalModeParams = DEFAULT_MODES, params: PhysParams | None = None) -> np.ndarray:
    """|det d(P, S)/d(phi, chi) - 1| pointwise.

    The determinant of the inverse map is formed from its partial
    derivatives at the sampled field values, so a, K and L enter the
    arithmetic and only cancel through the algebra.
    """
    params = params or PhysParams()
    A, B = _mode_amplitudes(state, params, modes)
    kappa = modes.density_factor(params)
    dP_dphi, dP_dchi = kappa * B, kappa * A
    half = 1j * modes.alpha * params.hbar / 2
    dS_dphi, dS_dchi = half / A, -half / B
    det = dP_dphi * dS_dchi - dP_dchi * dS_dphi
    return np.abs(det - 1.0)


def _gradients(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    return [spectral_derivative(values, grid, axis, 1) for axis in range(grid.n_dims)]


def mode_hamiltonian_density(pair: ModePair, V: np.ndarray, params: PhysParams, modes: NormalModeParams = DEFAULT_MODES) -> np.ndarray:
    """G grad(phi).grad(chi) + P(phi, chi) V, real part.

    The imaginary part is zero up to rounding for pairs coming from a state.
    """
    grid = pair.grid
    V = np.asarray(getattr(V, "values", V))
    gphi, gchi = _gradients(pair.phi, grid), _gradients(pair.chi, grid)
    kinetic = modes.coupling(params) * sum(p * c for p, c in zip(gphi, gchi))
    return (kinetic + mode_density(pair, params, modes) * V).real


def wave_hamiltonian_density(wave: WaveState, V: np.ndarray, params: PhysParams) -> np.ndarray:
    """(hbar^2 / 2m) |grad psi|^2 + V |psi|^2."""
    V = np.asarray(getattr(V, "values", V))
    grad_sq = sum(np.abs(g) ** 2 for g in _gradients(wave.values, wave.grid))
    return params.hbar**2 / (2 * params.mass) * grad_sq + V * np.abs(wave.values) ** 2


def mode_rhs(pair: ModePair, V: np.ndarray, params: PhysParams, modes: NormalModeParams = DEFAULT_MODES) -> np.ndarray:
    """d(phi)/dt = (dP/d chi) V - G lap(phi); depends on phi alone."""
    grid = pair.grid
    V = np.asarray(getattr(V, "values", V))
    lap = sum(spectral_derivative(pair.phi, grid, axis, 2) for axis in range(grid.n_dims))
    return modes.density_factor(params) * (pair.phi + modes.K) * V - modes.coupling(params) * lap


def uncoupling_check(
    state: EnsembleState,
    V,
    params: PhysParams,
    modes: NormalModeParams = DEFAULT_MODES,
    dt: float = 1e-3,
    steps: int = 500,
) -> float:
    """Largest mismatch between the phi equation and the actual motion of phi.

    psi is evolved by split-step; at every interior step the central
    difference of phi in time is compared with ``mode_rhs``.  The residual
    is relative to max |phi| at that step.
    """
    from .dynamics import SplitStepPropagator

    if steps < 2:
        raise ValueError("need at least two steps for a central difference")
    grid = state.grid
    Vv = np.zeros(grid.shape) if V is None else np.asarray(getattr(V, "values", V))
    propagate = SplitStepPropagator(grid, V, params, dt)
    waves = [to_wave(state, params)]
    waves.append(propagate(waves[0]))

    def phi_of(wave):
        P = np.abs(wave.values) ** 2
        check_node_free(P, grid, what="|psi|^2")
        amp = np.sqrt(P)
        rot = wave.values / amp
        # e^{-i alpha S/hbar} is rot for alpha = -1 and conj(rot) for alpha = +1
        unit = rot if modes.alpha == -1 else np.conj(rot)
        return modes.a * amp * unit - modes.K

    prev, cur = phi_of(waves[0]), phi_of(waves[1])
    worst = 0.0
    wave = waves[1]
    for _ in range(steps - 1):
        wave = propagate(wave)
        nxt = phi_of(wave)
        fd = (nxt - prev) / (2 * dt)
        rhs = mode_rhs(ModePair(cur, np.zeros_like(cur), grid), Vv, params, modes)
        worst = max(worst, float(np.max(np.abs(fd - rhs)) / np.max(np.abs(cur))))
        prev, cur = cur, nxt
    return worst


def line_loop(grid: Grid, axis: int = 0, index: Sequence[int] | None = None) -> list[tuple[int, ...]]:
    """Closed loop running once around the periodic box along ``axis``."""
    start = list(grid.origin_index if index is None else index)
    path = []
    for i in range(grid.points[axis]):
        start[axis] = i
        path.append(tuple(start))
    return path


def rectangle_loop(grid: Grid, lower: Sequence[int], upper: Sequence[int], axes=(0, 1)) -> list[tuple[int, ...]]:
    """Counter-clockwise rectangle with opposite corners ``lower`` and ``upper``.

    Indices are along ``axes``; every other axis is held at the origin.
    """
    ax, ay = axes
    (x0, y0), (x1, y1) = lower, upper
    if not (x1 > x0 and y1 > y0):
        raise ValueError("upper corner must exceed lower corner on both axes")
    corners = [(i, y0) for i in range(x0, x1)]
    corners += [(x1, j) for j in range(y0, y1)]
    corners += [(i, y1) for i in range(x1, x0, -1)]
    corners += [(x0, j) for j in range(y1, y0, -1)]
    base = list(grid.origin_index)
    path = []
    for i, j in corners:
        point = list(base)
        point[ax], point[ay] = i, j
        path.append(tuple(point))
    return path


def winding_number(field, loop: Sequence[Sequence[int]], params: PhysParams | None = None) -> int:
    """Circulation of S around a closed lattice path in units of 2 pi hbar.

    Phase increments hbar arg(psi_{i+1} conj(psi_i)) are summed, including the
    closing step from the last point back to the first.  On a closed loop the
    principal-value sum is always a whole number of turns, so resolution is
    judged per step instead: any increment above ``MAX_PHASE_STEP`` means the
    count could be off by one and raises ConsistencyError.
    """
    params = params or PhysParams()
    wave = to_wave(field, params) if isinstance(field, EnsembleState) else field
    psi = wave.values
    idx = tuple(np.asarray(loop, dtype=int).T)
    if len(loop) < 2:
        raise ValueError("a loop needs at least two points")
    on_path = psi[idx]
    density = np.abs(on_path) ** 2
    floor = EPS_NODE * np.max(np.abs(psi) ** 2)
    if np.any(density < floor):
        bad = int(np.argmin(density))
        raise NodeError(f"|psi|^2 vanishes on the loop at grid index {tuple(loop[bad])}", index=tuple(loop[bad]))
    steps = np.angle(np.roll(on_path, -1) * np.conj(on_path))
    worst = int(np.argmax(np.abs(steps)))
    if abs(steps[worst]) > MAX_PHASE_STEP:
        raise ConsistencyError(
            f"phase jumps by {steps[worst]:.3f} rad after grid index {tuple(loop[worst])}; the loop is under-resolved"
        )
    circulation = params.hbar * np.sum(steps)
    turns = circulation / (2 * np.pi * params.hbar)
    n = int(np.rint(turns))
    if abs(turns - n) > TOL_WINDING:
        raise ConsistencyError(f"phase circulation {turns:.12g} is not an integer; the loop is under-resolved")
    return n
