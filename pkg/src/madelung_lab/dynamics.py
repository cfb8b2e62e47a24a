"""Time evolution in the (P, S) and psi representations.

The hydrodynamic pair is advanced with explicit RK4.  Derivatives are taken
of log P and S with ``aperiodic_derivative``, so Gaussian packets (whose
log-density and phase are quadratic) are differentiated exactly even though
neither field is periodic.  The continuity equation is used in the
equivalent form dP/dt = -(P/m) (grad log P . grad S + lap S), which keeps
relative accuracy in the far tails of P.  Both rates pass through an
order-8 exponential filter before use: without it, aliasing in the nonlinear
products feeds the top modes and the log form blows up within a few hundred
steps.

psi is advanced with a Strang split-step scheme.  Conservation of norm and
energy is monitored, never enforced.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InstabilityError, LabError
from .fields import (
    DensityField,
    EnsembleState,
    Grid,
    PhaseField,
    PhysParams,
    WaveState,
    aperiodic_derivative,
    check_node_free,
    gaussian_state,
    integrate,
    spectral_derivative,
    spectral_filter,
    to_wave,
    velocity_potential_gradient,
)
from . import statistics as stats

logger = logging.getLogger(__name__)

SOLVERS = ("classical_hydro", "quantum_hydro", "splitstep", "both")
OVERFLOW_GUARD = 1e12
# order of the exponential filter that suppresses aliasing growth in the
# hydrodynamic rates; see spectral_filter
FILTER_ORDER = 8


@dataclass(frozen=True, eq=False)
class Potential:
    grid: Grid
    values: np.ndarray
    kind: str = "tabulated"
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != self.grid.shape:
            raise ConfigurationError(f"potential shape {arr.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("potential must be finite")
        object.__setattr__(self, "values", arr)


def make_potential(grid: Grid, kind: str = "free", mass: float = 1.0, **kw) -> Potential:
    """Sample a closed-form potential on the grid.

    free; harmonic(omega, center) = m omega^2 |x - center|^2 / 2;
    double_well(a, b) = a sum_d (x_d^2 - b^2)^2;
    polynomial(coeffs) = sum_d sum_k coeffs[k] x_d^k.
    """
    if kind == "free":
        values = np.zeros(grid.shape)
    elif kind == "harmonic":
        omega = float(kw.get("omega", 1.0))
        center = np.broadcast_to(np.asarray(kw.get("center", 0.0), dtype=float), (grid.n_dims,))
        r2 = sum((grid.axis_coords(d) - center[d]) ** 2 for d in range(grid.n_dims))
        values = 0.5 * mass * omega**2 * r2 * np.ones(grid.shape)
    elif kind == "double_well":
        a, b = float(kw.get("a", 1.0)), float(kw.get("b", 1.0))
        values = sum(a * (grid.axis_coords(d) ** 2 - b**2) ** 2 for d in range(grid.n_dims)) * np.ones(grid.shape)
    elif kind == "polynomial":
        coeffs = [float(c) for c in kw.get("coeffs", [0.0])]
        values = sum(np.polynomial.polynomial.polyval(grid.axis_coords(d), coeffs) for d in range(grid.n_dims))
        values = values * np.ones(grid.shape)
    else:
        raise ConfigurationError(f"unknown potential kind {kind!r}")
    return Potential(grid, values, kind, dict(kw))


def _potential_values(V, grid: Grid) -> np.ndarray:
    if V is None:
        return np.zeros(grid.shape)
    values = np.asarray(getattr(V, "values", V), dtype=float)
    if values.shape != grid.shape:
        values = np.broadcast_to(values, grid.shape)
    return values


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    steps: int
    solver: str = "both"
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.steps < 0 or self.record_every < 1:
            raise ConfigurationError("steps must be >= 0 and record_every >= 1")
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {SOLVERS}")


def stability_limit(state: EnsembleState, params: PhysParams) -> float:
    """0.5 * min(dx^2 m / hbar, dx m / max|grad S|) over all axes."""
    limit = np.inf
    grads = stats.phase_gradient(state)
    for axis, dx in enumerate(state.grid.spacing):
        limit = min(limit, dx**2 * params.mass / params.hbar)
        vmax = np.max(np.abs(grads[axis]))
        if vmax > 0:
            limit = min(limit, dx * params.mass / vmax)
    return 0.5 * limit


def _hydro_rates(state: EnsembleState, V, params: PhysParams, coupling: float | None):
    grid = state.grid
    P, S = state.P.values, state.S.values
    check_node_free(P, grid)
    lnP = np.log(P)
    m = params.mass
    grad_sq_S = np.zeros(grid.shape)
    lap_S = np.zeros(grid.shape)
    advect = np.zeros(grid.shape)
    grad_sq_lnP = np.zeros(grid.shape)
    lap_lnP = np.zeros(grid.shape)
    for axis in range(grid.n_dims):
        s1, s2 = aperiodic_derivative(S, grid, axis)
        l1, l2 = aperiodic_derivative(lnP, grid, axis)
        grad_sq_S += s1**2
        lap_S += s2
        advect += l1 * s1
        grad_sq_lnP += l1**2
        lap_lnP += l2
    dP = P * spectral_filter(-(advect + lap_S) / m, grid, FILTER_ORDER, aperiodic=True)
    kinetic = grad_sq_S / (2 * m)
    Vv = _potential_values(V, grid)
    if coupling is None:
        return dP, spectral_filter(-(kinetic + Vv), grid, FILTER_ORDER, aperiodic=True)
    # |grad P|^2/P^2 - 2 lap P/P written through log P
    bracket = -grad_sq_lnP - 2 * lap_lnP
    dS = -(kinetic + coupling / (2 * m) * bracket + Vv)
    return dP, spectral_filter(dS, grid, FILTER_ORDER, aperiodic=True)


def classical_rhs(state: EnsembleState, V, params: PhysParams):
    """Rates of the classical Hamilton-Jacobi and continuity equations."""
    return _hydro_rates(state, V, params, None)


def quantum_rhs(state: EnsembleState, V, params: PhysParams, coupling: float | None = None):
    """Rates with the Fisher (quantum potential) term; ``coupling`` overrides C."""
    return _hydro_rates(state, V, params, params.C if coupling is None else float(coupling))


def _stage(state: EnsembleState, rates, h: float) -> EnsembleState:
    P = state.P.values + h * rates[0]
    S = state.S.values + h * rates[1]
    _guard(P, S, state.grid)
    return EnsembleState(DensityField(state.grid, P), PhaseField(state.grid, S), state.t + h)


def _guard(P, S, grid):
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(S))) or np.max(np.abs(P)) > OVERFLOW_GUARD or np.max(np.abs(S)) > OVERFLOW_GUARD:
        raise InstabilityError("hydrodynamic fields overflowed")
    check_node_free(P, grid)


def rk4_step(
    state: EnsembleState,
    V,
    params: PhysParams,
    dt: float,
    rhs: Callable = quantum_rhs,
    check_stability: bool = True,
) -> EnsembleState:
    """One classical fourth-order Runge-Kutta step of (P, S)."""
    if check_stability:
        limit = stability_limit(state, params)
        if dt > limit:
            raise InstabilityError(f"dt = {dt:g} exceeds the stability limit {limit:.3e}")
    k1 = rhs(state, V, params)
    k2 = rhs(_stage(state, k1, dt / 2), V, params)
    k3 = rhs(_stage(state, k2, dt / 2), V, params)
    k4 = rhs(_stage(state, k3, dt), V, params)
    P = state.P.values + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    S = state.S.values + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    _guard(P, S, state.grid)
    return EnsembleState(DensityField(state.grid, P), PhaseField(state.grid, S), state.t + dt)


class SplitStepPropagator:
    """Strang splitting: half potential kick, full kinetic drift, half kick."""

    def __init__(self, grid: Grid, V, params: PhysParams, dt: float):
        self.grid, self.params, self.dt = grid, params, dt
        self.half_kick = np.exp(-0.5j * dt * _potential_values(V, grid) / params.hbar)
        k2 = sum(np.meshgrid(*(grid.wavenumbers(d) ** 2 for d in range(grid.n_dims)), indexing="ij"))
        self.drift = np.exp(-0.5j * params.hbar * dt * k2 / params.mass)

    def __call__(self, wave: WaveState) -> WaveState:
        psi = self.half_kick * wave.values
        psi = np.fft.ifftn(self.drift * np.fft.fftn(psi))
        return WaveState(self.grid, self.half_kick * psi, wave.t + self.dt)


def splitstep_step(wave: WaveState, V, params: PhysParams, dt: float) -> WaveState:
    return SplitStepPropagator(wave.grid, V, params, dt)(wave)


def total_energy(state: EnsembleState, V, params: PhysParams, coupling: float | None = None) -> float:
    """int P [ |grad S|^2/2m + (C/2m) |grad P|^2/P^2 + V ].

    ``coupling`` replaces C; zero gives the classical ensemble energy.
    """
    C = params.C if coupling is None else float(coupling)
    grid = state.grid
    P = state.P.values
    kinetic = integrate(P * sum(g**2 for g in stats.phase_gradient(state)), grid)
    fisher = C * stats.fisher_information(state.P) if C else 0.0
    return (kinetic + fisher) / (2 * params.mass) + integrate(P * _potential_values(V, grid), grid)


def wave_energy(wave: WaveState, V, params: PhysParams) -> float:
    """(hbar^2/2m) int |grad psi|^2 + int V |psi|^2."""
    grid = wave.grid
    grad_sq = sum(np.abs(spectral_derivative(wave.values, grid, d, 1)) ** 2 for d in range(grid.n_dims))
    kinetic = params.hbar**2 / (2 * params.mass) * integrate(grad_sq, grid)
    return kinetic + integrate(_potential_values(V, grid) * np.abs(wave.values) ** 2, grid)


def discrepancies(state: EnsembleState, wave: WaveState, params: PhysParams) -> tuple[float, float]:
    """L2 distance between P and |psi|^2, and P-weighted L2 distance of the velocity potentials."""
    grid = state.grid
    P = state.P.values
    l2_P = np.sqrt(integrate((P - np.abs(wave.values) ** 2) ** 2, grid))
    grads = stats.phase_gradient(state)
    diff = sum((grads[d] - velocity_potential_gradient(wave.values, grid, params, d)) ** 2 for d in range(grid.n_dims))
    return float(l2_P), float(np.sqrt(integrate(P * diff, grid)))


@dataclass
class EvolutionResult:
    config: EvolutionConfig
    records: list = field(default_factory=list)
    hydro_states: list = field(default_factory=list)
    wave_states: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([r["t"] for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=float)

    def max_drift(self, name: str) -> float:
        vals = self.column(name)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            return float("nan")
        ref = abs(vals[0]) if vals[0] != 0 else 1.0
        return float(np.max(np.abs(vals - vals[0])) / ref)


def _record(t, params, V, hydro, wave, coupling=None) -> dict:
    nan = float("nan")
    rec = {"t": t}
    if hydro is not None:
        rec["norm"] = hydro.P.total()
        rec["energy"] = total_energy(hydro, V, params, coupling)
        rep = stats.uncertainty_report(hydro, params)
    else:
        rec["norm"] = wave.norm()
        rec["energy"] = wave_energy(wave, V, params)
        rep = stats.wave_uncertainty_report(wave, params)
    rec.update(
        delta_x=rep.delta_x_fisher,
        Delta_x=rep.delta_x_rms,
        Delta_N=rep.delta_N,
        Delta_p=rep.delta_p,
        prod_exact=rep.product_exact,
        prod_heisenberg=rep.product_heisenberg,
        Delta_p_momentum_space=rep.delta_p_momentum_space,
        mean_x=stats.mean_position(hydro.P if hydro is not None else DensityField(wave.grid, np.abs(wave.values) ** 2)),
    )
    if wave is not None:
        rec["wave_norm"] = wave.norm()
        rec["wave_energy"] = wave_energy(wave, V, params)
    else:
        rec["wave_norm"] = rec["wave_energy"] = nan
    if hydro is not None and wave is not None:
        rec["l2_P_discrepancy"], rec["l2_gradS_discrepancy"] = discrepancies(hydro, wave, params)
    else:
        rec["l2_P_discrepancy"] = rec["l2_gradS_discrepancy"] = nan
    return rec


def evolve(initial, V, params: PhysParams, config: EvolutionConfig, keep_states: bool = True) -> EvolutionResult:
    """Run the selected solver(s) and record diagnostics every ``record_every`` steps.

    ``initial`` is an EnsembleState (any solver) or a WaveState (splitstep
    only).  Errors raised during a step carry the failing step index in
    their ``step`` attribute.
    """
    solver = config.solver
    if isinstance(initial, WaveState):
        if solver != "splitstep":
            raise ConfigurationError("a wavefunction initial state requires solver = 'splitstep'")
        hydro, wave = None, initial
    else:
        hydro = initial if solver != "splitstep" else None
        wave = to_wave(initial, params) if solver in ("splitstep", "both") else None
    grid = initial.grid
    if V is not None and getattr(V, "grid", grid) != grid:
        raise ConfigurationError("potential and initial state live on different grids")
    rhs = classical_rhs if solver == "classical_hydro" else quantum_rhs
    coupling = 0.0 if solver == "classical_hydro" else None
    if hydro is not None:
        limit = stability_limit(hydro, params)
        if config.dt > limit:
            raise InstabilityError(f"dt = {config.dt:g} exceeds the stability limit {limit:.3e}", step=0)
    propagator = SplitStepPropagator(grid, V, params, config.dt) if wave is not None else None

    result = EvolutionResult(config)

    def record(t):
        result.records.append(_record(t, params, V, hydro, wave, coupling))
        if keep_states:
            result.hydro_states.append(hydro)
            result.wave_states.append(wave)

    t0 = initial.t
    record(t0)
    for n in range(1, config.steps + 1):
        try:
            if hydro is not None:
                hydro = rk4_step(hydro, V, params, config.dt, rhs)
            if wave is not None:
                wave = propagator(wave)
        except LabError as exc:
            exc.step = n
            logger.debug("step %d failed: %s", n, exc)
            raise
        if n % config.record_every == 0 or n == config.steps:
            record(t0 + n * config.dt)
    return result


def harmonic_ground_state(grid: Grid, params: PhysParams, omega: float, center=0.0) -> EnsembleState:
    """Ground state of the harmonic oscillator: sigma^2 = hbar / (2 m omega), S = 0."""
    sigma = np.sqrt(params.hbar / (2 * params.mass * omega))
    return gaussian_state(grid, center, sigma, 0.0)


def coherent_state(grid: Grid, params: PhysParams, omega: float, x0, p0=0.0) -> EnsembleState:
    """Ground-state Gaussian displaced to ``x0`` with mean momentum ``p0``."""
    sigma = np.sqrt(params.hbar / (2 * params.mass * omega))
    return gaussian_state(grid, x0, sigma, p0)

