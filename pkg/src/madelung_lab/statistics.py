"""Uncertainty measures: Fisher information, Fisher length, momentum spread.

Position-space quantities use plain spectral derivatives of P, which is
assumed to decay (or level off at a small floor) towards the box edges.
Derivatives of the phase S go through ``aperiodic_derivative`` because S is
generically not periodic (a uniform momentum makes it linear in x).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PreconditionError, UndefinedMeasureError
from .fields import (
    DensityField,
    EnsembleState,
    Grid,
    PhysParams,
    WaveState,
    aperiodic_derivative,
    check_node_free,
    integrate,
    spectral_derivative,
    to_wave,
    velocity_potential_gradient,
)

TOL_DELTA_P = 1e-8


@dataclass(frozen=True)
class UncertaintyReport:
    delta_x_fisher: float
    delta_x_rms: float
    delta_N: float
    delta_p: float
    fisher_information: float
    product_exact: float
    product_heisenberg: float
    mean_p: np.ndarray
    delta_p_momentum_space: float = float("nan")
    axis: int = 0


@dataclass(frozen=True, eq=False)
class MomentumDensity:
    grid: Grid
    values: np.ndarray

    def total(self) -> float:
        return integrate(self.values, self.grid)

    def coords(self, axis: int = 0) -> np.ndarray:
        return self.grid.coords(axis)


def _density(P) -> DensityField:
    if isinstance(P, EnsembleState):
        return P.P
    return P


def _fisher_integrals(values: np.ndarray, grid: Grid) -> np.ndarray:
    out = np.empty(grid.n_dims)
    for axis in range(grid.n_dims):
        dP = spectral_derivative(values, grid, axis, 1)
        out[axis] = integrate(dP**2 / values, grid)
    return out


def fisher_components(P: DensityField) -> np.ndarray:
    """Per-axis integrals of (dP/dx_d)^2 / P."""
    P = _density(P)
    check_node_free(P.values, P.grid)
    return _fisher_integrals(P.values, P.grid)


def fisher_information(P: DensityField, axis: int | None = None) -> float:
    """Fisher information of P; the sum over axes unless ``axis`` is given."""
    comps = fisher_components(P)
    return float(comps.sum() if axis is None else comps[axis])


def delta_x(P: DensityField, axis: int = 0) -> float:
    """Fisher length, F**-1/2."""
    P = _density(P)
    F = fisher_information(P, axis)
    if F * P.grid.lengths[axis] ** 2 < 1e-20:
        raise UndefinedMeasureError("Fisher length is undefined for a flat density")
    return float(F**-0.5)


def delta_N(P: DensityField, params: PhysParams, axis: int | None = None) -> float:
    """rms momentum fluctuation sqrt(C * F)."""
    return float(np.sqrt(params.C * fisher_information(P, axis)))


def mean_position(P: DensityField, axis: int = 0) -> float:
    P = _density(P)
    return integrate(P.values * P.grid.axis_coords(axis), P.grid) / P.total()


def rms_width(P: DensityField, axis: int = 0) -> float:
    """Root-mean-square spread about the mean along ``axis``."""
    P = _density(P)
    x = P.grid.axis_coords(axis)
    total = P.total()
    mean = integrate(P.values * x, P.grid) / total
    return float(np.sqrt(integrate(P.values * (x - mean) ** 2, P.grid) / total))


def phase_gradient(state: EnsembleState) -> list[np.ndarray]:
    return [aperiodic_derivative(state.S.values, state.grid, axis, (1,)) for axis in range(state.grid.n_dims)]


def momentum_moments(state: EnsembleState, params: PhysParams) -> tuple[np.ndarray, float]:
    """<p> = int P grad S and <p^2> = int P (|grad S|^2 + C |grad P|^2 / P^2)."""
    grid = state.grid
    P = state.P.values
    grads = phase_gradient(state)
    mean_p = np.array([integrate(P * g, grid) for g in grads])
    second = integrate(P * sum(g**2 for g in grads), grid) + params.C * fisher_information(state.P)
    return mean_p, float(second)


def momentum_amplitude(wave: WaveState, params: PhysParams) -> WaveState:
    """phi(p) = (2 pi hbar)^(-n/2) int psi exp(-i x.p/hbar) d^n x on the momentum lattice.

    The output lattice is ``grid.momentum_grid(hbar)``; momenta run from
    -pi hbar/dx upward, i.e. the fftshift ordering of the DFT.
    """
    grid = wave.grid
    n = grid.n_dims
    phi = np.fft.fftshift(np.fft.fftn(wave.values))
    for axis in range(n):
        # x_j = -L/2 + j dx turns exp(-i x p / hbar) into (-1)^k times the DFT kernel
        k = np.arange(grid.points[axis]) - grid.points[axis] // 2
        shape = [1] * n
        shape[axis] = -1
        phi = phi * ((-1.0) ** k).reshape(shape)
    phi = phi * grid.cell_volume / (2 * np.pi * params.hbar) ** (n / 2)
    return WaveState(grid.momentum_grid(params.hbar), phi, wave.t)


def momentum_density(wave: WaveState, params: PhysParams) -> MomentumDensity:
    """|phi(p)|^2, see ``momentum_amplitude``."""
    amp = momentum_amplitude(wave, params)
    return MomentumDensity(amp.grid, np.abs(amp.values) ** 2)


def expectation_momentum_function(wave: WaveState, f: Callable, params: PhysParams) -> float:
    """Quadrature of f(p) against the momentum density; f gets one array per axis."""
    dens = momentum_density(wave, params)
    values = np.broadcast_to(f(*dens.grid.mesh()), dens.values.shape)
    return integrate(values * dens.values, dens.grid)


def momentum_spread(wave: WaveState, params: PhysParams, axis: int = 0) -> tuple[float, float]:
    """Mean and rms spread of p_axis computed in momentum space."""
    dens = momentum_density(wave, params)
    p = dens.grid.axis_coords(axis)
    total = dens.total()
    mean = integrate(p * dens.values, dens.grid) / total
    var = integrate((p - mean) ** 2 * dens.values, dens.grid) / total
    return float(mean), float(np.sqrt(var))


def uncertainty_report(state: EnsembleState, params: PhysParams, axis: int = 0) -> UncertaintyReport:
    """All uncertainty measures along ``axis``.

    Delta p is built from the hydrodynamic decomposition
    Var(dS/dx) + Delta N^2 and, independently, from the momentum density of
    the corresponding wavefunction.  Both are reported.
    """
    P = state.P
    grid = state.grid
    F = fisher_information(P, axis)
    dx_f = delta_x(P, axis)
    dN = float(np.sqrt(params.C * F))
    total = P.total()
    grads = phase_gradient(state)
    mean_p = np.array([integrate(P.values * g, grid) / total for g in grads])
    var_grad = integrate(P.values * (grads[axis] - mean_p[axis]) ** 2, grid) / total
    dp = float(np.sqrt(var_grad + dN**2))
    dX = rms_width(P, axis)
    _, dp_k = momentum_spread(to_wave(state, params), params, axis)
    return UncertaintyReport(
        delta_x_fisher=dx_f,
        delta_x_rms=dX,
        delta_N=dN,
        delta_p=dp,
        fisher_information=F,
        product_exact=dx_f * dN,
        product_heisenberg=dX * dp,
        mean_p=mean_p,
        delta_p_momentum_space=dp_k,
        axis=axis,
    )


def wave_uncertainty_report(wave: WaveState, params: PhysParams, axis: int = 0) -> UncertaintyReport:
    """Same measures evaluated directly from psi.

    The current hbar Im(psi* grad psi) replaces P grad S, which avoids
    reconstructing S where |psi| is tiny.
    """
    grid = wave.grid
    P = DensityField(grid, np.abs(wave.values) ** 2)
    F = fisher_information(P, axis)
    dx_f = delta_x(P, axis)
    dN = float(np.sqrt(params.C * F))
    total = P.total()
    mean_p = np.empty(grid.n_dims)
    for d in range(grid.n_dims):
        current = params.hbar * np.imag(np.conj(wave.values) * spectral_derivative(wave.values, grid, d, 1))
        mean_p[d] = integrate(current, grid) / total
    v = velocity_potential_gradient(wave.values, grid, params, axis)
    var_grad = integrate(P.values * (v - mean_p[axis]) ** 2, grid) / total
    dp = float(np.sqrt(var_grad + dN**2))
    dX = rms_width(P, axis)
    _, dp_k = momentum_spread(wave, params, axis)
    return UncertaintyReport(dx_f, dX, dN, dp, F, dx_f * dN, dX * dp, mean_p, dp_k, axis)


def quantum_potential(P: DensityField, params: PhysParams) -> np.ndarray:
    """(C/2m) [ |grad P|^2 / P^2 - 2 lap P / P ]."""
    P = _density(P)
    check_node_free(P.values, P.grid)
    grad_sq = np.zeros(P.grid.shape)
    lap = np.zeros(P.grid.shape)
    for axis in range(P.grid.n_dims):
        grad_sq += spectral_derivative(P.values, P.grid, axis, 1) ** 2
        lap += spectral_derivative(P.values, P.grid, axis, 2)
    return params.C / (2 * params.mass) * (grad_sq / P.values**2 - 2 * lap / P.values)


def quantum_potential_sqrt(P: DensityField, params: PhysParams) -> np.ndarray:
    """-(hbar^2/2m) lap sqrt(P) / sqrt(P), the de Broglie-Bohm form."""
    P = _density(P)
    check_node_free(P.values, P.grid)
    amp = np.sqrt(P.values)
    lap = sum(spectral_derivative(amp, P.grid, axis, 2) for axis in range(P.grid.n_dims))
    return -(params.hbar**2) / (2 * params.mass) * lap / amp


def fisher_functional(P: DensityField, params: PhysParams) -> float:
    """(C/2m) int |grad P|^2 / P, the fluctuation term of the Lagrangian."""
    return params.C / (2 * params.mass) * fisher_information(P)


def fisher_functional_derivative_check(P: DensityField, eta, params: PhysParams, eps: float = 1e-5) -> float:
    """|central difference of the Fisher functional along eta - int Q eta|."""
    P = _density(P)
    eta = np.asarray(getattr(eta, "values", eta), dtype=float)
    grid = P.grid
    if not np.any(eta):
        return 0.0
    if abs(integrate(eta, grid)) > 1e-10 * integrate(np.abs(eta), grid):
        raise PreconditionError("perturbation must integrate to zero")
    plus, minus = P.values + eps * eta, P.values - eps * eta
    if np.any(plus <= 0) or np.any(minus <= 0):
        raise PreconditionError("perturbation drives the density non-positive")
    U_plus = fisher_functional(DensityField(grid, plus), params)
    U_minus = fisher_functional(DensityField(grid, minus), params)
    fd = (U_plus - U_minus) / (2 * eps)
    return float(abs(fd - integrate(quantum_potential(P, params) * eta, grid)))
