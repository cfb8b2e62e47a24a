"""Executable checks of the scaling, homogeneity, independence and limit arguments."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NodeError
from .fields import (
    EPS_NODE,
    DensityField,
    EnsembleState,
    Grid,
    PhysParams,
    check_node_free,
    integrate,
    make_grid,
    spectral_derivative,
)
from . import statistics as stats

logger = logging.getLogger(__name__)

TOL_HOMOGENEITY = 1e-12
TOL_PDE = 1e-6
FD_STEP = 1e-5


@dataclass(frozen=True)
class UVWPoint:
    """A point (x, u, v, w) with u = P, v = x . grad P, w = |grad P|^2."""

    x: np.ndarray
    u: float
    v: float
    w: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        if not self.u > 0:
            raise DomainError(f"u must be positive, got {self.u}")
        if not self.w >= 0:
            raise DomainError(f"w must be non-negative, got {self.w}")

    @property
    def n_dims(self) -> int:
        return self.x.size


def _f(u: float, w: float, C: float) -> float:
    if not u > 0:
        raise DomainError(f"u must be positive, got {u}")
    return C * w / u**2


def f_candidate(point: UVWPoint, params: PhysParams) -> float:
    """C w / u^2."""
    return _f(point.u, point.w, params.C)


def homogeneity_check(point: UVWPoint, k: float, n_dims: int, params: PhysParams) -> float:
    """|f(x/k, k^n u, k^n v, k^(2n+2) w) - k^2 f(x, u, v, w)|, relative to k^2 |f|."""
    if not k > 0:
        raise ValueError("k must be positive")
    n = n_dims
    scaled = UVWPoint(point.x / k, k**n * point.u, k**n * point.v, k ** (2 * n + 2) * point.w)
    rhs = k**2 * f_candidate(point, params)
    diff = abs(f_candidate(scaled, params) - rhs)
    return diff / abs(rhs) if rhs != 0 else diff


def euler_pde_residual(point: UVWPoint, n_dims: int, params: PhysParams, step: float = FD_STEP) -> float:
    """|-sum x_i f_xi + n u f_u + n v f_v + (2n+2) w f_w - 2 f| by central differences.

    Steps are relative: h = step * u for u (which must stay positive) and
    step * max(|value|, 1) for the rest.  The residual is divided by
    max(1, |2f|) so that it measures relative error for large f.
    """
    n = n_dims
    C = params.C
    x, u, v, w = point.x, point.u, point.v, point.w

    def f_at(xs, uu, vv, ww):
        # f carries no explicit x or v dependence, but they are still differenced
        del xs, vv
        return _f(uu, ww, C)

    lhs = 0.0
    for i in range(x.size):
        h = step * max(abs(x[i]), 1.0)
        up, dn = x.copy(), x.copy()
        up[i] += h
        dn[i] -= h
        lhs -= x[i] * (f_at(up, u, v, w) - f_at(dn, u, v, w)) / (2 * h)
    h = step * u
    lhs += n * u * (f_at(x, u + h, v, w) - f_at(x, u - h, v, w)) / (2 * h)
    h = step * max(abs(v), 1.0)
    lhs += n * v * (f_at(x, u, v + h, w) - f_at(x, u, v - h, w)) / (2 * h)
    h = step * max(abs(w), 1.0)
    lhs += (2 * n + 2) * w * (f_at(x, u, v, w + h) - f_at(x, u, v, w - h)) / (2 * h)
    two_f = 2 * f_at(x, u, v, w)
    return abs(lhs - two_f) / max(1.0, abs(two_f))


def random_uvw_point(rng: np.random.Generator, n_dims: int) -> UVWPoint:
    """Point with log-uniform magnitudes spanning a few decades."""
    x = rng.uniform(-5, 5, n_dims)
    u = 10 ** rng.uniform(-3, 2)
    v = rng.choice([-1, 1]) * 10 ** rng.uniform(-3, 2)
    w = 10 ** rng.uniform(-3, 2)
    return UVWPoint(x, u, v, w)


def product_density(P1: DensityField, P2: DensityField) -> DensityField:
    """P1(x) P2(y) on the tensor-product grid."""
    if P1.grid.n_dims != 1 or P2.grid.n_dims != 1:
        raise ValueError("separability is defined here for one-dimensional factors")
    grid = make_grid(2, [P1.grid.points[0], P2.grid.points[0]], [P1.grid.lengths[0], P2.grid.lengths[0]])
    return DensityField(grid, np.outer(P1.values, P2.values))


def product_delta_N_squared(P1: DensityField, P2: DensityField, params: PhysParams) -> float:
    """Delta N^2 of P1(x) P2(y) computed on the 2D tensor grid.

    Node-freeness is checked on the factors: the product of two admissible
    tails can sit far below the node threshold relative to its own peak
    while staying strictly positive.
    """
    check_node_free(P1.values, P1.grid)
    check_node_free(P2.values, P2.grid)
    joint = product_density(P1, P2)
    grid = joint.grid
    # exactly rounded sums make the result independent of the factor order
    per_axis = []
    for axis in range(2):
        dP = spectral_derivative(joint.values, grid, axis, 1)
        per_axis.append(math.fsum((dP**2 / joint.values).ravel()) * grid.cell_volume)
    return params.C * math.fsum(per_axis)


def separability_check(P1: DensityField, P2: DensityField, params: PhysParams) -> float:
    """Relative gap between Delta N^2 of the product and the sum over factors."""
    joint = product_delta_N_squared(P1, P2, params)
    parts = stats.delta_N(P1, params) ** 2 + stats.delta_N(P2, params) ** 2
    return abs(joint - parts) / max(abs(parts), np.finfo(float).tiny)


@dataclass(frozen=True)
class MixtureFamily:
    """Random node-free 1D states: Gaussian mixtures over a small floor.

    The phase is a lattice momentum plus a few periodic harmonics, so psi is
    smooth and periodic and the momentum-space route to Delta p is spectrally
    accurate.
    """

    points: int = 1024
    length: float = 40.0
    max_components: int = 3
    mean_range: tuple[float, float] = (-4.0, 4.0)
    sigma_range: tuple[float, float] = (0.6, 2.0)
    floor: float = 1e-11
    max_momentum_index: int = 4
    max_harmonic: int = 3
    phase_amplitude: float = 0.5
    with_phase: bool = True

    @property
    def grid(self) -> Grid:
        return make_grid(1, [self.points], [self.length])

    def sample(self, rng: np.random.Generator) -> EnsembleState:
        grid = self.grid
        x = grid.coords(0)
        n = int(rng.integers(1, self.max_components + 1))
        weights = rng.uniform(0.2, 1.0, n)
        means = rng.uniform(*self.mean_range, n)
        sigmas = rng.uniform(*self.sigma_range, n)
        P = sum(wt * np.exp(-((x - mu) ** 2) / (2 * s**2)) / s for wt, mu, s in zip(weights, means, sigmas))
        P = P + self.floor * P.max()
        P = P / integrate(P, grid)
        S = np.zeros_like(x)
        if self.with_phase:
            hbar = 1.0
            p0 = 2 * np.pi * hbar / self.length * rng.integers(-self.max_momentum_index, self.max_momentum_index + 1)
            j = int(rng.integers(1, self.max_harmonic + 1))
            amp = rng.uniform(-self.phase_amplitude, self.phase_amplitude)
            S = p0 * x + amp * np.sin(2 * np.pi * j * x / self.length + rng.uniform(0, 2 * np.pi))
        return EnsembleState.from_arrays(grid, P, S)


class SweepPairs(list):
    """List of (Delta x, delta x) pairs that also records skipped samples."""

    def __init__(self, pairs=(), skipped: int = 0):
        super().__init__(pairs)
        self.skipped = skipped

    def violations(self, tol: float = 1e-12) -> int:
        return sum(1 for rms, fisher in self if rms < fisher - tol)


def cramer_rao_sweep(family: MixtureFamily, count: int, seed: int = 0) -> SweepPairs:
    """Draw ``count`` densities and pair the rms width with the Fisher length."""
    rng = np.random.default_rng(seed)
    out = SweepPairs()
    for _ in range(count):
        state = family.sample(rng)
        try:
            check_node_free(state.P.values, state.grid, EPS_NODE)
        except NodeError:
            out.skipped += 1
            continue
        out.append((stats.rms_width(state.P), stats.delta_x(state.P)))
    if out.skipped:
        logger.warning("cramer_rao_sweep skipped %d near-node densities", out.skipped)
    return out


@dataclass(frozen=True)
class ClassicalLimitTable:
    lambdas: list[float]
    dS_differences: list[float]
    dP_differences: list[float]
    orders: list[float] = field(default_factory=list)


def classical_limit_check(state: EnsembleState, V, params: PhysParams, lambdas=(1.0, 0.1, 0.01)) -> ClassicalLimitTable:
    """L2 gap between quantum rates at coupling lambda C and the classical rates.

    ``orders`` holds log(d_i / d_{i+1}) / log(lambda_i / lambda_{i+1}) for
    consecutive nonzero entries of the dS/dt column.
    """
    from .dynamics import classical_rhs, quantum_rhs

    grid = state.grid
    cP, cS = classical_rhs(state, V, params)
    dS_diff, dP_diff = [], []
    for lam in lambdas:
        qP, qS = quantum_rhs(state, V, params, coupling=lam * params.C)
        dS_diff.append(float(np.sqrt(integrate((qS - cS) ** 2, grid))))
        dP_diff.append(float(np.sqrt(integrate((qP - cP) ** 2, grid))))
    orders = []
    for i in range(len(lambdas) - 1):
        l0, l1 = lambdas[i], lambdas[i + 1]
        d0, d1 = dS_diff[i], dS_diff[i + 1]
        if l0 > 0 and l1 > 0 and d0 > 0 and d1 > 0 and l0 != l1:
            orders.append(float(np.log(d0 / d1) / np.log(l0 / l1)))
    return ClassicalLimitTable(list(map(float, lambdas)), dS_diff, dP_diff, orders)
