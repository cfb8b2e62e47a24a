"""Named check suites driven by the ``check`` command.

Every check yields a ``CheckResult``; a suite passes when all of its checks
do.  Randomized checks draw from ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Iterator

import numpy as np

from . import dynamics as dyn
from . import statistics as stats
from . import theory_checks as tc
from . import transforms as tr
from .fields import DensityField, PhysParams, WaveState, gaussian_state, integrate, make_grid, to_wave

DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        text = f"[{mark}] {self.suite}/{self.name}: {self.value:.3e} (tol {self.tolerance:.0e})"
        return f"{text} {self.detail}".rstrip()

    def as_dict(self) -> dict:
        return asdict(self)


def _below(suite, name, value, tol, detail="") -> CheckResult:
    value = float(value)
    return CheckResult(suite, name, value, tol, bool(value < tol), detail)


def uncertainty_suite(seed: int = DEFAULT_SEED, count: int = 200) -> Iterator[CheckResult]:
    """Exact relation, Cramer-Rao, Heisenberg and the two Delta p routes on random states."""
    params = PhysParams()
    rng = np.random.default_rng(seed)
    family = tc.MixtureFamily()
    exact = cramer_rao = heisenberg = dual = 0.0
    for _ in range(count):
        report = stats.uncertainty_report(family.sample(rng), params)
        exact = max(exact, abs(report.product_exact - params.hbar / 2))
        cramer_rao = max(cramer_rao, report.delta_x_fisher - report.delta_x_rms)
        heisenberg = max(heisenberg, params.hbar / 2 - report.product_heisenberg)
        dual = max(dual, abs(report.delta_p - report.delta_p_momentum_space))
    yield _below("uncertainty", "exact_product", exact, 1e-10, f"max |dx dN - hbar/2| over {count} states")
    yield _below("uncertainty", "cramer_rao", max(cramer_rao, 0.0), 1e-12, "max (delta x - Delta x)")
    yield _below("uncertainty", "heisenberg", max(heisenberg, 0.0), 1e-10, "max (hbar/2 - Delta x Delta p)")
    yield _below("uncertainty", "delta_p_dual", dual, stats.TOL_DELTA_P, "hydrodynamic vs momentum space")
    grid = make_grid(1, [256], [14.0])
    report = stats.uncertainty_report(gaussian_state(grid, 0.0, 1.0), params)
    yield _below("uncertainty", "gaussian_saturation", abs(report.product_heisenberg - params.hbar / 2), 1e-8)


def scaling_shapes() -> dict[str, DensityField]:
    grid = make_grid(1, [2048], [40.0])
    x = grid.coords(0)
    raw = {
        "gaussian": np.exp(-(x**2) / 2),
        "bimodal": np.exp(-((x - 1.0) ** 2) / 1.2) + 0.5 * np.exp(-((x + 1.5) ** 2) / 0.8),
        "quartic": np.exp(-(x**4) / 16),
    }
    out = {}
    for name, P in raw.items():
        P = P + 1e-11 * P.max()
        out[name] = DensityField(grid, P / integrate(P, grid))
    return out


def scaling_suite(seed: int = DEFAULT_SEED) -> Iterator[CheckResult]:
    """delta x -> delta x / k, Delta N -> k Delta N and the invariant product."""
    del seed
    params = PhysParams()
    for name, P in scaling_shapes().items():
        dx, dN = stats.delta_x(P), stats.delta_N(P, params)
        for k in (0.5, 2.0, 3.0):
            Pk = tr.k_scale(P, k)
            dxk, dNk = stats.delta_x(Pk), stats.delta_N(Pk, params)
            err = max(abs(dxk * k / dx - 1), abs(dNk / (k * dN) - 1), abs(dxk * dNk - dx * dN))
            yield _below("scaling", f"{name}_k{k:g}", err, 1e-8)


def separability_suite(seed: int = DEFAULT_SEED, count: int = 50) -> Iterator[CheckResult]:
    params = PhysParams()
    rng = np.random.default_rng(seed)
    family = tc.MixtureFamily(points=256, length=30.0, with_phase=False)
    worst = max(tc.separability_check(family.sample(rng).P, family.sample(rng).P, params) for _ in range(count))
    yield _below("separability", "random_pairs", worst, 1e-10, f"max relative gap over {count} pairs")
    P1 = DensityField(make_grid(1, [256], [14.0]), gaussian_state(make_grid(1, [256], [14.0]), 0, 1.0).P.values)
    P2 = gaussian_state(make_grid(1, [256], [28.0]), 0, 2.0).P
    yield _below("separability", "gaussians_1_2", abs(tc.product_delta_N_squared(P1, P2, params) - 0.3125), 1e-8)


def random_mode_params(rng: np.random.Generator) -> tr.NormalModeParams:
    def cplx():
        return complex(rng.normal(), rng.normal())

    a = cplx()
    while abs(a) < 0.1:
        a = cplx()
    return tr.NormalModeParams(int(rng.choice([-1, 1])), a, cplx(), cplx())


def free_gaussian_case():
    grid = make_grid(1, [256], [40.0])
    return grid, gaussian_state(grid, 0.0, np.sqrt(8.0)), dyn.make_potential(grid, "free")


def vortex(points: int = 64, length: float = 10.0) -> WaveState:
    """Unit-charge vortex centred between lattice points, with a Gaussian envelope."""
    grid = make_grid(2, [points, points], [length, length])
    X, Y = grid.mesh()
    half = 0.5 * grid.spacing[0]
    z = (X + half) + 1j * (Y + half)
    return WaveState(grid, z / np.abs(z) * np.exp(-np.abs(z) ** 2 / 20))


def canonical_suite(seed: int = DEFAULT_SEED, samples: int = 20) -> Iterator[CheckResult]:
    """Canonicity, Hamiltonian density, uncoupling and phase quantization."""
    params = PhysParams()
    rng = np.random.default_rng(seed)
    grid, state, free = free_gaussian_case()
    moving = gaussian_state(grid, 0.0, np.sqrt(8.0), p0=2 * np.pi / 40.0 * 3)
    harmonic = dyn.make_potential(grid, "harmonic", omega=1 / 16)
    modes = [tr.DEFAULT_MODES] + [random_mode_params(rng) for _ in range(samples)]
    yield _below("canonical", "jacobian", max(tr.canonicity_jacobian(moving, m, params).max() for m in modes), 1e-12)
    wave = to_wave(moving, params)
    target = tr.wave_hamiltonian_density(wave, harmonic.values, params)
    worst = max(
        np.max(np.abs(tr.mode_hamiltonian_density(tr.to_normal_modes(moving, params, m), harmonic.values, params, m) - target))
        for m in modes
    )
    yield _below("canonical", "hamiltonian_density", worst, 1e-10)
    yield _below("canonical", "uncoupling_free", tr.uncoupling_check(state, free, params, dt=1e-3, steps=500), 1e-5)
    line = make_grid(1, [64], [10.0])
    plane = WaveState(line, np.exp(2j * np.pi * line.coords(0) / 10.0) / np.sqrt(10.0))
    v = vortex()
    windings = [
        (tr.winding_number(plane, tr.line_loop(line), params), 1),
        (tr.winding_number(v, tr.rectangle_loop(v.grid, (20, 20), (44, 44)), params), 1),
        (tr.winding_number(v, tr.rectangle_loop(v.grid, (26, 14), (40, 50)), params), 1),
        (tr.winding_number(v, tr.rectangle_loop(v.grid, (36, 36), (50, 50)), params), 0),
        (tr.winding_number(state, tr.line_loop(grid), params), 0),
    ]
    wrong = sum(1 for got, want in windings if got != want)
    yield _below("canonical", "winding_numbers", wrong, 0.5, f"{len(windings)} loops")


def homogeneity_suite(seed: int = DEFAULT_SEED, count: int = 300) -> Iterator[CheckResult]:
    params = PhysParams()
    rng = np.random.default_rng(seed)
    for n in (1, 2, 3):
        points = [tc.random_uvw_point(rng, n) for _ in range(count)]
        ks = 10 ** rng.uniform(-1, 1, count)
        worst = max(tc.homogeneity_check(p, k, n, params) for p, k in zip(points, ks))
        yield _below("homogeneity", f"exact_n{n}", worst, 1e-12)
        worst = max(tc.euler_pde_residual(p, n, params) for p in points)
        yield _below("homogeneity", f"pde_n{n}", worst, 1e-6)


def periodic_density(grid, coeffs=(1.2, 0.7, -0.4)) -> DensityField:
    """exp of a short trigonometric series: smooth, periodic and node-free."""
    x = grid.coords(0)
    L = grid.lengths[0]
    logP = coeffs[0] * np.cos(2 * np.pi * x / L) + coeffs[1] * np.sin(4 * np.pi * x / L) + coeffs[2] * np.cos(6 * np.pi * x / L)
    P = np.exp(logP)
    return DensityField(grid, P / integrate(P, grid))


def quantum_potential_suite(seed: int = DEFAULT_SEED) -> Iterator[CheckResult]:
    params = PhysParams()
    rng = np.random.default_rng(seed)
    grid = make_grid(1, [256], [10.0])
    P = periodic_density(grid)
    x = grid.coords(0)
    eta = P.values * np.sin(2 * np.pi * x / 10.0 + rng.uniform(0, 2 * np.pi))
    eta = eta - P.values * integrate(eta, grid) / integrate(P.values, grid)
    residuals = [stats.fisher_functional_derivative_check(P, eta, params, eps) for eps in (1e-2, 1e-3, 1e-5)]
    yield _below("quantum-potential", "functional_derivative", residuals[-1], 1e-6)
    order = np.log10(residuals[0] / residuals[1])
    yield CheckResult("quantum-potential", "derivative_order", float(order), 2.0, bool(abs(order - 2) < 0.2), "observed O(eps^p)")
    gap = np.max(np.abs(stats.quantum_potential(P, params) - stats.quantum_potential_sqrt(P, params)))
    yield _below("quantum-potential", "two_formulas", gap, 1e-8)


def classical_limit_suite(seed: int = DEFAULT_SEED) -> Iterator[CheckResult]:
    del seed
    params = PhysParams()
    grid, state, free = free_gaussian_case()
    table = tc.classical_limit_check(state, free, params, (1.0, 0.1, 0.01))
    worst = max(abs(o - 1.0) for o in table.orders)
    yield _below("classical-limit", "order", worst, 0.1, f"orders {[round(o, 6) for o in table.orders]}")
    zero = tc.classical_limit_check(state, free, params, (0.0,))
    yield _below("classical-limit", "lambda_zero", zero.dS_differences[0] + zero.dP_differences[0], 1e-300)


SUITES: dict[str, Callable[..., Iterator[CheckResult]]] = {
    "uncertainty": uncertainty_suite,
    "scaling": scaling_suite,
    "separability": separability_suite,
    "canonical": canonical_suite,
    "homogeneity": homogeneity_suite,
    "quantum-potential": quantum_potential_suite,
    "classical-limit": classical_limit_suite,
}


def run_suite(name: str, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    if name == "all":
        return [r for suite in SUITES.values() for r in suite(seed)]
    if name not in SUITES:
        raise KeyError(name)
    return list(SUITES[name](seed))
