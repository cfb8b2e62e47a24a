"""The eleven acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (see ``acceptance_line`` in conftest);
the lines are repeated in the terminal summary of the pytest run.
"""
import time

import numpy as np
import pytest

from madelung_lab import dynamics as dyn
from madelung_lab import statistics as stats
from madelung_lab import theory_checks as tc
from madelung_lab import transforms as tr
from madelung_lab.cli import bundled_scenarios
from madelung_lab.config import load_config
from madelung_lab.fields import PhysParams, WaveState, gaussian_state, make_grid, to_wave
from madelung_lab.suites import periodic_density, random_mode_params, scaling_shapes, vortex

SEED = 20240601
HBAR_HALF = 0.5
params = PhysParams()


@pytest.fixture(scope="module")
def random_states():
    rng = np.random.default_rng(SEED)
    family = tc.MixtureFamily()
    return [family.sample(rng) for _ in range(200)]


@pytest.fixture(scope="module")
def scenario_runs():
    """Both-solver runs of the two cross-validation scenarios, with wall times."""
    paths = {name: path for name, _, path in bundled_scenarios()}
    runs = {}
    for name in ("free_gaussian", "harmonic_coherent"):
        cfg = load_config(paths[name])
        assert cfg.grid.points == (256,) and cfg.evolution.dt == 1e-3 and cfg.evolution.steps == 2000
        assert cfg.evolution.solver == "both"
        start = time.perf_counter()
        result = dyn.evolve(cfg.build_initial(), cfg.build_potential(), cfg.params, cfg.evolution, keep_states=False)
        runs[name] = (result, time.perf_counter() - start)
    return runs


def test_criterion_01_exact_uncertainty_relation(random_states, acceptance_line):
    start = time.perf_counter()
    worst = max(abs(stats.uncertainty_report(s, params).product_exact - HBAR_HALF) for s in random_states)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 10
    acceptance_line(1, "exact uncertainty relation", ok, f"max |dx dN - hbar/2| = {worst:.2e} over 200 states in {elapsed:.2f} s")
    assert worst < 1e-10
    assert elapsed < 10


def test_criterion_02_heisenberg_chain(random_states, acceptance_line):
    cr = hz = dual = 0.0
    for s in random_states:
        rep = stats.uncertainty_report(s, params)
        cr = max(cr, rep.delta_x_fisher - rep.delta_x_rms)
        hz = max(hz, HBAR_HALF - rep.product_heisenberg)
        dual = max(dual, abs(rep.delta_p - rep.delta_p_momentum_space))
    gauss = stats.uncertainty_report(gaussian_state(make_grid(1, [256], [14.0]), 0.0, 1.0), params)
    sat = abs(gauss.product_heisenberg - HBAR_HALF)
    ok = cr <= 0 and hz <= 1e-10 and dual < 1e-8 and sat < 1e-8
    acceptance_line(
        2,
        "Cramer-Rao and Heisenberg",
        ok,
        f"max(dx - Dx) = {cr:.2e}, max(hbar/2 - Dx Dp) = {hz:.2e}, Dp routes {dual:.2e}, Gaussian {sat:.2e}",
    )
    assert cr <= 0
    assert hz <= 1e-10
    assert dual < 1e-8
    assert sat < 1e-8


def test_criterion_03_schrodinger_equivalence(scenario_runs, acceptance_line):
    parts, ok = [], True
    for name, (result, elapsed) in scenario_runs.items():
        l2P = np.nanmax(result.column("l2_P_discrepancy"))
        l2S = np.nanmax(result.column("l2_gradS_discrepancy"))
        ok &= bool(l2P < 1e-6 and l2S < 1e-5 and elapsed < 30)
        parts.append(f"{name} L2 P {l2P:.2e}, L2 grad S {l2S:.2e}, {elapsed:.1f} s")
    acceptance_line(3, "hydrodynamic vs Schrodinger", ok, "; ".join(parts))
    for result, elapsed in scenario_runs.values():
        assert np.nanmax(result.column("l2_P_discrepancy")) < 1e-6
        assert np.nanmax(result.column("l2_gradS_discrepancy")) < 1e-5
        assert elapsed < 30


def test_criterion_04_conservation(scenario_runs, acceptance_line):
    drifts = {}
    for name, (result, _) in scenario_runs.items():
        for column in ("norm", "energy", "wave_norm", "wave_energy"):
            drifts[f"{name}/{column}"] = result.max_drift(column)
    # the remaining bundled runs: stationary state and the classical comparison
    paths = {name: path for name, _, path in bundled_scenarios()}
    for name in ("harmonic_ground", "classical_vs_quantum"):
        cfg = load_config(paths[name])
        result = dyn.evolve(cfg.build_initial(), cfg.build_potential(), cfg.params, cfg.evolution, keep_states=False)
        drifts[f"{name}/norm"] = result.max_drift("norm")
        drifts[f"{name}/energy"] = result.max_drift("energy")
        if cfg.compare_with:
            other = dyn.EvolutionConfig(cfg.evolution.dt, cfg.evolution.steps, cfg.compare_with, cfg.evolution.record_every)
            result = dyn.evolve(cfg.build_initial(), cfg.build_potential(), cfg.params, other, keep_states=False)
            drifts[f"{name}/{cfg.compare_with}/norm"] = result.max_drift("norm")
            drifts[f"{name}/{cfg.compare_with}/energy"] = result.max_drift("energy")
    worst_key = max(drifts, key=drifts.get)
    ok = max(drifts.values()) < 1e-8
    acceptance_line(4, "norm and energy conservation", ok, f"worst drift {drifts[worst_key]:.2e} ({worst_key}) over {len(drifts)} series")
    assert max(drifts.values()) < 1e-8


def test_criterion_05_k_transformation(acceptance_line):
    worst = 0.0
    for P in scaling_shapes().values():
        dx, dN = stats.delta_x(P), stats.delta_N(P, params)
        for k in (0.5, 2.0, 3.0):
            Pk = tr.k_scale(P, k)
            dxk, dNk = stats.delta_x(Pk), stats.delta_N(Pk, params)
            worst = max(worst, abs(dxk - dx / k), abs(dNk - k * dN), abs(dxk * dNk - dx * dN))
    ok = worst < 1e-8
    acceptance_line(5, "k-transformation laws", ok, f"max deviation {worst:.2e} over 3 shapes x k in (0.5, 2, 3)")
    assert worst < 1e-8


def test_criterion_06_separability(acceptance_line):
    rng = np.random.default_rng(SEED)
    family = tc.MixtureFamily(points=256, length=30.0, with_phase=False)
    worst = max(tc.separability_check(family.sample(rng).P, family.sample(rng).P, params) for _ in range(50))
    ok = worst < 1e-10
    acceptance_line(6, "separability of Delta N^2", ok, f"max relative gap {worst:.2e} over 50 pairs")
    assert worst < 1e-10


def test_criterion_07_homogeneity_and_pde(acceptance_line):
    rng = np.random.default_rng(SEED)
    exact = pde = 0.0
    for n in (1, 2, 3):
        for _ in range(300):
            point = tc.random_uvw_point(rng, n)
            exact = max(exact, tc.homogeneity_check(point, 10 ** rng.uniform(-1, 1), n, params))
            pde = max(pde, tc.euler_pde_residual(point, n, params))
    ok = exact < 1e-12 and pde < 1e-6
    acceptance_line(7, "homogeneity and Euler PDE", ok, f"exact {exact:.2e}, finite-difference {pde:.2e} over 900 points")
    assert exact < 1e-12
    assert pde < 1e-6


def test_criterion_08_canonical_structure(acceptance_line):
    rng = np.random.default_rng(SEED)
    grid = make_grid(1, [256], [40.0])
    state = gaussian_state(grid, 0.0, np.sqrt(8.0), 3 * 2 * np.pi / 40.0)
    modes = [tr.DEFAULT_MODES] + [random_mode_params(rng) for _ in range(50)]
    jac = max(tr.canonicity_jacobian(state, m, params).max() for m in modes)
    V = dyn.make_potential(grid, "harmonic", omega=1 / 16).values
    target = tr.wave_hamiltonian_density(to_wave(state, params), V, params)
    ham = max(np.max(np.abs(tr.mode_hamiltonian_density(tr.to_normal_modes(state, params, m), V, params, m) - target)) for m in modes)
    free = gaussian_state(grid, 0.0, np.sqrt(8.0))
    unc = tr.uncoupling_check(free, None, params, dt=1e-3, steps=500)
    ok = jac < 1e-12 and ham < 1e-10 and unc < 1e-5
    acceptance_line(8, "canonical structure", ok, f"jacobian {jac:.2e}, Hamiltonian density {ham:.2e}, uncoupling {unc:.2e}")
    assert jac < 1e-12
    assert ham < 1e-10
    assert unc < 1e-5


def _turns(psi, loop):
    # independent count: unwrap the phase along the loop and read off the total change
    idx = tuple(np.asarray(list(loop) + [loop[0]]).T)
    return (np.unwrap(np.angle(psi[idx]))[-1] - np.angle(psi[idx])[0]) / (2 * np.pi)


def test_criterion_09_phase_quantization(acceptance_line):
    line = make_grid(1, [64], [10.0])
    plane = WaveState(line, np.exp(2j * np.pi * line.coords() / 10.0) / np.sqrt(10.0))
    v = vortex()
    cases = [
        (plane, tr.line_loop(line), 1),
        (v, tr.rectangle_loop(v.grid, (20, 20), (44, 44)), 1),
        (v, tr.rectangle_loop(v.grid, (10, 26), (54, 40)), 1),
        (v, tr.rectangle_loop(v.grid, (36, 36), (50, 50)), 0),
        (v, tr.rectangle_loop(v.grid, (2, 2), (20, 60)), 0),
    ]
    gap, wrong = 0.0, 0
    for wave, loop, expected in cases:
        turns = _turns(wave.values, loop)
        gap = max(gap, abs(turns - round(turns)))
        wrong += int(tr.winding_number(wave, loop, params) != expected or round(turns) != expected)
    ok = wrong == 0 and gap < 1e-8
    acceptance_line(9, "phase winding quantization", ok, f"{len(cases) - wrong}/{len(cases)} loops correct, max distance to integer {gap:.1e}")
    assert wrong == 0
    assert gap < 1e-8


def test_criterion_10_quantum_potential(acceptance_line):
    rng = np.random.default_rng(SEED)
    grid = make_grid(1, [256], [10.0])
    P = periodic_density(grid)
    x = grid.coords()
    eta = P.values * np.sin(2 * np.pi * x / 10.0 + rng.uniform(0, 2 * np.pi))
    eta = eta - P.values * eta.sum() / P.values.sum()
    r = {eps: stats.fisher_functional_derivative_check(P, eta, params, eps) for eps in (1e-2, 1e-3, 1e-5)}
    order = np.log10(r[1e-2] / r[1e-3])
    # pointwise comparison on periodic node-free densities; a box-truncated Gaussian is not smooth across the seam
    densities = [P] + [periodic_density(grid, tuple(rng.uniform(-1.2, 1.2, 3))) for _ in range(10)]
    gap = max(np.max(np.abs(stats.quantum_potential(d, params) - stats.quantum_potential_sqrt(d, params))) for d in densities)
    ok = r[1e-5] < 1e-6 and abs(order - 2) < 0.2 and gap < 1e-8
    acceptance_line(10, "quantum potential as Fisher derivative", ok, f"residual {r[1e-5]:.2e} at eps=1e-5, order {order:.2f}, formulas {gap:.2e}")
    assert r[1e-5] < 1e-6
    assert abs(order - 2) < 0.2
    assert gap < 1e-8


def test_criterion_11_classical_limit(acceptance_line):
    grid = make_grid(1, [256], [40.0])
    state = gaussian_state(grid, 0.0, np.sqrt(8.0))
    table = tc.classical_limit_check(state, dyn.make_potential(grid, "free"), params, (1.0, 0.1, 0.01))
    ok = len(table.orders) == 2 and all(abs(o - 1.0) <= 0.1 for o in table.orders)
    acceptance_line(11, "classical limit", ok, "orders " + ", ".join(f"{o:.4f}" for o in table.orders))
    assert len(table.orders) == 2
    assert all(abs(o - 1.0) <= 0.1 for o in table.orders)
