import numpy as np
import pytest

from madelung_lab import dynamics as dyn
from madelung_lab import statistics as stats
from madelung_lab.errors import ConfigurationError, InstabilityError, NodeError
from madelung_lab.fields import (
    EnsembleState,
    PhysParams,
    WaveState,
    gaussian_state,
    integrate,
    make_grid,
    spectral_derivative,
    to_wave,
)

OMEGA = 1 / 16  # ground-state sigma^2 = 8 fits the 40-wide box with tails above the node floor


def uniform_state(grid):
    return EnsembleState.from_arrays(grid, np.full(grid.shape, 1 / grid.lengths[0]))


class TestPotential:
    def test_harmonic(self, grid20):
        V = dyn.make_potential(grid20, "harmonic", mass=2.0, omega=0.5, center=1.0)
        np.testing.assert_allclose(V.values, 0.25 * (grid20.coords() - 1.0) ** 2)

    def test_double_well_and_polynomial(self, grid20):
        x = grid20.coords()
        np.testing.assert_allclose(dyn.make_potential(grid20, "double_well", a=0.5, b=2.0).values, 0.5 * (x**2 - 4) ** 2)
        np.testing.assert_allclose(dyn.make_potential(grid20, "polynomial", coeffs=[1, 0, 3]).values, 1 + 3 * x**2)

    def test_unknown_kind(self, grid20):
        with pytest.raises(ConfigurationError):
            dyn.make_potential(grid20, "morse")

    def test_shape_checked(self, grid20):
        with pytest.raises(ConfigurationError):
            dyn.Potential(grid20, np.zeros(10))


class TestRates:
    def test_static_uniform(self, grid20, params):
        for rhs in (dyn.classical_rhs, dyn.quantum_rhs):
            dP, dS = rhs(uniform_state(grid20), None, params)
            # seam-polynomial fit of a constant log P leaves only rounding
            assert np.max(np.abs(dP)) < 1e-12 and np.max(np.abs(dS)) < 1e-12

    def test_rigid_drift(self, grid14, params):
        p0 = 0.7
        state = gaussian_state(grid14, 0.0, 1.0, p0)
        dP, _ = dyn.classical_rhs(state, None, params)
        expected = -p0 / params.mass * spectral_derivative(state.P.values, grid14)
        assert np.max(np.abs(dP - expected)) < 1e-10

    def test_potential_only_drives_phase(self, grid14, params):
        grid = make_grid(1, [256], [20.0])
        state = gaussian_state(grid, 0.5, 1.5)
        V = dyn.make_potential(grid, "harmonic", omega=0.8)
        dP, dS = dyn.classical_rhs(state, V, params)
        assert np.max(np.abs(dS + V.values)) < 1e-12
        assert np.max(np.abs(dP)) < 1e-12

    def test_ground_state_is_stationary(self, wide_grid, params):
        state = dyn.harmonic_ground_state(wide_grid, params, OMEGA)
        V = dyn.make_potential(wide_grid, "harmonic", omega=OMEGA)
        dP, dS = dyn.quantum_rhs(state, V, params)
        assert np.max(np.abs(dP)) < 1e-8
        assert np.max(np.abs(dS + params.hbar * OMEGA / 2)) < 1e-8

    def test_zero_coupling_is_classical(self, grid14, params):
        state = gaussian_state(grid14, 0.3, 1.0, 0.4)
        V = dyn.make_potential(grid14, "harmonic")
        q, c = dyn.quantum_rhs(state, V, params, coupling=0.0), dyn.classical_rhs(state, V, params)
        assert np.array_equal(q[0], c[0]) and np.array_equal(q[1], c[1])

    def test_quantum_bracket_at_origin(self, unit_gaussian, params):
        # oracle: central differences of the analytic density at x = 0
        h = 1e-3
        P = lambda x: np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi)
        d1 = (P(h) - P(-h)) / (2 * h)
        d2 = (P(h) - 2 * P(0.0) + P(-h)) / h**2
        expected = -params.C / (2 * params.mass) * (-2 * d2 / P(0.0) + (d1 / P(0.0)) ** 2)
        _, dS = dyn.quantum_rhs(unit_gaussian, None, params)
        assert dS[unit_gaussian.grid.origin_index] == pytest.approx(expected, abs=1e-6)
        # the analytic value -C/m / sigma^2 itself is matched to 1e-8
        assert dS[unit_gaussian.grid.origin_index] == pytest.approx(-params.C / params.mass, abs=1e-8)


class TestSteppers:
    def test_zero_rhs_identity(self, grid14, params):
        state = gaussian_state(grid14, 0.0, 1.0)
        zero = lambda s, V, p: (np.zeros(s.grid.shape), np.zeros(s.grid.shape))
        out = dyn.rk4_step(state, None, params, 1e-3, zero)
        assert np.array_equal(out.P.values, state.P.values) and np.array_equal(out.S.values, state.S.values)
        assert out.t == pytest.approx(1e-3)

    def test_classical_drift_moves_centre(self, wide_grid, params):
        p0, dt = 0.5, 1e-3
        state = gaussian_state(wide_grid, 0.0, np.sqrt(8.0), p0)
        out = dyn.rk4_step(state, None, params, dt, dyn.classical_rhs)
        # exact solution: the initial samples translated by p0 dt (Fourier shift)
        k = wide_grid.wavenumbers()
        shifted = np.fft.ifft(np.fft.fft(state.P.values) * np.exp(-1j * k * p0 * dt)).real
        assert np.max(np.abs(out.P.values - shifted)) < 1e-14
        assert stats.mean_position(out.P) - stats.mean_position(state.P) == pytest.approx(p0 * dt, abs=1e-12)

    def test_stability_limit_enforced(self, grid14, params):
        state = gaussian_state(grid14, 0.0, 1.0)
        with pytest.raises(InstabilityError):
            dyn.rk4_step(state, None, params, 10 * dyn.stability_limit(state, params))

    def test_plane_wave_phase(self, params):
        grid = make_grid(1, [64], [10.0])
        k, dt = 2 * np.pi * 3 / 10.0, 0.01
        psi = np.exp(1j * k * grid.coords()) / np.sqrt(10.0)
        out = dyn.splitstep_step(WaveState(grid, psi), None, params, dt)
        np.testing.assert_allclose(out.values, psi * np.exp(-1j * params.hbar * k**2 * dt / (2 * params.mass)), atol=1e-14)

    def test_ground_state_density_constant(self, params):
        # Strang splitting distorts the stationary state at O((omega dt)^2), and psi must
        # vanish at the seam, hence the slow trap on a 64-wide box
        grid = make_grid(1, [256], [64.0])
        state = dyn.harmonic_ground_state(grid, params, OMEGA)
        V = dyn.make_potential(grid, "harmonic", omega=OMEGA)
        step = dyn.SplitStepPropagator(grid, V, params, 1e-3)
        wave = to_wave(state, params)
        for _ in range(1000):
            wave = step(wave)
        assert np.max(np.abs(np.abs(wave.values) ** 2 - state.P.values)) < 1e-12

    def _order(self, errors, steps):
        return np.polyfit(np.log(steps), np.log(errors), 1)[0]

    def test_rk4_fourth_order(self, params):
        grid = make_grid(1, [128], [40.0])
        V = dyn.make_potential(grid, "harmonic", omega=0.25)
        state = gaussian_state(grid, 0.0, np.sqrt(8.0), 0.5)
        T = 0.32

        def run(h):
            s = state
            for _ in range(int(round(T / h))):
                s = dyn.rk4_step(s, V, params, h)
            return s

        ref = run(0.0025)
        hs = [0.04, 0.02, 0.01]
        errs = [np.sqrt(integrate((run(h).P.values - ref.P.values) ** 2, grid)) for h in hs]
        assert self._order(errs, hs) == pytest.approx(4.0, abs=0.3)

    def test_splitstep_second_order(self, params):
        grid = make_grid(1, [128], [40.0])
        V = dyn.make_potential(grid, "harmonic", omega=0.25)
        wave0 = to_wave(gaussian_state(grid, 1.0, np.sqrt(8.0), 0.5), params)
        T = 1.6

        def run(h):
            step = dyn.SplitStepPropagator(grid, V, params, h)
            w = wave0
            for _ in range(int(round(T / h))):
                w = step(w)
            return w.values

        ref = run(0.001)
        hs = [0.2, 0.1, 0.05]
        errs = [np.sqrt(integrate(np.abs(run(h) - ref) ** 2, grid)) for h in hs]
        assert self._order(errs, hs) == pytest.approx(2.0, abs=0.1)


class TestEnergy:
    def test_uniform_free(self, grid20, params):
        assert dyn.total_energy(uniform_state(grid20), None, params) == pytest.approx(0.0, abs=1e-14)

    def test_ground_state(self, wide_grid, params):
        state = dyn.harmonic_ground_state(wide_grid, params, OMEGA)
        V = dyn.make_potential(wide_grid, "harmonic", omega=OMEGA)
        assert dyn.total_energy(state, V, params) == pytest.approx(params.hbar * OMEGA / 2, abs=1e-8)

    def test_matches_wave_energy(self, wide_grid, params):
        state = gaussian_state(wide_grid, 0.0, np.sqrt(8.0), 2 * np.pi / 40.0)
        V = dyn.make_potential(wide_grid, "harmonic", omega=OMEGA)
        assert dyn.total_energy(state, V, params) == pytest.approx(dyn.wave_energy(to_wave(state, params), V, params), abs=1e-10)

    def test_classical_energy_drops_fisher_term(self, grid14, params):
        state = gaussian_state(grid14, 0.0, 1.0)
        assert dyn.total_energy(state, None, params, coupling=0.0) == 0.0
        assert dyn.total_energy(state, None, params) == pytest.approx(params.C / (2 * params.mass), abs=1e-10)


class TestEvolve:
    def test_zero_steps(self, grid14, params):
        state = gaussian_state(grid14, 0.0, 1.0)
        result = dyn.evolve(state, None, params, dyn.EvolutionConfig(1e-3, 0, "quantum_hydro"))
        assert len(result.records) == 1 and result.hydro_states[0] is state

    def test_wave_initial_requires_splitstep(self, grid14, params):
        wave = to_wave(gaussian_state(grid14, 0.0, 1.0), params)
        with pytest.raises(ConfigurationError):
            dyn.evolve(wave, None, params, dyn.EvolutionConfig(1e-3, 1, "both"))

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            dyn.EvolutionConfig(0.0, 10)
        with pytest.raises(ConfigurationError):
            dyn.EvolutionConfig(1e-3, 10, "euler")

    def test_initial_dt_too_large(self, grid14, params):
        state = gaussian_state(grid14, 0.0, 1.0)
        with pytest.raises(InstabilityError) as info:
            dyn.evolve(state, None, params, dyn.EvolutionConfig(1.0, 5, "quantum_hydro"))
        assert info.value.step == 0

    def test_node_failure_reports_step(self, params):
        # a narrow packet on a short box spreads into the seam and loses its tails
        grid = make_grid(1, [128], [12.0])
        state = gaussian_state(grid, 0.0, 0.85)
        with pytest.raises(NodeError) as info:
            dyn.evolve(state, None, params, dyn.EvolutionConfig(1e-3, 3000, "quantum_hydro", 100), keep_states=False)
        assert info.value.step is not None and info.value.step > 0

    def test_record_cadence(self, wide_grid, params):
        state = gaussian_state(wide_grid, 0.0, np.sqrt(8.0))
        result = dyn.evolve(state, None, params, dyn.EvolutionConfig(1e-3, 25, "splitstep", 10))
        np.testing.assert_allclose(result.times, [0.0, 0.01, 0.02, 0.025])

    def test_quantum_spreads_faster(self, wide_grid, params):
        state = gaussian_state(wide_grid, 0.0, np.sqrt(8.0))
        widths = {}
        for solver in ("classical_hydro", "quantum_hydro"):
            result = dyn.evolve(state, None, params, dyn.EvolutionConfig(1e-3, 1000, solver, 1000), keep_states=False)
            widths[solver] = result.column("Delta_x")[-1]
        assert widths["quantum_hydro"] > widths["classical_hydro"]
        # free spreading: sigma(t)^2 = sigma^2 + (hbar t / 2 m sigma)^2
        assert widths["quantum_hydro"] == pytest.approx(np.sqrt(8.0 + 1 / 32), abs=1e-8)
        assert widths["classical_hydro"] == pytest.approx(np.sqrt(8.0), abs=1e-8)

    def test_classical_run_conserves_classical_energy(self, wide_grid, params):
        state = gaussian_state(wide_grid, 0.0, np.sqrt(8.0), 0.3)
        V = dyn.make_potential(wide_grid, "harmonic", omega=OMEGA)
        result = dyn.evolve(state, V, params, dyn.EvolutionConfig(1e-3, 500, "classical_hydro", 50), keep_states=False)
        assert result.max_drift("energy") < 1e-8 and result.max_drift("norm") < 1e-8


def test_coherent_state_centre_oscillates(wide_grid, params):
    # oracle: Ehrenfest, <x>(t) = x0 cos(omega t) for a displaced ground state at rest
    x0 = 0.5
    state = dyn.coherent_state(wide_grid, params, OMEGA, x0)
    V = dyn.make_potential(wide_grid, "harmonic", omega=OMEGA)
    result = dyn.evolve(state, V, params, dyn.EvolutionConfig(1e-3, 2000, "splitstep", 100), keep_states=False)
    expected = x0 * np.cos(OMEGA * result.times)
    assert np.max(np.abs(result.column("mean_x") - expected)) < 1e-4
