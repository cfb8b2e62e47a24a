"""Scenario configuration files (YAML) and their validation."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dynamics import SOLVERS, EvolutionConfig, Potential, make_potential
from .errors import ConfigurationError
from .fields import EnsembleState, Grid, PhysParams, WaveState, gaussian_state, make_grid

FORMATS = ("csv", "json")
CSV_COLUMNS = (
    "t",
    "norm",
    "energy",
    "delta_x",
    "Delta_x",
    "Delta_N",
    "Delta_p",
    "prod_exact",
    "prod_heisenberg",
    "l2_P_discrepancy",
    "l2_gradS_discrepancy",
)


@dataclass(frozen=True)
class Tolerances:
    norm_drift: float = 1e-8
    energy_drift: float = 1e-8
    prod_exact: float = 1e-10
    delta_p_dual: float = 1e-8
    l2_P: float = 1e-6
    l2_gradS: float = 1e-5


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    description: str
    grid: Grid
    params: PhysParams
    potential: dict
    initial: dict
    evolution: EvolutionConfig
    output_directory: Path
    formats: tuple[str, ...]
    tolerances: Tolerances = field(default_factory=Tolerances)
    base_dir: Path = Path(".")
    compare_with: str | None = None

    def build_potential(self) -> Potential:
        block = self.potential
        if "file" in block:
            values = _load_array(self.base_dir / block["file"])
            if values.shape != self.grid.shape:
                raise ConfigurationError(f"tabulated potential has shape {values.shape}, grid is {self.grid.shape}")
            return Potential(self.grid, values, "tabulated", {"file": str(block["file"])})
        return make_potential(self.grid, block["kind"], self.params.mass, **block.get("parameters", {}))

    def build_initial(self) -> EnsembleState | WaveState:
        block = self.initial
        if block["kind"] == "gaussian":
            return gaussian_state(self.grid, block.get("x0", 0.0), block.get("sigma", 1.0), block.get("p0", 0.0))
        data = np.load(self.base_dir / block["path"])
        if "psi" in data:
            psi = np.asarray(data["psi"], dtype=complex)
            if psi.shape != self.grid.shape:
                raise ConfigurationError("initial psi does not match the grid shape")
            return WaveState(self.grid, psi)
        P = np.asarray(data["P"], dtype=float)
        S = np.asarray(data["S"], dtype=float) if "S" in data else None
        if P.shape != self.grid.shape or (S is not None and S.shape != self.grid.shape):
            raise ConfigurationError("initial P/S do not match the grid shape")
        return EnsembleState.from_arrays(self.grid, P, S)


def _load_array(path: Path) -> np.ndarray:
    if path.suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path)


def _block(raw: dict, key: str) -> dict:
    value = raw.get(key)
    if not isinstance(value, dict):
        raise ConfigurationError(f"missing or malformed '{key}' block")
    return value


def _number(block: dict, key: str, where: str, default=None, kind=float):
    if key not in block:
        if default is None:
            raise ConfigurationError(f"'{where}.{key}' is required")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"'{where}.{key}' must be a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigurationError(f"'{where}.{key}' must be an integer")
    return kind(value)


def _vector(value, n: int, where: str) -> list:
    values = value if isinstance(value, list) else [value] * n
    if len(values) != n:
        raise ConfigurationError(f"'{where}' needs {n} entries")
    return values


def parse_config(raw: Any, base_dir: Path = Path("."), name: str = "scenario") -> ScenarioConfig:
    """Validate a loaded YAML mapping; every range check happens here."""
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a mapping")
    g = _block(raw, "grid")
    n_dims = _number(g, "n_dims", "grid", kind=int)
    points = _vector(g.get("points"), n_dims, "grid.points")
    lengths = _vector(g.get("length"), n_dims, "grid.length")
    try:
        grid = make_grid(n_dims, [int(p) for p in points], [float(v) for v in lengths])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid grid: {exc}") from exc

    phys = raw.get("physics", {}) or {}
    try:
        params = PhysParams(_number(phys, "mass", "physics", 1.0), _number(phys, "hbar", "physics", 1.0))
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc

    pot = _block(raw, "potential")
    if "file" in pot:
        if not (base_dir / pot["file"]).is_file():
            raise ConfigurationError(f"potential file {pot['file']!r} not found")
    elif pot.get("kind") not in ("free", "harmonic", "double_well", "polynomial"):
        raise ConfigurationError(f"unknown potential kind {pot.get('kind')!r}")
    elif not isinstance(pot.get("parameters", {}), dict):
        raise ConfigurationError("'potential.parameters' must be a mapping")

    init = _block(raw, "initial")
    if init.get("kind") == "gaussian":
        for key in ("x0", "p0"):
            _vector(init.get(key, 0.0), n_dims, f"initial.{key}")
        sigma = _vector(init.get("sigma", 1.0), n_dims, "initial.sigma")
        if any(not isinstance(s, (int, float)) or s <= 0 for s in sigma):
            raise ConfigurationError("'initial.sigma' must be positive")
    elif init.get("kind") == "file":
        if not (base_dir / str(init.get("path", ""))).is_file():
            raise ConfigurationError(f"initial file {init.get('path')!r} not found")
    else:
        raise ConfigurationError(f"unknown initial kind {init.get('kind')!r}")

    ev = _block(raw, "evolution")
    solver = ev.get("solver", "both")
    if solver not in SOLVERS:
        raise ConfigurationError(f"'evolution.solver' must be one of {SOLVERS}")
    evolution = EvolutionConfig(
        _number(ev, "dt", "evolution"),
        _number(ev, "steps", "evolution", kind=int),
        solver,
        _number(ev, "record_every", "evolution", 1, kind=int),
    )

    compare_with = ev.get("compare_with")
    if compare_with is not None and compare_with not in SOLVERS:
        raise ConfigurationError(f"'evolution.compare_with' must be one of {SOLVERS}")

    out = raw.get("output", {}) or {}
    formats = tuple(out.get("formats", FORMATS))
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ConfigurationError(f"unknown output formats {sorted(unknown)}")

    tol_raw = raw.get("tolerances", {}) or {}
    try:
        tolerances = Tolerances(**{k: float(v) for k, v in tol_raw.items()})
    except TypeError as exc:
        raise ConfigurationError(f"invalid tolerances: {exc}") from exc

    return ScenarioConfig(
        name=str(raw.get("name", name)),
        description=str(raw.get("description", "")),
        grid=grid,
        params=params,
        potential=pot,
        initial=init,
        evolution=evolution,
        output_directory=Path(out.get("directory", f"{raw.get('name', name)}_output")),
        formats=formats,
        tolerances=tolerances,
        base_dir=base_dir,
        compare_with=compare_with,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw, path.parent, path.stem)
