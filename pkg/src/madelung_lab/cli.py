"""Command line entry point: ``run``, ``check`` and ``list-scenarios``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .config import CSV_COLUMNS, ScenarioConfig, load_config
from .dynamics import SOLVERS, EvolutionConfig, EvolutionResult, evolve
from .errors import ConfigurationError, LabError
from .suites import DEFAULT_SEED, SUITES, run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

logger = logging.getLogger("madelung_lab")


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), ".17g")


def render_csv(result: EvolutionResult, with_discrepancies: bool) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in result.records:
        row = []
        for col in CSV_COLUMNS:
            if col.endswith("_discrepancy") and not with_discrepancies:
                row.append("")
            else:
                row.append(_fmt(rec[col]))
        writer.writerow(row)
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _max_abs(values) -> float:
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    return float(np.max(np.abs(values))) if values.size else float("nan")


def summarize(config: ScenarioConfig, result: EvolutionResult) -> dict:
    """Drifts, discrepancies and the pass/fail verdict of a finished run."""
    tol = config.tolerances
    hbar = config.params.hbar
    both = config.evolution.solver == "both"
    summary = {
        "scenario": config.name,
        "solver": config.evolution.solver,
        "records": len(result.records),
        "max_norm_drift": result.max_drift("norm"),
        "max_energy_drift": result.max_drift("energy"),
        "max_prod_exact_error": _max_abs(result.column("prod_exact") - hbar / 2),
        "max_delta_p_dual": _max_abs(result.column("Delta_p") - result.column("Delta_p_momentum_space")),
        "max_l2_P": _max_abs(result.column("l2_P_discrepancy")) if both else None,
        "max_l2_gradS": _max_abs(result.column("l2_gradS_discrepancy")) if both else None,
        "final_Delta_x": float(result.column("Delta_x")[-1]),
    }
    checks = [
        ("norm drift", summary["max_norm_drift"], tol.norm_drift),
        ("energy drift", summary["max_energy_drift"], tol.energy_drift),
        ("exact product", summary["max_prod_exact_error"], tol.prod_exact),
        ("delta p routes", summary["max_delta_p_dual"], tol.delta_p_dual),
    ]
    if both:
        checks += [("L2 P", summary["max_l2_P"], tol.l2_P), ("L2 grad S", summary["max_l2_gradS"], tol.l2_gradS)]
    failures = [f"{name} {value:.3e} >= {limit:.0e}" for name, value, limit in checks if not value < limit]
    summary["failures"] = failures
    summary["verdict"] = "fail" if failures else "pass"
    return summary


def run_scenario(config_path: str | Path, output: str | Path | None = None, compare_with: str | None = None) -> int:
    """Load, evolve and write outputs; returns the process exit status."""
    try:
        config = load_config(config_path)
        V = config.build_potential()
        initial = config.build_initial()
        compare = compare_with or config.compare_with
        if compare is not None and compare not in SOLVERS:
            raise ConfigurationError(f"unknown comparison solver {compare!r}")
    except (ConfigurationError, OSError, KeyError, ValueError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = evolve(initial, V, config.params, config.evolution, keep_states=False)
        summary = summarize(config, result)
        if compare is not None:
            cfg = EvolutionConfig(config.evolution.dt, config.evolution.steps, compare, config.evolution.record_every)
            other = evolve(initial, V, config.params, cfg, keep_states=False)
            summary["compare_solver"] = compare
            summary["compare_final_Delta_x"] = float(other.column("Delta_x")[-1])
            summary["compare_max_energy_drift"] = other.max_drift("energy")
    except LabError as exc:
        step = getattr(exc, "step", None)
        where = f" at step {step} (t = {initial.t + step * config.evolution.dt:.6g})" if step is not None else ""
        print(f"error: solver failed{where}: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    out_dir = Path(output) if output is not None else config.output_directory
    if "csv" in config.formats:
        write_atomic(out_dir / f"{config.name}.csv", render_csv(result, config.evolution.solver == "both"))
    if "json" in config.formats:
        write_atomic(out_dir / f"{config.name}_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{config.name}: {summary['verdict']} (norm drift {summary['max_norm_drift']:.2e}, energy drift {summary['max_energy_drift']:.2e})")
    for failure in summary["failures"]:
        print(f"  violated: {failure}")
    return EXIT_OK if summary["verdict"] == "pass" else EXIT_INVARIANT


def run_checks(suite: str, seed: int = DEFAULT_SEED, as_json: bool = False) -> int:
    if suite != "all" and suite not in SUITES:
        print(f"error: unknown suite {suite!r}; choose from {', '.join(['all', *SUITES])}", file=sys.stderr)
        return EXIT_CONFIG
    results = run_suite(suite, seed)
    failed = [r for r in results if not r.passed]
    if as_json:
        print(json.dumps({"suite": suite, "seed": seed, "passed": not failed, "checks": [r.as_dict() for r in results]}, indent=2))
    else:
        for r in results:
            print(r.line())
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_INVARIANT if failed else EXIT_OK


def bundled_scenarios() -> list[tuple[str, str, Path]]:
    root = resources.files("madelung_lab") / "scenarios"
    out = []
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".yaml"):
            raw = yaml.safe_load(entry.read_text()) or {}
            out.append((entry.name[:-5], str(raw.get("description", "")), Path(str(entry))))
    return out


def list_scenarios(catalog=None) -> str:
    catalog = bundled_scenarios() if catalog is None else catalog
    lines = ["Bundled scenarios:"]
    width = max((len(name) for name, _, _ in catalog), default=0)
    lines += [f"  {name:<{width}}  {desc}" for name, desc, _ in catalog]
    return "\n".join(lines)


def _resolve_config(value: str) -> Path:
    path = Path(value)
    if path.exists():
        return path
    for name, _, bundled in bundled_scenarios():
        if name == value:
            return bundled
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="madelung-lab", description="Hydrodynamic and wave evolution with uncertainty diagnostics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="evolve a scenario and write CSV/summary output")
    run.add_argument("--config", required=True, help="YAML file or bundled scenario name")
    run.add_argument("--output", help="output directory (overrides output.directory)")
    check = sub.add_parser("check", help="run a named check suite")
    check.add_argument("--suite", required=True)
    check.add_argument("--seed", type=int, default=DEFAULT_SEED)
    check.add_argument("--json", action="store_true", help="print a JSON report")
    sub.add_parser("list-scenarios", help="list bundled scenarios")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return run_scenario(_resolve_config(args.config), args.output)
    if args.command == "check":
        return run_checks(args.suite, args.seed, args.json)
    print(list_scenarios())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
