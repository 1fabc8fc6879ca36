"""Command-line interface: run scenario configs and print ladder tables.

``vlab run CONFIG`` executes every scenario in a JSON run config and writes
one JSON report per scenario plus a combined ``summary.csv`` into the output
directory.  Reports contain no timestamps or machine-specific data, so a
rerun of the same config produces byte-identical output (plots excepted).

``vlab list`` shows the bundled configs; ``vlab list CONFIG`` shows the
scenarios inside a config.  ``vlab ladder`` prints the aperture ladder for a
mass system without running any scenario.

Exit codes: 0 all scenarios passed, 1 at least one scenario failed,
2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .geometry import LadderError, MassSystem, build_aperture_ladder
from .scenarios import (CSV_COLUMNS, ConfigError, ScenarioOutcome, ScenarioSpec,
                        run_scenario, validate_config)

__all__ = ["main"]

_SEED_ENV = "VLAB_SEED_OVERRIDE"


def _bundled_configs() -> dict[str, Path]:
    base = resources.files("vlab") / "configs"
    out: dict[str, Path] = {}
    for entry in sorted(base.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out[entry.name] = Path(str(entry))
    return out


def _resolve_config(argument: str) -> Path:
    path = Path(argument)
    if path.is_file():
        return path
    if os.sep not in argument:
        bundled = _bundled_configs()
        for key in (argument, argument + ".json"):
            if key in bundled:
                return bundled[key]
    raise ConfigError(f"config not found: {argument!r} is neither a file nor "
                      f"a bundled config (try 'vlab list')")


def _load_specs(argument: str) -> list[ScenarioSpec]:
    path = _resolve_config(argument)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    specs = validate_config(raw)
    override = os.environ.get(_SEED_ENV)
    if override is not None:
        try:
            seed = int(override)
        except ValueError:
            raise ConfigError(f"{_SEED_ENV} must be an integer, "
                              f"got {override!r}") from None
        specs = [ScenarioSpec(name=s.name, kind=s.kind, seed=seed,
                              expect_fail=s.expect_fail, output=s.output,
                              parameters=s.parameters) for s in specs]
    return specs


@dataclass
class _RunResult:
    spec: ScenarioSpec
    outcome: ScenarioOutcome | None
    error: str | None
    json_text: str
    rows: list[dict]
    passed: bool


def _execute(spec: ScenarioSpec) -> _RunResult:
    try:
        outcome = run_scenario(spec)
        text = json.dumps(outcome.record(), indent=2, sort_keys=True,
                          allow_nan=False) + "\n"
        return _RunResult(spec=spec, outcome=outcome, error=None,
                          json_text=text, rows=outcome.spectral_rows,
                          passed=outcome.passed)
    except Exception as exc:  # noqa: BLE001 - a crash is a scenario failure
        record = {"schema": 1, "name": spec.name, "kind": spec.kind,
                  "seed": spec.seed, "expect_fail": spec.expect_fail,
                  "parameters": spec.parameters,
                  "error": f"{type(exc).__name__}: {exc}",
                  "checks_passed": False, "passed": spec.expect_fail}
        text = json.dumps(record, indent=2, sort_keys=True) + "\n"
        return _RunResult(spec=spec, outcome=None,
                          error=f"{type(exc).__name__}: {exc}",
                          json_text=text, rows=[], passed=spec.expect_fail)


def _csv_cell(value) -> str:
    if value == "" or value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_summary(path: Path, results: list[_RunResult]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for result in results:
            for row in result.rows:
                writer.writerow([_csv_cell(row[col]) for col in CSV_COLUMNS])


def _write_plots(result: _RunResult, out_dir: Path) -> None:
    if result.outcome is None:
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    results = result.outcome.results
    name = result.spec.output
    if result.spec.kind == "decay_fit" and "profile" in results:
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        ax.plot(results["profile"]["r"], results["profile"]["log_abs_psi"], lw=1.0)
        ax.set_xscale("log")
        ax.set_xlabel("r")
        ax.set_ylabel("log |psi|")
        ax.set_title(name)
        fig.tight_layout()
        fig.savefig(out_dir / f"{name}.svg")
        plt.close(fig)
    elif result.spec.kind == "virtual_level" and "sweep" in results:
        eps = [row["epsilon"] for row in results["sweep"]]
        energies = [row["ground_energy"] for row in results["sweep"]]
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        ax.plot(eps, energies, "o-", lw=1.0)
        ax.set_xscale("log")
        ax.set_xlabel("kinetic defect")
        ax.set_ylabel("ground energy")
        ax.set_title(name)
        fig.tight_layout()
        fig.savefig(out_dir / f"{name}.svg")
        plt.close(fig)
    elif result.spec.kind == "efimov_count":
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        for key, marker in (("subcritical", "s"), ("supercritical", "o")):
            entries = results[key]["counts"]
            ax.plot([e["box_size"] for e in entries],
                    [e["count"] for e in entries], marker + "-",
                    label=f"{key} c={results[key]['strength']:g}")
        ax.set_xscale("log")
        ax.set_xlabel("box size")
        ax.set_ylabel("negative modes")
        ax.legend(fontsize=8)
        ax.set_title(name)
        fig.tight_layout()
        fig.savefig(out_dir / f"{name}.svg")
        plt.close(fig)


def _cmd_run(args: argparse.Namespace) -> int:
    specs = _load_specs(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_execute, specs))
    else:
        results = [_execute(spec) for spec in specs]
    for result in results:
        (out_dir / f"{result.spec.output}.json").write_text(result.json_text)
        if args.plots:
            _write_plots(result, out_dir)
    _write_summary(out_dir / "summary.csv", results)
    overview = {"schema": 1,
                "scenarios": [{"name": r.spec.name, "kind": r.spec.kind,
                               "expect_fail": r.spec.expect_fail,
                               "error": r.error, "passed": r.passed}
                              for r in results],
                "all_passed": all(r.passed for r in results)}
    (out_dir / "run.json").write_text(
        json.dumps(overview, indent=2, sort_keys=True) + "\n")
    width = max((len(r.spec.name) for r in results), default=4)
    for result in results:
        verdict = "PASS" if result.passed else "FAIL"
        note = ""
        if result.spec.expect_fail:
            note = "  (expected failure)"
        if result.error is not None:
            note += f"  [{result.error}]"
        print(f"{result.spec.name:<{width}}  {verdict}{note}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} scenarios passed; "
          f"reports in {out_dir}")
    return 0 if failed == 0 else 1


def _cmd_list(args: argparse.Namespace) -> int:
    if args.config is None:
        for name in _bundled_configs():
            print(name)
        return 0
    specs = _load_specs(args.config)
    if not specs:
        print("(no scenarios)")
        return 0
    width = max(len(s.name) for s in specs)
    for spec in specs:
        mark = "  expect_fail" if spec.expect_fail else ""
        print(f"{spec.name:<{width}}  {spec.kind}  seed={spec.seed}{mark}")
    return 0


def _parse_masses(text: str) -> tuple[float, ...]:
    try:
        masses = tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise ConfigError(f"--masses expects comma-separated numbers, "
                          f"got {text!r}") from None
    if not masses:
        raise ConfigError("--masses must name at least one mass")
    return masses


def _cmd_ladder(args: argparse.Namespace) -> int:
    masses = _parse_masses(args.masses)
    system = MassSystem(dim=args.dim, masses=masses)
    max_order = args.max_order if args.max_order is not None else system.size - 1
    try:
        ladder = build_aperture_ladder(system, max_order, args.aperture1,
                                       args.strict_aperture1)
    except (LadderError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    records = ladder.to_records()
    if args.json:
        print(json.dumps(records, indent=2, sort_keys=True))
        return 0
    print(f"masses={args.masses}  dim={args.dim}")
    print(f"{'l':>3}  {'kappa':>13}  {'kappa_prime':>13}  {'d':>13}")
    for rec in records:
        sep = f"{rec['d']:.6e}" if rec["l"] > 1 else "-"
        print(f"{rec['l']:>3}  {rec['kappa']:>13.6e}  "
              f"{rec['kappa_prime']:>13.6e}  {sep:>13}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlab",
        description="Numerical laboratory for threshold (virtual-level) "
                    "analysis of many-body radial models.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run all scenarios in a config")
    run.add_argument("config", help="path to a JSON run config, or the name "
                                    "of a bundled config")
    run.add_argument("--out", default="vlab-report",
                     help="output directory (default: ./vlab-report)")
    run.add_argument("--jobs", type=int, default=1,
                     help="run scenarios in up to N threads")
    run.add_argument("--plots", action="store_true",
                     help="also write SVG plots for spectral scenarios")
    run.set_defaults(func=_cmd_run)

    lst = sub.add_parser("list", help="list bundled configs or the scenarios "
                                      "in a config")
    lst.add_argument("config", nargs="?", default=None)
    lst.set_defaults(func=_cmd_list)

    ladder = sub.add_parser("ladder", help="print the aperture ladder for a "
                                           "mass system")
    ladder.add_argument("--masses", required=True,
                        help="comma-separated particle masses, e.g. 1,1,1")
    ladder.add_argument("--dim", type=int, default=3,
                        help="ambient dimension per particle (default 3)")
    ladder.add_argument("--max-order", type=int, default=None,
                        help="highest cluster order (default: particles - 1)")
    ladder.add_argument("--aperture1", type=float, default=1.0,
                        help="order-1 ball radius (default 1)")
    ladder.add_argument("--strict-aperture1", type=float, default=0.5,
                        help="order-1 strict radius (default 0.5)")
    ladder.add_argument("--json", action="store_true",
                        help="emit the ladder as JSON records")
    ladder.set_defaults(func=_cmd_ladder)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
