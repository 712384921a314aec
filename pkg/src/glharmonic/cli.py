"""Batch runner: ``glharmonic --config scenarios.yaml --out reports/``.

Exit codes: 0 when every verdict passes, 1 when some verdict fails, 2 for
configuration errors (with the offending line), 3 for numerical domain
errors (with the node, point or time where evaluation broke down).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .config import apply_overrides, load_config
from .errors import ConfigError, GLHarmonicError
from .report import Report, write_report
from .scenarios import build, execute

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunResult:
    code: int
    reports: list[Report] = field(default_factory=list)
    message: str = ""
    files: list[Path] = field(default_factory=list)


def run(cfg_path, out_dir=None, *, grid: int | None = None, tol: float | None = None, emit_plots: bool = False) -> RunResult:
    """Validate every scenario, run them in file order and write the reports."""
    try:
        configs = [apply_overrides(c, grid, tol) for c in load_config(cfg_path)]
        built = []
        for cfg in configs:
            try:
                built.append(build(cfg))
            except ConfigError:
                raise
            except (GLHarmonicError, ArithmeticError) as exc:
                return RunResult(EXIT_NUMERIC, message=f"scenario '{cfg.name}': {exc}")
    except ConfigError as exc:
        return RunResult(EXIT_CONFIG, message=f"{cfg_path}: {exc}")

    out = Path(out_dir if out_dir is not None else "reports")
    result = RunResult(EXIT_OK)
    for cfg, objs in zip(configs, built):
        try:
            report = execute(cfg, objs)
        except ConfigError as exc:
            return RunResult(EXIT_CONFIG, result.reports, f"{cfg_path}: {exc}", result.files)
        except (GLHarmonicError, ArithmeticError) as exc:
            return RunResult(EXIT_NUMERIC, result.reports, f"scenario '{cfg.name}': {exc}", result.files)
        result.reports.append(report)
        result.files += write_report(report, out, emit_plots)

    summary = {
        "config": str(cfg_path),
        "scenarios": [{"name": r.name, "kind": r.kind, "passed": r.passed} for r in result.reports],
        "passed": all(r.passed for r in result.reports),
    }
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    result.files.append(path)
    if not summary["passed"]:
        result.code = EXIT_FAILED
    return result


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glharmonic", description=__doc__.split("\n")[0])
    p.add_argument("--config", required=True, help="YAML scenario file")
    p.add_argument("--out", default="reports", help="output directory (default: ./reports)")
    p.add_argument("--grid", type=int, help="override the grid resolution of every scenario")
    p.add_argument("--tol", type=float, help="override every tolerance of every scenario")
    p.add_argument("--emit-plots", action="store_true", help="also write plot-ready CSV tables")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    result = run(args.config, args.out, grid=args.grid, tol=args.tol, emit_plots=args.emit_plots)
    for report in result.reports:
        print(f"{report.name}: {'PASS' if report.passed else 'FAIL'}")
        for v in report.verdicts:
            if not v.passed:
                print("  " + v.line())
    if result.message:
        print(f"error: {result.message}", file=sys.stderr)
    return result.code


if __name__ == "__main__":
    sys.exit(main())
