"""Report assembly: verdicts, text/JSON rendering and CSV tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_OPS = {
    "<": lambda v, t: v < t,
    "<=": lambda v, t: v <= t,
    ">": lambda v, t: v > t,
    ">=": lambda v, t: v >= t,
}


def fmt(value) -> str:
    """17 significant digits; round-trips every double."""
    return format(float(value), ".17g")


@dataclass(frozen=True)
class Verdict:
    """``value <op> tolerance``; the tolerance travels with the outcome."""

    name: str
    value: float
    op: str
    tolerance: float
    tolerance_key: str

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and _OPS[self.op](self.value, self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": float(self.value),
            "op": self.op,
            "tolerance": float(self.tolerance),
            "tolerance_key": self.tolerance_key,
            "passed": self.passed,
        }

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {fmt(self.value)} {self.op} {fmt(self.tolerance)} (tolerance '{self.tolerance_key}')"


@dataclass
class Report:
    name: str
    kind: str
    scenario: dict
    values: dict = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    tables: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    plots: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    disclosure: str | None = None

    def check(self, name: str, value: float, op: str, tolerance: float, key: str) -> Verdict:
        verdict = Verdict(name, float(value), op, float(tolerance), key)
        self.verdicts.append(verdict)
        return verdict

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "scenario": self.scenario,
            "values": {k: _plain(v) for k, v in self.values.items()},
            "verdicts": [v.to_dict() for v in self.verdicts],
            "passed": self.passed,
            "notes": list(self.notes),
            "connection": self.disclosure,
            "tables": sorted(self.tables),
        }

    def render_text(self) -> str:
        out = [f"scenario: {self.name}", f"kind: {self.kind}", ""]
        out.append("configuration:")
        out.append(json.dumps(self.scenario, indent=2, sort_keys=True))
        out.append("")
        out.append("values:")
        for key in self.values:
            out.append(f"  {key} = {_text(self.values[key])}")
        out.append("")
        out.append("verdicts:")
        out.extend("  " + v.line() for v in self.verdicts)
        if self.disclosure:
            out.append("")
            out.append(f"connection: {self.disclosure}")
        if self.notes:
            out.append("")
            out.append("notes:")
            out.extend(f"  - {n}" for n in self.notes)
        out.append("")
        out.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(out) + "\n"


def _plain(value):
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _text(value) -> str:
    if isinstance(value, (float, np.floating)):
        return fmt(value)
    if isinstance(value, (np.ndarray, list, tuple)):
        arr = np.asarray(value, dtype=float)
        return "[" + ", ".join(fmt(v) for v in arr.ravel()) + f"] shape={list(arr.shape)}"
    return str(value)


def write_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    """Header row plus one line per node; numbers at 17 significant digits."""
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float).ravel() for k in names]
    rows = len(arrays[0]) if arrays else 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(names)
        for r in range(rows):
            writer.writerow([fmt(a[r]) for a in arrays])


def write_report(report: Report, out_dir: Path, emit_plots: bool = False) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    text_path = out_dir / f"{report.name}.report.txt"
    text_path.write_text(report.render_text(), encoding="utf-8")
    json_path = out_dir / f"{report.name}.report.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written += [text_path, json_path]
    for table, columns in sorted(report.tables.items()):
        path = out_dir / f"{report.name}.{table}.csv"
        write_csv(path, columns)
        written.append(path)
    if emit_plots:
        for table, columns in sorted(report.plots.items()):
            path = out_dir / f"{report.name}.plot.{table}.csv"
            write_csv(path, columns)
            written.append(path)
    return written
