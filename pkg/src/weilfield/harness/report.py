"""Experiment reports: CSV tables, pass/fail verdicts, atomic persistence.

Numbers are written in scientific notation with 17 significant digits so
64-bit floats round-trip exactly; CSV bodies are deterministic for a fixed
config and seed.  Files land via temp-file + rename, so an aborted run
never leaves a partial output.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Sequence


def fmt(value) -> str:
    """17-significant-digit scientific notation for floats; str otherwise."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.16e}"
    return str(value)


@dataclass(frozen=True)
class Verdict:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = f"{status} {self.name}: value={fmt(self.value)} tolerance={fmt(self.tolerance)}"
        return out + (f" ({self.note})" if self.note else "")


def check(name: str, value: float, tolerance: float, *, lower: bool = False,
          note: str = "") -> Verdict:
    """Verdict value <= tolerance, or value >= tolerance when lower is set."""
    passed = value >= tolerance if lower else value <= tolerance
    return Verdict(name, float(value), float(tolerance), bool(passed), note)


def check_window(name: str, value: float, center: float, band: float,
                 note: str = "") -> Verdict:
    """Verdict |value - center| <= band, reported against the band."""
    return Verdict(name, float(value), float(band),
                   bool(abs(value - center) <= band),
                   note or f"target {center:g} +/- {band:g}")


@dataclass
class Report:
    experiment: str
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add_table(self, name: str, header: Sequence[str],
                  rows: Sequence[Sequence]) -> None:
        self.tables[name] = (list(header), [list(r) for r in rows])

    def add_verdict(self, verdict: Verdict) -> None:
        self.verdicts.append(verdict)

    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def csv_bytes(self, name: str) -> bytes:
        header, rows = self.tables[name]
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue().encode("utf-8")

    def summary_lines(self) -> list[str]:
        return [v.line() for v in self.verdicts]


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename, never leaving partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: Report, outdir: str) -> list[str]:
    """Persist all tables and the verdict/provenance document; returns paths."""
    paths = []
    for name in sorted(report.tables):
        path = os.path.join(outdir, f"{name}.csv")
        atomic_write_bytes(path, report.csv_bytes(name))
        paths.append(path)
    doc = {
        "experiment": report.experiment,
        "verdicts": [
            {
                "name": v.name,
                "value": v.value,
                "tolerance": v.tolerance,
                "passed": v.passed,
                "note": v.note,
            }
            for v in report.verdicts
        ],
        "provenance": report.provenance,
    }
    path = os.path.join(outdir, "report.json")
    atomic_write_bytes(path, json.dumps(doc, indent=2, sort_keys=True).encode("utf-8"))
    paths.append(path)
    return paths
