"""Check records and deterministic CSV / JSON writers."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

REPORT_VERSION = "1.0"


@dataclass
class Check:
    name: str
    samples: int
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tolerance)

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "samples": self.samples, "max_residual": _num(self.max_residual),
                "tolerance": _num(self.tolerance), "pass": self.passed}


def check_from(name: str, residuals: Iterable[float], tolerance: float) -> Check:
    vals = [abs(float(r)) for r in residuals]
    worst = max(vals) if vals else 0.0
    if any(math.isnan(v) for v in vals):
        worst = math.inf
    return Check(name, len(vals), worst, tolerance)


def _num(x: float) -> float | str:
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return float(x)


def fmt(x: Any) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, float) or hasattr(x, "dtype"):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]], fmt_name: str) -> Path:
    """CSV, or a JSON object ``{"columns": [...], "rows": [[...]]}``."""
    if fmt_name == "json":
        path = path.with_suffix(".json")
        data = {"columns": list(header),
                "rows": [[float(v) if not isinstance(v, str) else v for v in r] for r in rows]}
        write_json(path, data)
    else:
        path = path.with_suffix(".csv")
        write_csv(path, header, rows)
    return path


def write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data) + "\n", encoding="utf-8")


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=False, allow_nan=False)


def checks_report(system: str, checks: Sequence[Check], **extra: Any) -> dict[str, Any]:
    report = {"version": REPORT_VERSION, "system": system, "checks": [c.as_dict() for c in checks]}
    report.update(extra)
    return report
