"""Result records, JSON/CSV persistence and golden-file comparison."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA_VERSION = "1"
IGNORED_FIELDS = frozenset({"timestamp", "tool_version"})


def tool_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        from . import __version__
        return __version__


def jsonable(obj: Any) -> Any:
    """Convert to plain JSON types; complex numbers become [re, im]."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if hasattr(obj, "_asdict"):
        return jsonable(obj._asdict())
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enum
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _now() -> str:
    return _dt.datetime.now().strftime("%Y%m%dT%H%M%S%f")


@dataclass
class SpectralReport:
    task: str
    model: dict | None = None
    parameters: dict = field(default_factory=dict)
    results: Any = None
    convergence: dict = field(default_factory=dict)
    disclaimer: str | None = None
    tool_version: str = field(default_factory=tool_version)
    timestamp: str = field(default_factory=_now)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        self.model = jsonable(self.model)
        self.parameters = jsonable(self.parameters)
        self.results = jsonable(self.results)
        self.convergence = jsonable(self.convergence)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "task": self.task,
            "model": self.model,
            "parameters": self.parameters,
            "results": self.results,
            "convergence": self.convergence,
            "disclaimer": self.disclaimer,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralReport":
        known = {"schema_version", "task", "model", "parameters", "results", "convergence",
                 "disclaimer", "tool_version", "timestamp"}
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def from_json(cls, text: str) -> "SpectralReport":
        return cls.from_dict(json.loads(text))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _open_exclusive(directory: Path, stem: str, suffix: str):
    for k in range(1000):
        name = f"{stem}{'' if k == 0 else f'-{k}'}{suffix}"
        path = directory / name
        try:
            return path, open(path, "x", newline="" if suffix == ".csv" else None,
                              encoding="utf-8")
        except FileExistsError:
            continue
    raise FileExistsError(f"could not create a fresh {stem}{suffix} in {directory}")


def write_report(report: SpectralReport, out_dir: str | os.PathLike,
                 header: list[str] | None = None, rows: list | None = None) -> dict:
    """Write ``<task>-<timestamp>.json`` and, given rows, the matching CSV.

    Files are created exclusively; an existing name gets a numeric suffix.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{report.task}-{report.timestamp}"
    paths = {}
    path, fh = _open_exclusive(out, stem, ".json")
    with fh:
        fh.write(report.to_json())
        fh.write("\n")
    paths["json"] = str(path)
    if rows is not None:
        if not header:
            raise ValueError("CSV output needs a header row")
        path, fh = _open_exclusive(out, stem, ".csv")
        with fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        paths["csv"] = str(path)
    return paths


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = list(csv.reader(fh))
    return r[0], r[1:]


# ---------------------------------------------------------------- golden files


class GoldenError(RuntimeError):
    """Golden file missing or unreadable."""


@dataclass
class FieldDiff:
    path: str
    expected: Any
    actual: Any
    reason: str

    def __str__(self) -> str:
        return f"{self.path}: {self.reason} (expected {self.expected!r}, got {self.actual!r})"


@dataclass
class CompareResult:
    passed: bool
    diffs: list[FieldDiff]

    def __bool__(self) -> bool:
        return self.passed


def _tol_for(path: str, rel_tol: float, field_tols: dict | None) -> float:
    if field_tols:
        best = None
        for prefix, tol in field_tols.items():
            if path == prefix or path.startswith(prefix + ".") or path.startswith(prefix + "["):
                if best is None or len(prefix) > len(best[0]):
                    best = (prefix, tol)
        if best is not None:
            return best[1]
    return rel_tol


def _compare(exp, act, path, rel_tol, abs_tol, field_tols, diffs):
    if isinstance(exp, dict):
        if not isinstance(act, dict):
            diffs.append(FieldDiff(path, exp, act, "type mismatch"))
            return
        for k, v in exp.items():
            if k in IGNORED_FIELDS:
                continue
            sub = f"{path}.{k}" if path else k
            if k not in act:
                diffs.append(FieldDiff(sub, v, None, "missing"))
                continue
            _compare(v, act[k], sub, rel_tol, abs_tol, field_tols, diffs)
        return
    if isinstance(exp, list):
        if not isinstance(act, list) or len(act) != len(exp):
            diffs.append(FieldDiff(path, exp, act, "length mismatch"))
            return
        for i, (e, a) in enumerate(zip(exp, act)):
            _compare(e, a, f"{path}[{i}]", rel_tol, abs_tol, field_tols, diffs)
        return
    if isinstance(exp, bool) or isinstance(act, bool) or isinstance(exp, str) or exp is None:
        if exp != act:
            diffs.append(FieldDiff(path, exp, act, "value differs"))
        return
    if isinstance(exp, (int, float)):
        if not isinstance(act, (int, float)):
            diffs.append(FieldDiff(path, exp, act, "type mismatch"))
            return
        if isinstance(exp, float) and math.isnan(exp):
            if not (isinstance(act, float) and math.isnan(act)):
                diffs.append(FieldDiff(path, exp, act, "value differs"))
            return
        tol = _tol_for(path, rel_tol, field_tols) * abs(exp) + abs_tol
        if abs(act - exp) > tol:
            diffs.append(FieldDiff(path, exp, act, f"outside tolerance {tol:.3g}"))
        return
    if exp != act:
        diffs.append(FieldDiff(path, exp, act, "value differs"))


def golden_compare(report: SpectralReport | dict, golden_file: str | os.PathLike,
                   rel_tol: float = 1e-8, abs_tol: float = 0.0,
                   field_tols: dict | None = None) -> CompareResult:
    """Compare every field of the golden record against ``report``.

    Fields only present in the report are ignored, as are timestamp and
    tool_version.  ``field_tols`` maps a dotted path prefix (e.g.
    ``"results.roots"``) to its own relative tolerance.
    """
    try:
        with open(golden_file, encoding="utf-8") as fh:
            golden = json.load(fh)
    except FileNotFoundError as exc:
        raise GoldenError(f"golden file not found: {golden_file}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise GoldenError(f"corrupt golden file {golden_file}: {exc}") from exc
    if not isinstance(golden, dict):
        raise GoldenError(f"corrupt golden file {golden_file}: top level is not an object")
    actual = report.to_dict() if isinstance(report, SpectralReport) else jsonable(report)
    diffs: list[FieldDiff] = []
    _compare(golden, actual, "", rel_tol, abs_tol, field_tols, diffs)
    return CompareResult(not diffs, diffs)
