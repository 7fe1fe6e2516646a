"""Structured verdicts plus deterministic serialization helpers."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

SUPPORTED = "supported"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

REPORT_SCHEMA_VERSION = 1


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)
    return value


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, compact separators, no NaN."""
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def stable_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class TheoremReport:
    """Pass/fail evidence for one numerical theorem check."""

    theorem_id: str
    verdict: str
    statistics: dict[str, float] = field(default_factory=dict)
    counterexamples: list[dict] = field(default_factory=list)
    tolerances: dict[str, float] = field(default_factory=dict)
    inputs_hash: str = ""
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "theorem_id": self.theorem_id,
            "verdict": self.verdict,
            "statistics": _jsonable(self.statistics),
            "counterexamples": _jsonable(self.counterexamples),
            "tolerances": _jsonable(self.tolerances),
            "inputs_hash": self.inputs_hash,
            "notes": list(self.notes),
        }

    def counterexample_csv(self) -> str:
        """Counterexample points as CSV for plotting; header always present."""
        lines = ["index,point,deviation"]
        for i, ce in enumerate(self.counterexamples):
            point = ce.get("point", [])
            if isinstance(point, (int, float)):
                point = [point]
            coords = ";".join(repr(float(v)) for v in point)
            dev = ce.get("deviation", "")
            lines.append(f"{i},{coords},{dev!r}" if isinstance(dev, str) else f"{i},{coords},{dev}")
        return "\n".join(lines) + "\n"


def merge_reports(theorem_id: str, parts: list[TheoremReport]) -> TheoremReport:
    """Combine sub-reports; the worst verdict wins (violated > inconclusive)."""
    order = {SUPPORTED: 0, INCONCLUSIVE: 1, VIOLATED: 2}
    verdict = SUPPORTED
    stats: dict[str, float] = {}
    counter: list[dict] = []
    tols: dict[str, float] = {}
    notes: list[str] = []
    for part in parts:
        if order[part.verdict] > order[verdict]:
            verdict = part.verdict
        prefix = part.theorem_id + "." if part.theorem_id != theorem_id else ""
        stats.update({prefix + k: v for k, v in part.statistics.items()})
        tols.update({prefix + k: v for k, v in part.tolerances.items()})
        counter.extend(part.counterexamples)
        notes.extend(f"{prefix}{n}" if prefix else n for n in part.notes)
    return TheoremReport(
        theorem_id=theorem_id,
        verdict=verdict,
        statistics=stats,
        counterexamples=counter,
        tolerances=tols,
        inputs_hash=stable_hash([p.to_dict() for p in parts]),
        notes=notes,
    )
