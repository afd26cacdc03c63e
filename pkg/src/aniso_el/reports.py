"""Structured pass/fail evidence produced by the hypothesis checkers."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


DEFAULT_TOL = 1e-9


def _plain(obj):
    """Convert numpy scalars/arrays nested in dicts and lists to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v) or np.isinf(v):
            return repr(v)
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Enum):
        return obj.value
    return obj


@dataclass
class CheckReport:
    name: str
    status: Status
    worst_margin: float
    witness: dict | None = None
    samples_used: int = 0
    details: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    @property
    def failed(self) -> bool:
        return self.status is Status.FAIL

    def to_dict(self) -> dict:
        return _plain({
            "name": self.name,
            "status": self.status.value,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "samples_used": self.samples_used,
            "details": self.details,
            "note": self.note,
        })

    def summary_line(self) -> str:
        return f"[{self.status.value.upper():>12}] {self.name:<10} worst_margin={self.worst_margin:.6g}  {self.note}"


def report_from_margins(name, margins, witness_fn, tol=DEFAULT_TOL, details=None, note=""):
    """Build a report from an array of margins (negative means violated).

    ``witness_fn(i)`` returns a dict describing sample ``i``; it is called for
    the worst sample only.
    """
    margins = np.asarray(margins, dtype=float)
    if margins.size == 0:
        return CheckReport(name, Status.INCONCLUSIVE, float("nan"), None, 0,
                           dict(details or {}), note or "no samples in the checked region")
    bad = ~np.isfinite(margins)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return CheckReport(name, Status.FAIL, float("-inf"), witness_fn(i), int(margins.size),
                           dict(details or {}), note or "non-finite margin")
    i = int(np.argmin(margins))
    worst = float(margins[i])
    status = Status.FAIL if worst < -tol else Status.PASS
    return CheckReport(name, status, worst, witness_fn(i), int(margins.size), dict(details or {}), note)
