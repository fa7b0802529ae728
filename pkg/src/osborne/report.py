"""Run records and their serialization.

Floats are written with 17 significant digits so a report read back with
:func:`json.loads` reproduces every value bit for bit.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

__all__ = [
    "StepRecord",
    "PhaseEvent",
    "RunReport",
    "dumps",
    "TRACE_COLUMNS",
    "write_trace",
]

TRACE_COLUMNS = ("t", "s", "index", "drop", "f", "grad_norm", "active_count")


@dataclass(frozen=True)
class StepRecord:
    """One balancing step.

    ``f`` and ``grad_norm`` are the objective being minimized (the
    contracted one for StrictBalance) and the L1 norm of its gradient,
    both after the step; ``f_before`` and ``grad_before`` are the same
    quantities just before it.
    """

    t: int
    s: int
    index: int
    drop: float
    f: float
    grad_norm: float
    active_count: int
    f_before: float = math.nan
    grad_before: float = math.nan
    productive: bool = True

    def row(self):
        return tuple(getattr(self, k) for k in TRACE_COLUMNS)


@dataclass(frozen=True)
class PhaseEvent:
    """Freeze, reactivation or phase boundary in a StrictBalance run."""

    kind: str
    t: int
    s: int
    indices: tuple = ()
    weights: tuple = ()
    tau: float = math.nan
    f: float = math.nan


@dataclass
class RunReport:
    """Outcome of balancing one strongly connected matrix."""

    variant: str
    termination: str
    x: np.ndarray
    epsilon: float
    steps: int = 0
    productive_steps: int = 0
    phases: int = 0
    reactivations: int = 0
    max_imbalance: float = 0.0
    f_initial: float = 0.0
    f_final: float = 0.0
    f_trace: list = field(default_factory=list)
    exit: str = ""
    taus: list = field(default_factory=list)
    phase_f: list = field(default_factory=list)

    @property
    def balanced(self):
        return self.max_imbalance <= self.epsilon

    def to_dict(self, trace=False):
        d = {}
        for fld in fields(self):
            if fld.name == "f_trace" and not trace:
                continue
            d[fld.name] = getattr(self, fld.name)
        return _plain(d)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return _plain(asdict(obj))
    return obj


def _fmt_float(v):
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    s = format(v, ".17g")
    if not any(ch in s for ch in ".eEn"):
        s += ".0"
    return s


def _emit(obj, out, indent, level):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(",")
            out.append(pad + json.dumps(key) + ": ")
            _emit(val, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        scalar = all(not isinstance(v, (dict, list)) for v in obj)
        out.append("[")
        for k, val in enumerate(obj):
            if k:
                out.append(", " if scalar else ",")
            if not scalar:
                out.append(pad)
            _emit(val, out, indent, level + 1)
        out.append("]" if scalar else end + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    else:
        out.append(json.dumps(obj))


def dumps(obj, indent=2):
    """JSON text with stable key order and 17-digit floats."""
    out = []
    _emit(_plain(obj), out, indent, 0)
    return "".join(out) + "\n"


def write_trace(records, fh=None):
    """Write step records as CSV; returns the text when ``fh`` is None."""
    buf = io.StringIO() if fh is None else fh
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in records:
        writer.writerow(
            _fmt_float(v) if isinstance(v, float) else v for v in rec.row()
        )
    if fh is None:
        return buf.getvalue()
