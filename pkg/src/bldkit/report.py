"""JSON envelopes and CSV tables for bldkit results.

Every result dataclass is encoded as a JSON object with a ``type`` tag next
to its fields, so ``decode(encode(r)) == r`` for all registered types.
Non-finite floats are written as ``Infinity``/``NaN`` (Python's json
default), which keeps e.g. an unbounded ``best_M_analytic`` intact.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .checks import AnalyticReport, CurveRecord, GeometricReport, SampleTable
from .degree import DegreeResult, SenseClassification
from .mapping import Region
from .witness import WitnessCertificate

SCHEMA = "bldkit/1"

_TYPES = {cls.__name__: cls for cls in (AnalyticReport, GeometricReport, CurveRecord, DegreeResult,
                                         SenseClassification, WitnessCertificate, Region)}


def encode(obj: Any):
    """Plain JSON-ready structure for results, tuples, arrays and numpy scalars."""
    if dataclasses.is_dataclass(obj) and type(obj).__name__ in _TYPES:
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = encode(getattr(obj, f.name))
        return out
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return encode(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def decode(obj: Any, _tuples=False):
    """Inverse of :func:`encode`; lists inside result types come back as tuples."""
    if isinstance(obj, dict):
        kind = obj.get("type")
        if kind in _TYPES:
            cls = _TYPES[kind]
            kwargs = {f.name: decode(obj[f.name], True) for f in dataclasses.fields(cls) if f.name in obj}
            return cls(**kwargs)
        return {k: decode(v, _tuples) for k, v in obj.items()}
    if isinstance(obj, list):
        items = [decode(v, _tuples) for v in obj]
        return tuple(items) if _tuples else items
    return obj


def dumps(obj, indent=2):
    """Deterministic JSON text (sorted keys)."""
    return json.dumps(encode(obj), sort_keys=True, indent=indent)


@dataclass
class ReportEnvelope:
    command: str
    config: dict
    payload: Any
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    schema_version: str = SCHEMA

    def to_dict(self):
        return {"schema_version": self.schema_version, "command": self.command, "config": encode(self.config),
                "timestamp": self.timestamp, "payload": encode(self.payload)}

    @classmethod
    def from_dict(cls, data):
        if data.get("schema_version") != SCHEMA:
            raise ValueError(f"unsupported schema {data.get('schema_version')!r}")
        return cls(command=data["command"], config=decode(data["config"]), payload=decode(data["payload"]),
                   timestamp=data["timestamp"], schema_version=data["schema_version"])

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def payload_json(self):
        """Payload alone; this is what determinism checks compare."""
        return dumps(self.payload)


def write_samples_csv(table: SampleTable, path):
    n = table.points.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(n)] + ["sigma_min", "sigma_max", "det", "status"])
        for p, a, b, d, s in zip(table.points, table.sigma_min, table.sigma_max, table.det, table.status):
            w.writerow([repr(float(c)) for c in p] + [repr(float(a)), repr(float(b)), repr(float(d)), int(s)])


def write_curves_csv(report: GeometricReport, path):
    names = [f.name for f in dataclasses.fields(CurveRecord)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in report.records:
            w.writerow([getattr(r, k) for k in names])
