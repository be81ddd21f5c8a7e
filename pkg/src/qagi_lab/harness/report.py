"""Report objects, 17-significant-digit serialization and schema validation."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import jsonschema
import numpy as np

from .. import __version__

SCHEMA_VERSION = "1.0"
FORMATS = ("json", "csv")


@dataclass(eq=False)
class Report:
    scenario_id: str
    kind: str
    scenario_digest: str
    seed: int
    records: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    tool_version: str = __version__
    schema_version: str = SCHEMA_VERSION

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "scenario_id": self.scenario_id,
            "kind": self.kind,
            "scenario_digest": self.scenario_digest,
            "seed": int(self.seed),
            "records": self.records,
            "summary": self.summary,
            "wall_clock_s": float(self.wall_clock_s),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> Report:
        return cls(obj["scenario_id"], obj["kind"], obj["scenario_digest"], int(obj["seed"]),
                   list(obj["records"]), dict(obj["summary"]), float(obj["wall_clock_s"]),
                   obj["tool_version"], obj["schema_version"])

    def records_bytes(self) -> bytes:
        """Serialized records, the part that must be identical across reruns."""
        return dumps(self.records).encode()

    def __eq__(self, other):
        if not isinstance(other, Report):
            return NotImplemented
        return self.to_json() == other.to_json()


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite number {x!r} in report")
    s = format(x, ".17g")
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _encode(obj, indent: int | None, level: int) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{" + ",".join(items) + end + "}"
    if not obj:
        return "[]"
    items = [pad + _encode(v, indent, level + 1) for v in obj]
    return "[" + ",".join(items) + end + "]"


def dumps(obj, indent: int | None = None) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _encode(_plain(obj), indent, 0)


def canonical_digest(obj) -> str:
    """sha256 of the canonical (sorted-key, compact) JSON form of ``obj``."""
    text = json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# --------------------------------------------------------------------------
# schema
# --------------------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("qagi_lab").joinpath("data/report.schema.json").read_text()
    return json.loads(text)


def validate_report(obj: Mapping) -> None:
    """Raise ``jsonschema.ValidationError`` if ``obj`` is not a valid report document."""
    jsonschema.validate(obj, load_schema())


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------

def flatten(obj: Mapping, prefix: str = "") -> dict[str, Any]:
    """Nested mappings become dotted columns; lists are kept as JSON text."""
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = dumps(v)
        elif isinstance(v, float):
            out[key] = format_float(v)
        else:
            out[key] = "" if v is None else v
    return out


def write_csv(records: Iterable[Mapping], path: Path) -> None:
    rows = [flatten(_plain(r)) for r in records]
    columns: list[str] = []
    for r in rows:
        columns += [c for c in r if c not in columns]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def emit_report(report: Report, out_dir: str | Path, formats: Iterable[str] = ("json",)) -> list[Path]:
    """Write ``<out>/<scenario-id>/report.json`` and, for ``csv``, ``trace.csv``.

    The JSON report is always written since it is the full-fidelity form. The
    document is validated against the schema before anything touches disk.
    """
    formats = tuple(formats)
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ValueError(f"unknown report format(s) {bad}; choose from {list(FORMATS)}")
    doc = report.to_json()
    validate_report(_plain(doc))
    target = Path(out_dir) / report.scenario_id
    try:
        target.mkdir(parents=True, exist_ok=True)
        written = [target / "report.json"]
        written[0].write_text(dumps(doc, indent=2) + "\n")
        if "csv" in formats:
            written.append(target / "trace.csv")
            write_csv(report.records, written[-1])
    except OSError as exc:
        raise OSError(f"cannot write report to {target}: {exc}") from exc
    return written


def load_report(path: str | Path) -> Report:
    obj = json.loads(Path(path).read_text())
    validate_report(obj)
    return Report.from_json(obj)
