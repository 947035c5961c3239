"""Serialized run outputs.

A CSV report is an RFC-4180 table preceded by two comment lines carrying the
resolved run configuration and the scalar result as JSON::

    # config: {"subcommand": "exact-pn", ...}
    # result: {"p_n": 0.0224, ...}
    z,n,p_n
    0.5,16,0.02239990234375

A JSON report holds the same four parts in one object. Floats are written
with ``repr`` so parsing and re-serializing reproduces the bytes exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

CONFIG_PREFIX = "# config: "
RESULT_PREFIX = "# result: "


def plain(obj):
    """Convert numpy scalars and arrays, tuples and dataclass dicts to JSON types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(plain(value))


def _dumps(obj) -> str:
    return json.dumps(plain(obj), ensure_ascii=False)


@dataclass
class Report:
    config: dict
    result: dict
    columns: list[str] = field(default_factory=list)
    rows: list[list] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CONFIG_PREFIX + _dumps(self.config) + "\n")
        buf.write(RESULT_PREFIX + _dumps(self.result) + "\n")
        if self.columns:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([cell(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        body = {"config": self.config, "result": self.result, "columns": self.columns, "rows": self.rows}
        return _dumps(body) + "\n"

    def dumps(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()

    @classmethod
    def from_csv(cls, text: str) -> "Report":
        lines = text.splitlines(keepends=True)
        if len(lines) < 2 or not lines[0].startswith(CONFIG_PREFIX) or not lines[1].startswith(RESULT_PREFIX):
            raise ValueError("missing config/result header lines")
        config = json.loads(lines[0][len(CONFIG_PREFIX) :])
        result = json.loads(lines[1][len(RESULT_PREFIX) :])
        table = list(csv.reader(io.StringIO("".join(lines[2:]))))
        columns = table[0] if table else []
        return cls(config, result, columns, table[1:])

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(d["config"], d["result"], d["columns"], d["rows"])

    @classmethod
    def loads(cls, text: str) -> "Report":
        return cls.from_json(text) if text.lstrip().startswith("{") else cls.from_csv(text)

    def column(self, name: str) -> np.ndarray:
        """One column as floats (CSV cells are parsed, JSON values passed through)."""
        j = self.columns.index(name)
        return np.array([float(r[j]) for r in self.rows])


def sig6(x) -> str:
    """Six significant digits, the precision of every printed summary."""
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return f"{x:.6g}"
