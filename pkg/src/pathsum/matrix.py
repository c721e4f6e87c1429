"""Symbolic time-dependent matrices and the JSON matrix file format.

Indices are 0-based in Python and 1-based in files::

    {"n": 3, "interval": [0, 2],
     "entries": [{"row": 1, "col": 2, "expr": "t"},
                 {"row": 2, "col": 3, "expr": "1", "force_nonzero": true}]}

``force_nonzero`` overrides the numerical zero test used to build the
sparsity graph: ``true`` always keeps the edge, ``false`` always drops it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .errors import InputError, MatrixFileError
from .expr import Expr, evaluate_array, parse, to_source
from .star import TimeGrid


@dataclass(frozen=True)
class MatrixSpec:
    """``n x n`` matrix ``H(t)`` given entrywise as expression trees.

    Absent entries are identically zero.
    """

    n: int
    entries: Mapping[tuple[int, int], Expr]
    interval: tuple[float, float]
    force_nonzero: Mapping[tuple[int, int], bool] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        for (r, c) in list(self.entries) + list(self.force_nonzero):
            if not (0 <= r < self.n and 0 <= c < self.n):
                raise ValueError(f"entry index {(r, c)} outside a {self.n}x{self.n} matrix")
        t0, t1 = self.interval
        if not t0 < t1:
            raise ValueError(f"interval needs t_min < t_max, got {self.interval}")
        object.__setattr__(self, "entries", dict(self.entries))
        object.__setattr__(self, "force_nonzero", dict(self.force_nonzero))
        object.__setattr__(self, "interval", (float(t0), float(t1)))

    @classmethod
    def from_rows(cls, rows, interval, force_nonzero=None) -> "MatrixSpec":
        """Build from a square nested list of expression strings (or numbers).

        Entries equal to ``"0"``/``0`` are left out.
        """
        n = len(rows)
        entries = {}
        for r, row in enumerate(rows):
            if len(row) != n:
                raise ValueError("matrix must be square")
            for c, src in enumerate(row):
                src = str(src).strip()
                if src in ("0", "0.0"):
                    continue
                entries[(r, c)] = parse(src)
        return cls(n, entries, tuple(interval), force_nonzero or {})

    @classmethod
    def from_constant(cls, matrix, interval) -> "MatrixSpec":
        m = np.asarray(matrix, dtype=float)
        return cls.from_rows([[repr(float(x)) for x in row] for row in m], interval)

    def grid(self, n_nodes: int) -> TimeGrid:
        return TimeGrid(self.interval[0], self.interval[1], n_nodes)

    def entry(self, row: int, col: int) -> Optional[Expr]:
        return self.entries.get((row, col))

    def values(self, ts) -> np.ndarray:
        """``H`` evaluated at each time in ``ts``; shape ``(len(ts), n, n)``."""
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((ts.size, self.n, self.n))
        for (r, c), e in sorted(self.entries.items()):
            out[:, r, c] = evaluate_array(e, ts)
        return out

    def to_json(self) -> dict:
        items = []
        for (r, c), e in sorted(self.entries.items()):
            item = {"row": r + 1, "col": c + 1, "expr": to_source(e)}
            if (r, c) in self.force_nonzero:
                item["force_nonzero"] = self.force_nonzero[(r, c)]
            items.append(item)
        return {"n": self.n, "interval": list(self.interval), "entries": items}


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def spec_from_json(doc) -> MatrixSpec:
    """Validate a decoded matrix document; errors name the offending key."""
    if not isinstance(doc, dict):
        raise MatrixFileError("<root>", "expected a JSON object")
    for key in ("n", "interval", "entries"):
        if key not in doc:
            raise MatrixFileError(key, "missing required key")
    n = doc["n"]
    if not _is_int(n) or n < 1:
        raise MatrixFileError("n", f"expected a positive integer, got {n!r}")
    interval = doc["interval"]
    if (
        not isinstance(interval, list)
        or len(interval) != 2
        or not all(_is_real(x) for x in interval)
    ):
        raise MatrixFileError("interval", "expected [t_min, t_max]")
    if not interval[0] < interval[1]:
        raise MatrixFileError("interval", "t_min must be < t_max")
    items = doc["entries"]
    if not isinstance(items, list):
        raise MatrixFileError("entries", "expected a list")
    entries = {}
    force = {}
    for k, item in enumerate(items):
        where = f"entries[{k}]"
        if not isinstance(item, dict):
            raise MatrixFileError(where, "expected an object")
        for key in ("row", "col", "expr"):
            if key not in item:
                raise MatrixFileError(f"{where}.{key}", "missing required key")
        idx = []
        for key in ("row", "col"):
            v = item[key]
            if not _is_int(v) or not 1 <= v <= n:
                raise MatrixFileError(f"{where}.{key}", f"expected an integer in 1..{n}, got {v!r}")
            idx.append(v - 1)
        pos = tuple(idx)
        if pos in entries:
            raise MatrixFileError(where, f"duplicate entry ({pos[0] + 1}, {pos[1] + 1})")
        src = item["expr"]
        if not isinstance(src, str):
            raise MatrixFileError(f"{where}.expr", "expected a string")
        try:
            entries[pos] = parse(src)
        except InputError as exc:
            raise MatrixFileError(f"{where}.expr", str(exc)) from exc
        if "force_nonzero" in item:
            flag = item["force_nonzero"]
            if not isinstance(flag, bool):
                raise MatrixFileError(f"{where}.force_nonzero", "expected true or false")
            force[pos] = flag
    return MatrixSpec(n, entries, (float(interval[0]), float(interval[1])), force)


def load_spec(path) -> MatrixSpec:
    """Read a matrix file; malformed JSON is reported as :class:`MatrixFileError`."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MatrixFileError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFileError("<json>", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return spec_from_json(doc)
