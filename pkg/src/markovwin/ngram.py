"""Streaming empirical ell-th order Markov model."""

from __future__ import annotations

import json
from typing import Iterable, Sequence

import numpy as np


class SymbolError(ValueError):
    pass


class ContextTable:
    """Counts of the symbol that followed each length-``ell`` context.

    Storage is a dict keyed by the context tuple, so memory tracks the number
    of distinct contexts seen rather than ``d**ell``. The last ``ell`` symbols
    are carried between :meth:`stream_update` calls, so streaming a sequence
    in chunks gives the same table as streaming it whole.
    """

    def __init__(self, ell: int, d: int):
        if ell < 0 or d < 2:
            raise ValueError(f"need ell >= 0 and d >= 2, got ell={ell}, d={d}")
        self.ell = ell
        self.d = d
        self.counts: dict[tuple, np.ndarray] = {}
        self.total_updates = 0
        self.tail: tuple = ()

    def stream_update(self, x: Iterable[int]) -> "ContextTable":
        """Count every (context, next symbol) pair completed by ``x``."""
        xs = [int(s) for s in x]
        for p, s in enumerate(xs):
            if not 0 <= s < self.d:
                raise SymbolError(f"symbol {s} at offset {p} outside alphabet of size {self.d}")
        ell = self.ell
        buf = list(self.tail) + xs
        off = len(self.tail)
        for p in range(max(ell, off), len(buf)):
            ctx = tuple(buf[p - ell:p])
            row = self.counts.get(ctx)
            if row is None:
                row = self.counts[ctx] = np.zeros(self.d, dtype=np.int64)
            row[buf[p]] += 1
            self.total_updates += 1
        self.tail = tuple(buf[max(0, len(buf) - ell):]) if ell else ()
        return self

    def count(self, context: Sequence[int]) -> np.ndarray:
        row = self.counts.get(tuple(int(c) for c in context))
        return np.zeros(self.d, dtype=np.int64) if row is None else row.copy()

    def predict(self, context: Sequence[int], alpha: float = 0.0) -> np.ndarray:
        """Next-symbol distribution after ``context``.

        ``alpha == 0``: normalized counts, or uniform for an unseen context.
        ``alpha > 0``: additive smoothing ``(c_i + alpha) / (sum + d * alpha)``.
        """
        if len(context) != self.ell:
            raise ValueError(f"context has length {len(context)}, table order is {self.ell}")
        c = self.counts.get(tuple(int(s) for s in context))
        if alpha > 0:
            c = np.zeros(self.d) if c is None else c.astype(float)
            return (c + alpha) / (c.sum() + self.d * alpha)
        if c is None or c.sum() == 0:
            return np.full(self.d, 1.0 / self.d)
        return c / c.sum()

    def snapshot(self) -> "ContextTable":
        other = ContextTable(self.ell, self.d)
        other.counts = {k: v.copy() for k, v in self.counts.items()}
        other.total_updates = self.total_updates
        other.tail = self.tail
        return other

    def to_dict(self) -> dict:
        return {
            "format": "markovwin.ngram/1",
            "ell": self.ell,
            "d": self.d,
            "total_updates": self.total_updates,
            "tail": list(self.tail),
            "counts": {
                ",".join(map(str, k)): v.tolist() for k, v in sorted(self.counts.items())
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ContextTable":
        t = cls(int(doc["ell"]), int(doc["d"]))
        for key, row in doc["counts"].items():
            ctx = tuple(int(s) for s in key.split(",")) if key else ()
            if len(ctx) != t.ell or len(row) != t.d:
                raise ValueError(f"malformed table entry {key!r}")
            arr = np.asarray(row, dtype=np.int64)
            if (arr < 0).any():
                raise ValueError(f"negative count for context {key!r}")
            t.counts[ctx] = arr
        t.total_updates = int(doc["total_updates"])
        if t.total_updates != sum(int(v.sum()) for v in t.counts.values()):
            raise ValueError("total_updates disagrees with the stored counts")
        t.tail = tuple(int(s) for s in doc.get("tail", []))
        return t

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ContextTable":
        return cls.from_dict(json.loads(text))
