"""Exhaustive enumeration of observation blocks of an HMM.

Sequences of length ``L`` are indexed lexicographically,
``index = sum(x[t] * d**(L - 1 - t))``, so the last ``k`` symbols of sequence
``j`` form sequence ``j % d**k`` of length ``k``.

The core array is the unnormalized forward table ``alpha`` of shape
``(d**L, n)`` with ``alpha[j, s] = P(x_0..x_{L-1} = seq_j, state emitting x_L = s)``.
Its row sums are the block probabilities.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BudgetExceeded
from .hmm import Hmm

DEFAULT_BUDGET = 1 << 22


def check_budget(what: str, cells: int, budget: int | None) -> None:
    if budget is not None and cells > budget:
        raise BudgetExceeded(what, cells, budget)


def all_sequences(d: int, length: int) -> np.ndarray:
    """All ``d**length`` sequences as rows, in index order."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    idx = np.arange(d**length, dtype=np.int64)
    powers = d ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % d


def extend(h: Hmm, alpha: np.ndarray) -> np.ndarray:
    """Append every symbol to every row: ``(S, n) -> (S*d, n)``."""
    S, n = alpha.shape
    weighted = alpha[:, None, :] * h.emission.T[None, :, :]
    return weighted.reshape(S * h.d, n) @ h.transition


def forward_table(h: Hmm, prior, length: int, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
    check_budget(f"enumerating {h.d}^{length} blocks", h.d**length, budget)
    alpha = np.asarray(prior, dtype=float)[None, :]
    for _ in range(length):
        alpha = extend(h, alpha)
    return alpha


def block_probabilities(h: Hmm, prior, length: int, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
    return forward_table(h, prior, length, budget).sum(axis=1)


def entropy_of_masses(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def block_entropies(
    h: Hmm,
    prior,
    max_len: int,
    budget: int | None = None,
    max_rows: int = 1 << 18,
) -> np.ndarray:
    """Entropies ``H(x_0..x_{k-1})`` for ``k = 0..max_len`` in nats.

    Streams the enumeration depth-first in chunks of at most ``max_rows``
    rows, so memory stays bounded while time grows as ``d**max_len``.
    Zero-probability prefixes are pruned (they contribute nothing).
    """
    check_budget(f"block entropies up to length {max_len}", h.d**max_len, budget)
    H = np.zeros(max_len + 1)
    d = h.d

    def expand(alpha, level):
        if level == max_len:
            return
        if alpha.shape[0] * d > max_rows and alpha.shape[0] > 1:
            pieces = math.ceil(alpha.shape[0] * d / max_rows)
            for chunk in np.array_split(alpha, pieces):
                expand(chunk, level)
            return
        nxt = extend(h, alpha)
        mass = nxt.sum(axis=1)
        keep = mass > 0
        H[level + 1] += entropy_of_masses(mass[keep])
        expand(nxt[keep], level + 1)

    root = np.asarray(prior, dtype=float)[None, :]
    expand(root, 0)
    return H
