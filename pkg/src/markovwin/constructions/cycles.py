"""Deterministic cycle HMMs and the noisy permutation-label family."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hmm import Hmm


def _shift(n: int) -> np.ndarray:
    T = np.zeros((n, n))
    T[np.arange(n), (np.arange(n) + 1) % n] = 1.0
    return T


def build_cycle_hmm(bits) -> Hmm:
    """``n``-state cycle; state ``i`` emits ``bits[i]`` and moves to ``i + 1``."""
    bits = np.asarray([int(b) for b in bits], dtype=np.int64)
    n = len(bits)
    if n < 2:
        raise ValueError("cycle needs at least two states")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    E = np.zeros((n, 2))
    E[np.arange(n), bits] = 1.0
    return Hmm(_shift(n), E, np.full(n, 1.0 / n))


def cyclic_windows(bits, width: int) -> list[tuple]:
    b = [int(x) for x in bits]
    n = len(b)
    return [tuple(b[(i + j) % n] for j in range(width)) for i in range(n)]


def distinct_windows(bits, width: int) -> bool:
    """True iff every cyclic length-``width`` window occurs at one phase only."""
    w = cyclic_windows(bits, width)
    return len(set(w)) == len(w)


def random_cycle_bits(n: int, width: int, seed: int, max_tries: int = 10_000) -> np.ndarray:
    """Uniform bit string of length ``n`` whose cyclic ``width``-windows are distinct.

    Draws are rejected until the condition holds.

    Raises:
        RuntimeError: if ``max_tries`` draws all fail.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        bits = rng.integers(0, 2, size=n)
        if distinct_windows(bits, width):
            return bits
    raise RuntimeError(f"no length-{n} string with distinct {width}-windows in {max_tries} draws")


@dataclass(frozen=True)
class PermutationLabelSpec:
    """Cycle of ``n`` states, state ``i`` biased by ``eps`` toward ``labels[i]``."""

    labels: tuple
    eps: float

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        if len(labels) < 2:
            raise ValueError("need at least two states")
        if any(x not in (0, 1) for x in labels):
            raise ValueError("labels must be 0 or 1")
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 0.5)")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    @classmethod
    def random(cls, n: int, eps: float, seed: int) -> "PermutationLabelSpec":
        rng = np.random.default_rng(seed)
        return cls(tuple(rng.integers(0, 2, size=n)), eps)


def build_permutation_hmm(spec: PermutationLabelSpec) -> Hmm:
    n = spec.n
    lab = np.asarray(spec.labels)
    E = np.full((n, 2), 0.5 - spec.eps)
    E[np.arange(n), lab] = 0.5 + spec.eps
    return Hmm(_shift(n), E, np.full(n, 1.0 / n))
