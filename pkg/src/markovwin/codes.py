"""GF(2) linear algebra and random binary linear codes.

Shape convention: a parity matrix ``A`` is ``m x k`` and acts on length-``k``
vectors. A code ``B`` of length ``k`` and rank ``m`` is stored by its ``k x m``
generator ``G`` (``B = {G u}``), and the matrix handed to the CSP
construction is ``A = G^T``. Then ``nullspace(A)`` is the dual of ``B``, and a
uniform element of it is ``(dist(B) - 1)``-wise uniform.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .enumeration import DEFAULT_BUDGET, check_budget


class BinaryMatrix:
    """Dense 0/1 matrix stored row-major as ``uint8``.

    Text format: one row per line, each row a string of ``0``/``1`` characters.
    """

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.array(bits, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"need a nonempty 2-d array, got shape {arr.shape}")
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("entries must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        self.bits = arr

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @property
    def T(self) -> "BinaryMatrix":
        return BinaryMatrix(self.bits.T)

    def __array__(self, dtype=None, copy=None):
        return self.bits if dtype is None else self.bits.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, BinaryMatrix) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))

    def __repr__(self):
        return f"BinaryMatrix({self.rows}x{self.cols})"

    def matvec(self, v) -> np.ndarray:
        return (self.bits.astype(np.int64) @ np.asarray(v, dtype=np.int64)) % 2

    def to_text(self) -> str:
        return "\n".join("".join(str(int(b)) for b in row) for row in self.bits) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BinaryMatrix":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or len({len(ln) for ln in lines}) != 1:
            raise ValueError("rows must be nonempty and of equal length")
        return cls([[int(c) for c in ln] for ln in lines])


def _bits(M) -> np.ndarray:
    arr = np.asarray(M.bits if isinstance(M, BinaryMatrix) else M, dtype=np.uint8)
    return arr[None, :] if arr.ndim == 1 else arr


def row_reduce(M) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and its pivot columns."""
    R = _bits(M).copy() % 2
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(R[r:, c]) + r
        if hits.size == 0:
            continue
        p = hits[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        others = np.flatnonzero(R[:, c])
        others = others[others != r]
        R[others] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def gf2_rank(M) -> int:
    return len(row_reduce(M)[1])


def nullspace_basis(A) -> list[np.ndarray]:
    """Basis of ``{v : A v = 0 mod 2}``, one vector per free column."""
    R, pivots = row_reduce(A)
    cols = R.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.uint8)
        v[f] = 1
        for i, p in enumerate(pivots):
            v[p] = R[i, f]
        basis.append(v)
    return basis


def span(vectors, length: int, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
    """All ``2**len(vectors)`` GF(2) combinations as rows (first row is zero)."""
    r = len(vectors)
    check_budget(f"enumerating a span of 2^{r} vectors", 2**r, budget)
    if r == 0:
        return np.zeros((1, length), dtype=np.uint8)
    B = np.array(vectors, dtype=np.int64)
    coeffs = (np.arange(2**r)[:, None] >> np.arange(r)[None, :]) & 1
    return ((coeffs @ B) % 2).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary linear code ``{G u : u in {0,1}^m}`` of length ``k``."""

    generator: BinaryMatrix

    def __post_init__(self):
        if not isinstance(self.generator, BinaryMatrix):
            object.__setattr__(self, "generator", BinaryMatrix(self.generator))
        if gf2_rank(self.generator) != self.generator.cols:
            raise ValueError("generator must have full column rank")

    @property
    def length(self) -> int:
        return self.generator.rows

    @property
    def rank(self) -> int:
        return self.generator.cols

    def codewords(self, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
        return span(list(self.generator.bits.T), self.length, budget)

    @cached_property
    def min_distance(self) -> int:
        return min_distance(self)

    def parity_matrix(self) -> BinaryMatrix:
        """``A = G^T``, whose nullspace is the dual code."""
        return self.generator.T

    def dual(self) -> "LinearCode":
        basis = nullspace_basis(self.parity_matrix())
        if not basis:
            raise ValueError("dual of the full space is the zero code")
        return LinearCode(BinaryMatrix(np.array(basis).T))


def min_distance(code: LinearCode, budget: int | None = DEFAULT_BUDGET) -> int:
    """Minimum Hamming weight of a nonzero codeword, by exhaustive search."""
    words = code.codewords(budget)
    return int(words[1:].sum(axis=1).min())


def check_t_wise_uniform(A, t: int, budget: int | None = DEFAULT_BUDGET) -> bool:
    """True iff a uniform element of ``nullspace(A)`` is ``t``-wise uniform.

    Counts, for every ``t``-subset of coordinates, how often each of the
    ``2**t`` patterns occurs across the whole nullspace.
    """
    bits = _bits(A)
    k = bits.shape[1]
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return True
    if t > k:
        return False
    basis = nullspace_basis(bits)
    check_budget(
        f"checking {math.comb(k, t)} coordinate sets against 2^{len(basis)} null vectors",
        max(2 ** len(basis), math.comb(k, t) * 2**t),
        budget,
    )
    words = span(basis, k, budget).astype(np.int64)
    size = words.shape[0]
    if size % (2**t):
        return False
    want = size // 2**t
    weights = 1 << np.arange(t)
    for subset in itertools.combinations(range(k), t):
        patterns = words[:, subset] @ weights
        if np.any(np.bincount(patterns, minlength=2**t) != want):
            return False
    return True


class CodeSearchFailed(RuntimeError):
    def __init__(self, attempts: int, reason: str = "no code found"):
        super().__init__(f"{reason} after {attempts} attempts")
        self.attempts = attempts


@dataclass(frozen=True)
class CodeSearchResult:
    A: BinaryMatrix
    code: LinearCode
    attempts: int


def search_code(k: int, m: int, target_distance: int, budget: int = 1000, seed: int = 0) -> CodeSearchResult:
    """Random search for a rank-``m`` length-``k`` code of distance ``>= target``.

    Each attempt draws a uniform ``k x m`` generator, keeps it if it has full
    column rank and exhaustive distance at least ``target_distance``, and
    then confirms the nullspace of ``A = G^T`` is
    ``(target_distance - 1)``-wise uniform before returning.

    Raises:
        CodeSearchFailed: when ``budget`` attempts are used up, or at once if
            ``target_distance`` exceeds ``k``.
    """
    if not 1 <= m <= k:
        raise ValueError(f"need 1 <= m <= k, got m={m}, k={k}")
    if target_distance > k:
        raise CodeSearchFailed(0, f"distance {target_distance} exceeds length {k}")
    rng = np.random.default_rng(seed)
    for attempt in range(1, budget + 1):
        G = rng.integers(0, 2, size=(k, m))
        if gf2_rank(G) < m:
            continue
        code = LinearCode(BinaryMatrix(G))
        if code.min_distance < target_distance:
            continue
        A = code.parity_matrix()
        if not check_t_wise_uniform(A, target_distance - 1):
            raise AssertionError("code distance did not certify nullspace uniformity")
        return CodeSearchResult(A, code, attempt)
    raise CodeSearchFailed(budget)


def find_code_with_dual_distance(
    k: int, m: int, target_distance: int, budget: int = 1000, seed: int = 0
) -> BinaryMatrix:
    """``m x k`` matrix whose nullspace is ``(target_distance - 1)``-wise uniform."""
    return search_code(k, m, target_distance, budget, seed).A
