"""Planted CSP sequential model, clause distributions and the label-shift reduction.

Letters are ``0..2n-1``. Letter ``2j`` stands for the literal ``x_j`` and
letter ``2j+1`` for its negation. The planted set ``S`` holds the letters
whose literal is true under ``sigma``. The alphabet is cut into ``k``
consecutive groups ``X_i`` of ``w = 2n/k`` letters; ``w`` must be even so
that every group holds whole variables and ``S_i`` is exactly half of ``X_i``.

A block is ``k`` letters followed by ``m`` label bits. In the flat symbol
stream of :func:`compile_csp_to_hmm` a label bit ``b`` is symbol ``2n + b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..codes import BinaryMatrix, check_t_wise_uniform, gf2_rank, nullspace_basis, span
from ..enumeration import DEFAULT_BUDGET, check_budget
from ..hmm import Hmm


@dataclass(frozen=True)
class CspModelSpec:
    """Parameters of the planted sequential CSP model.

    ``t`` is the certified uniformity order of ``nullspace(A)``; it is
    re-checked on construction.
    """

    n: int
    k: int
    A: BinaryMatrix
    sigma: tuple
    eta: float = 0.0
    t: int = 0

    def __post_init__(self):
        A = self.A if isinstance(self.A, BinaryMatrix) else BinaryMatrix(self.A)
        object.__setattr__(self, "A", A)
        sigma = tuple(int(s) for s in self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if len(sigma) != self.n or any(s not in (0, 1) for s in sigma):
            raise ValueError(f"sigma must be a length-{self.n} bit string")
        if A.cols != self.k:
            raise ValueError(f"A must have {self.k} columns, got {A.cols}")
        if self.k < 1 or self.k > self.n:
            raise ValueError("need 1 <= k <= n")
        if (2 * self.n) % self.k or ((2 * self.n) // self.k) % 2:
            raise ValueError(f"2n/k must be an even integer, got 2n={2 * self.n}, k={self.k}")
        if gf2_rank(A) != A.rows:
            raise ValueError("A must have full row rank")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.t and not check_t_wise_uniform(A, self.t):
            raise ValueError(f"nullspace of A is not {self.t}-wise uniform")

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def group_size(self) -> int:
        return 2 * self.n // self.k

    @property
    def alphabet_size(self) -> int:
        return 2 * self.n + 2

    @property
    def state_count(self) -> int:
        return 2**self.m * (2 * self.k + self.m) + self.m


def letter_to_literal(letter: int) -> tuple[int, int]:
    """``(variable, negated)`` for a letter."""
    return letter // 2, letter % 2


def literal_to_letter(var: int, negated: int) -> int:
    return 2 * var + int(negated)


def literal_value(sigma, var: int, negated: int) -> int:
    return int(sigma[var]) ^ int(negated)


@dataclass(frozen=True)
class Clause:
    """Ordered literals ``(variable, negated)`` plus an ``m``-bit label."""

    literals: tuple
    label: tuple

    def __post_init__(self):
        object.__setattr__(self, "literals", tuple((int(v), int(g)) for v, g in self.literals))
        object.__setattr__(self, "label", tuple(int(b) for b in self.label))

    @property
    def variables(self) -> tuple:
        return tuple(v for v, _ in self.literals)

    def values(self, assignment) -> np.ndarray:
        """``sigma(C)``: the truth value of each literal under ``assignment``."""
        return np.array([literal_value(assignment, v, g) for v, g in self.literals], dtype=np.int64)


def clause_satisfied(clause: Clause, assignment, A) -> bool:
    """True iff ``A sigma(C) = y (mod 2)``."""
    A = A if isinstance(A, BinaryMatrix) else BinaryMatrix(A)
    return bool(np.array_equal(A.matvec(clause.values(assignment)), np.asarray(clause.label)))


class CspSampler:
    """Block sampler for the sequential model; see the module docstring."""

    def __init__(self, spec: CspModelSpec):
        self.spec = spec
        w = spec.group_size
        self.groups = [np.arange(i * w, (i + 1) * w) for i in range(spec.k)]
        true_letters = {literal_to_letter(j, 1 - s) for j, s in enumerate(spec.sigma)}
        self.true_sets = [np.array([a for a in g if a in true_letters]) for g in self.groups]
        self.false_sets = [np.array([a for a in g if a not in true_letters]) for g in self.groups]

    def letter_value(self, letter: int) -> int:
        """1 iff the letter's literal is true under ``sigma``."""
        return literal_value(self.spec.sigma, *letter_to_literal(letter))

    def sample_blocks(self, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """``count`` blocks as ``(letters, labels)`` arrays of widths ``k`` and ``m``."""
        spec = self.spec
        rng = np.random.default_rng(seed)
        v = rng.integers(0, 2, size=(count, spec.k))
        half = spec.group_size // 2
        pick = rng.integers(0, half, size=(count, spec.k))
        letters = np.empty((count, spec.k), dtype=np.int64)
        for i in range(spec.k):
            letters[:, i] = np.where(v[:, i] == 1, self.true_sets[i][pick[:, i]], self.false_sets[i][pick[:, i]])
        y = (v @ spec.A.bits.T.astype(np.int64)) % 2
        replace = rng.random(count) < spec.eta
        fresh = rng.integers(0, 2, size=(count, spec.m))
        labels = np.where(replace[:, None], fresh, y)
        return letters, labels

    def sample_sequence(self, blocks: int, seed: int) -> np.ndarray:
        letters, labels = self.sample_blocks(blocks, seed)
        return np.concatenate([letters, labels + 2 * self.spec.n], axis=1).ravel()

    @staticmethod
    def to_clause(letters, label) -> Clause:
        return Clause([letter_to_literal(int(a)) for a in letters], label)

    def block_probability(self, letters, label) -> float:
        """Exact probability of one block (zero if a letter is out of its group)."""
        spec = self.spec
        w = spec.group_size
        for i, a in enumerate(letters):
            if not i * w <= a < (i + 1) * w:
                return 0.0
        v = np.array([self.letter_value(int(a)) for a in letters])
        clean = np.array_equal(spec.A.matvec(v), np.asarray(label))
        return w ** (-spec.k) * ((1 - spec.eta) * clean + spec.eta * 2.0 ** (-spec.m))


def build_csp_model(spec: CspModelSpec) -> CspSampler:
    return CspSampler(spec)


def compile_csp_to_hmm(spec: CspModelSpec, budget: int | None = DEFAULT_BUDGET) -> Hmm:
    """HMM over ``2n + 2`` symbols with ``2**m (2k + m) + m`` states.

    The layout mirrors the parity compilation: input state ``(i, y, b)``
    emits a uniform letter of ``S_i`` (``b = 1``) or ``X_i \\ S_i`` (``b = 0``),
    output state ``(j, y)`` emits symbol ``2n + y_j``, and noise state ``j``
    emits a uniform label symbol.
    """
    k, m, n = spec.k, spec.m, spec.n
    Y = 2**m
    N = spec.state_count
    check_budget(f"compiling a {N}-state HMM", N * N, budget)
    sampler = CspSampler(spec)
    cols = [int(sum(int(spec.A.bits[j, i]) << j for j in range(m))) for i in range(k)]
    d = spec.alphabet_size
    half = spec.group_size // 2

    def inp(i, y, b):
        return i * 2 * Y + 2 * y + b

    def out(j, y):
        return 2 * k * Y + j * Y + y

    def noise(j):
        return 2 * k * Y + m * Y + j

    restart = np.zeros(N)
    for b in (0, 1):
        restart[inp(0, b * cols[0], b)] += 0.5
    T = np.zeros((N, N))
    E = np.zeros((N, d))
    for i in range(k):
        for y in range(Y):
            for b in (0, 1):
                s = inp(i, y, b)
                E[s, (sampler.true_sets if b else sampler.false_sets)[i]] = 1.0 / half
                if i + 1 < k:
                    for b2 in (0, 1):
                        T[s, inp(i + 1, y ^ (b2 * cols[i + 1]), b2)] += 0.5
                else:
                    T[s, out(0, y)] += 1 - spec.eta
                    T[s, noise(0)] += spec.eta
    for j in range(m):
        for y in range(Y):
            s = out(j, y)
            E[s, 2 * n + ((y >> j) & 1)] = 1.0
            T[s] = restart if j + 1 == m else np.eye(N)[out(j + 1, y)]
        s = noise(j)
        E[s, 2 * n:] = 0.5
        T[s] = restart if j + 1 == m else np.eye(N)[noise(j + 1)]
    return Hmm(T, E, restart)


def _coset_solver(A: BinaryMatrix):
    """Particular solutions of ``A v = y`` for every ``y`` plus the nullspace span."""
    k = A.cols
    m = A.rows
    words = span(nullspace_basis(A), k)
    particular = {}
    for idx in range(2**k):
        v = (idx >> np.arange(k)) & 1
        y = tuple(int(b) for b in A.matvec(v))
        particular.setdefault(y, v)
        if len(particular) == 2**m:
            break
    return particular, words


def _distinct_variables(rng, n, k):
    return rng.permutation(n)[:k]


def sample_planted_clause(spec: CspModelSpec, seed: int) -> Clause:
    """One clause from ``(1 - eta) Q_sigma + eta U_k``.

    The planted part draws a uniform label ``y``, then a uniform ``v`` with
    ``A v = y`` (a particular solution plus a uniform nullspace element),
    then ``k`` distinct variables in uniform order, and negates literal ``i``
    exactly when needed for its value to be ``v_i``.
    """
    rng = np.random.default_rng(seed)
    k, m, n = spec.k, spec.m, spec.n
    if rng.random() < spec.eta:
        return _uniform_clause(rng, n, k, m)
    particular, words = _coset_solver(spec.A)
    y = tuple(int(b) for b in rng.integers(0, 2, size=m))
    v = particular[y] ^ words[rng.integers(0, len(words))]
    variables = _distinct_variables(rng, n, k)
    neg = [spec.sigma[x] ^ int(vi) for x, vi in zip(variables, v)]
    return Clause(list(zip(variables, neg)), y)


def _uniform_clause(rng, n, k, m) -> Clause:
    variables = _distinct_variables(rng, n, k)
    neg = rng.integers(0, 2, size=k)
    y = rng.integers(0, 2, size=m)
    return Clause(list(zip(variables, neg)), y)


def sample_uniform_clause(n: int, k: int, m: int, seed: int) -> Clause:
    """``k`` distinct variables, independent negations and a uniform label."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    return _uniform_clause(np.random.default_rng(seed), n, k, m)


def uniform_clause_probability(n: int, k: int, m: int) -> float:
    return 1.0 / (math.perm(n, k) * 2**k * 2**m)


def planted_clause_distribution(spec: CspModelSpec, clause: Clause) -> float:
    """Exact probability of ``clause`` under ``(1 - eta) Q_sigma + eta U_k``."""
    if len(set(clause.variables)) != spec.k or len(clause.literals) != spec.k:
        return 0.0
    consistent = clause_satisfied(clause, spec.sigma, spec.A)
    weight = (1 - spec.eta) * consistent + spec.eta * 2.0 ** (-spec.m)
    return weight / (math.perm(spec.n, spec.k) * 2**spec.k)


def solution_table(A, seed: int) -> dict:
    """A uniformly chosen solution ``v`` of ``A v = y`` for every label ``y``."""
    A = A if isinstance(A, BinaryMatrix) else BinaryMatrix(A)
    rng = np.random.default_rng(seed)
    particular, words = _coset_solver(A)
    return {y: particular[y] ^ words[rng.integers(0, len(words))] for y in sorted(particular)}


def transform_clause_c0_to_c(clause: Clause, y_target, v_of_y: dict) -> Clause:
    """Map a label-0 clause to one with label ``y_target``.

    Literal ``i`` is negated iff ``v_i = 1`` for the stored solution
    ``v = v_of_y[y_target]``. Since ``tau(C) = tau(C0) xor v``, the result
    satisfies ``A tau(C) = y_target`` exactly when ``A tau(C0) = 0``.

    Raises:
        KeyError: if the table has no entry for ``y_target``.
    """
    key = tuple(int(b) for b in y_target)
    if key not in v_of_y:
        raise KeyError(f"no stored solution for label {key}")
    v = v_of_y[key]
    lits = [(var, neg ^ int(vi)) for (var, neg), vi in zip(clause.literals, v)]
    return Clause(lits, key)
