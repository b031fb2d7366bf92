"""Sequential parity-with-noise model and its compilation to an HMM.

One block is ``n`` uniform input bits ``v`` followed by ``m`` label bits
``y = A v + noise (mod 2)``; blocks repeat independently. Two noise models
are supported:

* ``"bitwise"``: each label bit is flipped independently with probability ``eta``.
* ``"block"``: with probability ``eta`` the whole label is replaced by ``m``
  uniform bits, otherwise it is exactly ``A v``. At ``eta = 1`` the label is
  independent of the inputs.

Bit vectors are packed into integers with bit ``j`` holding coordinate ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..codes import BinaryMatrix, gf2_rank
from ..enumeration import DEFAULT_BUDGET, all_sequences, check_budget
from ..hmm import Hmm

NOISE_MODES = ("bitwise", "block")


@dataclass(frozen=True)
class ParityModelSpec:
    n: int
    m: int
    A: BinaryMatrix
    eta: float = 0.0
    noise: str = "bitwise"

    def __post_init__(self):
        A = self.A if isinstance(self.A, BinaryMatrix) else BinaryMatrix(self.A)
        object.__setattr__(self, "A", A)
        if (A.rows, A.cols) != (self.m, self.n):
            raise ValueError(f"A must be {self.m}x{self.n}, got {A.rows}x{A.cols}")
        if not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")
        if gf2_rank(A) != self.m:
            raise ValueError("A must have full row rank")
        if self.noise not in NOISE_MODES:
            raise ValueError(f"noise must be one of {NOISE_MODES}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    @property
    def block_length(self) -> int:
        return self.n + self.m

    @property
    def state_count(self) -> int:
        return 2**self.m * (2 * self.n + self.m) + self.m

    def labels(self, v) -> np.ndarray:
        """Noise-free labels ``A v mod 2`` for one vector or a batch of rows."""
        return (np.asarray(v, dtype=np.int64) @ self.A.bits.T.astype(np.int64)) % 2


def sample_full_row_rank_matrix(m: int, n: int, seed: int, max_attempts: int = 10_000) -> tuple[BinaryMatrix, int]:
    """Uniform ``m x n`` 0/1 matrix conditioned on rank ``m``, plus the draw count."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        M = rng.integers(0, 2, size=(m, n))
        if gf2_rank(M) == m:
            return BinaryMatrix(M), attempt
    raise RuntimeError(f"no full-rank {m}x{n} matrix in {max_attempts} draws")


def parity_sample_blocks(spec: ParityModelSpec, count: int, seed: int) -> np.ndarray:
    """``count`` independent blocks as rows of length ``n + m``."""
    rng = np.random.default_rng(seed)
    v = rng.integers(0, 2, size=(count, spec.n))
    y = spec.labels(v)
    if spec.noise == "bitwise":
        y ^= (rng.random((count, spec.m)) < spec.eta).astype(np.int64)
    else:
        replace = rng.random(count) < spec.eta
        fresh = rng.integers(0, 2, size=(count, spec.m))
        y = np.where(replace[:, None], fresh, y)
    return np.concatenate([v, y], axis=1)


def parity_sample_block(spec: ParityModelSpec, seed: int) -> np.ndarray:
    return parity_sample_blocks(spec, 1, seed)[0]


def parity_block_distribution(spec: ParityModelSpec) -> np.ndarray:
    """Exact law of one block, indexed lexicographically with ``x_0`` most significant."""
    n, m = spec.n, spec.m
    seqs = all_sequences(2, n + m)
    v, y = seqs[:, :n], seqs[:, n:]
    clean = spec.labels(v)
    flips = (y != clean).sum(axis=1)
    eta = spec.eta
    if spec.noise == "bitwise":
        py = eta**flips * (1 - eta) ** (m - flips)
    else:
        py = (1 - eta) * (flips == 0) + eta * 2.0**-m
    return py * 2.0**-n


def compile_parity_to_hmm(spec: ParityModelSpec, budget: int | None = DEFAULT_BUDGET) -> Hmm:
    """HMM with ``2**m (2n + m) + m`` states emitting the block process.

    Layout, with ``Y = 2**m``:

    * input states ``(i, y, b)`` at ``i*2Y + 2y + b``: emit ``b``; ``y`` is the
      running label ``A[:, :i+1] v``, so at ``i = n-1`` it equals ``A v``;
    * output states ``(j, y)`` at ``2nY + jY + y``: emit bit ``j`` of ``y``
      (flipped with probability ``eta`` in bitwise mode);
    * noise states ``j`` at ``2nY + mY + j``: emit a uniform bit. Block-mode
      noise routes through them; in bitwise mode they are unreachable but
      kept so the layout is the same.

    The last output or noise state returns to the restart law
    ``(0, b * a_0, b)`` with ``b`` uniform, which is also the initial law.
    """
    n, m = spec.n, spec.m
    Y = 2**m
    N = spec.state_count
    check_budget(f"compiling a {N}-state HMM", N * N, budget)
    cols = [int(sum(int(spec.A.bits[j, i]) << j for j in range(m))) for i in range(n)]
    eta = spec.eta

    def inp(i, y, b):
        return i * 2 * Y + 2 * y + b

    def out(j, y):
        return 2 * n * Y + j * Y + y

    def noise(j):
        return 2 * n * Y + m * Y + j

    restart = np.zeros(N)
    for b in (0, 1):
        restart[inp(0, b * cols[0], b)] += 0.5

    T = np.zeros((N, N))
    E = np.zeros((N, 2))
    for i in range(n):
        for y in range(Y):
            for b in (0, 1):
                s = inp(i, y, b)
                E[s, b] = 1.0
                if i + 1 < n:
                    for b2 in (0, 1):
                        T[s, inp(i + 1, y ^ (b2 * cols[i + 1]), b2)] += 0.5
                elif spec.noise == "block":
                    T[s, out(0, y)] += 1 - eta
                    T[s, noise(0)] += eta
                else:
                    T[s, out(0, y)] = 1.0
    flip = eta if spec.noise == "bitwise" else 0.0
    for j in range(m):
        for y in range(Y):
            s = out(j, y)
            bit = (y >> j) & 1
            E[s, bit] = 1 - flip
            E[s, 1 - bit] += flip
            if j + 1 < m:
                T[s, out(j + 1, y)] = 1.0
            else:
                T[s] = restart
        s = noise(j)
        E[s] = 0.5
        if j + 1 < m:
            T[s, noise(j + 1)] = 1.0
        else:
            T[s] = restart
    return Hmm(T, E, restart)
