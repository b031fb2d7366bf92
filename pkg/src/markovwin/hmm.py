"""Finite hidden Markov models: validation, sampling and exact filtering.

Time-indexing convention used by every predictor in the package: the prior
passed to a filter is the distribution of the hidden state at the time the
*first* symbol of the prefix is emitted. ``forward_filter`` returns the
distribution of the hidden state that will emit the *next* symbol, i.e. the
belief after emission-weighting the last symbol and propagating one step.
With an empty prefix the belief is the prior itself, so
``predict_next(h, forward_filter(h, [], prior)) == prior @ emission``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, InvalidModelError, ZeroLikelihoodError

STOCHASTIC_TOL = 1e-12
FORMAT_TAG = "markovwin.hmm/1"


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Hmm:
    """Hidden Markov model with ``n`` states over the alphabet ``{0..d-1}``.

    Arrays are copied and made read-only on construction. Only shapes are
    checked here; stochasticity is reported by :func:`validate`.
    """

    transition: np.ndarray
    emission: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        T = _frozen(self.transition, 2, "transition")
        E = _frozen(self.emission, 2, "emission")
        pi = _frozen(self.initial, 1, "initial")
        n = T.shape[0]
        if T.shape != (n, n):
            raise ValueError(f"transition must be square, got {T.shape}")
        if E.shape[0] != n:
            raise ValueError(f"emission has {E.shape[0]} rows for {n} states")
        if pi.shape != (n,):
            raise ValueError(f"initial has length {pi.shape[0]} for {n} states")
        object.__setattr__(self, "transition", T)
        object.__setattr__(self, "emission", E)
        object.__setattr__(self, "initial", pi)

    @property
    def n(self) -> int:
        return self.transition.shape[0]

    @property
    def d(self) -> int:
        return self.emission.shape[1]

    def with_initial(self, initial) -> "Hmm":
        return Hmm(self.transition, self.emission, initial)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "n": self.n,
            "d": self.d,
            "transition": self.transition.tolist(),
            "emission": self.emission.tolist(),
            "initial": self.initial.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Hmm":
        """Parse the on-disk document, rejecting any invariant violation."""
        missing = [k for k in ("n", "d", "transition", "emission", "initial") if k not in doc]
        if missing:
            raise InvalidModelError([f"missing field {k!r}" for k in missing])
        try:
            h = cls(doc["transition"], doc["emission"], doc["initial"])
        except ValueError as exc:
            raise InvalidModelError([str(exc)]) from exc
        problems = []
        if h.n != doc["n"]:
            problems.append(f"n={doc['n']} but transition has {h.n} rows")
        if h.d != doc["d"]:
            problems.append(f"d={doc['d']} but emission has {h.d} columns")
        problems.extend(validate(h).problems)
        if problems:
            raise InvalidModelError(problems)
        return h


@dataclass(frozen=True)
class ValidationResult:
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok


def _check_rows(name, M, problems):
    for i, row in enumerate(np.atleast_2d(M)):
        for j in np.flatnonzero(row < 0):
            problems.append(f"{name}[{i}][{j}] is negative ({row[j]!r})")
        if not np.all(np.isfinite(row)):
            problems.append(f"{name} row {i} has a non-finite entry")
            continue
        s = row.sum()
        if abs(s - 1.0) > STOCHASTIC_TOL:
            problems.append(f"{name} row {i} sums to {s!r}")


def validate(h: Hmm) -> ValidationResult:
    """Check the model invariants; never raises on a bad model."""
    problems = []
    if h.n < 1:
        problems.append("need at least one hidden state")
    if h.d < 2:
        problems.append(f"alphabet size d={h.d} is below 2")
    _check_rows("transition", h.transition, problems)
    _check_rows("emission", h.emission, problems)
    pi = h.initial
    for j in np.flatnonzero(pi < 0):
        problems.append(f"initial[{j}] is negative ({pi[j]!r})")
    if not np.all(np.isfinite(pi)) or abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
        problems.append(f"initial sums to {pi.sum()!r}")
    return ValidationResult(problems)


def load_hmm(path) -> Hmm:
    with open(path) as fh:
        return Hmm.from_dict(json.load(fh))


def save_hmm(h: Hmm, path) -> None:
    Path(path).write_text(json.dumps(h.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class SampledPath:
    hidden: np.ndarray
    observed: np.ndarray
    seed: int


def _draw(cdf_rows, row, u):
    # searchsorted on a cumulative row; clamp guards against cdf[-1] < 1 by rounding
    k = int(np.searchsorted(cdf_rows[row], u, side="right"))
    return min(k, cdf_rows.shape[1] - 1)


def sample(h: Hmm, length: int, seed: int) -> SampledPath:
    """Draw a hidden path and its observations; deterministic given ``seed``."""
    if length <= 0:
        empty = np.zeros(0, dtype=np.int64)
        return SampledPath(empty, empty.copy(), seed)
    rng = np.random.default_rng(seed)
    u = rng.random((length, 2))
    Tc = np.cumsum(h.transition, axis=1)
    Ec = np.cumsum(h.emission, axis=1)
    hidden = np.empty(length, dtype=np.int64)
    observed = np.empty(length, dtype=np.int64)
    s = _draw(np.cumsum(h.initial)[None, :], 0, rng.random())
    for t in range(length):
        hidden[t] = s
        observed[t] = _draw(Ec, s, u[t, 0])
        s = _draw(Tc, s, u[t, 1])
    return SampledPath(hidden, observed, seed)


@dataclass(frozen=True)
class BeliefState:
    """Distribution over the state that emits the next symbol."""

    weights: np.ndarray
    log_likelihood: float = 0.0


def forward_filter(h: Hmm, prefix: Sequence[int], prior=None) -> BeliefState:
    """Condition ``prior`` on ``prefix`` by alternating emission weighting and
    transition propagation, renormalizing each step.

    Raises:
        ZeroLikelihoodError: if some symbol of the prefix is impossible.
    """
    w = np.array(h.initial if prior is None else prior, dtype=float)
    if w.shape != (h.n,):
        raise ValueError(f"prior must have length {h.n}")
    loglik = 0.0
    E, T = h.emission, h.transition
    for step, x in enumerate(prefix):
        x = int(x)
        if not 0 <= x < h.d:
            raise ValueError(f"symbol {x} outside alphabet of size {h.d}")
        w = w * E[:, x]
        z = w.sum()
        if z <= 0.0:
            raise ZeroLikelihoodError(step, x)
        loglik += math.log(z)
        w = (w / z) @ T
        # T is row-stochastic so w stays normalized up to rounding
        w /= w.sum()
    return BeliefState(w, loglik)


def predict_next(h: Hmm, belief: BeliefState) -> np.ndarray:
    """Next-symbol distribution ``weights @ emission``."""
    p = np.asarray(belief.weights) @ h.emission
    return p / p.sum()


def window_optimal_predict(h: Hmm, prior, window: Sequence[int]) -> np.ndarray:
    """Exact ``P(next | window)`` when the window's first emitter is ``~ prior``.

    With ``prior`` the stationary distribution this is the best fixed-order
    predictor that knows the true process.
    """
    return predict_next(h, forward_filter(h, window, prior))


def opt_predict(h: Hmm, h0: int, window: Sequence[int]) -> np.ndarray:
    """Window prediction with the first emitter known to be state ``h0``."""
    if not 0 <= h0 < h.n:
        raise ValueError(f"state {h0} out of range")
    prior = np.zeros(h.n)
    prior[h0] = 1.0
    return window_optimal_predict(h, prior, window)


def stationary_distribution(h: Hmm, tol: float = 1e-12, max_iter: int = 64) -> np.ndarray:
    """Cesàro-limit stationary distribution started from the uniform vector.

    Uses powers of the lazy chain ``(I + T) / 2``, which share the Cesàro limit
    of ``T`` but are aperiodic, so periodic chains such as permutations
    converge. Each iteration squares the current power, so ``max_iter``
    iterations cover ``2**max_iter`` chain steps.

    Raises:
        ConvergenceError: if the residual ``||v T - v||_1`` stays above ``tol``.
    """
    n = h.n
    T = h.transition
    P = 0.5 * (np.eye(n) + T)
    u = np.full(n, 1.0 / n)
    residual = math.inf
    for _ in range(max_iter + 1):
        v = u @ P
        v = np.clip(v, 0.0, None)
        v /= v.sum()
        residual = float(np.abs(v @ T - v).sum())
        if residual <= tol:
            return v
        P = P @ P
        P /= P.sum(axis=1, keepdims=True)
    raise ConvergenceError("stationary distribution did not converge", residual)


def propagate(h: Hmm, dist, steps: int) -> np.ndarray:
    """State distribution ``steps`` transitions after ``dist``."""
    v = np.asarray(dist, dtype=float)
    for _ in range(steps):
        v = v @ h.transition
    return v
