"""Exact entropies and mutual informations of HMM observation blocks.

Every quantity is computed from block entropies, ``H(x_s..x_{s+k-1})``,
obtained by full enumeration; there is no sampling anywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .enumeration import DEFAULT_BUDGET, block_entropies, block_probabilities, check_budget
from .hmm import Hmm, propagate, stationary_distribution


def entropy(p) -> float:
    """Shannon entropy in nats with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


@dataclass(frozen=True)
class MiEstimate:
    value: float
    past_len: int
    future_len: int
    method: str = "exact-enumeration"
    enumeration_size: int = 0


def _prior(h, prior):
    return np.asarray(stationary_distribution(h) if prior is None else prior, dtype=float)


def block_mutual_information(
    h: Hmm,
    a: int,
    b: int,
    prior=None,
    budget: int | None = DEFAULT_BUDGET,
) -> MiEstimate:
    """``I(x_0..x_{a-1}; x_a..x_{a+b-1})`` with ``x_0`` emitted from ``prior``.

    The prior defaults to the stationary distribution, in which case the
    value is the past/future information of the stationary process truncated
    to blocks of lengths ``a`` and ``b``.
    """
    if a < 0 or b < 0:
        raise ValueError("block lengths must be nonnegative")
    size = h.d ** (a + b)
    check_budget(f"mutual information over {h.d}^{a + b} blocks", size, budget)
    p0 = _prior(h, prior)
    H = block_entropies(h, p0, a + b)
    Hb = block_entropies(h, propagate(h, p0, a), b)[b]
    value = max(H[a] + Hb - H[a + b], 0.0)
    return MiEstimate(value, a, b, enumeration_size=size)


def conditional_mi_decomposition(
    h: Hmm,
    ell: int,
    history: int,
    prior=None,
    budget: int | None = DEFAULT_BUDGET,
) -> float:
    """``I(x_{t-L}..x_{t-ell-1}; x_t | x_{t-ell}..x_{t-1})`` with ``L = history``.

    ``prior`` is the hidden law at time ``t - L`` (stationary if omitted).
    This equals the expected KL divergence between the order-``L`` and
    order-``ell`` window conditionals at time ``t``.
    """
    if not 0 <= ell <= history:
        raise ValueError("need 0 <= ell <= history")
    check_budget(f"conditional information over {h.d}^{history + 1} blocks", h.d ** (history + 1), budget)
    p0 = _prior(h, prior)
    HL = block_entropies(h, p0, history + 1)
    Hl = block_entropies(h, propagate(h, p0, history - ell), ell + 1)
    value = (Hl[ell + 1] - Hl[ell]) - (HL[history + 1] - HL[history])
    return max(value, 0.0)


def conditional_mutual_information(joint, x_axes, y_axes, z_axes=()) -> float:
    """``I(X; Y | Z)`` of a joint probability table, by axis groups."""
    P = np.asarray(joint, dtype=float)
    every = set(range(P.ndim))
    x, y, z = set(x_axes), set(y_axes), set(z_axes)

    def H(keep):
        drop = tuple(sorted(every - keep))
        return entropy(P.sum(axis=drop) if drop else P)

    return H(x | z) + H(y | z) - H(x | y | z) - H(z)


@dataclass(frozen=True)
class TruncationProfile:
    """``I(L, L)`` for ``L = 1..``, stopped once consecutive values agree.

    ``value`` is the last computed term, a lower bound on the limit since
    ``I(L, L)`` is nondecreasing. ``history`` is the ``L`` it was taken at.
    """

    values: tuple
    converged: bool
    tol: float

    @property
    def history(self) -> int:
        return len(self.values)

    @property
    def value(self) -> float:
        return self.values[-1] if self.values else 0.0


def converged_block_mi(
    h: Hmm,
    prior=None,
    tol: float = 1e-6,
    max_history: int = 16,
    budget: int | None = 1 << 24,
) -> TruncationProfile:
    """Past/future information of the stationary process by truncation.

    Computes ``I(L, L) = 2 H_L - H_{2L}`` until ``|I(L+1, L+1) - I(L, L)| <= tol``.
    If the enumeration budget or ``max_history`` is reached first, the
    profile is returned with ``converged=False``.
    """
    p0 = _prior(h, prior)
    H = np.zeros(1)
    values = []
    for L in range(1, max_history + 1):
        if 2 * L >= len(H):
            K = 2 * L + 4
            if h.d**K > (budget or math.inf):
                K = 2 * L
            if h.d**K > (budget or math.inf):
                break
            H = block_entropies(h, p0, K)
        values.append(float(max(2 * H[L] - H[2 * L], 0.0)))
        if len(values) >= 2 and abs(values[-1] - values[-2]) <= tol:
            return TruncationProfile(tuple(values), True, tol)
    return TruncationProfile(tuple(values), False, tol)


def windowed_mutual_information(
    h: Hmm,
    horizon: int,
    prior=None,
    budget: int | None = DEFAULT_BUDGET,
) -> float:
    """Past/future information averaged over a finite window ``[0, T-1]``.

    Returns ``(1/T) * sum_tau I(x_0..x_{tau-1}; x_tau..x_{T-1})`` for the
    process started from ``prior`` (``h.initial`` if omitted). No
    stationarity is assumed, so this is the quantity to use for block
    models and other non-mixing processes.
    """
    T = horizon
    if T < 1:
        raise ValueError("horizon must be positive")
    check_budget(f"windowed information over {h.d}^{T} blocks", h.d**T, budget)
    p0 = np.asarray(h.initial if prior is None else prior, dtype=float)
    H = block_entropies(h, p0, T)
    total = 0.0
    p = p0
    for tau in range(T):
        future = block_entropies(h, p, T - tau)[T - tau]
        total += H[tau] + future - H[T]
        p = p @ h.transition
    return max(total / T, 0.0)


def joint_block_table(h: Hmm, prior, length: int, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
    """Joint law of ``x_0..x_{length-1}`` as a ``d``-ary array of rank ``length``."""
    p = block_probabilities(h, np.asarray(prior, dtype=float), length, budget)
    return p.reshape((h.d,) * length) if length else p.reshape(())


def chain_rule_terms(h: Hmm, a: int, b: int, prior=None) -> list[float]:
    """``I(past_a; x_s | x_a..x_{s-1})`` for ``s = a..a+b-1`` via the joint table."""
    P = joint_block_table(h, _prior(h, prior), a + b)
    past = tuple(range(a))
    return [
        conditional_mutual_information(P, past, (s,), tuple(range(a, s)))
        for s in range(a, a + b)
    ]
