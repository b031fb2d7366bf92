"""Prediction callbacks.

A predictor is any callable taking the full observed history
``x_0..x_{t-1}`` (a tuple of ints) and returning a length-``d`` probability
vector for ``x_t``. Predictors that only read the last ``window`` symbols
expose that as an attribute so evaluators can cache on the window.
"""

from __future__ import annotations

import numpy as np

from .hmm import Hmm, forward_filter, predict_next, propagate, stationary_distribution
from .ngram import ContextTable


class BayesPredictor:
    """Full-history Bayes predictor for a known model started from ``prior``."""

    window = None

    def __init__(self, h: Hmm, prior=None):
        self.h = h
        self.prior = np.asarray(h.initial if prior is None else prior, dtype=float)

    def __call__(self, history):
        return predict_next(self.h, forward_filter(self.h, history, self.prior))


class WindowOptimalPredictor:
    """Exact conditional of the next symbol given only the last ``ell`` symbols.

    ``prior`` is the hidden-state law of the process at time 0 (stationary if
    omitted). With ``time_aware`` the window's first emitter is given the
    marginal law at its own time, ``prior @ T**start``, which is what the
    true window conditional of a non-stationary process requires; for a
    stationary prior the two coincide.
    """

    def __init__(self, h: Hmm, ell: int, prior=None, time_aware: bool = True):
        if ell < 0:
            raise ValueError("window length must be nonnegative")
        self.h = h
        self.window = ell
        self.prior = np.asarray(stationary_distribution(h) if prior is None else prior, dtype=float)
        self.time_aware = time_aware
        self._cache = {}
        self._priors = {}

    def _prior_at(self, start):
        if not self.time_aware or start == 0:
            return self.prior
        if start not in self._priors:
            self._priors[start] = propagate(self.h, self.prior, start)
        return self._priors[start]

    def __call__(self, history):
        t = len(history)
        start = max(0, t - self.window)
        win = tuple(int(x) for x in history[start:])
        key = (start if self.time_aware else 0, win)
        hit = self._cache.get(key)
        if hit is None:
            hit = predict_next(self.h, forward_filter(self.h, win, self._prior_at(start)))
            self._cache[key] = hit
        return hit


class NgramPredictor:
    """Empirical order-``ell`` predictor backed by a :class:`ContextTable`.

    Histories shorter than the order fall back to the uniform distribution,
    the same rule as an unseen context.
    """

    def __init__(self, table: ContextTable, alpha: float = 0.0):
        self.table = table
        self.alpha = alpha
        self.window = table.ell

    def __call__(self, history):
        ell = self.table.ell
        if len(history) < ell:
            return np.full(self.table.d, 1.0 / self.table.d)
        context = history[len(history) - ell:] if ell else ()
        return self.table.predict(context, alpha=self.alpha)


class FixedPredictor:
    """Ignores the history and always returns ``probs``."""

    window = 0

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)

    def __call__(self, history):
        return self.probs


def uniform_predictor(d: int) -> FixedPredictor:
    return FixedPredictor(np.full(d, 1.0 / d))
