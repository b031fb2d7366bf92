"""Posterior-odds trace for the initial hidden state.

Along a trajectory started in state ``h0`` the trace records

* ``X_s = log u_s - log v_s``, the log posterior odds that the state at time 0
  was ``h0`` after seeing ``x_0..x_s`` (``u_s`` its posterior, ``v_s = 1 - u_s``);
* ``delta_s = ||OPT_s - M_s||_1``, where ``OPT_s`` is the law of ``x_s`` given
  ``x_0..x_{s-1}`` and the state ``h0`` at time 0, and ``M_s`` the same law
  under the prior.

``X`` before any observation is the prior log odds. In expectation over
``x_{s+1}``, ``X_{s+1} - X_s`` equals ``KL(OPT_{s+1} || R_{s+1})`` where ``R`` is
the law under the prior restricted to states other than ``h0``, and this is
at least ``delta_{s+1}**2 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..hmm import Hmm, sample
from ..metrics import l1


@dataclass(frozen=True)
class OddsTrace:
    """``log_odds[s]`` is ``X_s``; ``delta[s]`` is ``delta_s``; both stop early if ``infinite``."""

    h0: int
    initial_log_odds: float
    log_odds: np.ndarray
    delta: np.ndarray
    observed: np.ndarray
    infinite: bool


def _odds_to_pair(X):
    e = math.exp(-abs(X))
    big, small = 1.0 / (1.0 + e), e / (1.0 + e)
    return (big, small) if X >= 0 else (small, big)


def posterior_odds_trace(h: Hmm, h0: int, horizon: int, seed: int, prior=None) -> OddsTrace:
    """Sample ``horizon`` symbols from ``h0`` and track the odds on ``h0``.

    If every other state is ruled out, the odds are infinite; the trace is
    cut at that step and flagged.
    """
    prior = np.asarray(h.initial if prior is None else prior, dtype=float)
    if not 0 <= h0 < h.n:
        raise ValueError(f"state {h0} out of range")
    u = float(prior[h0])
    if u <= 0:
        raise ValueError(f"prior gives state {h0} no mass")
    start = np.zeros(h.n)
    start[h0] = 1.0
    path = sample(h.with_initial(start), horizon, seed)
    E, T = h.emission, h.transition
    p = start
    v = 1.0 - u
    if v <= 0:
        empty = np.zeros(0)
        return OddsTrace(h0, math.inf, empty, empty, path.observed[:0], True)
    q = prior.copy()
    q[h0] = 0.0
    q /= q.sum()
    X0 = math.log(u) - math.log(v)
    X = X0
    xs, ds = [], []
    infinite = False
    for x in path.observed:
        opt = p @ E
        rest = q @ E
        # u and v from the odds directly, so u near 1 keeps full precision in v
        u, v = _odds_to_pair(X)
        ds.append(l1(opt, u * opt + v * rest))
        if rest[x] <= 0:
            xs.append(math.inf)
            infinite = True
            break
        X += math.log(opt[x]) - math.log(rest[x])
        xs.append(X)
        p = p * E[:, x]
        p = (p / p.sum()) @ T
        q = q * E[:, x]
        q = (q / q.sum()) @ T
    n_obs = len(xs)
    return OddsTrace(h0, X0, np.array(xs), np.array(ds), path.observed[:n_obs], infinite)
