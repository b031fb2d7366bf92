"""Losses between predictive distributions and the evaluators built on them.

All logarithms are natural; divergences are in nats. A KL divergence with
``p_i > 0 = q_i`` is ``math.inf``; reports carry it as a flagged condition.
Argmax ties break toward the lowest symbol index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .enumeration import DEFAULT_BUDGET, check_budget, extend, forward_table
from .hmm import Hmm, propagate, sample, stationary_distribution
from .seeding import derive_seed


def _pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return p, q


def kl(p, q) -> float:
    """``sum p_i log(p_i / q_i)``; ``0 log 0 = 0``; ``inf`` if q misses p's support.

    Rounding can push the sum a few ulps below zero; it is clamped at 0.
    """
    p, q = _pair(p, q)
    m = p > 0
    if np.any(q[m] <= 0):
        return math.inf
    return max(0.0, float(np.sum(p[m] * (np.log(p[m]) - np.log(q[m])))))


def l1(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.abs(p - q).sum())


def truncated_kl(p, q, C: float) -> float:
    """KL with each log-ratio capped at ``log C``: ``sum p_i log min(p_i/q_i, C)``."""
    if not C > 1:
        raise ValueError("ratio cap C must exceed 1")
    p, q = _pair(p, q)
    m = p > 0
    pm, qm = p[m], q[m]
    with np.errstate(divide="ignore"):
        log_ratio = np.log(pm) - np.log(qm)
    return float(np.sum(pm * np.minimum(log_ratio, math.log(C))))


def relative_zero_one(opt, pred, truth) -> float:
    """Expected zero-one loss of ``argmax pred`` minus that of ``argmax opt``
    when the next symbol is drawn from ``truth``."""
    opt, pred = _pair(opt, pred)
    truth, _ = _pair(truth, opt)
    return float(truth[int(np.argmax(opt))] - truth[int(np.argmax(pred))])


def deviation_stats(weights, values) -> tuple[float, float]:
    """Weighted ``(E|x - mean|, E|x - median|)``.

    The median is the smallest value whose cumulative weight reaches 1/2.
    """
    w = np.asarray(weights, dtype=float)
    x = np.asarray(values, dtype=float)
    if w.size == 0 or x.size == 0:
        raise ValueError("empty input")
    if w.shape != x.shape:
        raise ValueError(f"dimension mismatch: {w.shape} vs {x.shape}")
    w = w / w.sum()
    mean = float(w @ x)
    order = np.argsort(x, kind="stable")
    cum = np.cumsum(w[order])
    median = float(x[order][np.searchsorted(cum, 0.5 - 1e-12)])
    return float(w @ np.abs(x - mean)), float(w @ np.abs(x - median))


# vectorized row-wise versions used by the exact evaluators


def _kl_rows(P, Q):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * (np.log(P) - np.log(Q)), 0.0)
    return np.maximum(terms.sum(axis=1), 0.0)


def _rel01_rows(opt, pred, truth):
    r = np.arange(truth.shape[0])
    return truth[r, opt.argmax(axis=1)] - truth[r, pred.argmax(axis=1)]


def _row_losses(truth, pred, opt=None):
    opt = truth if opt is None else opt
    return (
        _kl_rows(truth, pred),
        np.abs(truth - pred).sum(axis=1),
        _rel01_rows(opt, pred, truth),
    )


@dataclass(frozen=True)
class StepLoss:
    t: int
    kl: float
    l1: float
    rel01: float


@dataclass
class LossReport:
    """Per-step and time-averaged losses of a predictor.

    ``stderr`` holds standard errors of the averages in Monte Carlo mode and
    is ``None`` in exact mode.
    """

    per_step: list
    horizon: int
    mode: str
    stderr: dict | None = None
    trials: int = 0
    averages: dict = field(init=False)

    def __post_init__(self):
        T = max(len(self.per_step), 1)
        self.averages = {
            "kl": sum(s.kl for s in self.per_step) / T,
            "l1": sum(s.l1 for s in self.per_step) / T,
            "rel01": sum(s.rel01 for s in self.per_step) / T,
        }

    @property
    def kl(self):
        return self.averages["kl"]

    @property
    def l1(self):
        return self.averages["l1"]

    @property
    def rel01(self):
        return self.averages["rel01"]

    @property
    def kl_infinite(self) -> bool:
        return math.isinf(self.averages["kl"])


def _predict_rows(predictor, seqs):
    """Apply ``predictor`` to each history row, caching on its window."""
    win = getattr(predictor, "window", None)
    t = seqs.shape[1]
    out = []
    cache = {}
    for row in seqs:
        hist = tuple(int(x) for x in row)
        key = hist if win is None else hist[max(0, t - win):]
        q = cache.get(key)
        if q is None:
            q = cache[key] = np.asarray(predictor(hist), dtype=float)
        out.append(q)
    return np.array(out).reshape(len(seqs), -1)


def evaluate_predictor(
    model: Hmm,
    predictor,
    horizon: int,
    mode: str = "exact",
    trials: int = 100,
    seed: int = 0,
    prior=None,
    reference=None,
    budget: int | None = DEFAULT_BUDGET,
) -> LossReport:
    """Losses of ``predictor`` against the full-history Bayes predictor.

    The process starts at time 0 with hidden law ``prior`` (``model.initial``
    if omitted) and is evaluated at ``t = 0..horizon-1``.

    ``exact`` sums over every length-``t`` history weighted by its
    probability; it refuses with :class:`BudgetExceeded` if ``d**(horizon-1)``
    exceeds ``budget``. ``mc`` averages over ``trials`` sampled trajectories
    with seeds derived from ``seed``.

    If ``reference`` is another predictor, it replaces the Bayes predictor as
    the comparison target (the estimation error of a learned window
    predictor, for instance). Zero-one losses always use the true conditional
    to score decisions.
    """
    prior = np.asarray(model.initial if prior is None else prior, dtype=float)
    if mode == "exact":
        return _evaluate_exact(model, predictor, horizon, prior, reference, budget)
    if mode in ("mc", "monte-carlo"):
        return _evaluate_mc(model, predictor, horizon, prior, reference, trials, seed)
    raise ValueError(f"unknown mode {mode!r}")


def _evaluate_exact(h, predictor, horizon, prior, reference, budget):
    check_budget(f"exact evaluation over {h.d}^{max(horizon - 1, 0)} histories", h.d ** max(horizon - 1, 0), budget)
    alpha = prior[None, :]
    seqs = np.zeros((1, 0), dtype=np.int64)
    steps = []
    for t in range(horizon):
        mass = alpha.sum(axis=1)
        keep = mass > 0
        alpha, seqs, mass = alpha[keep], seqs[keep], mass[keep]
        truth = (alpha @ h.emission) / mass[:, None]
        q = _predict_rows(predictor, seqs)
        opt = truth if reference is None else _predict_rows(reference, seqs)
        k, a, r = _row_losses(opt, q, opt)
        if reference is not None:
            r = _rel01_rows(opt, q, truth)
        kl_t = math.inf if np.any(np.isinf(k) & (mass > 0)) else float(mass @ k)
        steps.append(StepLoss(t, kl_t, float(mass @ a), float(mass @ r)))
        if t + 1 < horizon:
            alpha = extend(h, alpha)
            seqs = np.concatenate(
                [np.repeat(seqs, h.d, axis=0), np.tile(np.arange(h.d), len(seqs))[:, None]], axis=1
            )
    return LossReport(steps, horizon, "exact")


def _evaluate_mc(h, predictor, horizon, prior, reference, trials, seed):
    hp = h.with_initial(prior)
    E, T = h.emission, h.transition
    acc = np.zeros((trials, horizon, 3))
    for i in range(trials):
        path = sample(hp, horizon, derive_seed(seed, i))
        obs = tuple(int(x) for x in path.observed)
        w = prior.copy()
        for t in range(horizon):
            truth = w @ E
            q = np.asarray(predictor(obs[:t]), dtype=float)
            opt = truth if reference is None else np.asarray(reference(obs[:t]), dtype=float)
            acc[i, t] = (kl(opt, q), l1(opt, q), relative_zero_one(opt, q, truth))
            x = obs[t]
            w = w * E[:, x]
            w = (w / w.sum()) @ T
    per = acc.mean(axis=0)
    steps = [StepLoss(t, *map(float, per[t])) for t in range(horizon)]
    trial_means = acc.mean(axis=1)
    se = trial_means.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(3)
    return LossReport(
        steps, horizon, "monte-carlo",
        stderr={"kl": float(se[0]), "l1": float(se[1]), "rel01": float(se[2])},
        trials=trials,
    )


@dataclass(frozen=True)
class WindowGap:
    """Expected losses of the order-``ell`` window predictor at one time step."""

    ell: int
    history: int
    reference: str
    kl: float
    l1: float
    rel01: float


def window_gap(
    h: Hmm,
    ell: int,
    history: int,
    prior=None,
    reference: str = "history",
    budget: int | None = DEFAULT_BUDGET,
) -> WindowGap:
    """Exact expected loss of the order-``ell`` window predictor at time ``t``.

    ``prior`` is the hidden law of the state emitting ``x_{t-history}``
    (stationary if omitted). With ``reference="history"`` the target is the
    conditional given all ``history`` past symbols, the finite truncation of
    the full-history predictor. With ``reference="state"`` the target is the
    emission row of the true hidden state at time ``t``, the limit of the
    full-history predictor whenever the infinite past pins the state down.
    """
    if not 0 <= ell <= history:
        raise ValueError("need 0 <= ell <= history")
    prior = np.asarray(stationary_distribution(h) if prior is None else prior, dtype=float)
    E = h.emission
    prior_win = propagate(h, prior, history - ell)
    alpha_w = forward_table(h, prior_win, ell, budget)
    mass_w = alpha_w.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        pred_w = (alpha_w @ E) / mass_w[:, None]
    if reference == "state":
        S, n = alpha_w.shape
        weights = alpha_w.reshape(-1)
        truth = np.tile(E, (S, 1))
        pred = np.repeat(pred_w, n, axis=0)
    elif reference == "history":
        alpha = forward_table(h, prior, history, budget)
        weights = alpha.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            truth = (alpha @ E) / weights[:, None]
        pred = pred_w[np.arange(len(weights)) % (h.d**ell)]
    else:
        raise ValueError(f"unknown reference {reference!r}")
    keep = weights > 0
    weights, truth, pred = weights[keep], truth[keep], pred[keep]
    k, a, r = _row_losses(truth, pred)
    kl_val = math.inf if np.any(np.isinf(k)) else float(weights @ k)
    return WindowGap(ell, history, reference, kl_val, float(weights @ a), float(weights @ r))


@dataclass(frozen=True)
class ZeroOneEstimate:
    """Monte-Carlo zero-one loss of the Bayes predictor over a time range."""

    mean: float
    stderr: float
    start: int
    horizon: int
    trials: int


def bayes_zero_one_loss(
    h: Hmm, horizon: int, trials: int, seed: int, start: int = 0, prior=None
) -> ZeroOneEstimate:
    """Expected zero-one loss of the full-history Bayes predictor.

    Each trial samples a trajectory, follows it with the forward filter and
    scores the argmax prediction at ``t = start..horizon-1`` by the miss
    probability under the true hidden state, ``1 - E[h_t, argmax]``. This has
    lower variance than counting misses on the sampled symbols.
    """
    if not 0 <= start < horizon:
        raise ValueError("need 0 <= start < horizon")
    prior = np.asarray(h.initial if prior is None else prior, dtype=float)
    hp = h.with_initial(prior)
    E, T = h.emission, h.transition
    per_trial = np.zeros(trials)
    for i in range(trials):
        path = sample(hp, horizon, derive_seed(seed, i))
        w = prior.copy()
        total = 0.0
        for t in range(horizon):
            if t >= start:
                total += 1.0 - E[path.hidden[t], int(np.argmax(w @ E))]
            w = w * E[:, path.observed[t]]
            w = (w / w.sum()) @ T
        per_trial[i] = total / (horizon - start)
    se = float(per_trial.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return ZeroOneEstimate(float(per_trial.mean()), se, start, horizon, trials)
