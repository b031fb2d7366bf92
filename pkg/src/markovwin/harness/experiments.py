"""Experiment commands. Each returns CSV rows; the CLI only handles I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..constructions import CspModelSpec, CspSampler, ParityModelSpec, parity_sample_blocks
from ..enumeration import check_budget
from ..errors import BudgetExceeded
from ..hmm import Hmm, sample, stationary_distribution
from ..infotheory import converged_block_mi, windowed_mutual_information
from ..metrics import evaluate_predictor, kl, l1, relative_zero_one, window_gap
from ..ngram import ContextTable
from ..predictors import NgramPredictor, WindowOptimalPredictor
from ..seeding import derive_seed
from .config import ConfigError, ExperimentConfig, ModelEntry, build_models

BOUND_SLACK = 1e-9
METRICS = ("kl", "l1", "rel01")


@dataclass(frozen=True)
class Row:
    model_id: str
    predictor: str
    seed: int
    ell: int | None
    T: int | None
    metric: str
    value: float
    stderr: float | None = None
    reference: float | None = None

    def sort_key(self):
        return (
            self.model_id,
            -1 if self.ell is None else self.ell,
            -1 if self.T is None else self.T,
            self.metric,
            self.predictor,
        )


def train_table(h: Hmm, ell: int, length: int, seed: int) -> ContextTable:
    path = sample(h, length, seed)
    return ContextTable(ell, h.d).stream_update(path.observed)


def _windowed_bound(h, T, prior, budget):
    try:
        return windowed_mutual_information(h, T, prior, budget)
    except BudgetExceeded:
        return None


def _loss_rows(mid, name, seed, ell, T, report, I):
    out = []
    for metric in METRICS:
        ref = None
        if I is not None and metric == "kl":
            ref = I / ell
        elif I is not None and metric == "l1":
            ref = math.sqrt(I / (2 * ell))
        se = None if report.stderr is None else report.stderr[metric]
        out.append(Row(mid, name, seed, ell, T, metric, report.averages[metric], se, ref))
    return out


def cmd_sweep_window(cfg: ExperimentConfig) -> list[Row]:
    """Window-optimal and n-gram losses for every (model, ell, T) cell.

    The reference column carries ``I/ell`` on ``kl`` rows and
    ``sqrt(I / (2 ell))`` on ``l1`` rows, with ``I`` the past/future
    information averaged over ``[0, T-1]``, whenever it fits the budget.
    """
    rows = []
    mode = cfg.mode
    for mi, entry in enumerate(build_models(cfg)):
        h = _need_hmm(entry)
        for ti, T in enumerate(cfg.horizons):
            if mode == "exact":
                check_budget(f"exact evaluation of {entry.id!r} over {h.d}^{T - 1} histories", h.d ** (T - 1), cfg.budget)
            I = _windowed_bound(h, T, h.initial, cfg.budget)
            for li, ell in enumerate(cfg.ells):
                seed = derive_seed(cfg.seed, mi, li, ti)
                wopt = WindowOptimalPredictor(h, ell, prior=h.initial)
                table = train_table(h, ell, cfg.train_length, derive_seed(seed, 0))
                ngram = NgramPredictor(table, cfg.alpha)
                for name, pred in (("window-optimal", wopt), ("ngram", ngram)):
                    rep = evaluate_predictor(
                        h, pred, T, mode=mode, trials=cfg.trials, seed=derive_seed(seed, 1), budget=cfg.budget
                    )
                    rows.extend(_loss_rows(entry.id, name, seed, ell, T, rep, I))
    return rows


@dataclass(frozen=True)
class SampleLosses:
    """Mean losses over random evaluation times, with standard errors."""

    mean: dict
    stderr: dict
    count: int
    kl_infinite: bool


def ngram_random_time_losses(
    h: Hmm,
    ell: int,
    T: int,
    eval_times: int,
    seed: int,
    alpha: float = 0.0,
    trials: int = 1,
) -> SampleLosses:
    """Losses of the order-``ell`` n-gram predictor against the Bayes predictor.

    For each trial one trajectory ``x_0..x_T`` is drawn, ``eval_times`` times
    ``t`` are drawn uniformly with replacement from ``{1..T}``, and at each
    ``t`` the table built from ``x_0..x_{t-1}`` predicts ``x_t``.
    """
    E, Tm = h.emission, h.transition
    samples = []
    for trial in range(trials):
        path = sample(h, T + 1, derive_seed(seed, trial, 0))
        x = path.observed
        times = np.sort(np.random.default_rng(derive_seed(seed, trial, 1)).integers(1, T + 1, size=eval_times))
        table = ContextTable(ell, h.d)
        pred = NgramPredictor(table, alpha)
        w = h.initial.copy()
        done = 0
        for t in times:
            for s in range(done, t):
                w = w * E[:, x[s]]
                w = (w / w.sum()) @ Tm
            if t > done:
                table.stream_update(x[done:t])
                done = t
            truth = w @ E
            q = pred(tuple(int(c) for c in x[max(0, t - ell):t])) if t >= ell else pred(())
            samples.append((kl(truth, q), l1(truth, q), relative_zero_one(truth, q, truth)))
    arr = np.array(samples)
    n = len(arr)
    mean = {m: float(arr[:, i].mean()) for i, m in enumerate(METRICS)}
    if n > 1:
        with np.errstate(invalid="ignore"):
            sd = arr.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        sd = np.zeros(3)
    stderr = {m: float(sd[i]) for i, m in enumerate(METRICS)}
    return SampleLosses(mean, stderr, n, bool(np.isinf(arr[:, 0]).any()))


def cmd_sweep_samples(cfg: ExperimentConfig) -> list[Row]:
    """N-gram losses at random evaluation times for each training length ``T``."""
    rows = []
    for mi, entry in enumerate(build_models(cfg)):
        h = _need_hmm(entry)
        for li, ell in enumerate(cfg.ells):
            for ti, T in enumerate(cfg.horizons):
                seed = derive_seed(cfg.seed, mi, li, ti)
                res = ngram_random_time_losses(h, ell, T, cfg.eval_times, seed, cfg.alpha, cfg.trials)
                for metric in METRICS:
                    rows.append(Row(entry.id, "ngram", seed, ell, T, metric, res.mean[metric], res.stderr[metric]))
    return rows


@dataclass(frozen=True)
class BoundCheck:
    model_id: str
    ell: int
    formulation: str
    status: str
    kl: float
    l1: float
    information: float
    history: int

    @property
    def kl_bound(self) -> float:
        return self.information / self.ell

    @property
    def l1_bound(self) -> float:
        return math.sqrt(self.information / (2 * self.ell))

    @property
    def kl_margin(self) -> float:
        return self.kl_bound - self.kl

    @property
    def l1_margin(self) -> float:
        return self.l1_bound - self.l1


def _status(converged, kl_val, l1_val, I, ell):
    if not converged:
        return "INCONCLUSIVE"
    ok = kl_val <= I / ell + BOUND_SLACK and l1_val <= math.sqrt(I / (2 * ell)) + BOUND_SLACK
    return "PASS" if ok else "FAIL"


def check_stationary_bounds(h: Hmm, ells, model_id: str = "model", tol: float = 1e-6, budget=1 << 24) -> list[BoundCheck]:
    """Window-predictor losses of the stationary process against ``I/ell``.

    ``I`` is the truncated past/future information ``I(L, L)`` at the first
    ``L`` where it moves by at most ``tol``. The window predictor is scored
    against the conditional given ``max(L, ell)`` past symbols.
    """
    pi = stationary_distribution(h)
    prof = converged_block_mi(h, pi, tol=tol, budget=budget)
    out = []
    for ell in ells:
        L = max(prof.history, ell)
        if h.d ** L > budget:
            out.append(BoundCheck(model_id, ell, "stationary", "INCONCLUSIVE", math.nan, math.nan, prof.value, L))
            continue
        gap = window_gap(h, ell, L, pi, "history", budget)
        out.append(
            BoundCheck(model_id, ell, "stationary", _status(prof.converged, gap.kl, gap.l1, prof.value, ell),
                       gap.kl, gap.l1, prof.value, L)
        )
    return out


def check_window_bounds(h: Hmm, ells, T: int, model_id: str = "model", budget=1 << 22) -> list[BoundCheck]:
    """Losses over ``[0, T-1]`` from the initial law against ``I(M, [0, T-1]) / ell``."""
    I = windowed_mutual_information(h, T, h.initial, budget)
    out = []
    for ell in ells:
        rep = evaluate_predictor(h, WindowOptimalPredictor(h, ell, prior=h.initial), T, budget=budget)
        out.append(BoundCheck(model_id, ell, "window", _status(True, rep.kl, rep.l1, I, ell), rep.kl, rep.l1, I, T))
    return out


def cmd_verify_bounds(cfg: ExperimentConfig) -> tuple[list[Row], list[BoundCheck]]:
    if cfg.mode != "exact":
        raise ConfigError("verify-bounds runs in exact mode only")
    rows, checks = [], []
    for mi, entry in enumerate(build_models(cfg)):
        h = _need_hmm(entry)
        if entry.formulation == "window":
            found = []
            for T in cfg.horizons:
                found.extend(check_window_bounds(h, cfg.ells, T, entry.id, cfg.budget))
        else:
            found = check_stationary_bounds(h, cfg.ells, entry.id, budget=cfg.budget)
        for c in found:
            seed = derive_seed(cfg.seed, mi)
            T = c.history if c.formulation == "window" else None
            rows.append(Row(c.model_id, "window-optimal", seed, c.ell, T, "kl", c.kl, None, c.kl_bound))
            rows.append(Row(c.model_id, "window-optimal", seed, c.ell, T, "l1", c.l1, None, c.l1_bound))
            rows.append(Row(c.model_id, "window-optimal", seed, c.ell, T, "information", c.information, None, c.history))
        checks.extend(found)
    return rows, checks


@dataclass(frozen=True)
class DistinguishResult:
    informed_accuracy: float
    informed_stderr: float
    blind_accuracy: float
    blind_stderr: float
    trials: int
    samples: int

    @staticmethod
    def interval(p, se, z=1.96):
        return (max(0.0, p - z * se), min(1.0, p + z * se))


def _parity_llr(spec: ParityModelSpec, blocks):
    v, y = blocks[:, : spec.n], blocks[:, spec.n :]
    match = y == spec.labels(v)
    m, eta = spec.m, spec.eta
    with np.errstate(divide="ignore"):
        if spec.noise == "bitwise":
            per = np.where(match, np.log1p(-eta) if eta < 1 else -np.inf, np.log(eta) if eta > 0 else -np.inf)
            return per.sum(axis=1) + m * math.log(2)
        return np.log((1 - eta) * match.all(axis=1) + eta * 2.0**-m) + m * math.log(2)


def _csp_llr(spec: CspModelSpec, letters, labels):
    sig = np.asarray(spec.sigma)
    values = sig[letters // 2] ^ (letters % 2)
    clean = (values @ spec.A.bits.T.astype(np.int64)) % 2
    match = (clean == labels).all(axis=1)
    with np.errstate(divide="ignore"):
        return np.log((1 - spec.eta) * match + spec.eta * 2.0**-spec.m) + spec.m * math.log(2)


def _chi2_labels(labels, m):
    idx = labels @ (1 << np.arange(m))
    counts = np.bincount(idx, minlength=2**m)
    expected = len(labels) / 2**m
    return float(((counts - expected) ** 2 / expected).sum())


def distinguish(spec, samples: int, trials: int, seed: int) -> DistinguishResult:
    """Fair-coin test between the planted source and the uniform source.

    Per trial a coin picks the source and ``samples`` blocks are drawn. The
    informed test knows the hidden parameters and decides by the sign of the
    log-likelihood ratio; the blind test compares a chi-square statistic of
    the label histogram with its null mean. Ties go to a seeded coin.
    """
    if isinstance(spec, ParityModelSpec):
        kind = "parity"
        m = spec.m
    elif isinstance(spec, CspModelSpec):
        kind = "csp"
        m = spec.m
        sampler = CspSampler(spec)
    else:
        raise TypeError("distinguish needs a ParityModelSpec or CspModelSpec")
    informed = np.zeros(trials, dtype=bool)
    blind = np.zeros(trials, dtype=bool)
    for i in range(trials):
        rng = np.random.default_rng(derive_seed(seed, i))
        planted = bool(rng.integers(0, 2))
        s_seed = derive_seed(seed, i, 1)
        if kind == "parity":
            if planted:
                blocks = parity_sample_blocks(spec, samples, s_seed)
            else:
                blocks = np.random.default_rng(s_seed).integers(0, 2, size=(samples, spec.n + m))
            llr = _parity_llr(spec, blocks).sum()
            labels = blocks[:, spec.n :]
        else:
            if planted:
                letters, labels = sampler.sample_blocks(samples, s_seed)
            else:
                r = np.random.default_rng(s_seed)
                w = spec.group_size
                letters = r.integers(0, w, size=(samples, spec.k)) + w * np.arange(spec.k)
                labels = r.integers(0, 2, size=(samples, m))
            llr = _csp_llr(spec, letters, labels).sum()
        coin = bool(rng.integers(0, 2))
        guess = llr > 0 if llr != 0 else coin
        informed[i] = guess == planted
        stat = _chi2_labels(labels, m)
        df = 2**m - 1
        bguess = stat > df if stat != df else coin
        blind[i] = bguess == planted

    def acc(x):
        p = float(x.mean())
        return p, math.sqrt(p * (1 - p) / trials)

    ia, ise = acc(informed)
    ba, bse = acc(blind)
    return DistinguishResult(ia, ise, ba, bse, trials, samples)


def cmd_distinguish(cfg: ExperimentConfig) -> list[Row]:
    rows = []
    for mi, entry in enumerate(build_models(cfg)):
        if entry.kind not in ("parity", "csp"):
            raise ConfigError(f"distinguish needs a parity or csp model, {entry.id!r} is {entry.kind}")
        etas = cfg.etas if cfg.etas is not None else [entry.spec.eta]
        for ei, eta in enumerate(etas):
            spec = _with_eta(entry.spec, float(eta))
            seed = derive_seed(cfg.seed, mi, ei)
            res = distinguish(spec, cfg.samples, cfg.trials, seed)
            mid = f"{entry.id}[eta={float(eta):g}]"
            rows.append(Row(mid, "informed", seed, None, cfg.samples, "accuracy", res.informed_accuracy, res.informed_stderr))
            rows.append(Row(mid, "blind", seed, None, cfg.samples, "accuracy", res.blind_accuracy, res.blind_stderr))
    return rows


def _with_eta(spec, eta):
    if isinstance(spec, ParityModelSpec):
        return ParityModelSpec(spec.n, spec.m, spec.A, eta, spec.noise)
    return CspModelSpec(spec.n, spec.k, spec.A, spec.sigma, eta, spec.t)


def _need_hmm(entry: ModelEntry) -> Hmm:
    if entry.hmm is None:
        raise ConfigError(f"model {entry.id!r} has no HMM form")
    return entry.hmm
