"""Sequence prediction with fixed-length windows over hidden Markov models."""

from .errors import BudgetExceeded, ConvergenceError, InvalidModelError, ZeroLikelihoodError
from .hmm import (
    BeliefState,
    Hmm,
    forward_filter,
    load_hmm,
    opt_predict,
    predict_next,
    sample,
    save_hmm,
    stationary_distribution,
    validate,
    window_optimal_predict,
)
from .metrics import LossReport, evaluate_predictor, kl, l1, relative_zero_one, truncated_kl
from .ngram import ContextTable

__version__ = "0.1.0"
