from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dirichlet_hmm
from markovwin import (
    BeliefState,
    Hmm,
    ZeroLikelihoodError,
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
from markovwin.constructions import PermutationLabelSpec, build_cycle_hmm, build_permutation_hmm
from markovwin.errors import ConvergenceError, InvalidModelError


def path_oracle(h, prefix, prior):
    """Belief over the next emitter by summing over every hidden path."""
    T, E = h.transition, h.emission
    L = len(prefix)
    out = np.zeros(h.n)
    for path in itertools.product(range(h.n), repeat=L + 1):
        p = prior[path[0]]
        for t in range(L):
            p *= E[path[t], prefix[t]] * T[path[t], path[t + 1]]
        out[path[-1]] += p
    return out / out.sum()


def sequence_oracle(h, prefix, prior):
    """P(x_t | prefix) as a ratio of joint sequence probabilities."""

    def prob(seq):
        a = np.asarray(prior, dtype=float)
        for x in seq:
            a = (a * h.emission[:, x]) @ h.transition
        return a.sum()

    joint = np.array([prob(list(prefix) + [x]) for x in range(h.d)])
    return joint / prob(prefix)


hmm_params = st.tuples(st.integers(1, 4), st.integers(2, 3), st.integers(0, 2**31))


# --- validate -----------------------------------------------------------------

def test_validate_accepts_identity():
    assert validate(Hmm(np.eye(2), [[1, 0], [0, 1]], [0.5, 0.5])).ok


def test_validate_names_bad_row():
    res = validate(Hmm([[0.5, 0.5], [0.5, 0.4]], np.eye(2), [0.5, 0.5]))
    assert not res.ok
    assert any("transition row 1" in p for p in res.problems)


def test_validate_names_negative_cell():
    res = validate(Hmm(np.eye(2), [[1.2, -0.2], [0.5, 0.5]], [1.0, 0.0]))
    assert any("emission[0][1]" in p for p in res.problems)


def test_hmm_arrays_are_read_only(small_hmm):
    with pytest.raises(ValueError):
        small_hmm.transition[0, 0] = 1.0


def test_file_round_trip(tmp_path, small_hmm):
    path = tmp_path / "m.json"
    save_hmm(small_hmm, path)
    back = load_hmm(path)
    assert np.array_equal(back.transition, small_hmm.transition)
    assert np.array_equal(back.emission, small_hmm.emission)


def test_from_dict_rejects_bad_model(small_hmm):
    doc = small_hmm.to_dict()
    doc["initial"] = [0.5, 0.5, 0.5]
    with pytest.raises(InvalidModelError) as info:
        Hmm.from_dict(doc)
    assert info.value.problems


# --- sample -------------------------------------------------------------------

def test_sample_deterministic(small_hmm):
    a, b = sample(small_hmm, 50, 3), sample(small_hmm, 50, 3)
    assert np.array_equal(a.hidden, b.hidden) and np.array_equal(a.observed, b.observed)


def test_sample_empty(small_hmm):
    assert len(sample(small_hmm, 0, 1).observed) == 0


def test_sample_binomial_frequency():
    h = Hmm([[1.0]], [[0.3, 0.7]], [1.0])
    x = sample(h, 100_000, 5).observed
    sd = math.sqrt(0.7 * 0.3 / len(x))
    assert abs(x.mean() - 0.7) <= 3 * sd


def test_sample_cycle_repeats_bits():
    bits = [0, 1, 1, 0, 1]
    h = build_cycle_hmm(bits)
    x = sample(h, 20, 2).observed
    phase = int(sample(h, 20, 2).hidden[0])
    expect = [bits[(phase + t) % len(bits)] for t in range(20)]
    assert list(x) == expect


# --- forward_filter / predict_next ----------------------------------------------

def test_filter_deterministic_emission():
    h = Hmm([[0.5, 0.5], [0.5, 0.5]], np.eye(2), [0.5, 0.5])
    # pre-propagation posterior is the indicator of state 1; one step later it is T's row
    b = forward_filter(h, [1])
    assert np.allclose(b.weights, h.transition[1])


def test_filter_uninformative_emission(small_hmm):
    h = Hmm(small_hmm.transition, np.tile([0.4, 0.6], (3, 1)), small_hmm.initial)
    prefix = [0, 1, 1, 0]
    expect = small_hmm.initial @ np.linalg.matrix_power(h.transition, len(prefix))
    assert np.allclose(forward_filter(h, prefix).weights, expect, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(hmm_params, st.lists(st.integers(0, 2), max_size=6))
def test_filter_matches_path_enumeration(params, prefix):
    n, d, seed = params
    h = dirichlet_hmm(n, d, seed)
    prefix = [x % d for x in prefix]
    got = forward_filter(h, prefix).weights
    assert np.allclose(got, path_oracle(h, prefix, h.initial), atol=1e-12, rtol=0)


def test_filter_log_likelihood(small_hmm):
    prefix = [0, 1, 1, 0, 1]
    total = sum(
        small_hmm.initial[p[0]]
        * math.prod(small_hmm.emission[p[t], prefix[t]] for t in range(5))
        * math.prod(small_hmm.transition[p[t], p[t + 1]] for t in range(4))
        for p in itertools.product(range(3), repeat=5)
    )
    assert forward_filter(small_hmm, prefix).log_likelihood == pytest.approx(math.log(total), abs=1e-12)


def test_filter_zero_likelihood():
    h = Hmm(np.eye(2), np.eye(2), [1.0, 0.0])
    with pytest.raises(ZeroLikelihoodError) as info:
        forward_filter(h, [0, 1])
    assert info.value.step == 1 and info.value.symbol == 1


def test_filter_rejects_bad_symbol(small_hmm):
    with pytest.raises(ValueError):
        forward_filter(small_hmm, [2])


def test_predict_indicator_and_uniform(small_hmm):
    for i in range(3):
        w = np.eye(3)[i]
        assert np.array_equal(predict_next(small_hmm, BeliefState(w)), small_hmm.emission[i])
    h = Hmm(small_hmm.transition, np.tile([0.2, 0.8], (3, 1)), small_hmm.initial)
    assert np.allclose(predict_next(h, BeliefState(np.full(3, 1 / 3))), [0.2, 0.8])


@settings(max_examples=40, deadline=None)
@given(hmm_params, st.lists(st.integers(0, 2), max_size=6))
def test_predict_matches_sequence_enumeration(params, prefix):
    n, d, seed = params
    h = dirichlet_hmm(n, d, seed)
    prefix = [x % d for x in prefix]
    got = predict_next(h, forward_filter(h, prefix))
    assert abs(got.sum() - 1) <= 1e-10
    assert np.allclose(got, sequence_oracle(h, prefix, h.initial), atol=1e-12, rtol=0)


@settings(max_examples=40, deadline=None)
@given(hmm_params, st.integers(0, 2**31))
def test_total_probability(params, wseed):
    n, d, seed = params
    h = dirichlet_hmm(n, d, seed)
    w = np.random.default_rng(wseed).dirichlet(np.ones(n))
    mix = sum(w[i] * predict_next(h, BeliefState(np.eye(n)[i])) for i in range(n))
    assert np.allclose(predict_next(h, BeliefState(w)), mix, atol=1e-12)


# --- window and OPT predictors -----------------------------------------------------

def test_window_empty_is_prior_emission(small_hmm):
    assert np.allclose(window_optimal_predict(small_hmm, small_hmm.initial, []), small_hmm.initial @ small_hmm.emission)


def test_window_identifies_cycle_phase():
    bits = [0, 0, 1, 0, 1, 1, 1, 0]
    h = build_cycle_hmm(bits)
    pi = stationary_distribution(h)
    for start in range(8):
        window = [bits[(start + j) % 8] for j in range(4)]
        nxt = bits[(start + 4) % 8]
        assert np.allclose(window_optimal_predict(h, pi, window), np.eye(2)[nxt])


def test_window_permutation_enumeration():
    h = build_permutation_hmm(PermutationLabelSpec.random(8, 0.25, seed=1))
    pi = stationary_distribution(h)
    for window in itertools.product((0, 1), repeat=3):
        assert np.allclose(window_optimal_predict(h, pi, window), sequence_oracle(h, window, pi), atol=1e-12)


def test_opt_predict(small_hmm):
    # empty window: the emission row of h0 itself, which emits x_0
    assert np.allclose(opt_predict(small_hmm, 1, []), small_hmm.emission[1])
    for window in itertools.product((0, 1), repeat=3):
        assert np.allclose(opt_predict(small_hmm, 2, window), sequence_oracle(small_hmm, window, np.eye(3)[2]), atol=1e-12)
    with pytest.raises(ValueError):
        opt_predict(small_hmm, 3, [])


def test_opt_predict_deterministic_emission():
    h = Hmm([[0, 1, 0], [0, 0, 1], [1, 0, 0]], [[1, 0], [0, 1], [0, 1]], [1 / 3] * 3)
    assert np.array_equal(opt_predict(h, 0, [0, 1]), [0.0, 1.0])


# --- stationary distribution ------------------------------------------------------

def test_stationary_doubly_stochastic():
    T = np.array([[0.2, 0.5, 0.3], [0.5, 0.3, 0.2], [0.3, 0.2, 0.5]])
    assert np.allclose(stationary_distribution(Hmm(T, np.full((3, 2), 0.5), [1, 0, 0])), 1 / 3)


def test_stationary_cycle_is_uniform():
    h = build_cycle_hmm([0, 1, 1, 0, 1])
    assert np.allclose(stationary_distribution(h), 0.2)


@pytest.mark.parametrize("seed", range(5))
def test_stationary_residual(seed):
    h = dirichlet_hmm(4, 2, seed)
    pi = stationary_distribution(h)
    assert np.abs(pi @ h.transition - pi).sum() <= 1e-10


def test_stationary_convergence_error():
    h = Hmm([[1 - 1e-9, 1e-9], [3e-9, 1 - 3e-9]], np.full((2, 2), 0.5), [1, 0])
    with pytest.raises(ConvergenceError) as info:
        stationary_distribution(h, tol=1e-15, max_iter=2)
    assert info.value.residual > 0
