from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovwin.codes import (
    BinaryMatrix,
    CodeSearchFailed,
    LinearCode,
    check_t_wise_uniform,
    find_code_with_dual_distance,
    gf2_rank,
    min_distance,
    nullspace_basis,
    search_code,
    span,
)


def xor_basis_rank(rows):
    """Rank by inserting row bitmasks into a xor basis keyed by leading bit."""
    basis = {}
    for row in rows:
        x = int("".join(map(str, row)), 2)
        while x:
            top = x.bit_length() - 1
            if top not in basis:
                basis[top] = x
                break
            x ^= basis[top]
    return len(basis)


def bit_matrices(max_rows=6, max_cols=12):
    return st.tuples(st.integers(1, max_rows), st.integers(1, max_cols), st.integers(0, 2**32 - 1)).map(
        lambda t: np.random.default_rng(t[2]).integers(0, 2, size=(t[0], t[1]))
    )


def test_binary_matrix_text_round_trip():
    M = BinaryMatrix([[1, 0, 1], [0, 1, 1]])
    assert BinaryMatrix.from_text(M.to_text()) == M
    assert M.T.rows == 3
    with pytest.raises(ValueError):
        BinaryMatrix([[0, 2]])
    with pytest.raises(ValueError):
        BinaryMatrix.from_text("01\n1\n")


def test_rank_trivial():
    assert gf2_rank(np.eye(5, dtype=int)) == 5
    assert gf2_rank(np.zeros((3, 4), dtype=int)) == 0


@settings(max_examples=200)
@given(bit_matrices())
def test_rank_matches_xor_basis(M):
    assert gf2_rank(M) == xor_basis_rank(M)


def test_rank_random_5x10():
    M = np.random.default_rng(5).integers(0, 2, size=(5, 10))
    assert gf2_rank(M) == xor_basis_rank(M)


def test_nullspace_examples():
    assert nullspace_basis(np.eye(4, dtype=int)) == []
    basis = nullspace_basis([[1, 1, 1]])
    assert len(basis) == 2 and all(int(v.sum()) % 2 == 0 for v in basis)


@settings(max_examples=100)
@given(bit_matrices())
def test_nullspace_by_enumeration(A):
    A = np.asarray(A)
    basis = nullspace_basis(A)
    assert len(basis) == A.shape[1] - gf2_rank(A)
    for v in basis:
        assert not ((A @ v) % 2).any()
    cube = np.array(list(itertools.product((0, 1), repeat=A.shape[1])))
    kernel = {tuple(r) for r in cube[((cube @ A.T) % 2 == 0).all(axis=1)]}
    assert {tuple(r) for r in span(basis, A.shape[1])} == kernel


def test_min_distance_examples():
    assert min_distance(LinearCode(BinaryMatrix([[1], [1], [1]]))) == 3
    assert min_distance(LinearCode(BinaryMatrix(np.eye(4, dtype=int)))) == 1


def test_min_distance_random_code():
    rng = np.random.default_rng(10)
    while True:
        G = rng.integers(0, 2, size=(10, 4))
        if gf2_rank(G) == 4:
            break
    oracle = min(
        int(((G @ np.array(u)) % 2).sum()) for u in itertools.product((0, 1), repeat=4) if any(u)
    )
    assert min_distance(LinearCode(BinaryMatrix(G))) == oracle


def test_code_requires_full_column_rank():
    with pytest.raises(ValueError):
        LinearCode(BinaryMatrix([[1, 1], [1, 1], [0, 0]]))


def test_t_wise_examples():
    ones = BinaryMatrix([[1, 1, 1]])
    assert check_t_wise_uniform(ones, 2)
    assert not check_t_wise_uniform(ones, 3)
    assert not check_t_wise_uniform(np.eye(3, dtype=int), 1)
    assert check_t_wise_uniform(ones, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 10), st.integers(0, 2**31))
def test_distance_implies_uniformity(k, seed):
    m = max(1, k // 3)
    G = np.random.default_rng(seed).integers(0, 2, size=(k, m))
    if gf2_rank(G) < m:
        return
    code = LinearCode(BinaryMatrix(G))
    A = code.parity_matrix()
    dist = code.min_distance
    assert check_t_wise_uniform(A, dist - 1)
    # and the bound is tight: not dist-wise uniform
    assert not check_t_wise_uniform(A, dist)


def test_duality_ranks():
    for seed in range(10):
        res = search_code(8, 3, 2, seed=seed)
        assert res.code.rank + res.code.dual().rank == 8


def test_search_examples():
    res = search_code(8, 4, 2, seed=1)
    assert res.attempts >= 1 and check_t_wise_uniform(res.A, 1)
    assert (res.A.rows, res.A.cols) == (4, 8)
    with pytest.raises(CodeSearchFailed) as info:
        search_code(5, 2, 6)
    assert info.value.attempts == 0


def test_search_exhausts_budget():
    # a [4, 3] code has distance at most 2
    with pytest.raises(CodeSearchFailed) as info:
        search_code(4, 3, 3, budget=50, seed=0)
    assert info.value.attempts == 50


def test_search_sweep_k10_m5():
    wins = 0
    for seed in range(100):
        try:
            find_code_with_dual_distance(10, 5, 2, budget=20, seed=seed)
            wins += 1
        except CodeSearchFailed:
            pass
    assert wins >= 1
