import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import dense_normalize, random_instance
from daac.errors import ConsistencyError, DimensionError, DomainError
from daac.matcore import (
    SparseMatrix,
    degree_vector,
    frobenius_sq_masked,
    masked_apply,
    masked_lowrank,
    pos_neg_split,
    symmetric_normalize,
    values_on_pattern,
    weight_mask,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_canonical_form_sums_duplicates_and_drops_zeros():
    m = SparseMatrix.from_entries(3, 3, [0, 0, 1, 2], [1, 1, 2, 0], [1.0, 2.0, 0.0, -1.0])
    assert m.entries() == [(0, 1, 3.0), (2, 0, -1.0)]
    cancel = SparseMatrix.from_entries(2, 2, [0, 0], [1, 1], [1.0, -1.0])
    assert cancel.nnz == 0


def test_indices_sorted_and_immutable():
    m = SparseMatrix.from_entries(2, 4, [0, 0, 0], [3, 0, 2], [1.0, 2.0, 3.0])
    assert m.csr.indices.tolist() == [0, 2, 3]
    with pytest.raises(ValueError):
        m.data[0] = 5.0


def test_rejects_non_finite_and_out_of_range():
    with pytest.raises(DomainError):
        SparseMatrix.from_dense([[np.nan, 0], [0, 1]])
    with pytest.raises(DimensionError):
        SparseMatrix.from_entries(2, 2, [2], [0], [1.0])


def test_nonnegative_flag():
    with pytest.raises(DomainError):
        SparseMatrix.from_dense([[0, -1], [1, 0]], nonnegative=True)
    assert SparseMatrix.from_dense([[0, 1], [1, 0]], nonnegative=True).nonnegative


def test_with_pattern_matches_full_constructor(rng):
    S, *_ = random_instance(rng, 8, 2)
    vals = rng.normal(size=S.nnz)
    assert SparseMatrix.with_pattern(S, vals) == SparseMatrix.from_entries(8, 8, *S.coords(), vals)
    vals[0] = 0.0
    fast = SparseMatrix.with_pattern(S, vals)
    assert fast.nnz == S.nnz - 1
    with pytest.raises(DimensionError):
        SparseMatrix.with_pattern(S, vals[:-1])


def test_transpose_and_tdot(rng):
    S, *_ = random_instance(rng, 7, 2)
    X = rng.normal(size=(7, 3))
    np.testing.assert_allclose(S.tdot(X), S.to_dense().T @ X, rtol=1e-13, atol=1e-13)
    assert S.T.T == S


def test_degree_and_normalize_match_dense(rng):
    _, R, *_ = random_instance(rng, 9, 2)
    D = R.to_dense()
    np.testing.assert_allclose(degree_vector(R), D.sum(axis=1))
    np.testing.assert_allclose(symmetric_normalize(R).to_dense(), dense_normalize(D), rtol=1e-14)


def test_normalize_drops_isolated_and_rejects_negative():
    R = SparseMatrix.from_dense([[0, 2, 0], [2, 0, 0], [0, 0, 0]])
    N = symmetric_normalize(R)
    assert N.to_dense()[2].sum() == 0 and N.to_dense()[0, 1] == pytest.approx(1.0)
    with pytest.raises(DomainError):
        symmetric_normalize(SparseMatrix.from_dense([[0, -1], [-1, 0]]))
    with pytest.raises(DimensionError):
        degree_vector(SparseMatrix.empty(2, 3))


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_pos_neg_split_dense(A):
    P, M = pos_neg_split(A)
    assert np.all(P >= 0) and np.all(M >= 0)
    assert np.all((P == 0) | (M == 0))
    np.testing.assert_array_equal(P - M, A)


def test_pos_neg_split_sparse(rng):
    S, *_ = random_instance(rng, 10, 2)
    P, M = pos_neg_split(S)
    assert P.nonnegative and M.nonnegative
    np.testing.assert_array_equal(P.to_dense() - M.to_dense(), S.to_dense())


def test_masked_kernels_match_dense(rng):
    for _ in range(20):
        n, k = rng.integers(2, 12), rng.integers(1, 4)
        S, _, U, H = random_instance(rng, n, k)
        W = weight_mask(S)
        Wd, Sd = W.to_dense(), S.to_dense()
        np.testing.assert_allclose(masked_apply(W, S).to_dense(), Wd * Wd * Sd, rtol=1e-14)
        model = Wd * Wd * (U @ H @ U.T)
        np.testing.assert_allclose(masked_lowrank(W, U, H, U).to_dense(), model,
                                   rtol=1e-12, atol=1e-14)
        ref = np.sum((Wd * (Sd - U @ H @ U.T)) ** 2)
        assert frobenius_sq_masked(W, S, U, H) == pytest.approx(ref, rel=1e-12)


def test_masked_apply_needs_same_pattern(rng):
    S, *_ = random_instance(rng, 6, 2)
    with pytest.raises(ConsistencyError):
        masked_apply(SparseMatrix.empty(6), S)


def test_masked_lowrank_shape_checks(rng):
    S, _, U, H = random_instance(rng, 6, 2)
    W = weight_mask(S)
    with pytest.raises(DimensionError):
        masked_lowrank(W, U[:-1], H, U)
    with pytest.raises(DimensionError):
        masked_lowrank(W, U, np.zeros((3, 3)), U)


def test_values_on_pattern_fills_zeros():
    W = SparseMatrix.from_dense([[1, 1], [0, 1]])
    S = SparseMatrix.from_dense([[0, 2], [5, 3]])
    assert values_on_pattern(W, S).tolist() == [0.0, 2.0, 3.0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_masked_lowrank_never_densifies_pattern(seed):
    rng = np.random.default_rng(seed)
    S, _, U, H = random_instance(rng, 15, 3, density=0.1)
    W = weight_mask(S)
    out = masked_lowrank(W, U, H, U)
    assert out.nnz <= W.nnz
    assert sp.isspmatrix_csr(out.csr)
