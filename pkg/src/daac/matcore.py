"""Sparse/dense matrix types and the kernels used by the DAAC update rules.

Sparse matrices wrap a canonical ``scipy.sparse.csr_matrix`` (sorted column
indices, summed duplicates, no stored zeros). Dense matrices are plain
``float64`` numpy arrays. All kernels are sequential and deterministic.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ConsistencyError, DimensionError, DomainError


class SparseMatrix:
    """Immutable sparse matrix in canonical CSR form.

    Args:
        csr: anything ``scipy.sparse.csr_matrix`` accepts. Duplicates are
            summed and entries that end up exactly zero are dropped.
        nonnegative: if True, every stored value must be > 0.
    """

    __slots__ = ("_csr", "nonnegative", "_coords")

    def __init__(self, csr, nonnegative=False):
        m = sp.csr_matrix(csr, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        if not np.all(np.isfinite(m.data)):
            raise DomainError("sparse matrix has non-finite entries")
        if nonnegative and m.nnz and m.data.min() <= 0:
            raise DomainError("matrix flagged nonnegative has a negative entry")
        for arr in (m.data, m.indices, m.indptr):
            arr.flags.writeable = False
        self._csr = m
        self.nonnegative = bool(nonnegative)
        self._coords = None

    @classmethod
    def with_pattern(cls, template, data):
        """Matrix with ``template``'s sparsity pattern and new values.

        Skips re-canonicalization; stored zeros in ``data`` are removed.
        """
        data = np.array(data, dtype=np.float64)
        if data.shape != template.data.shape:
            raise DimensionError("data length does not match the pattern")
        if not np.all(data):
            return cls(
                sp.csr_matrix((data, template.csr.indices, template.csr.indptr),
                              shape=template.shape)
            )
        out = cls.__new__(cls)
        m = sp.csr_matrix(
            (data, template.csr.indices, template.csr.indptr), shape=template.shape, copy=False
        )
        m.has_sorted_indices = True
        m.has_canonical_format = True
        if not np.all(np.isfinite(data)):
            raise DomainError("sparse matrix has non-finite entries")
        data.flags.writeable = False
        out._csr = m
        out.nonnegative = False
        out._coords = template.coords()
        return out

    @classmethod
    def from_entries(cls, n_rows, n_cols, rows, cols, values, nonnegative=False):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if rows.size and (
            rows.min() < 0 or cols.min() < 0 or rows.max() >= n_rows or cols.max() >= n_cols
        ):
            raise DimensionError("entry index out of range")
        coo = sp.coo_matrix((values, (rows, cols)), shape=(n_rows, n_cols))
        return cls(coo, nonnegative=nonnegative)

    @classmethod
    def from_dense(cls, a, nonnegative=False):
        return cls(np.asarray(a, dtype=np.float64), nonnegative=nonnegative)

    @classmethod
    def empty(cls, n_rows, n_cols=None):
        n_cols = n_rows if n_cols is None else n_cols
        return cls(sp.csr_matrix((n_rows, n_cols)))

    @property
    def csr(self):
        return self._csr

    @property
    def shape(self):
        return self._csr.shape

    @property
    def n_rows(self):
        return self._csr.shape[0]

    @property
    def n_cols(self):
        return self._csr.shape[1]

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def data(self):
        return self._csr.data

    def coords(self):
        """Row and column index arrays of the stored entries, in CSR order."""
        if self._coords is None:
            rows = np.repeat(np.arange(self.n_rows), np.diff(self._csr.indptr))
            cols = self._csr.indices.astype(np.int64)
            rows.flags.writeable = False
            cols.flags.writeable = False
            self._coords = (rows, cols)
        return self._coords

    def entries(self):
        rows, cols = self.coords()
        return list(zip(rows.tolist(), cols.tolist(), self._csr.data.tolist()))

    def same_pattern(self, other):
        return (
            self.shape == other.shape
            and np.array_equal(self._csr.indptr, other.csr.indptr)
            and np.array_equal(self._csr.indices, other.csr.indices)
        )

    def transpose(self):
        return SparseMatrix(self._csr.T, nonnegative=self.nonnegative)

    @property
    def T(self):
        return self.transpose()

    def tdot(self, X):
        """``self^T @ X`` for a dense ``X`` without building the transpose."""
        return self._csr.T @ X

    def to_dense(self):
        return self._csr.toarray()

    def is_symmetric(self):
        if self.n_rows != self.n_cols:
            return False
        return (self._csr != self._csr.T).nnz == 0

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return SparseMatrix(self._csr @ other.csr)
        return self._csr @ other

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.same_pattern(other) and np.array_equal(self.data, other.data)

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def check_finite(a, name="matrix"):
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains NaN or Inf")
    return a


def _require_square(m, name="matrix"):
    if m.n_rows != m.n_cols:
        raise DimensionError(f"{name} must be square, got {m.shape}")


def degree_vector(R):
    """Row sums ``d_i = sum_j R_ij``."""
    _require_square(R, "R")
    return np.asarray(R.csr.sum(axis=1)).ravel()


def symmetric_normalize(R):
    """``D^{-1/2} R D^{-1/2}``; entries touching a zero-degree node are dropped."""
    _require_square(R, "R")
    if R.nnz and R.data.min() < 0:
        raise DomainError("interaction matrix has a negative entry")
    d = degree_vector(R)
    inv_sqrt = np.zeros_like(d)
    pos = d > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(d[pos])
    rows, cols = R.coords()
    vals = R.data * inv_sqrt[rows] * inv_sqrt[cols]
    return SparseMatrix.from_entries(R.n_rows, R.n_cols, rows, cols, vals, nonnegative=True)


def pos_neg_split(A):
    """Split ``A`` into nonnegative parts with ``A = A_plus - A_minus``.

    Works on dense arrays and on :class:`SparseMatrix`.
    """
    if isinstance(A, SparseMatrix):
        rows, cols = A.coords()
        pos = A.data > 0
        plus = SparseMatrix.from_entries(
            A.n_rows, A.n_cols, rows[pos], cols[pos], A.data[pos], nonnegative=True
        )
        minus = SparseMatrix.from_entries(
            A.n_rows, A.n_cols, rows[~pos], cols[~pos], -A.data[~pos], nonnegative=True
        )
        return plus, minus
    A = np.asarray(A, dtype=np.float64)
    # max/min give bitwise-exact parts; (|A| +/- A)/2 can round.
    return np.maximum(A, 0.0), np.maximum(-A, 0.0)


def weight_mask(S):
    """0/1 matrix with a 1 at every stored entry of ``S``."""
    rows, cols = S.coords()
    return SparseMatrix.from_entries(
        S.n_rows, S.n_cols, rows, cols, np.ones(S.nnz), nonnegative=True
    )


def masked_apply(W, S):
    """``W * W * S`` elementwise, for ``W`` and ``S`` sharing a sparsity pattern."""
    if not W.same_pattern(S):
        raise ConsistencyError("mask and matrix have different sparsity patterns")
    return SparseMatrix.with_pattern(W, W.data**2 * S.data)


def _lowrank_on_pattern(W, U, H, V):
    n, m = W.shape
    if U.shape[0] != n or V.shape[0] != m:
        raise DimensionError("factor row counts do not match the mask")
    if H.shape != (U.shape[1], V.shape[1]):
        raise DimensionError(f"H has shape {H.shape}, expected {(U.shape[1], V.shape[1])}")
    rows, cols = W.coords()
    UH = U @ H
    return rows, cols, np.einsum("ij,ij->i", UH[rows], V[cols])


def masked_lowrank(W, U, H, V):
    """``W * W * (U H V^T)`` evaluated only on the pattern of ``W``.

    ``U H`` is formed once; each stored entry then costs one length-k dot
    product, so ``U H V^T`` is never materialized.
    """
    _, _, vals = _lowrank_on_pattern(W, U, H, V)
    return SparseMatrix.with_pattern(W, W.data**2 * vals)


def values_on_pattern(W, S):
    """Values of ``S`` at the stored positions of ``W`` (zero where S has none)."""
    if W.same_pattern(S):
        return S.data
    if S.shape != W.shape:
        raise DimensionError("mask and matrix shapes differ")
    rows, cols = W.coords()
    if rows.size == 0:
        return np.zeros(0)
    return np.asarray(S.csr[rows, cols]).ravel()


def frobenius_sq_masked(W, S, U, H):
    """``sum over W's entries of W_ij^2 (S_ij - (U H U^T)_ij)^2``."""
    if S.shape != W.shape:
        raise DimensionError("mask and matrix shapes differ")
    _, _, approx = _lowrank_on_pattern(W, U, H, U)
    resid = values_on_pattern(W, S) - approx
    return float(np.sum(W.data**2 * resid**2))
