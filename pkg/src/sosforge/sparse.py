"""Compressed sparse column (CSC) matrices.

A deliberately small kernel: only the operations the polynomial layer needs.
Every public operation returns a canonical matrix (row indices strictly
increasing within a column, no stored zeros), so ``nnz`` is always the true
number of nonzeros.

Coefficient matrices use float64; degree matrices use int64 (exponents are
nonnegative by construction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError

INDEX = np.int64


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMat:
    """Canonical CSC matrix: ``vals``/``rowidx`` of length nnz, ``colptr`` of length ncols+1."""

    nrows: int
    ncols: int
    vals: np.ndarray
    rowidx: np.ndarray
    colptr: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    @property
    def dtype(self):
        return self.vals.dtype

    def colidx(self) -> np.ndarray:
        """Column index of every stored entry."""
        return np.repeat(np.arange(self.ncols, dtype=INDEX), np.diff(self.colptr))

    def coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.rowidx, self.colidx(), self.vals

    def col(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.colptr[j], self.colptr[j + 1]
        return self.rowidx[lo:hi], self.vals[lo:hi]

    def col_nnz(self) -> np.ndarray:
        return np.diff(self.colptr)

    def row_nnz(self) -> np.ndarray:
        return np.bincount(self.rowidx, minlength=self.nrows)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=self.vals.dtype)
        r, c, v = self.coo()
        out[r, c] = v
        return out

    def check(self) -> None:
        """Raise AssertionError unless every CSC invariant holds."""
        cp = self.colptr
        assert cp.shape == (self.ncols + 1,)
        assert cp[0] == 0 and cp[-1] == self.nnz
        assert np.all(np.diff(cp) >= 0)
        assert self.rowidx.shape == self.vals.shape
        if self.nnz:
            assert self.rowidx.min() >= 0 and self.rowidx.max() < self.nrows
            assert np.all(self.vals != 0)
            c = self.colidx()
            same = c[1:] == c[:-1]
            assert np.all(self.rowidx[1:][same] > self.rowidx[:-1][same])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseMat):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.colptr, other.colptr)
            and np.array_equal(self.rowidx, other.rowidx)
            and np.array_equal(self.vals, other.vals)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SparseMat({self.nrows}x{self.ncols}, nnz={self.nnz}, dtype={self.dtype})"


def _build(rows, cols, vals, nrows: int, ncols: int) -> SparseMat:
    """Wrap arrays already in canonical column-major order."""
    colptr = np.zeros(ncols + 1, dtype=INDEX)
    if cols.size:
        np.cumsum(np.bincount(cols, minlength=ncols), out=colptr[1:])
    return SparseMat(
        int(nrows),
        int(ncols),
        _frozen(np.ascontiguousarray(vals)),
        _frozen(np.ascontiguousarray(rows, dtype=INDEX)),
        _frozen(colptr),
    )


def _assemble(rows, cols, vals, nrows: int, ncols: int, *, sum_duplicates=True) -> SparseMat:
    """Sort triplets column-major, sum duplicates, drop zeros."""
    if rows.size == 0:
        return empty(nrows, ncols, vals.dtype)
    if nrows * ncols < 2**62:
        order = np.argsort(cols * nrows + rows, kind="stable")
    else:
        order = np.lexsort((rows, cols))
    r, c, v = rows[order], cols[order], vals[order]
    if sum_duplicates and r.size > 1:
        new = np.empty(r.size, dtype=bool)
        new[0] = True
        np.not_equal(r[1:], r[:-1], out=new[1:])
        new[1:] |= c[1:] != c[:-1]
        if not new.all():
            starts = np.flatnonzero(new)
            v = np.add.reduceat(v, starts)
            r, c = r[starts], c[starts]
    keep = v != 0
    if not keep.all():
        r, c, v = r[keep], c[keep], v[keep]
    return _build(r, c, v, nrows, ncols)


def empty(nrows: int, ncols: int, dtype=np.float64) -> SparseMat:
    return _build(
        np.zeros(0, dtype=INDEX), np.zeros(0, dtype=INDEX), np.zeros(0, dtype=dtype), nrows, ncols
    )


def from_triplets(rows, cols, vals, shape: tuple[int, int], dtype=None) -> SparseMat:
    """Build a canonical matrix from coordinate triplets; duplicates are summed."""
    rows = np.asarray(rows, dtype=INDEX).ravel()
    cols = np.asarray(cols, dtype=INDEX).ravel()
    vals = np.asarray(vals, dtype=dtype if dtype is not None else np.float64).ravel()
    if not (rows.size == cols.size == vals.size):
        raise ArgumentError("triplet arrays must have equal length")
    nrows, ncols = (int(s) for s in shape)
    if nrows < 0 or ncols < 0:
        raise DimensionError(f"negative shape {shape}")
    if rows.size and (
        rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols
    ):
        raise DimensionError(f"triplet index out of bounds for shape {shape}")
    return _assemble(rows, cols, vals, nrows, ncols)


def from_dense(a, dtype=None) -> SparseMat:
    a = np.asarray(a, dtype=dtype if dtype is not None else np.float64)
    if a.ndim != 2:
        raise DimensionError("from_dense expects a 2-D array")
    c, r = np.nonzero(a.T)
    return _build(r.astype(INDEX), c.astype(INDEX), a[r, c], a.shape[0], a.shape[1])


def identity(n: int) -> SparseMat:
    idx = np.arange(n, dtype=INDEX)
    return _build(idx, idx, np.ones(n), n, n)


def scatter(a: SparseMat, rowmap, colmap, shape: tuple[int, int]) -> SparseMat:
    """Move entry (i, j) to (rowmap[i], colmap[j]); colliding entries are summed."""
    r, c, v = a.coo()
    rowmap = np.asarray(rowmap, dtype=INDEX)
    colmap = np.asarray(colmap, dtype=INDEX)
    return _assemble(rowmap[r], colmap[c], v, int(shape[0]), int(shape[1]))


def kron(a: SparseMat, b: SparseMat) -> SparseMat:
    """Kronecker product; touches exactly nnz(a) * nnz(b) products."""
    ra, ca, va = a.coo()
    rb, cb, vb = b.coo()
    rows = (ra[:, None] * b.nrows + rb[None, :]).ravel()
    cols = (ca[:, None] * b.ncols + cb[None, :]).ravel()
    vals = (va[:, None] * vb[None, :]).ravel()
    return _assemble(
        rows, cols, vals, a.nrows * b.nrows, a.ncols * b.ncols, sum_duplicates=False
    )


def _check_injection(perm, n: int, what: str, *, full: bool) -> np.ndarray:
    perm = np.asarray(perm, dtype=INDEX).ravel()
    if full and perm.size != n:
        raise ArgumentError(f"{what} permutation must have length {n}")
    if perm.size:
        if perm.min() < 0 or perm.max() >= n:
            raise ArgumentError(f"{what} index out of range")
        seen = np.zeros(n, dtype=bool)
        seen[perm] = True
        if int(seen.sum()) != perm.size:
            raise ArgumentError(f"{what} indices must be distinct")
    return perm


def _gather_cols(a: SparseMat, src: np.ndarray) -> SparseMat:
    """Column j of the result is column src[j] of a, or empty where src[j] < 0."""
    valid = src >= 0
    counts = np.zeros(src.size, dtype=INDEX)
    counts[valid] = np.diff(a.colptr)[src[valid]]
    colptr = np.zeros(src.size + 1, dtype=INDEX)
    np.cumsum(counts, out=colptr[1:])
    starts = np.zeros(src.size, dtype=INDEX)
    starts[valid] = a.colptr[src[valid]]
    idx = np.repeat(starts - colptr[:-1], counts) + np.arange(colptr[-1], dtype=INDEX)
    return SparseMat(
        a.nrows, int(src.size), _frozen(a.vals[idx]), _frozen(a.rowidx[idx]), _frozen(colptr)
    )


def permute_cols(a: SparseMat, perm, *, gather: bool = False) -> SparseMat:
    """Column j of the result is column perm[j] of a.

    With ``gather=True`` perm may be any injection (a subset of columns, in
    any order); otherwise it must be a full permutation.
    """
    perm = _check_injection(perm, a.ncols, "column", full=not gather)
    return _gather_cols(a, perm)


def permute_rows(a: SparseMat, perm, *, gather: bool = False) -> SparseMat:
    """Row i of the result is row perm[i] of a (see :func:`permute_cols`)."""
    perm = _check_injection(perm, a.nrows, "row", full=not gather)
    inv = np.full(a.nrows, -1, dtype=INDEX)
    inv[perm] = np.arange(perm.size, dtype=INDEX)
    r, c, v = a.coo()
    nr = inv[r]
    keep = nr >= 0
    if not keep.all():
        nr, c, v = nr[keep], c[keep], v[keep]
    return _assemble(nr, c, v, int(perm.size), a.ncols, sum_duplicates=False)


def embed_cols(a: SparseMat, inj, ncols: int) -> SparseMat:
    """Column k of a becomes column inj[k] of an ``ncols``-column result."""
    inj = _check_injection(inj, ncols, "column", full=False)
    if inj.size != a.ncols:
        raise DimensionError("embedding needs one target per column")
    src = np.full(ncols, -1, dtype=INDEX)
    src[inj] = np.arange(a.ncols, dtype=INDEX)
    return _gather_cols(a, src)


def hcat(a: SparseMat, b: SparseMat) -> SparseMat:
    if a.nrows != b.nrows:
        raise DimensionError(f"hcat needs equal row counts, got {a.nrows} and {b.nrows}")
    vals = np.concatenate([a.vals, b.vals.astype(a.vals.dtype, copy=False)])
    colptr = np.concatenate([a.colptr, b.colptr[1:] + a.nnz])
    return SparseMat(
        a.nrows,
        a.ncols + b.ncols,
        _frozen(vals),
        _frozen(np.concatenate([a.rowidx, b.rowidx])),
        _frozen(colptr),
    )


def vcat(a: SparseMat, b: SparseMat) -> SparseMat:
    if a.ncols != b.ncols:
        raise DimensionError(f"vcat needs equal column counts, got {a.ncols} and {b.ncols}")
    if b.nrows == 0:
        return a
    if a.nrows == 0:
        return b
    ra, ca, va = a.coo()
    rb, cb, vb = b.coo()
    return _assemble(
        np.concatenate([ra, rb + a.nrows]),
        np.concatenate([ca, cb]),
        np.concatenate([va, vb.astype(va.dtype, copy=False)]),
        a.nrows + b.nrows,
        a.ncols,
        sum_duplicates=False,
    )


def transpose(a: SparseMat) -> SparseMat:
    r, c, v = a.coo()
    return _assemble(c, r, v, a.ncols, a.nrows, sum_duplicates=False)


def _prune(a: SparseMat, vals: np.ndarray) -> SparseMat:
    keep = vals != 0
    if keep.all():
        return SparseMat(a.nrows, a.ncols, _frozen(vals), a.rowidx, a.colptr)
    c = a.colidx()[keep]
    return _build(a.rowidx[keep], c, vals[keep], a.nrows, a.ncols)


def scale_cols(a: SparseMat, factors) -> SparseMat:
    """Multiply column j by factors[j]; columns scaled to zero are pruned."""
    factors = np.asarray(factors)
    if factors.shape != (a.ncols,):
        raise DimensionError("one factor per column required")
    return _prune(a, a.vals * factors[a.colidx()])


def scale_col(a: SparseMat, j: int, factor: float) -> SparseMat:
    if not 0 <= j < a.ncols:
        raise DimensionError(f"column {j} out of range for {a.ncols} columns")
    vals = a.vals.copy()
    lo, hi = a.colptr[j], a.colptr[j + 1]
    vals[lo:hi] *= factor
    return _prune(a, vals)


def scale(a: SparseMat, factor: float) -> SparseMat:
    return _prune(a, a.vals * factor)


def add(a: SparseMat, b: SparseMat) -> SparseMat:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    ra, ca, va = a.coo()
    rb, cb, vb = b.coo()
    return _assemble(
        np.concatenate([ra, rb]),
        np.concatenate([ca, cb]),
        np.concatenate([va, vb]),
        a.nrows,
        a.ncols,
    )


def nnz(a: SparseMat) -> int:
    return a.nnz


def to_dense(a: SparseMat) -> np.ndarray:
    return a.to_dense()


def canonicalize(a: SparseMat) -> SparseMat:
    """Re-canonicalize (a no-op on any public output)."""
    r, c, v = a.coo()
    return _assemble(r, c, v, a.nrows, a.ncols)
