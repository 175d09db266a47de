"""Monomial bases stored as sparse degree matrices.

A :class:`DegreeMatrix` has one row per monomial and one column per
variable; entry (k, j) is the exponent of variable j in monomial k. The
canonical order is ascending lexicographic with the first variable most
significant, so the full degree-2 basis in (x1, x2) reads

    1, x2, x2^2, x1, x1*x2, x1^2.

Rows are ordered with radix keys: each monomial is encoded as an integer in
base (dmax + 1). When that integer would not be exactly representable the
columns are split into groups and the rows are sorted group by group.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Iterable, Sequence

import numpy as np

from . import sparse
from .errors import ArgumentError
from .sparse import INDEX, SparseMat

# exact integer range of a float64 key
_KEY_LIMIT = 2**53


@dataclass(frozen=True)
class VarSet:
    """Sorted tuple of distinct variable names."""

    names: tuple[str, ...] = ()

    def __post_init__(self):
        names = self.names
        if not isinstance(names, tuple):
            object.__setattr__(self, "names", names := tuple(names))
        for a, b in zip(names, names[1:]):
            if not a < b:
                raise ArgumentError(f"variable names must be sorted and distinct: {a!r}, {b!r}")

    @classmethod
    def of(cls, names: Iterable[str]) -> "VarSet":
        return cls(tuple(sorted(set(names))))

    @cached_property
    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __getitem__(self, i):
        return self.names[i]

    def __contains__(self, name) -> bool:
        return name in self.index

    def __repr__(self) -> str:
        if len(self.names) > 8:
            return f"VarSet({self.names[:4]}... {len(self.names)} names)"
        return f"VarSet({self.names})"


def merge_vars(a: VarSet, b: VarSet) -> tuple[VarSet, np.ndarray, np.ndarray]:
    """Sorted union of two variable sets plus the injections of a and b into it."""
    if a.names == b.names:
        ident = np.arange(len(a), dtype=INDEX)
        return a, ident, ident
    if not b.names:
        return a, np.arange(len(a), dtype=INDEX), np.zeros(0, dtype=INDEX)
    if not a.names:
        return b, np.zeros(0, dtype=INDEX), np.arange(len(b), dtype=INDEX)
    merged = VarSet.of(a.names + b.names)
    idx = merged.index
    inj_a = np.fromiter((idx[n] for n in a.names), dtype=INDEX, count=len(a))
    inj_b = np.fromiter((idx[n] for n in b.names), dtype=INDEX, count=len(b))
    return merged, inj_a, inj_b


@dataclass(frozen=True, eq=False)
class DegreeMatrix:
    """Exponent table: ``degs`` is an (n monomials) x (p vars) int64 SparseMat."""

    degs: SparseMat
    vars: VarSet

    def __post_init__(self):
        if self.degs.ncols != len(self.vars):
            raise ArgumentError(
                f"degree matrix has {self.degs.ncols} columns for {len(self.vars)} variables"
            )

    @classmethod
    def from_rows(cls, rows, vars: VarSet | Sequence[str]) -> "DegreeMatrix":
        if not isinstance(vars, VarSet):
            vars = VarSet(tuple(vars))
        rows = np.asarray(rows, dtype=INDEX)
        rows = rows.reshape(rows.shape[0] if rows.ndim else 0, len(vars))
        if rows.size and rows.min() < 0:
            raise ArgumentError("exponents must be nonnegative")
        return cls(sparse.from_dense(rows, dtype=INDEX), vars)

    @classmethod
    def constant(cls) -> "DegreeMatrix":
        """The basis {1} over no variables."""
        return cls(sparse.empty(1, 0, INDEX), VarSet())

    @classmethod
    def empty(cls, vars: VarSet = VarSet()) -> "DegreeMatrix":
        return cls(sparse.empty(0, len(vars), INDEX), vars)

    @property
    def nrows(self) -> int:
        return self.degs.nrows

    def __len__(self) -> int:
        return self.degs.nrows

    @property
    def nvars(self) -> int:
        return self.degs.ncols

    def dense(self) -> np.ndarray:
        return self.degs.to_dense()

    def maxdeg(self) -> int:
        return int(self.degs.vals.max()) if self.degs.nnz else 0

    def total_degrees(self) -> np.ndarray:
        return np.bincount(
            self.degs.rowidx, weights=self.degs.vals, minlength=self.nrows
        ).astype(INDEX)

    def column(self, name: str) -> np.ndarray:
        """Dense exponent vector of one variable (zeros if absent)."""
        out = np.zeros(self.nrows, dtype=INDEX)
        j = self.vars.index.get(name)
        if j is not None:
            r, v = self.degs.col(j)
            out[r] = v
        return out

    def rows(self) -> list[tuple[int, ...]]:
        return [tuple(int(e) for e in row) for row in self.dense()]

    def is_canonical(self) -> bool:
        order, new = _sorted_order(self)
        return bool(new.all()) and bool(np.array_equal(order, np.arange(self.nrows)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DegreeMatrix):
            return NotImplemented
        return self.vars == other.vars and self.degs == other.degs

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"DegreeMatrix({self.nrows} monomials over {self.vars!r})"


def full_basis(vars: VarSet | Sequence[str], dmax: int) -> DegreeMatrix:
    """All monomials of total degree <= dmax, in canonical order."""
    if dmax < 0:
        raise ArgumentError("dmax must be nonnegative")
    if not isinstance(vars, VarSet):
        vars = VarSet.of(vars)
    p = len(vars)

    def gen(nv: int, budget: int):
        if nv == 0:
            yield ()
            return
        for e in range(budget + 1):
            for rest in gen(nv - 1, budget - e):
                yield (e,) + rest

    n = comb(p + dmax, p)
    rows = np.fromiter((e for row in gen(p, dmax) for e in row), dtype=INDEX, count=n * p)
    return DegreeMatrix(sparse.from_dense(rows.reshape(n, p), dtype=INDEX), vars)


def monomials(vars: VarSet | Sequence[str], degrees: Iterable[int]) -> DegreeMatrix:
    """Monomials whose total degree lies in ``degrees`` (canonical order)."""
    degrees = sorted(set(degrees))
    if not degrees:
        return DegreeMatrix.empty(vars if isinstance(vars, VarSet) else VarSet.of(vars))
    full = full_basis(vars, degrees[-1])
    keep = np.flatnonzero(np.isin(full.total_degrees(), degrees))
    return DegreeMatrix(sparse.permute_rows(full.degs, keep, gather=True), full.vars)


def stage_width(dmax: int) -> int:
    """Largest number of columns whose radix-(dmax+1) key stays below 2**53."""
    radix = dmax + 1
    if radix == 1:
        return 1 << 30
    k, power = 0, 1
    while power * radix < _KEY_LIMIT:
        power *= radix
        k += 1
    return k


def _stage_groups(p: int, dmax: int) -> list[tuple[int, int]]:
    w = stage_width(dmax)
    return [(lo, min(lo + w, p)) for lo in range(0, p, w)] or [(0, 0)]


def _stage_key(Z: DegreeMatrix, lo: int, hi: int, radix: int) -> np.ndarray | None:
    """Radix key of columns [lo, hi) for every row, or None if those columns are empty."""
    cp = Z.degs.colptr
    a, b = cp[lo], cp[hi]
    if a == b:
        return None
    cols = np.repeat(np.arange(lo, hi, dtype=INDEX), np.diff(cp[lo : hi + 1]))
    weights = np.array([radix ** (hi - 1 - k) for k in range(lo, hi)], dtype=np.float64)
    w = Z.degs.vals[a:b] * weights[cols - lo]
    return np.bincount(Z.degs.rowidx[a:b], weights=w, minlength=Z.nrows).astype(INDEX)


def lex_keys(Z: DegreeMatrix, dmax: int | None = None) -> np.ndarray:
    """Monomial weights, one row of keys per sorting stage.

    Row k of a single stage gets sum_j Z[k, j] * (dmax+1)**(p-1-j). Keys of
    the stages compare lexicographically in the same order as the rows of Z.
    """
    if dmax is None:
        dmax = Z.maxdeg()
    elif Z.degs.nnz and Z.maxdeg() > dmax:
        raise ArgumentError("dmax is smaller than an entry of Z")
    groups = _stage_groups(Z.nvars, dmax)
    out = np.zeros((len(groups), Z.nrows), dtype=INDEX)
    for s, (lo, hi) in enumerate(groups):
        key = _stage_key(Z, lo, hi, dmax + 1)
        if key is not None:
            out[s] = key
    return out


def _sorted_order(Z: DegreeMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Stable lexicographic row order, and a flag per sorted position marking a new row."""
    n = Z.nrows
    dmax = Z.maxdeg()
    groups = _stage_groups(Z.nvars, dmax)
    keys = [_stage_key(Z, lo, hi, dmax + 1) for lo, hi in groups]
    keys = [k for k in keys if k is not None]
    order = np.arange(n, dtype=INDEX)
    # least significant stage first; stable sorts keep earlier stages' order
    for key in reversed(keys):
        o = np.argsort(key[order], kind="stable")
        order = order[o]
    new = np.ones(n, dtype=bool)
    if n > 1:
        differs = np.zeros(n - 1, dtype=bool)
        for key in keys:
            ks = key[order]
            differs |= ks[1:] != ks[:-1]
        new[1:] = differs
    return order, new


def canonicalize(Z: DegreeMatrix) -> tuple[DegreeMatrix, np.ndarray]:
    """Sort and deduplicate rows; ``rowmap[i]`` is the new row of original row i."""
    order, new = _sorted_order(Z)
    n = Z.nrows
    if new.all() and np.array_equal(order, np.arange(n)):
        return Z, np.arange(n, dtype=INDEX)
    gid = np.cumsum(new, dtype=INDEX) - 1
    rowmap = np.empty(n, dtype=INDEX)
    rowmap[order] = gid
    uniq = order[new]
    return DegreeMatrix(sparse.permute_rows(Z.degs, uniq, gather=True), Z.vars), rowmap


def lift(Z: DegreeMatrix, vars: VarSet, inj: np.ndarray) -> DegreeMatrix:
    """Re-express Z over a superset of its variables."""
    if Z.vars == vars:
        return Z
    return DegreeMatrix(sparse.embed_cols(Z.degs, inj, len(vars)), vars)


def merge_bases(
    Z1: DegreeMatrix, Z2: DegreeMatrix
) -> tuple[DegreeMatrix, np.ndarray, np.ndarray]:
    """Union of two bases; ``map_i`` sends row j of Z_i to its row in the union."""
    if Z1 is Z2 or Z1 == Z2:
        ident = np.arange(Z1.nrows, dtype=INDEX)
        if Z1.is_canonical():
            return Z1, ident, ident
    vars3, inj1, inj2 = merge_vars(Z1.vars, Z2.vars)
    D1 = lift(Z1, vars3, inj1).degs
    D2 = lift(Z2, vars3, inj2).degs
    Z3, rowmap = canonicalize(DegreeMatrix(sparse.vcat(D1, D2), vars3))
    return Z3, rowmap[: Z1.nrows], rowmap[Z1.nrows :]


def kron_bases(Z1: DegreeMatrix, Z2: DegreeMatrix) -> tuple[DegreeMatrix, np.ndarray]:
    """Pairwise products of two bases.

    Raw product row i*n2 + j is Z1[i] * Z2[j]; ``prodmap`` sends each raw
    index to its row in the canonical result.
    """
    n1, n2 = Z1.nrows, Z2.nrows
    vars3, inj1, inj2 = merge_vars(Z1.vars, Z2.vars)
    r1, c1, v1 = lift(Z1, vars3, inj1).degs.coo()
    r2, c2, v2 = lift(Z2, vars3, inj2).degs.coo()
    a2 = np.arange(n2, dtype=INDEX)
    a1 = np.arange(n1, dtype=INDEX)
    rows = np.concatenate([(r1[:, None] * n2 + a2[None, :]).ravel(), (a1[:, None] * n2 + r2[None, :]).ravel()])
    cols = np.concatenate([np.repeat(c1, n2), np.tile(c2, n1)])
    vals = np.concatenate([np.repeat(v1, n2), np.tile(v2, n1)])
    raw = sparse.from_triplets(rows, cols, vals, (n1 * n2, len(vars3)), dtype=INDEX)
    return canonicalize(DegreeMatrix(raw, vars3))


def basis_size(p: int, d: int) -> int:
    """(p+d)! / (p! d!)."""
    return comb(p + d, p)
