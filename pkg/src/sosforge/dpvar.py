"""Matrix-valued polynomials that are affine in decision variables.

An m1 x m2 :class:`DPoly` stores

* ``dvars`` - the q decision variable names,
* ``Z``     - a canonical monomial basis of n monomials in the independent
              variables,
* ``C``     - a sparse coefficient matrix of shape m1*(q+1) x m2*n,

and represents

    S(x; xi) = (I_m1 kron [1; xi])^T  C  (I_m2 kron Z(x)).

Row block i of C belongs to output row i: its first row holds the part that
does not depend on xi, row 1+k the coefficients of ``dvars[k]``. Column
block j belongs to output column j, one column per monomial. Decision
variables never enter the degree matrix, so products of two decision
variables cannot be represented at all.

Every operation returns a new value; nothing is mutated in place.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import monomial, sparse
from .errors import ArgumentError, DimensionError, NonlinearityError
from .monomial import DegreeMatrix, VarSet, merge_bases, merge_vars
from .sparse import INDEX, SparseMat


@dataclass(frozen=True, eq=False)
class DPoly:
    matdim: tuple[int, int]
    dvars: VarSet
    Z: DegreeMatrix
    C: SparseMat

    def __post_init__(self):
        m1, m2 = self.matdim
        want = (m1 * (len(self.dvars) + 1), m2 * self.Z.nrows)
        if self.C.shape != want:
            raise DimensionError(f"coefficient matrix is {self.C.shape}, expected {want}")

    # -- shape ---------------------------------------------------------

    @property
    def q(self) -> int:
        return len(self.dvars)

    @property
    def n(self) -> int:
        return self.Z.nrows

    @property
    def ivars(self) -> VarSet:
        return self.Z.vars

    @property
    def shape(self) -> tuple[int, int]:
        return self.matdim

    @property
    def T(self) -> "DPoly":
        return transpose(self)

    def is_scalar(self) -> bool:
        return self.matdim == (1, 1)

    # -- constructors --------------------------------------------------

    @classmethod
    def zero(cls, m1: int = 1, m2: int = 1) -> "DPoly":
        return cls((m1, m2), VarSet(), DegreeMatrix.empty(), sparse.empty(m1, 0))

    @classmethod
    def constant(cls, value) -> "DPoly":
        """Constant matrix (a scalar gives a 1x1 polynomial)."""
        a = np.atleast_2d(np.asarray(value, dtype=np.float64))
        if a.ndim != 2:
            raise DimensionError("constant must be a scalar or 2-D array")
        return cls(a.shape, VarSet(), DegreeMatrix.constant(), sparse.from_dense(a))

    @classmethod
    def identity(cls, n: int) -> "DPoly":
        return cls.constant(np.eye(n))

    @classmethod
    def var(cls, name: str) -> "DPoly":
        """The independent variable ``name`` as a 1x1 polynomial."""
        Z = DegreeMatrix.from_rows([[1]], [name])
        return cls((1, 1), VarSet(), Z, sparse.from_dense([[1.0]]))

    @classmethod
    def decvar(cls, name: str) -> "DPoly":
        """The bare decision variable ``name``: C = [0; 1] on the constant monomial."""
        return cls((1, 1), VarSet((name,)), DegreeMatrix.constant(), sparse.from_dense([[0.0], [1.0]]))

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[tuple[int, int, str | None, Mapping[str, int], float]],
        matdim: tuple[int, int] = (1, 1),
        *,
        ivars: Iterable[str] = (),
        dvars: Iterable[str] = (),
    ) -> "DPoly":
        """Build from ``(i, j, dvar_or_None, {ivar: exponent}, coeff)`` terms.

        Repeated terms are summed. ``ivars``/``dvars`` may name extra
        variables to carry even if no term uses them.
        """
        terms = list(terms)
        m1, m2 = matdim
        dv = VarSet.of([t[2] for t in terms if t[2] is not None] + list(dvars))
        iv = VarSet.of([name for t in terms for name in t[3]] + list(ivars))
        if frozenset(dv) & frozenset(iv):
            raise ArgumentError(f"names used both as decision and independent: {sorted(frozenset(dv) & frozenset(iv))}")
        rows = np.zeros((len(terms), len(iv)), dtype=INDEX)
        for k, (_, _, _, mono, _) in enumerate(terms):
            for name, e in mono.items():
                if e < 0 or int(e) != e:
                    raise ArgumentError(f"bad exponent {e!r} for {name}")
                rows[k, iv.index[name]] += int(e)
        Z, rowmap = monomial.canonicalize(DegreeMatrix.from_rows(rows, iv))
        q1 = len(dv) + 1
        r = np.empty(len(terms), dtype=INDEX)
        c = np.empty(len(terms), dtype=INDEX)
        v = np.empty(len(terms))
        for k, (i, j, d, _, coef) in enumerate(terms):
            if not (0 <= i < m1 and 0 <= j < m2):
                raise IndexError(f"entry ({i}, {j}) outside {m1}x{m2}")
            r[k] = i * q1 + (0 if d is None else dv.index[d] + 1)
            c[k] = j * Z.nrows + rowmap[k]
            v[k] = coef
        C = sparse.from_triplets(r, c, v, (m1 * q1, m2 * Z.nrows))
        return cls((m1, m2), dv, Z, C)

    # -- inspection ----------------------------------------------------

    def _unpack(self):
        """Per stored coefficient: (block row, dvar slot, block col, monomial, value)."""
        r, c, v = self.C.coo()
        if v.size == 0:
            e = np.zeros(0, dtype=INDEX)
            return e, e, e, e, v
        br, lr = np.divmod(r, self.q + 1)
        bc, lc = np.divmod(c, self.n)
        return br, lr, bc, lc, v

    def terms(self) -> list[tuple[int, int, str | None, dict[str, int], float]]:
        """Inverse of :meth:`from_terms`, in canonical order."""
        br, lr, bc, lc, v = self._unpack()
        rows = self.Z.rows()
        order = np.lexsort((lr, lc, bc, br))
        out = []
        for k in order:
            d = None if lr[k] == 0 else self.dvars[lr[k] - 1]
            mono = {name: e for name, e in zip(self.ivars, rows[lc[k]]) if e}
            out.append((int(br[k]), int(bc[k]), d, mono, float(v[k])))
        return out

    def degree(self) -> int:
        """Largest total degree among monomials with a nonzero coefficient."""
        _, _, _, lc, _ = self._unpack()
        if lc.size == 0:
            return 0
        return int(self.Z.total_degrees()[np.unique(lc)].max())

    def active_ivars(self) -> VarSet:
        """Independent variables appearing with nonzero degree in a used monomial."""
        _, _, _, lc, _ = self._unpack()
        used = np.unique(lc)
        d = self.Z.degs
        cols = d.colidx()[np.isin(d.rowidx, used)]
        return VarSet(tuple(self.ivars[j] for j in np.unique(cols)))

    def check(self) -> None:
        """Assert every structural invariant (used by tests)."""
        self.C.check()
        self.Z.degs.check()
        assert self.Z.is_canonical()
        assert self.C.nrows == self.matdim[0] * (self.q + 1)
        assert not (frozenset(self.dvars) & frozenset(self.ivars))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DPoly):
            return NotImplemented
        return (
            self.matdim == other.matdim
            and self.dvars == other.dvars
            and self.Z == other.Z
            and self.C == other.C
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        m1, m2 = self.matdim
        return (
            f"{type(self).__name__}({m1}x{m2}, q={self.q}, n={self.n}, "
            f"ivars={list(self.ivars)[:6]}, nnz={self.C.nnz})"
        )

    def __str__(self) -> str:
        from .textio import format_entries

        return "\n".join(format_entries(self))

    # -- operators -----------------------------------------------------

    def __add__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        a, b = _broadcast_pair(self, other)
        return add(a, b)

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        a, b = _broadcast_pair(self, other)
        return add(a, scale(b, -1.0))

    def __rsub__(self, other):
        other = _coerce(other, self)
        if other is None:
            return NotImplemented
        a, b = _broadcast_pair(other, self)
        return add(a, scale(b, -1.0))

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return scale(self, float(other))
        if isinstance(other, np.ndarray):
            other = DPoly.constant(other)
        if not isinstance(other, DPoly):
            return NotImplemented
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, numbers.Real):
            return scale(self, float(other))
        if isinstance(other, np.ndarray):
            return mul(DPoly.constant(other), self)
        return NotImplemented

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ArgumentError("only nonnegative integer powers are supported")
        if self.matdim[0] != self.matdim[1]:
            raise DimensionError("power of a non-square polynomial")
        out = DPoly.identity(self.matdim[0])
        for _ in range(int(k)):
            out = mul(out, self)
        return out

    def __getitem__(self, ij) -> "DPoly":
        i, j = ij
        return get(self, i, j)


class PPoly(DPoly):
    """A known polynomial: a :class:`DPoly` without decision variables.

    ``B`` (m1 x m2*n) is the coefficient matrix.
    """

    def __post_init__(self):
        super().__post_init__()
        if self.q:
            raise NonlinearityError("a known polynomial cannot carry decision variables")

    @property
    def B(self) -> SparseMat:
        return self.C

    @classmethod
    def of(cls, S: DPoly) -> "PPoly":
        if isinstance(S, PPoly):
            return S
        if S.q:
            S = compress(S)
        return cls(S.matdim, S.dvars, S.Z, S.C)


def from_ppoly(p: PPoly) -> DPoly:
    return DPoly(p.matdim, p.dvars, p.Z, p.C)


def _coerce(other, like: DPoly) -> DPoly | None:
    if isinstance(other, DPoly):
        return other
    if isinstance(other, numbers.Real):
        return DPoly.constant(np.full(like.matdim, float(other)))
    if isinstance(other, np.ndarray):
        return DPoly.constant(other)
    return None


def _broadcast(S: DPoly, matdim: tuple[int, int]) -> DPoly:
    """Repeat a 1x1 polynomial into every entry of an m1 x m2 matrix."""
    m1, m2 = matdim
    ones = sparse.from_dense(np.ones((m1, m2)))
    C = sparse.kron(ones, S.C)
    return DPoly(matdim, S.dvars, S.Z, C)


def _broadcast_pair(a: DPoly, b: DPoly) -> tuple[DPoly, DPoly]:
    if a.matdim == b.matdim:
        return a, b
    if a.is_scalar():
        return _broadcast(a, b.matdim), b
    if b.is_scalar():
        return a, _broadcast(b, a.matdim)
    raise DimensionError(f"cannot combine {a.matdim} with {b.matdim}")


# -- structural helpers ----------------------------------------------------


def _relabel(S: DPoly, q_new: int, n_new: int, dvar_inj, mon_map):
    """Triplets of S.C re-indexed into a (q_new, n_new) layout."""
    br, lr, bc, lc, v = S._unpack()
    slot = np.concatenate([[0], np.asarray(dvar_inj, dtype=INDEX) + 1])
    mon_map = np.asarray(mon_map, dtype=INDEX)
    return br * (q_new + 1) + slot[lr], bc * n_new + mon_map[lc], v


def _unify(S1: DPoly, S2: DPoly):
    """Express both coefficient matrices over merged decision variables and basis."""
    if S1.dvars == S2.dvars and S1.Z == S2.Z:
        return S1.dvars, S1.Z, S1.C, S2.C
    chi, i1, i2 = merge_vars(S1.dvars, S2.dvars)
    Z3, m1, m2 = merge_bases(S1.Z, S2.Z)
    q, n = len(chi), Z3.nrows
    out = []
    for S, inj, mm in ((S1, i1, m1), (S2, i2, m2)):
        r, c, v = _relabel(S, q, n, inj, mm)
        out.append(sparse.from_triplets(r, c, v, (S.matdim[0] * (q + 1), S.matdim[1] * n)))
    return chi, Z3, out[0], out[1]


def _with_basis(S: DPoly, Z: DegreeMatrix, keep: np.ndarray, factors=None) -> DPoly:
    """Keep monomials ``keep`` of S (in that order) as the rows of Z, scaling columns.

    Z may be non-canonical; it is canonicalized and coefficient columns merged.
    """
    m2 = S.matdim[1]
    k = keep.size
    src = (np.arange(m2, dtype=INDEX)[:, None] * S.n + keep[None, :]).ravel()
    C = sparse.permute_cols(S.C, src, gather=True)
    if factors is not None:
        C = sparse.scale_cols(C, np.tile(np.asarray(factors, dtype=np.float64), m2))
    Zc, rowmap = monomial.canonicalize(Z)
    if Zc is not Z:
        colmap = (np.arange(m2, dtype=INDEX)[:, None] * Zc.nrows + rowmap[None, :]).ravel()
        C = sparse.scatter(C, np.arange(C.nrows), colmap, (C.nrows, m2 * Zc.nrows))
    assert C.ncols == m2 * Zc.nrows and Z.nrows == k
    return DPoly(S.matdim, S.dvars, Zc, C)


def _rows(Z: DegreeMatrix, keep) -> SparseMat:
    return sparse.permute_rows(Z.degs, keep, gather=True)


def _shift_column(degs: SparseMat, j: int, delta: int) -> SparseMat:
    """Add ``delta`` to every row's exponent in column j (result must stay >= 0)."""
    n = degs.nrows
    r, c, v = degs.coo()
    r = np.concatenate([r, np.arange(n, dtype=INDEX)])
    c = np.concatenate([c, np.full(n, j, dtype=INDEX)])
    v = np.concatenate([v, np.full(n, delta, dtype=INDEX)])
    return sparse.from_triplets(r, c, v, degs.shape, dtype=INDEX)


# -- algebra -----------------------------------------------------------------


def scale(S: DPoly, factor: float) -> DPoly:
    return DPoly(S.matdim, S.dvars, S.Z, sparse.scale(S.C, factor))


def add(S1: DPoly, S2: DPoly) -> DPoly:
    """Sum of two equally sized polynomials.

    Decision variables are merged by sorted union, the monomial bases by
    :func:`~sosforge.monomial.merge_bases`, and the coefficients of
    diag(C1, C2) are scattered into the merged layout with one pass over
    their nonzeros.
    """
    if S1.matdim != S2.matdim:
        raise DimensionError(f"cannot add {S1.matdim} and {S2.matdim}")
    chi, i1, i2 = merge_vars(S1.dvars, S2.dvars)
    Z3, m1, m2 = merge_bases(S1.Z, S2.Z)
    q, n = len(chi), Z3.nrows
    r1, c1, v1 = _relabel(S1, q, n, i1, m1)
    r2, c2, v2 = _relabel(S2, q, n, i2, m2)
    C = sparse.from_triplets(
        np.concatenate([r1, r2]),
        np.concatenate([c1, c2]),
        np.concatenate([v1, v2]),
        (S1.matdim[0] * (q + 1), S1.matdim[1] * n),
    )
    return DPoly(S1.matdim, chi, Z3, C)


def _join(key_l: np.ndarray, key_r: np.ndarray, nkeys: int):
    """All index pairs (a, b) with key_l[a] == key_r[b]."""
    ol = np.argsort(key_l, kind="stable")
    orr = np.argsort(key_r, kind="stable")
    cl = np.bincount(key_l, minlength=nkeys)
    cr = np.bincount(key_r, minlength=nkeys)
    sl = np.concatenate([[0], np.cumsum(cl)])
    sr = np.concatenate([[0], np.cumsum(cr)])
    pl, pr = [], []
    for k in np.flatnonzero(cl * cr):
        a = ol[sl[k] : sl[k + 1]]
        b = orr[sr[k] : sr[k + 1]]
        pl.append(np.repeat(a, b.size))
        pr.append(np.tile(b, a.size))
    if not pl:
        e = np.zeros(0, dtype=INDEX)
        return e, e
    return np.concatenate(pl), np.concatenate(pr)


def mul(L: DPoly, R: DPoly) -> DPoly:
    """Matrix product L * R; at most one factor may carry decision variables.

    A 1x1 factor multiplies every entry of the other. For a scalar decision
    polynomial s = [1; xi]^T C Z1 and known p = b^T Z2 the coefficients are
    those of b^T kron C against Z2 kron Z1, compressed onto the canonical
    product basis.
    """
    if L.q and R.q:
        raise NonlinearityError("product of two polynomials with decision variables")
    (a1, a2), (b1, b2) = L.matdim, R.matdim
    lbr, llr, lbc, llc, lv = L._unpack()
    rbr, rlr, rbc, rlc, rv = R._unpack()
    if a2 == b1:
        out = (a1, b2)
        pl, pr = _join(lbc, rbr, a2)
        orow, ocol = lbr[pl], rbc[pr]
    elif (a1, a2) == (1, 1):
        out = (b1, b2)
        pl, pr = _join(np.zeros_like(lv, dtype=INDEX), np.zeros_like(rv, dtype=INDEX), 1)
        orow, ocol = rbr[pr], rbc[pr]
    elif (b1, b2) == (1, 1):
        out = (a1, a2)
        pl, pr = _join(np.zeros_like(lv, dtype=INDEX), np.zeros_like(rv, dtype=INDEX), 1)
        orow, ocol = lbr[pl], lbc[pl]
    else:
        raise DimensionError(f"cannot multiply {L.matdim} by {R.matdim}")

    if L.q:
        dvars = L.dvars
        Z3, prodmap = monomial.kron_bases(R.Z, L.Z)
        raw = rlc[pr] * L.n + llc[pl]
    else:
        dvars = R.dvars
        Z3, prodmap = monomial.kron_bases(L.Z, R.Z)
        raw = llc[pl] * R.n + rlc[pr]
    q1 = len(dvars) + 1
    rows = orow * q1 + llr[pl] + rlr[pr]
    cols = ocol * Z3.nrows + prodmap[raw]
    C = sparse.from_triplets(rows, cols, lv[pl] * rv[pr], (out[0] * q1, out[1] * Z3.nrows))
    return DPoly(out, dvars, Z3, C)


def mul_poly(S: DPoly, p: DPoly, side: str = "right") -> DPoly:
    """Multiply by a known polynomial: S*p (side='right') or p*S (side='left')."""
    if p.q:
        raise NonlinearityError("the multiplier must not contain decision variables")
    if side == "right":
        return mul(S, p)
    if side == "left":
        return mul(p, S)
    raise ArgumentError(f"side must be 'left' or 'right', not {side!r}")


# -- calculus ------------------------------------------------------------------


def _check_ivar(S: DPoly, v: str, what: str) -> None:
    if v in S.dvars:
        raise NonlinearityError(f"cannot {what} with respect to decision variable {v!r}")


def diff(S: DPoly, v: str) -> DPoly:
    """Partial derivative with respect to independent variable ``v``.

    Each coefficient column is multiplied by the exponent of v in its
    monomial and that exponent is lowered by one; monomials without v
    drop out. The work does not depend on q except through nnz(C).
    """
    _check_ivar(S, v, "differentiate")
    if v not in S.ivars:
        return DPoly.zero(*S.matdim)
    e = S.Z.column(v)
    keep = np.flatnonzero(e > 0)
    j = S.ivars.index[v]
    degs = _shift_column(_rows(S.Z, keep), j, -1)
    return _with_basis(S, DegreeMatrix(degs, S.ivars), keep, e[keep])


def jacobian(S: DPoly, vars: Iterable[str]) -> DPoly:
    """Row of partial derivatives of a scalar polynomial."""
    if not S.is_scalar():
        raise DimensionError("jacobian expects a scalar polynomial")
    parts = [diff(S, v) for v in vars]
    out = DPoly.zero(1, 0)
    for p in parts:
        out = hcat(out, p)
    return out


def integrate(S: DPoly, v: str) -> DPoly:
    """Antiderivative in ``v`` with zero integration constant."""
    _check_ivar(S, v, "integrate")
    ivars, inj, _ = merge_vars(S.ivars, VarSet((v,)))
    Z = monomial.lift(S.Z, ivars, inj)
    j = ivars.index[v]
    e = Z.column(v)
    degs = _shift_column(Z.degs, j, +1)
    lifted = DPoly(S.matdim, S.dvars, Z, S.C)
    return _with_basis(lifted, DegreeMatrix(degs, ivars), np.arange(S.n, dtype=INDEX), 1.0 / (e + 1))


def _as_scalar_known(r) -> DPoly:
    if isinstance(r, numbers.Real):
        return DPoly.constant(float(r))
    if not isinstance(r, DPoly):
        raise ArgumentError("replacement must be a number or a polynomial")
    if r.q:
        raise NonlinearityError("replacement must not contain decision variables")
    if not r.is_scalar():
        raise DimensionError("replacement must be scalar")
    return r


def subs(S: DPoly, v: str, r) -> DPoly:
    """Replace independent variable ``v`` by the known scalar polynomial ``r``."""
    if v in S.dvars:
        raise NonlinearityError(f"cannot substitute for decision variable {v!r}")
    r = _as_scalar_known(r)
    if v not in S.ivars:
        return S
    e = S.Z.column(v)
    j = S.ivars.index[v]
    rest_names = tuple(n for n in S.ivars if n != v)
    rest_cols = np.array([k for k in range(len(S.ivars)) if k != j], dtype=INDEX)
    rest = sparse.permute_cols(S.Z.degs, rest_cols, gather=True)
    rest_vars = VarSet(rest_names)

    powers = [DPoly.constant(1.0)]
    for _ in range(int(e.max()) if e.size else 0):
        powers.append(mul(powers[-1], r))

    out = DPoly.zero(*S.matdim)
    for ek in np.unique(e):
        keep = np.flatnonzero(e == ek)
        Zk = DegreeMatrix(sparse.permute_rows(rest, keep, gather=True), rest_vars)
        part = _with_basis(S, Zk, keep)
        if ek:
            part = mul(part, powers[ek])
        out = add(out, part)
    return out


def integrate_def(S: DPoly, v: str, lo: float, hi: float) -> DPoly:
    """Definite integral of S over v in [lo, hi]."""
    anti = integrate(S, v)
    return add(subs(anti, v, hi), scale(subs(anti, v, lo), -1.0))


# -- matrix structure ------------------------------------------------------------


def vcat(S1: DPoly, S2: DPoly) -> DPoly:
    if S1.matdim[1] != S2.matdim[1]:
        raise DimensionError(f"vcat needs equal column counts: {S1.matdim} vs {S2.matdim}")
    if S2.matdim[0] == 0:
        return S1
    if S1.matdim[0] == 0:
        return S2
    dv, Z, C1, C2 = _unify(S1, S2)
    return DPoly((S1.matdim[0] + S2.matdim[0], S1.matdim[1]), dv, Z, sparse.vcat(C1, C2))


def hcat(S1: DPoly, S2: DPoly) -> DPoly:
    if S1.matdim[0] != S2.matdim[0]:
        raise DimensionError(f"hcat needs equal row counts: {S1.matdim} vs {S2.matdim}")
    if S2.matdim[1] == 0:
        return S1
    if S1.matdim[1] == 0:
        return S2
    dv, Z, C1, C2 = _unify(S1, S2)
    return DPoly((S1.matdim[0], S1.matdim[1] + S2.matdim[1]), dv, Z, sparse.hcat(C1, C2))


def block(rows: list[list[DPoly]]) -> DPoly:
    """Assemble a block matrix from a nested list."""
    out = None
    for row in rows:
        line = row[0]
        for S in row[1:]:
            line = hcat(line, S)
        out = line if out is None else vcat(out, line)
    return out


def transpose(S: DPoly) -> DPoly:
    br, lr, bc, lc, v = S._unpack()
    m1, m2 = S.matdim
    q1, n = S.q + 1, S.n
    C = sparse.from_triplets(bc * q1 + lr, br * n + lc, v, (m2 * q1, m1 * n))
    return DPoly((m2, m1), S.dvars, S.Z, C)


def _check_index(S: DPoly, i: int, j: int) -> None:
    m1, m2 = S.matdim
    if not (0 <= i < m1 and 0 <= j < m2):
        raise IndexError(f"entry ({i}, {j}) outside {m1}x{m2}")


def get(S: DPoly, i: int, j: int) -> DPoly:
    """Entry (i, j) as a 1x1 polynomial over the same variables and basis."""
    _check_index(S, i, j)
    br, lr, bc, lc, v = S._unpack()
    sel = (br == i) & (bc == j)
    C = sparse.from_triplets(lr[sel], lc[sel], v[sel], (S.q + 1, S.n))
    return DPoly((1, 1), S.dvars, S.Z, C)


def set_entry(S: DPoly, i: int, j: int, e: DPoly) -> DPoly:
    """Copy of S with entry (i, j) replaced by the 1x1 polynomial e."""
    _check_index(S, i, j)
    if not e.is_scalar():
        raise DimensionError("set expects a 1x1 polynomial")
    dv, Z, CS, Ce = _unify(S, e)
    q1, n = len(dv) + 1, Z.nrows
    r, c, v = CS.coo()
    keep = ~((r // q1 == i) & (c // n == j))
    re, ce, ve = Ce.coo()
    C = sparse.from_triplets(
        np.concatenate([r[keep], re + i * q1]),
        np.concatenate([c[keep], ce + j * n]),
        np.concatenate([v[keep], ve]),
        CS.shape,
    )
    return DPoly(S.matdim, dv, Z, C)


def compress(S: DPoly) -> DPoly:
    """Drop monomials and decision variables that have no nonzero coefficient."""
    br, lr, bc, lc, v = S._unpack()
    used_mon = np.bincount(lc, minlength=S.n) > 0
    used_dv = np.bincount(lr, minlength=S.q + 1)[1:] > 0
    if used_mon.all() and used_dv.all():
        return S
    keep_mon = np.flatnonzero(used_mon)
    keep_dv = np.flatnonzero(used_dv)
    monmap = np.full(S.n, -1, dtype=INDEX)
    monmap[keep_mon] = np.arange(keep_mon.size, dtype=INDEX)
    dvmap = np.full(S.q, -1, dtype=INDEX)
    dvmap[keep_dv] = np.arange(keep_dv.size, dtype=INDEX)
    dvars = VarSet(tuple(S.dvars[k] for k in keep_dv))
    Z = DegreeMatrix(_rows(S.Z, keep_mon), S.ivars)
    r, c, v = _relabel(S, len(dvars), keep_mon.size, dvmap, monmap)
    C = sparse.from_triplets(r, c, v, (S.matdim[0] * (len(dvars) + 1), S.matdim[1] * keep_mon.size))
    return DPoly(S.matdim, dvars, Z, C)


# -- evaluation --------------------------------------------------------------------


def monomial_values(Z: DegreeMatrix, xvals: Mapping[str, float]) -> np.ndarray:
    out = np.ones(Z.nrows)
    for j, name in enumerate(Z.vars):
        rows, exps = Z.degs.col(j)
        if rows.size:
            out[rows] *= float(xvals[name]) ** exps
    return out


def eval(S: DPoly, xvals: Mapping[str, float], xivals: Mapping[str, float] | None = None) -> np.ndarray:  # noqa: A001
    """Numeric value of S as a dense m1 x m2 array."""
    xivals = xivals or {}
    missing = [v for v in S.ivars if v not in xvals] + [d for d in S.dvars if d not in xivals]
    if missing:
        raise ArgumentError(f"no value given for {missing[:5]}")
    mv = monomial_values(S.Z, xvals)
    z1 = np.empty(S.q + 1)
    z1[0] = 1.0
    z1[1:] = [float(xivals[d]) for d in S.dvars]
    br, lr, bc, lc, v = S._unpack()
    out = np.zeros(S.matdim)
    np.add.at(out, (br, bc), v * z1[lr] * mv[lc])
    return out


set = set_entry  # noqa: A001 - public name pairs with get()
