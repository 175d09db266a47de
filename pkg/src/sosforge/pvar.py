"""Baseline representation with decision variables folded into the monomials.

A :class:`FlatPoly` is a known polynomial over the joint variable set
(independent and decision names together), with basis

    Zbar = [1; xi] kron Z(x),

so every monomial of Z appears q+1 times and each copy but the first
carries one decision variable with exponent 1. Only what the benchmarks
need is provided: flatten, add, multiply by a known polynomial, and
differentiate. All of it runs on the same sparse and monomial kernels as
:mod:`sosforge.dpvar`, so timing differences come from the representation
alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import dpvar, monomial, sparse
from .dpvar import DPoly
from .errors import NonlinearityError
from .monomial import DegreeMatrix, VarSet, merge_vars
from .sparse import INDEX, SparseMat


@dataclass(frozen=True, eq=False)
class FlatPoly:
    matdim: tuple[int, int]
    allvars: VarSet
    decision: frozenset[str]
    Zbar: DegreeMatrix
    B: SparseMat

    @property
    def nbar(self) -> int:
        return self.Zbar.nrows

    def as_known(self) -> DPoly:
        return DPoly(self.matdim, VarSet(), self.Zbar, self.B)

    @classmethod
    def from_known(cls, P: DPoly, decision: frozenset[str]) -> "FlatPoly":
        return cls(P.matdim, P.ivars, frozenset(decision) & frozenset(P.ivars), P.Z, P.C)

    def check(self) -> None:
        self.B.check()
        assert self.B.shape == (self.matdim[0], self.matdim[1] * self.nbar)
        for name in self.decision:
            col = self.Zbar.column(name)
            assert col.max(initial=0) <= 1


def flatten(S: DPoly) -> FlatPoly:
    """Expand S into the joint basis [1; xi] kron Z(x) (no compression)."""
    q, n = S.q, S.n
    allvars, inj_x, inj_d = merge_vars(S.ivars, S.dvars)
    r, c, v = S.Z.degs.coo()
    blocks = np.arange(q + 1, dtype=INDEX)
    rows = [(blocks[:, None] * n + r[None, :]).ravel()]
    cols = [np.tile(inj_x[c], q + 1)]
    vals = [np.tile(v, q + 1)]
    # decision variable k sits in copy k+1 of every monomial
    t = np.arange(n, dtype=INDEX)
    rows.append(((blocks[1:, None]) * n + t[None, :]).ravel())
    cols.append(np.repeat(inj_d, n))
    vals.append(np.ones(q * n, dtype=INDEX))
    raw = sparse.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        ((q + 1) * n, len(allvars)), dtype=INDEX,
    )
    Zbar, rowmap = monomial.canonicalize(DegreeMatrix(raw, allvars))
    br, lr, bc, lc, cv = S._unpack()
    nbar = Zbar.nrows
    B = sparse.from_triplets(br, bc * nbar + rowmap[lr * n + lc], cv, (S.matdim[0], S.matdim[1] * nbar))
    return FlatPoly(S.matdim, allvars, frozenset(S.dvars), Zbar, B)


def flat_add(F1: FlatPoly, F2: FlatPoly) -> FlatPoly:
    P = dpvar.add(F1.as_known(), F2.as_known())
    return FlatPoly.from_known(P, F1.decision | F2.decision)


def flat_mul(F: FlatPoly, p: DPoly, side: str = "right") -> FlatPoly:
    if p.q:
        raise NonlinearityError("the multiplier must not contain decision variables")
    clash = frozenset(p.ivars) & F.decision
    if clash:
        raise NonlinearityError(f"multiplier uses decision variables {sorted(clash)}")
    P = dpvar.mul_poly(F.as_known(), p, side)
    return FlatPoly.from_known(P, F.decision)


def flat_diff(F: FlatPoly, v: str) -> FlatPoly:
    if v in F.decision:
        raise NonlinearityError(f"cannot differentiate with respect to decision variable {v!r}")
    P = dpvar.diff(F.as_known(), v)
    return FlatPoly.from_known(P, F.decision)


def flat_eval(F: FlatPoly, xvals: Mapping[str, float], xivals: Mapping[str, float] | None = None) -> np.ndarray:
    vals = dict(xvals)
    vals.update(xivals or {})
    return dpvar.eval(F.as_known(), vals)


def flat_subs(F: FlatPoly, v: str, r: DPoly) -> FlatPoly:
    if v in F.decision:
        raise NonlinearityError(f"cannot substitute for decision variable {v!r}")
    P = dpvar.subs(F.as_known(), v, r)
    return FlatPoly.from_known(P, F.decision)


def flat_integrate(F: FlatPoly, v: str) -> FlatPoly:
    if v in F.decision:
        raise NonlinearityError(f"cannot integrate with respect to decision variable {v!r}")
    P = dpvar.integrate(F.as_known(), v)
    return FlatPoly.from_known(P, F.decision)
