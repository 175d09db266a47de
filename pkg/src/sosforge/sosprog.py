"""SOS program builder and compilation to a standard-form SDP.

A program collects decision variables (free scalars or entries of PSD Gram
blocks), polynomial equality constraints and a linear objective. Calling
:func:`assemble` turns it into

    minimize  c^T x   subject to   A x = b,   x = (x_free, vec X_1, ..., vec X_k),  X_j PSD,

where each block is stored column-major as a full s*s matrix. A decision
variable for the off-diagonal entry (r, c) of a block owns both positions
(r, c) and (c, r); its coefficient in every row of A and in c is split in
half between them, so A x only ever sees the symmetric part of a block.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import dpvar, sparse
from .dpvar import DPoly
from .errors import (
    ArgumentError,
    DimensionError,
    OptionError,
    RegistrationError,
    StructuralInfeasibilityWarning,
)
from .monomial import DegreeMatrix, VarSet, full_basis, kron_bases
from .sparse import INDEX, SparseMat

OPTS = ("none", "sym", "pos")


@dataclass(frozen=True)
class Origin:
    """Where a decision variable lives: a free scalar or a PSD block entry (r <= c)."""

    kind: str
    block: int = -1
    r: int = -1
    c: int = -1


@dataclass
class PsdBlock:
    side: int
    entries: dict[tuple[int, int], str]


@dataclass
class SosProgram:
    ivars: VarSet
    registry: dict[str, Origin] = field(default_factory=dict)
    blocks: list[PsdBlock] = field(default_factory=list)
    equalities: list[DPoly] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)
    sense: str = "min"
    _counter: int = 0

    def free_names(self) -> list[str]:
        return [name for name, o in self.registry.items() if o.kind == "free"]

    def _register(self, name: str, origin: Origin) -> None:
        if name in self.registry:
            raise RegistrationError(f"decision variable {name!r} is already declared")
        if name in self.ivars:
            raise RegistrationError(f"{name!r} is an independent variable of the program")
        self.registry[name] = origin

    def _fresh_free(self, count: int) -> int:
        base = self._counter
        self._counter += count
        return base


def new_program(ivars: Iterable[str] = ()) -> SosProgram:
    return SosProgram(VarSet.of(ivars))


def declare_decvar(prog: SosProgram, names: str | Iterable[str]) -> tuple[SosProgram, list[DPoly]]:
    """Register free decision variables; returns each one as a bare 1x1 DPoly."""
    if isinstance(names, str):
        names = [names]
    names = list(names)
    if len(set(names)) != len(names):
        raise RegistrationError("duplicate names in declaration")
    for name in names:
        if name in prog.registry:
            raise RegistrationError(f"decision variable {name!r} is already declared")
    for name in names:
        prog._register(name, Origin("free"))
    return prog, [DPoly.decvar(name) for name in names]


# -- polynomial variables ---------------------------------------------------------


def _free_name(k: int) -> str:
    return f"_c{k:08d}"


def _gram_name(block: int, r: int, c: int) -> str:
    return f"_g{block:04d}_{r:05d}_{c:05d}"


def _cell_poly(Z1: DegreeMatrix, Z2: DegreeMatrix, m: int, n: int, keys: np.ndarray, namer) -> DPoly:
    """(I_m kron Z1)^T Q (I_n kron Z2) where Q[u, v] is the dvar ``namer(keys[u, v])``.

    Keys must sort in the same order as the names they produce; equal keys
    are the same variable, so repeated coefficients add up.
    """
    k1, k2 = Z1.nrows, Z2.nrows
    uniq, inv = np.unique(keys, return_inverse=True)
    inv = inv.reshape(keys.shape)
    dvars = VarSet(tuple(namer(int(u)) for u in uniq))
    q1 = len(dvars) + 1
    Z3, prodmap = kron_bases(Z1, Z2)
    u = np.arange(m * k1, dtype=INDEX)
    v = np.arange(n * k2, dtype=INDEX)
    a, s = np.divmod(u, k1)
    b, t = np.divmod(v, k2)
    rows = (a[:, None] * q1 + 1 + inv).ravel()
    cols = (b[None, :] * Z3.nrows + prodmap[s[:, None] * k2 + t[None, :]]).ravel()
    C = sparse.from_triplets(rows, cols, np.ones(rows.size), (m * q1, n * Z3.nrows))
    return DPoly((m, n), dvars, Z3, C)


def _check_basis(prog: SosProgram, Z: DegreeMatrix) -> None:
    if Z.nrows == 0:
        raise ArgumentError("monomial basis must be nonempty")
    extra = [v for v in Z.vars if v not in prog.ivars]
    if extra:
        raise ArgumentError(f"basis uses variables {extra} that the program does not declare")


def quadvar(
    prog: SosProgram,
    Z1cells: Sequence[DegreeMatrix],
    Z2cells: Sequence[DegreeMatrix],
    mdims: Sequence[int] | None = None,
    ndims: Sequence[int] | None = None,
    opt: str = "none",
) -> tuple[SosProgram, list[list[DPoly]]]:
    """Grid of polynomial variables P[i][j] = (I_mi kron Z1_i)^T Q_ij (I_nj kron Z2_j).

    The Q_ij are the blocks of one composite matrix Q. With ``opt="pos"``
    the composite Q is registered as a single PSD block, with ``"sym"`` it
    is only tied symmetric, and with ``"none"`` every entry is a fresh free
    variable.
    """
    if opt not in OPTS:
        raise OptionError(f"opt must be one of {OPTS}, got {opt!r}")
    r, p = len(Z1cells), len(Z2cells)
    if r == 0 or p == 0:
        raise ArgumentError("quadvar needs at least one cell on each side")
    mdims = [1] * r if mdims is None else [int(m) for m in mdims]
    ndims = [1] * p if ndims is None else [int(n) for n in ndims]
    if len(mdims) != r or len(ndims) != p:
        raise DimensionError("mdims/ndims must match the number of cells")
    if min(mdims + ndims) < 1:
        raise DimensionError("matrix dimensions must be positive")
    for Z in list(Z1cells) + list(Z2cells):
        _check_basis(prog, Z)
    k1 = [Z.nrows for Z in Z1cells]
    k2 = [Z.nrows for Z in Z2cells]
    if opt != "none" and (r != p or mdims != ndims or k1 != k2):
        raise OptionError(f"opt={opt!r} needs a square composite: r=p, m_i=n_i and matching basis sizes")

    off1 = np.concatenate([[0], np.cumsum([m * k for m, k in zip(mdims, k1)])]).astype(INDEX)
    off2 = np.concatenate([[0], np.cumsum([n * k for n, k in zip(ndims, k2)])]).astype(INDEX)
    R, Cn = int(off1[-1]), int(off2[-1])

    if opt == "none":
        base = prog._fresh_free(R * Cn)
        for k in range(R * Cn):
            prog._register(_free_name(base + k), Origin("free"))

        def key(U, V):
            return U[:, None] * Cn + V[None, :]

        def namer(k):
            return _free_name(base + k)

    elif opt == "sym":
        base = prog._fresh_free(R * R)
        for a in range(R):
            for b in range(a, R):
                prog._register(_free_name(base + a * R + b), Origin("free"))

        def key(U, V):
            lo = np.minimum(U[:, None], V[None, :])
            hi = np.maximum(U[:, None], V[None, :])
            return lo * R + hi

        def namer(k):
            return _free_name(base + k)

    else:
        blk = len(prog.blocks)
        entries = {}
        for a in range(R):
            for b in range(a, R):
                name = _gram_name(blk, a, b)
                prog._register(name, Origin("psd", blk, a, b))
                entries[(a, b)] = name
        prog.blocks.append(PsdBlock(R, entries))

        def key(U, V):
            lo = np.minimum(U[:, None], V[None, :])
            hi = np.maximum(U[:, None], V[None, :])
            return lo * R + hi

        def namer(k):
            return _gram_name(blk, *divmod(k, R))

    grid = []
    for i in range(r):
        row = []
        U = off1[i] + np.arange(mdims[i] * k1[i], dtype=INDEX)
        for j in range(p):
            V = off2[j] + np.arange(ndims[j] * k2[j], dtype=INDEX)
            row.append(_cell_poly(Z1cells[i], Z2cells[j], mdims[i], ndims[j], key(U, V), namer))
        grid.append(row)
    return prog, grid


def sosvar(prog: SosProgram, Z: DegreeMatrix) -> tuple[SosProgram, DPoly]:
    """SOS polynomial Z^T Q Z with Q PSD."""
    prog, grid = quadvar(prog, [Z], [Z], [1], [1], "pos")
    return prog, grid[0][0]


def polymatrixvar(
    prog: SosProgram, Z: DegreeMatrix, dims: tuple[int, int], opt: str = "none"
) -> tuple[SosProgram, DPoly]:
    """m x n matrix whose entries are free polynomials over basis Z.

    ``opt="sym"`` ties entry (a, b) to entry (b, a). Positivity is not a
    property of a free coefficient matrix, so ``"pos"`` is rejected; use
    :func:`matrix_ineq` on the result instead.
    """
    m, n = dims
    if opt == "none":
        prog, grid = quadvar(prog, [DegreeMatrix.constant()], [Z], [m], [n], "none")
        return prog, grid[0][0]
    if opt != "sym":
        raise OptionError(f"polymatrixvar supports opt 'none' or 'sym', got {opt!r}")
    if m != n:
        raise OptionError("a symmetric polynomial matrix must be square")
    _check_basis(prog, Z)
    k = Z.nrows
    base = prog._fresh_free(n * n * k)
    for a in range(n):
        for b in range(a, n):
            for t in range(k):
                prog._register(_free_name(base + (a * n + b) * k + t), Origin("free"))
    a = np.arange(n, dtype=INDEX)
    lo = np.minimum(a[:, None], a[None, :])
    hi = np.maximum(a[:, None], a[None, :])
    t = np.arange(k, dtype=INDEX)
    # Q is n x (n*k): Q[a, b*k + t] is the coefficient of Z_t in entry (a, b)
    keys = ((lo * n + hi)[:, :, None] * k + t[None, None, :]).reshape(n, n * k)
    P = _cell_poly(DegreeMatrix.constant(), Z, n, n, keys, lambda u: _free_name(base + u))
    return prog, P


# -- constraints ------------------------------------------------------------------


def eq_constraint(prog: SosProgram, D: DPoly) -> SosProgram:
    """Require D to vanish identically."""
    D = dpvar.compress(D)
    extra = [v for v in D.active_ivars() if v not in prog.ivars]
    if extra:
        raise ArgumentError(f"constraint uses variables {extra} that the program does not declare")
    unknown = [d for d in D.dvars if d not in prog.registry]
    if unknown:
        raise RegistrationError(f"constraint uses undeclared decision variables {unknown[:5]}")
    prog.equalities.append(D)
    return prog


def _gram_basis(D: DPoly) -> DegreeMatrix:
    D = dpvar.compress(D)
    deg = max(D.degree(), 0)
    if deg % 2:
        warnings.warn(
            f"constraint has odd degree {deg}; it cannot be a sum of squares",
            StructuralInfeasibilityWarning,
            stacklevel=3,
        )
    return full_basis(D.active_ivars(), math.ceil(deg / 2))


def sos_ineq(prog: SosProgram, D: DPoly) -> SosProgram:
    """Require the scalar polynomial D to be a sum of squares."""
    if not D.is_scalar():
        raise DimensionError(f"sos_ineq expects a 1x1 polynomial, got {D.matdim}")
    return matrix_ineq(prog, D)


def matrix_ineq(prog: SosProgram, D: DPoly) -> SosProgram:
    """Require the square polynomial matrix D to be SOS: D = (I kron Z)^T Q (I kron Z), Q PSD."""
    m1, m2 = D.matdim
    if m1 != m2:
        raise DimensionError(f"matrix_ineq expects a square matrix, got {D.matdim}")
    Zh = _gram_basis(D)
    extra = [v for v in Zh.vars if v not in prog.ivars]
    if extra:
        raise ArgumentError(f"constraint uses variables {extra} that the program does not declare")
    prog, grid = quadvar(prog, [Zh], [Zh], [m1], [m1], "pos")
    return eq_constraint(prog, D - grid[0][0])


def set_objective(prog: SosProgram, weights: Mapping[str, float], sense: str = "min") -> SosProgram:
    if sense not in ("min", "max"):
        raise OptionError(f"sense must be 'min' or 'max', got {sense!r}")
    unknown = [d for d in weights if d not in prog.registry]
    if unknown:
        raise RegistrationError(f"objective uses undeclared decision variables {unknown}")
    prog.objective = {k: float(v) for k, v in weights.items()}
    prog.sense = sense
    return prog


# -- extraction ---------------------------------------------------------------------


def extract_affine(prog: SosProgram) -> tuple[list[str], SparseMat, np.ndarray]:
    """Stack all equalities as rows of A xi = b over the registered dvars.

    One row per (matrix entry, monomial) pair, entries row-major and
    monomials in canonical order. Pairs with no coefficient at all are
    identically 0 = 0 and are skipped.
    """
    names = list(prog.registry)
    index = {name: k for k, name in enumerate(names)}
    rows, cols, vals, bs = [], [], [], []
    nrow = 0
    for D in prog.equalities:
        br, lr, bc, lc, v = D._unpack()
        rid = (br * D.matdim[1] + bc) * D.n + lc
        used, rid = np.unique(rid, return_inverse=True)
        gidx = np.array([-1] + [index[d] for d in D.dvars], dtype=INDEX)
        const = lr == 0
        b = np.zeros(used.size)
        np.add.at(b, rid[const], -v[const])
        rows.append(nrow + rid[~const])
        cols.append(gidx[lr[~const]])
        vals.append(v[~const])
        bs.append(b)
        nrow += used.size
    if not bs:
        return names, sparse.empty(0, len(names)), np.zeros(0)
    A = sparse.from_triplets(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (nrow, len(names)))
    return names, A, np.concatenate(bs)


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """min c^T x  s.t.  A x = b, free part unrestricted, each block PSD."""

    nfree: int
    blocks: tuple[int, ...]
    A: SparseMat
    b: np.ndarray
    c: np.ndarray
    varmap: dict[str, int]
    sense: str = "min"

    @property
    def nvec(self) -> int:
        return self.nfree + sum(s * s for s in self.blocks)

    @property
    def m(self) -> int:
        return self.A.nrows

    def offsets(self) -> np.ndarray:
        """Start of each block in the vectorized x."""
        sizes = [s * s for s in self.blocks]
        return (self.nfree + np.concatenate([[0], np.cumsum(sizes)])).astype(INDEX)[:-1]

    def mirror(self, idx: int) -> int:
        """Index of the transposed block position (identity for free entries)."""
        if idx < self.nfree:
            return idx
        offs = self.offsets()
        b = int(np.searchsorted(offs, idx, side="right")) - 1
        s = self.blocks[b]
        r, c = (idx - offs[b]) % s, (idx - offs[b]) // s
        return int(offs[b] + c + r * s)

    def dvar_values(self, x: np.ndarray) -> dict[str, float]:
        """Decision variable values from a vectorized point (block entries symmetrized)."""
        x = np.asarray(x, dtype=np.float64)
        return {name: 0.5 * (x[k] + x[self.mirror(k)]) for name, k in self.varmap.items()}

    def vectorize(self, values: Mapping[str, float]) -> np.ndarray:
        x = np.zeros(self.nvec)
        for name, k in self.varmap.items():
            x[k] = x[self.mirror(k)] = values.get(name, 0.0)
        return x

    def program_objective(self, obj: float) -> float:
        """Convert a min-form objective back to the program's sense."""
        return -obj if self.sense == "max" else obj


def assemble(prog: SosProgram) -> SdpProblem:
    names, Axi, b = extract_affine(prog)
    free = prog.free_names()
    varmap: dict[str, int] = {name: k for k, name in enumerate(free)}
    sides = tuple(blk.side for blk in prog.blocks)
    off = len(free)
    offsets = []
    for s in sides:
        offsets.append(off)
        off += s * s
    nvec = off
    # per registered dvar: primary index and its mirror (equal for free and diagonal)
    prim = np.empty(len(names), dtype=INDEX)
    mirr = np.empty(len(names), dtype=INDEX)
    for k, name in enumerate(names):
        o = prog.registry[name]
        if o.kind == "free":
            prim[k] = mirr[k] = varmap[name]
        else:
            s, base = sides[o.block], offsets[o.block]
            prim[k] = base + o.r + o.c * s
            mirr[k] = base + o.c + o.r * s
            varmap[name] = int(prim[k])

    r, c, v = Axi.coo()
    diag = prim[c] == mirr[c]
    half = np.where(diag, v, 0.5 * v)
    rows = np.concatenate([r, r[~diag]])
    cols = np.concatenate([prim[c], mirr[c][~diag]])
    vals = np.concatenate([half, half[~diag]])
    A = sparse.from_triplets(rows, cols, vals, (Axi.nrows, nvec))

    cvec = np.zeros(nvec)
    sign = -1.0 if prog.sense == "max" else 1.0
    index = {name: k for k, name in enumerate(names)}
    for name, w in prog.objective.items():
        k = index[name]
        if prim[k] == mirr[k]:
            cvec[prim[k]] += sign * w
        else:
            cvec[prim[k]] += 0.5 * sign * w
            cvec[mirr[k]] += 0.5 * sign * w
    b = b.copy()
    b.setflags(write=False)
    cvec.setflags(write=False)
    return SdpProblem(len(free), sides, A, b, cvec, varmap, prog.sense)
