"""SDPA sparse files and a small dense primal-dual interior-point solver.

Problems are in the form produced by :func:`sosforge.sosprog.assemble`::

    primal:  min c^T x    s.t.  A x = b,  x_free unrestricted,  X_j PSD
    dual:    max b^T y    s.t.  c - A^T y = s,  s_free = 0,  S_j PSD

In an SDPA file this is the "dual" side (the SDPA Y matrix is our X), so
the SDPA objective vector is b, F_i is constraint row i and F_0 = -C. Free
variables are split as x = x+ - x- into a leading diagonal block of size
2*nfree.
"""

from __future__ import annotations

import io
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import sparse
from .errors import CapacityError, SdpaFormatError
from .sosprog import SdpProblem

MAX_NVEC = 5000
MAX_SIDE = 120
_DAMP = True
_INFEAS_TOL = 1e-8
_TRACE = False
_REFINE = 2


@dataclass
class Solution:
    status: str
    x: np.ndarray
    y: np.ndarray
    obj_primal: float
    obj_dual: float
    iterations: int
    history: list[tuple[float, float]] = field(default_factory=list)
    pinf: float = float("nan")
    dinf: float = float("nan")
    relgap: float = float("nan")


# -- SDPA export / import -------------------------------------------------------------


def _fmt(v: float) -> str:
    return "%.17g" % v


def _block_entries(p: SdpProblem):
    """Yield (matno, blkno, i, j, value) for every nonzero upper-triangle entry."""
    lp = 1 if p.nfree else 0
    offs = p.offsets()
    out = []

    def emit(matno: int, vec_idx: np.ndarray, vals: np.ndarray):
        for k, v in zip(vec_idx.tolist(), vals.tolist()):
            if k < p.nfree:
                out.append((matno, 1, k + 1, k + 1, v))
                out.append((matno, 1, p.nfree + k + 1, p.nfree + k + 1, -v))
                continue
            b = int(np.searchsorted(offs, k, side="right")) - 1
            s = p.blocks[b]
            r, c = (k - offs[b]) % s, (k - offs[b]) // s
            if r <= c:
                out.append((matno, lp + b + 1, r + 1, c + 1, v))

    nz = np.flatnonzero(p.c)
    emit(0, nz, -p.c[nz])
    r, c, v = sparse.transpose(p.A).coo()
    # transpose puts row i of A in column i, so entries come grouped by constraint
    starts = np.searchsorted(c, np.arange(p.m + 1))
    for i in range(p.m):
        lo, hi = starts[i], starts[i + 1]
        emit(i + 1, r[lo:hi], v[lo:hi])
    out = [e for e in out if e[4] != 0.0]
    out.sort(key=lambda e: e[:4])
    return out


def format_sdpa(p: SdpProblem) -> str:
    sizes = ([-2 * p.nfree] if p.nfree else []) + list(p.blocks)
    lines = [
        str(p.m),
        str(len(sizes)),
        " ".join(str(s) for s in sizes),
        " ".join(_fmt(v) for v in p.b),
    ]
    for matno, blk, i, j, v in _block_entries(p):
        lines.append(f"{matno} {blk} {i} {j} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def export_sdpa(p: SdpProblem, sink=None) -> str:
    """Write ``p`` in SDPA sparse format to ``sink`` (path or text stream); returns the text."""
    text = format_sdpa(p)
    if sink is None:
        return text
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sink.write(text)
    return text


def _numbers(line: str) -> list[str]:
    for ch in "{}(),":
        line = line.replace(ch, " ")
    return line.split()


def parse_sdpa(source) -> SdpProblem:
    """Read an SDPA sparse problem (text, path or stream).

    A leading diagonal block whose second half mirrors the first with
    opposite sign in every matrix is read back as free variables; any other
    diagonal block becomes a run of 1x1 PSD blocks.
    """
    if isinstance(source, (str, os.PathLike)) and not (isinstance(source, str) and "\n" in source):
        with open(source, encoding="ascii") as fh:
            text = fh.read()
    elif isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        text = str(source)
    lines = text.splitlines()
    k = 0
    while k < len(lines) and lines[k].lstrip().startswith(('"', "*")):
        k += 1
    body = lines[k:]
    try:
        m = int(_numbers(body[0])[0])
        nblocks = int(_numbers(body[1])[0])
        sizes = [int(s) for s in _numbers(body[2])][:nblocks]
        bvec = np.array([float(s) for s in _numbers(body[3])][:m]) if m else np.zeros(0)
    except (IndexError, ValueError) as exc:
        raise SdpaFormatError(f"bad SDPA header: {exc}") from None
    if len(sizes) != nblocks or bvec.size != m:
        raise SdpaFormatError("header counts do not match")
    entries = []
    for ln, line in enumerate(body[4:], start=k + 5):
        tok = _numbers(line)
        if not tok:
            continue
        if len(tok) != 5:
            raise SdpaFormatError(f"line {ln}: expected 5 fields")
        try:
            matno, blk, i, j = (int(t) for t in tok[:4])
            v = float(tok[4])
        except ValueError:
            raise SdpaFormatError(f"line {ln}: bad number") from None
        if not (0 <= matno <= m and 1 <= blk <= nblocks):
            raise SdpaFormatError(f"line {ln}: matrix or block index out of range")
        side = abs(sizes[blk - 1])
        if not (1 <= i <= side and 1 <= j <= side) or (sizes[blk - 1] < 0 and i != j):
            raise SdpaFormatError(f"line {ln}: entry outside block")
        if i > j:
            i, j = j, i
        entries.append((matno, blk - 1, i - 1, j - 1, v))

    # free-split detection on the first block
    nfree = 0
    lp_first = bool(sizes) and sizes[0] < 0 and sizes[0] % 2 == 0
    if lp_first:
        h = -sizes[0] // 2
        first = {}
        for matno, blk, i, _, v in entries:
            if blk == 0:
                first[(matno, i)] = first.get((matno, i), 0.0) + v
        if all(first.get((mt, (i + h) % (2 * h)), 0.0) == -v for (mt, i), v in first.items()):
            nfree = h

    # PSD blocks: every diagonal block not used for free vars becomes 1x1 blocks
    blocks: list[int] = []
    where: dict[tuple[int, int], tuple[int, int]] = {}  # (blk, diag index) -> (psd block, local)
    first_psd: dict[int, int] = {}
    for b, s in enumerate(sizes):
        if b == 0 and nfree:
            continue
        if s < 0:
            for t in range(-s):
                where[(b, t)] = (len(blocks), 0)
                blocks.append(1)
        else:
            first_psd[b] = len(blocks)
            blocks.append(s)
    offs = nfree + np.concatenate([[0], np.cumsum([s * s for s in blocks])]).astype(np.int64)

    rows, cols, vals = [], [], []
    c = np.zeros(int(offs[-1]))

    def put(matno, idx, v):
        if matno == 0:
            c[idx] -= v
        else:
            rows.append(matno - 1)
            cols.append(idx)
            vals.append(v)

    for matno, blk, i, j, v in entries:
        if blk == 0 and nfree:
            if i < nfree:
                put(matno, i, v)
            continue
        if sizes[blk] < 0:
            pb, _ = where[(blk, i)]
            put(matno, int(offs[pb]), v)
            continue
        pb = first_psd[blk]
        s = blocks[pb]
        put(matno, int(offs[pb]) + i + j * s, v)
        if i != j:
            put(matno, int(offs[pb]) + j + i * s, v)
    A = sparse.from_triplets(
        np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64), np.asarray(vals), (m, int(offs[-1]))
    )
    return SdpProblem(nfree, tuple(blocks), A, bvec, c, {}, "min")


# -- interior point solver ---------------------------------------------------------


class _Layout:
    """Dense views of a problem split into free and per-block parts."""

    def __init__(self, nfree: int, sides: list[int], A: np.ndarray, c: np.ndarray):
        m = A.shape[0]
        self.nfree = nfree
        self.sides = sides
        self.offs = list(nfree + np.concatenate([[0], np.cumsum([s * s for s in sides])]).astype(int)[:-1])
        self.Af = A[:, :nfree]
        self.cf = c[:nfree]
        self.Ab, self.Cb = [], []
        for o, s in zip(self.offs, sides):
            Ak = A[:, o : o + s * s].reshape(m, s, s)
            self.Ab.append(0.5 * (Ak + Ak.transpose(0, 2, 1)))
            C = c[o : o + s * s].reshape(s, s)
            self.Cb.append(0.5 * (C + C.T))

    def apply(self, xf, Xs) -> np.ndarray:
        out = self.Af @ xf
        for Ak, X in zip(self.Ab, Xs):
            out = out + np.einsum("kij,ij->k", Ak, X)
        return out

    def adjoint(self, y):
        return self.Af.T @ y, [np.einsum("kij,k->ij", Ak, y) for Ak in self.Ab]

    def objective(self, xf, Xs) -> float:
        return float(self.cf @ xf) + sum(float(np.sum(C * X)) for C, X in zip(self.Cb, Xs))

    def vec(self, xf, Xs) -> np.ndarray:
        parts = [xf] + [X.reshape(-1) for X in Xs]
        return np.concatenate(parts) if parts else np.zeros(0)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX PSD (X positive definite)."""
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    M = Li @ dX @ Li.T
    lam = np.linalg.eigvalsh(0.5 * (M + M.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _nt_scaling(X, S):
    """G with W = G G^T satisfying W S W = X, its inverse, and the scaled eigenvalues d.

    With X = L L^T, S = R R^T and R^T L = U diag(d) V^T, G = L V diag(d)^(-1/2).
    """
    L = np.linalg.cholesky(X)
    R = np.linalg.cholesky(S)
    U, d, Vt = np.linalg.svd(R.T @ L)
    sq = np.sqrt(d)
    G = L @ Vt.T / sq
    Gi = (U.T @ R.T) / sq[:, None]
    return G, Gi, d


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-12):
    """A maximal independent row subset, and whether the dropped rows are consistent."""
    m = A.shape[0]
    if m == 0:
        return np.arange(0), True
    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(diag[0], 1.0))) if diag.size else 0
    keep = np.sort(piv[:rank])
    if rank == m:
        return keep, True
    coef = np.linalg.lstsq(A[keep].T, A.T, rcond=None)[0]
    resid = b - coef.T @ b[keep]
    return keep, bool(np.max(np.abs(resid)) <= 1e-9 * (1 + np.max(np.abs(b))))


def _equilibrate(A: np.ndarray, nfree: int, sides: list[int], rounds: int = 20):
    """Row scales and column scales; block columns use a congruence D X D to keep PSD."""
    m, n = A.shape
    rs = np.ones(m)
    ds = [np.ones(s) for s in sides]
    ef = np.ones(nfree)
    absA = np.abs(A)

    def colscale():
        return np.concatenate([ef] + [np.outer(D, D).reshape(-1) for D in ds])

    for _ in range(rounds):
        cs = colscale()
        rn = (absA * cs[None, :]).max(axis=1, initial=0.0) * rs
        rn[rn == 0] = 1.0
        rs /= np.sqrt(rn)
        cn = (absA * rs[:, None]).max(axis=0, initial=0.0) * cs
        if nfree:
            f = cn[:nfree].copy()
            f[f == 0] = 1.0
            ef /= np.sqrt(f)
        o = nfree
        for j, s in enumerate(sides):
            blk = cn[o : o + s * s].reshape(s, s)
            t = np.maximum(blk.max(axis=0), blk.max(axis=1))
            t[t == 0] = 1.0
            ds[j] = ds[j] / np.sqrt(np.sqrt(t))
            o += s * s
    return rs, colscale(), ds


def _check_capacity(p: SdpProblem) -> None:
    if p.nvec > MAX_NVEC:
        raise CapacityError(f"{p.nvec} vectorized entries exceeds the limit of {MAX_NVEC}; export to SDPA instead")
    if p.blocks and max(p.blocks) > MAX_SIDE:
        raise CapacityError(f"block of side {max(p.blocks)} exceeds the limit of {MAX_SIDE}; export to SDPA instead")


def _farkas_primal(lay: _Layout, y: np.ndarray, b: np.ndarray) -> bool:
    """y proves Ax = b, x in the cone, infeasible: b^T y > 0, A_f^T y = 0, A_b^T y NSD.

    Checked on y / b^T y against an absolute tolerance (the data is equilibrated).
    """
    by = float(b @ y)
    if not by > 0:
        return False
    Af_y, Ab_y = lay.adjoint(y / by)
    viol = np.linalg.norm(Af_y) + sum(max(0.0, np.linalg.eigvalsh(Q)[-1]) for Q in Ab_y)
    return viol <= _INFEAS_TOL


def _farkas_dual(lay: _Layout, dxf, dXs) -> bool:
    """A direction with c^T d < 0, A d = 0 and d in the cone proves the dual infeasible."""
    cd = lay.objective(dxf, dXs)
    if not cd < 0:
        return False
    dxf = dxf / -cd
    dXs = [D / -cd for D in dXs]
    if any(np.linalg.eigvalsh(D)[0] < -_INFEAS_TOL for D in dXs):
        return False
    return np.linalg.norm(lay.apply(dxf, dXs)) <= _INFEAS_TOL


def solve_small(
    p: SdpProblem,
    tol_gap: float = 1e-8,
    tol_feas: float = 1e-8,
    max_iter: int = 200,
) -> Solution:
    """Mehrotra predictor-corrector with Nesterov-Todd scaling on the PSD blocks.

    The data is first equilibrated (row scaling and a diagonal congruence
    per block). A point is reported optimal once, in the original units,
    |c^T x - b^T y| <= tol_gap * (1 + |c^T x| + |b^T y|) and the primal and
    dual residuals are below tol_feas relative to 1 + ||b|| and 1 + ||c||.
    Step lengths are damped when needed so that b^T y <= c^T x at every
    iterate; infeasibility is reported from Farkas-type certificates.
    """
    _check_capacity(p)
    n, m = p.nvec, p.m
    A0 = p.A.to_dense()
    b0 = np.asarray(p.b, dtype=np.float64)
    c0 = np.asarray(p.c, dtype=np.float64)
    keep, consistent = _independent_rows(A0, b0)
    if not consistent:
        return Solution("infeasible", np.zeros(n), np.zeros(m), np.nan, np.nan, 0)
    sides = list(p.blocks)
    rs, cs, ds = _equilibrate(A0[keep], p.nfree, sides)
    A = rs[:, None] * A0[keep] * cs[None, :]
    b = rs * b0[keep]
    c = cs * c0
    lay = _Layout(p.nfree, sides, A, c)
    mk = A.shape[0]
    nu = max(sum(sides), 1)
    normb = 1.0 + np.linalg.norm(b0)
    normc = 1.0 + np.linalg.norm(c0)
    ef = cs[: p.nfree]
    dinv = [1.0 / D for D in ds]

    def residual_norms(rp, Rd_f, Rd):
        pinf = np.linalg.norm(rp / rs) / normb
        sq = np.sum((Rd_f / ef) ** 2) + sum(np.sum((di[:, None] * R * di[None, :]) ** 2) for di, R in zip(dinv, Rd))
        return pinf, np.sqrt(sq) / normc

    # starting point in the spirit of SDPT3
    Xs, Ss = [], []
    for Ak, C, s in zip(lay.Ab, lay.Cb, sides):
        an = np.linalg.norm(Ak.reshape(mk, -1), axis=1)
        xi = max(10.0, np.sqrt(s), s * np.max((1.0 + np.abs(b)) / (1.0 + an), initial=0.0))
        eta = max(10.0, np.sqrt(s), np.max(an, initial=0.0), np.linalg.norm(C))
        Xs.append(xi * np.eye(s))
        Ss.append(eta * np.eye(s))
    xf = np.zeros(p.nfree)
    y = np.zeros(mk)
    if mk and b @ b > 0:
        # start strictly on the safe side of weak duality
        target = lay.objective(xf, Xs) - sum(np.sum(X * S) for X, S in zip(Xs, Ss)) - 1.0
        y = target / (b @ b) * b

    history: list[tuple[float, float]] = []
    status = "max_iter"
    it = 0
    pinf = dinf = relgap = np.inf
    for it in range(max_iter + 1):
        Aty_f, Aty_b = lay.adjoint(y)
        rp = b - lay.apply(xf, Xs)
        Rd_f = lay.cf - Aty_f
        Rd = [C - Q - S for C, Q, S in zip(lay.Cb, Aty_b, Ss)]
        pobj = lay.objective(xf, Xs)
        dobj = float(b @ y)
        history.append((pobj, dobj))
        pinf, dinf = residual_norms(rp, Rd_f, Rd)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if relgap <= tol_gap and pinf <= tol_feas and dinf <= tol_feas:
            status = "optimal"
            break
        if _farkas_primal(lay, y, b):
            status = "infeasible"
            break
        if it == max_iter:
            break
        mu = sum(np.sum(X * S) for X, S in zip(Xs, Ss)) / nu

        try:
            scal = [_nt_scaling(X, S) for X, S in zip(Xs, Ss)]
        except np.linalg.LinAlgError:
            status = "numerical"
            break
        Ws = [G @ G.T for G, _, _ in scal]
        # Schur complement M_ij = A_i . W A_j W, bordered by the free columns
        M = np.zeros((mk, mk))
        for Ak, W in zip(lay.Ab, Ws):
            WAW = np.matmul(np.matmul(W[None], Ak), W[None])
            M += Ak.reshape(mk, -1) @ WAW.reshape(mk, -1).T
        M = 0.5 * (M + M.T)
        if p.nfree:
            K = np.block([[M, lay.Af], [lay.Af.T, np.zeros((p.nfree, p.nfree))]])
        else:
            K = M

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            try:
                fac = ("ldl", sla.lu_factor(K)) if p.nfree else ("chol", sla.cho_factor(K))
            except (np.linalg.LinAlgError, ValueError):
                fac = ("lstsq", K)

        def ksolve(rhs):
            kind, f = fac
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                if kind == "ldl":
                    return sla.lu_solve(f, rhs)
                if kind == "chol":
                    return sla.cho_solve(f, rhs)
                return np.linalg.lstsq(f, rhs, rcond=None)[0]

        def kapply(dy, dxf):
            """K [dy; dxf] with the Schur block applied through W, not through M."""
            top = lay.Af @ dxf
            for Ak, W in zip(lay.Ab, Ws):
                Q = np.einsum("kij,k->ij", Ak, dy)
                top = top + np.einsum("kij,ij->k", Ak, W @ Q @ W)
            return np.concatenate([top, lay.Af.T @ dy])

        def direction(Rcs):
            rhs_y = rp.copy()
            for Ak, Rc, W, R in zip(lay.Ab, Rcs, Ws, Rd):
                rhs_y -= np.einsum("kij,ij->k", Ak, Rc - W @ R @ W)
            rhs = np.concatenate([rhs_y, Rd_f])
            sol = ksolve(rhs)
            for _ in range(_REFINE):
                res = rhs - kapply(sol[:mk], sol[mk:])
                if not np.all(np.isfinite(res)):
                    break
                sol = sol + ksolve(res)
            dy, dxf = sol[:mk], sol[mk:]
            _, Atdy = lay.adjoint(dy)
            dSs = [R - Q for R, Q in zip(Rd, Atdy)]
            dXs = [Rc - W @ dS @ W for Rc, W, dS in zip(Rcs, Ws, dSs)]
            return dxf, dy, [0.5 * (D + D.T) for D in dXs], dSs

        def steps(dXs, dSs):
            ap = min([1.0] + [_max_step(X, dX) for X, dX in zip(Xs, dXs)])
            ad = min([1.0] + [_max_step(S, dS) for S, dS in zip(Ss, dSs)])
            return ap, ad

        try:
            dxf, dy, dXs, dSs = direction([-X for X in Xs])
            if _farkas_primal(lay, dy, b):
                status = "infeasible"
                break
            if _farkas_dual(lay, dxf, dXs):
                status = "infeasible"
                break
            ap, ad = steps(dXs, dSs)
            mu_aff = sum(np.sum((X + ap * dX) * (S + ad * dS)) for X, dX, S, dS in zip(Xs, dXs, Ss, dSs)) / nu
            sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
            # corrector: lambda o (dx~ + ds~) = sigma mu I - lambda^2 - dx~_aff o ds~_aff
            Rcs = []
            for (G, Gi, d), dX, dS in zip(scal, dXs, dSs):
                dxs = Gi @ dX @ Gi.T
                dss = G.T @ dS @ G
                T = sigma * mu * np.eye(len(d)) - np.diag(d * d) - 0.5 * (dxs @ dss + dss @ dxs)
                Rcs.append(G @ (2.0 * T / (d[:, None] + d[None, :])) @ G.T)
            dxf, dy, dXs, dSs = direction(Rcs)
            ap, ad = steps(dXs, dSs)
        except np.linalg.LinAlgError:
            status = "numerical"
            break
        tau = 0.9 if it < 3 else 0.98
        ap = min(1.0, tau * ap)
        ad = min(1.0, tau * ad)
        gap0 = pobj - dobj
        dgap = ap * lay.objective(dxf, dXs) - ad * float(b @ dy)
        if _DAMP and gap0 + dgap < 0 < -dgap:
            theta = max(0.0, 0.5 * gap0 / -dgap)
            ap *= theta
            ad *= theta
        if ap <= 1e-14 and ad <= 1e-14:
            status = "numerical"
            break
        if _TRACE:
            print(f'{it:3d} ap={ap:.2e} ad={ad:.2e} pinf={pinf:.1e} dinf={dinf:.1e} gap={relgap:.1e} mu={mu:.1e} sig={sigma:.1e}')
        xf = xf + ap * dxf
        Xs = [X + ap * dX for X, dX in zip(Xs, dXs)]
        Xs = [0.5 * (X + X.T) for X in Xs]
        y = y + ad * dy
        Ss = [S + ad * dS for S, dS in zip(Ss, dSs)]
        Ss = [0.5 * (S + S.T) for S in Ss]

    x = cs * lay.vec(xf, [X.T for X in Xs])
    y_full = np.zeros(m)
    y_full[keep] = rs * y
    return Solution(
        status, x, y_full, float(c0 @ x), float(b0 @ y_full), it, history,
        float(pinf), float(dinf), float(relgap),
    )
