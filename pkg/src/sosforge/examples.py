"""The three demonstration programs: global lower bound, robust and local stability."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dpvar, sdp
from .dpvar import DPoly, jacobian, subs
from .errors import CapacityError
from .monomial import full_basis
from .parse import parse_poly
from .sosprog import (
    SdpProblem,
    assemble,
    declare_decvar,
    matrix_ineq,
    new_program,
    polymatrixvar,
    set_objective,
    sos_ineq,
    sosvar,
)

GLB_F = "x1^4 + x2^4 - 2*x2*x1^3 - 3*x2^2*x1^2 + 150*(x1^2+x2^2)"


@dataclass
class Report:
    problem: str
    params: dict
    parse_time: float
    nfree: int
    blocks: tuple[int, ...]
    nrows: int
    nvec: int
    status: str = "not solved"
    objective: float | None = None
    solve_time: float | None = None
    export_path: str | None = None
    notes: list[str] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [
            f"problem: {self.problem} {self.params}",
            f"parse time: {self.parse_time:.4f} s",
            f"sdp: {self.nrows} equality rows, {self.nfree} free, {len(self.blocks)} PSD blocks {list(self.blocks)}, {self.nvec} entries",
            f"status: {self.status}",
        ]
        if self.objective is not None:
            out.append(f"objective: {self.objective:.12g}")
        if self.solve_time is not None:
            out.append(f"solve time: {self.solve_time:.4f} s")
        if self.export_path:
            out.append(f"exported: {self.export_path}")
        out += [f"note: {n}" for n in self.notes]
        return out


def _scale_vars(p: DPoly, names, h: float) -> DPoly:
    for v in names:
        p = subs(p, v, h * DPoly.var(v))
    return p


def build_glb(dmax: int, box_halfwidth: float = 12.0, scaled: bool = True):
    """Psatz program for the largest gamma with f - gamma >= 0 on the box.

    With ``scaled`` the program is written in u = x / box_halfwidth, which
    is the same SDP up to a diagonal change of basis and keeps the data
    near unit size; gamma is unchanged.
    """
    if dmax < 1:
        raise ValueError("dmax must be positive")
    h = float(box_halfwidth)
    xs = ["x1", "x2"]
    prog = new_program(xs)
    prog, (gam,) = declare_decvar(prog, "gam")
    Z = full_basis(xs, dmax)
    s = []
    for _ in range(3):
        prog, si = sosvar(prog, Z)
        s.append(si)
    f = parse_poly(GLB_F)
    g = [
        DPoly.constant(h * h) - DPoly.var("x1") ** 2,
        DPoly.constant(h * h) - DPoly.var("x2") ** 2,
        DPoly.constant(2 * h * h) - DPoly.var("x1") ** 2 - DPoly.var("x2") ** 2,
    ]
    if scaled and h != 1.0:
        f = _scale_vars(f, xs, h)
        g = [_scale_vars(gi, xs, h) * (1.0 / (h * h)) for gi in g]
    F = f - gam - s[0] * g[0] - s[1] * g[1] - s[2] * g[2]
    sos_ineq(prog, F)
    set_objective(prog, {"gam": 1.0}, "max")
    return prog


def robust_matrix(n: int) -> DPoly:
    """A(p): ones on the diagonal, 0.25 p1 below it and -0.25 p2 above it."""
    terms = []
    for i in range(n):
        for j in range(n):
            if i == j:
                terms.append((i, j, None, {}, 1.0))
            elif i > j:
                terms.append((i, j, None, {"p1": 1}, 0.25))
            else:
                terms.append((i, j, None, {"p2": 1}, -0.25))
    return DPoly.from_terms(terms, (n, n), ivars=["p1", "p2"])


def build_robust(n: int, eps: float = 1e-4):
    ps = ["p1", "p2"]
    prog = new_program(ps)
    Z = full_basis(ps, 2)
    prog, P = polymatrixvar(prog, Z, (n, n))
    matrix_ineq(prog, P - eps * DPoly.identity(n))
    prog, Q = polymatrixvar(prog, Z, (n, n))
    matrix_ineq(prog, Q)
    A = robust_matrix(n)
    g = parse_poly("1 - p1^2 - p2^2")
    matrix_ineq(prog, -Q * g - A.T * P - P * A)
    return prog


def vdp_field(n: int, eps: float = -0.5) -> tuple[list[str], DPoly]:
    """Chain of n Van der Pol oscillators as a 2n x 1 polynomial vector."""
    ys = [f"y{i + 1}" for i in range(n)]
    zs = [f"z{i + 1}" for i in range(n)]
    rows = []
    for i in range(n):
        rows.append(parse_poly(f"-2*{zs[i]}"))
    for j in range(n):
        y, z = ys[j], zs[j]
        expr = f"0.8*{y} + 10*(1.44*{y}^2 - 0.21)*{z}"
        fj = parse_poly(expr)
        if j < n - 1:
            fj = fj + eps * DPoly.var(zs[j + 1]) * DPoly.var(y)
        rows.append(fj)
    f = rows[0]
    for r in rows[1:]:
        f = dpvar.vcat(f, r)
    return ys + zs, f


def build_localstab(n: int, radius: float = 0.5, eps: float = -0.5):
    xs, f = vdp_field(n, eps)
    prog = new_program(xs)
    Z = full_basis(xs, 2)
    prog, V = sosvar(prog, Z)
    Vd = jacobian(V, xs) * f
    prog, s = sosvar(prog, Z)
    g = DPoly.constant(radius * radius)
    for v in xs:
        g = g - DPoly.var(v) ** 2
    sos_ineq(prog, -Vd - s * g)
    return prog


def _finish(name: str, params: dict, build, solve: bool, export: str | Path | None, solve_opts=()) -> tuple[Report, SdpProblem, sdp.Solution | None]:
    t0 = time.perf_counter()
    prog = build()
    P = assemble(prog)
    t_parse = time.perf_counter() - t0
    rep = Report(name, params, t_parse, P.nfree, P.blocks, P.m, P.nvec)
    sol = None
    if solve:
        t0 = time.perf_counter()
        try:
            for opts in list(solve_opts) + [{}]:
                sol = sdp.solve_small(P, **opts)
                if sol.status == "optimal":
                    break
            rep.status = sol.status
            if sol.status == "optimal" and np.any(P.c):
                rep.objective = P.program_objective(sol.obj_primal)
        except CapacityError as exc:
            rep.status = "over capacity"
            rep.notes.append(str(exc))
            if export is None:
                export = f"{name}.dat-s"
        rep.solve_time = time.perf_counter() - t0
    if export is not None:
        sdp.export_sdpa(P, export)
        rep.export_path = str(export)
    return rep, P, sol


def run_glb(dmax: int, box_halfwidth: float = 12.0, *, solve: bool = True, export=None, scaled: bool = True):
    """Build, and solve or export, the lower-bound program; returns (report, problem, solution)."""
    rep, P, sol = _finish(
        "glb",
        {"dmax": dmax, "box_halfwidth": box_halfwidth},
        lambda: build_glb(dmax, box_halfwidth, scaled),
        solve,
        export,
        solve_opts=[{"tol_gap": 1e-11, "tol_feas": 1e-10}],
    )
    if sol is not None and sol.status == "optimal":
        rep.notes.append(f"gamma = {P.dvar_values(sol.x)['gam']:.12g}")
    return rep, P, sol


def run_robust(n: int, *, solve: bool = True, export=None):
    rep, P, sol = _finish("robust", {"n": n}, lambda: build_robust(n), solve, export)
    rep.notes.append("A(p) has a positive diagonal, so the program is expected to be infeasible")
    return rep, P, sol


def run_localstab(n: int, *, solve: bool = True, export=None):
    return _finish("localstab", {"n": n}, lambda: build_localstab(n), solve, export)
