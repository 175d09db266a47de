"""Scaling benchmarks: the same operation on dpvar and flattened (pvar) inputs.

Instances follow one recipe for every q: s1(x; xi) over the full degree-4
basis in (x1, x2) with a dense random coefficient matrix and q decision
variables. ``add`` adds s2(y; eta) built the same way over (y1, y2), where
half of eta is shared with xi. ``mul`` multiplies s1 by a known random
degree-4 polynomial in y. ``diff``, ``subs`` and ``int`` act on x2 (the
substitution is x2 -> x1/2 + 1).
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from . import dpvar, pvar, sparse
from .dpvar import DPoly
from .monomial import VarSet, full_basis

OPS = ("add", "mul", "diff", "subs", "int")
DEGREE = 4


@dataclass
class BenchRecord:
    op: str
    representation: str
    q: int
    wall_time: float
    peak_nnz: int
    basis_rows: int


CSV_FIELDS = [f.name for f in fields(BenchRecord)]


def _dvar_names(prefix: str, idx: Iterable[int]) -> list[str]:
    return [f"{prefix}{k:07d}" for k in idx]


def random_dpoly(rng: np.random.Generator, ivars: Sequence[str], dvars: Sequence[str], degree: int = DEGREE) -> DPoly:
    """Scalar polynomial with a dense random coefficient matrix over a full basis."""
    Z = full_basis(ivars, degree)
    dv = VarSet.of(dvars)
    C = sparse.from_dense(rng.standard_normal((len(dv) + 1, Z.nrows)))
    return DPoly((1, 1), dv, Z, C)


def make_instance(op: str, q: int, rng: np.random.Generator) -> tuple[DPoly, DPoly | None]:
    """Operands for ``op`` at q decision variables."""
    xi = _dvar_names("xi", range(q))
    s1 = random_dpoly(rng, ["x1", "x2"], xi)
    if op == "add":
        half = q // 2
        # eta_j = xi_{j+q/2} for the shared half, fresh names for the rest
        eta = xi[q - half :] + _dvar_names("eta", range(q - half))
        return s1, random_dpoly(rng, ["y1", "y2"], eta)
    if op == "mul":
        return s1, random_dpoly(rng, ["y1", "y2"], [])
    return s1, None


def _subs_arg() -> DPoly:
    return 0.5 * DPoly.var("x1") + 1.0


def _dpoly_op(op: str) -> Callable:
    if op == "add":
        return lambda a, b: dpvar.add(a, b)
    if op == "mul":
        return lambda a, b: dpvar.mul_poly(a, b)
    if op == "diff":
        return lambda a, b: dpvar.diff(a, "x2")
    if op == "subs":
        r = _subs_arg()
        return lambda a, b: dpvar.subs(a, "x2", r)
    if op == "int":
        return lambda a, b: dpvar.integrate(a, "x2")
    raise ValueError(f"unknown op {op!r}; expected one of {OPS}")


def _flat_op(op: str) -> Callable:
    if op == "add":
        return lambda a, b: pvar.flat_add(a, b)
    if op == "mul":
        return lambda a, b: pvar.flat_mul(a, b)
    if op == "diff":
        return lambda a, b: pvar.flat_diff(a, "x2")
    if op == "subs":
        r = _subs_arg()
        return lambda a, b: pvar.flat_subs(a, "x2", r)
    if op == "int":
        return lambda a, b: pvar.flat_integrate(a, "x2")
    raise ValueError(f"unknown op {op!r}; expected one of {OPS}")


def _size(obj) -> tuple[int, int]:
    """(nnz of coefficients plus degrees, basis rows)."""
    if isinstance(obj, pvar.FlatPoly):
        return obj.B.nnz + obj.Zbar.degs.nnz, obj.nbar
    return obj.C.nnz + obj.Z.degs.nnz, obj.n


def _timed(fn: Callable, args, reps: int):
    times = []
    out = None
    for _ in range(max(reps, 1)):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def _audit(op: str, res_d: DPoly, res_f: pvar.FlatPoly, rng: np.random.Generator, npts: int = 5) -> float:
    """Largest relative mismatch between the two results at random points."""
    worst = 0.0
    names = set(res_d.ivars) | set(res_f.allvars)
    for _ in range(npts):
        vals = {v: float(rng.uniform(-1, 1)) for v in names}
        a = dpvar.eval(res_d, vals, {d: vals.get(d, 0.0) for d in res_d.dvars})
        b = pvar.flat_eval(res_f, vals)
        worst = max(worst, float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(a)))))
    return worst


def bench_one(op: str, q: int, reps: int, rng: np.random.Generator, audit: bool = True) -> list[BenchRecord]:
    a, b = make_instance(op, q, rng)
    fa = pvar.flatten(a)
    fb = pvar.flatten(b) if (b is not None and op == "add") else b
    t_d, res_d = _timed(_dpoly_op(op), (a, b), reps)
    t_f, res_f = _timed(_flat_op(op), (fa, fb), reps)
    if audit:
        err = _audit(op, res_d, res_f, rng)
        if err > 1e-9:
            raise AssertionError(f"{op} at q={q}: representations disagree (relative error {err:.3g})")
    in_d = [_size(x)[0] for x in (a, b) if x is not None]
    in_f = [_size(x)[0] for x in (fa, fb) if x is not None]
    nnz_d, rows_d = _size(res_d)
    nnz_f, rows_f = _size(res_f)
    return [
        BenchRecord(op, "dpvar", q, t_d, max(in_d + [nnz_d]), rows_d),
        BenchRecord(op, "pvar", q, t_f, max(in_f + [nnz_f]), rows_f),
    ]


def _bench_task(args):
    op, q, reps, seed = args
    return bench_one(op, q, reps, np.random.default_rng([seed, q]))


def run_bench(
    op: str,
    q_list: Sequence[int],
    reps: int = 5,
    *,
    seed: int = 0,
    csv_path=None,
    parallel: bool = False,
) -> list[BenchRecord]:
    """Time ``op`` for every q in both representations; optionally write CSV."""
    if op not in OPS:
        raise ValueError(f"unknown op {op!r}; expected one of {OPS}")
    q_list = [int(q) for q in q_list]
    if q_list != sorted(q_list):
        raise ValueError("q_list must be ascending")
    tasks = [(op, q, reps, seed) for q in q_list]
    if parallel:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor() as ex:
            chunks = list(ex.map(_bench_task, tasks))
    else:
        chunks = [_bench_task(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    if csv_path is not None:
        write_csv(records, csv_path)
    return records


def write_csv(records: Iterable[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in records:
            row = asdict(r)
            row["wall_time"] = f"{r.wall_time:.9f}"
            w.writerow(row)


def read_csv(path) -> list[BenchRecord]:
    with open(path, newline="") as fh:
        return [
            BenchRecord(row["op"], row["representation"], int(row["q"]), float(row["wall_time"]),
                        int(row["peak_nnz"]), int(row["basis_rows"]))
            for row in csv.DictReader(fh)
        ]
