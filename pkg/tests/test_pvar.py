import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from sosforge import bench, dpvar, pvar
from sosforge.dpvar import DPoly, PPoly
from sosforge.errors import NonlinearityError


def brute_flat_basis(Z, dvars):
    """Exponent tuples of [1; xi] kron Z over (ivars + dvars), by enumeration."""
    rows = [tuple(r) for r in Z.dense().tolist()]
    out = [r + (0,) * len(dvars) for r in rows]
    for k in range(len(dvars)):
        unit = tuple(int(j == k) for j in range(len(dvars)))
        out += [r + unit for r in rows]
    return out


@pytest.mark.parametrize("d", [2, 4])
@pytest.mark.parametrize("q", [1, 10, 100])
def test_flatten_accounting_matches_enumeration(d, q):
    rng = np.random.default_rng(q)
    S = bench.random_dpoly(rng, ["x1", "x2"], [f"xi{k:04d}" for k in range(q)], d)
    F = pvar.flatten(S)
    F.check()
    brute = brute_flat_basis(S.Z, list(S.dvars))
    assert F.nbar == len(set(brute)) == (q + 1) * S.n
    assert F.Zbar.degs.nnz == sum(1 for r in brute for e in r if e)
    assert F.Zbar.degs.nnz == (q + 1) * S.Z.degs.nnz + q * S.n


def test_flatten_q10_d2_count():
    S = bench.random_dpoly(np.random.default_rng(0), ["x1", "x2"], [f"a{k}" for k in range(10)], 2)
    assert pvar.flatten(S).Zbar.degs.nnz == 126


def test_flatten_q0_is_identity():
    S = dpvar.from_ppoly(PPoly.of(DPoly.var("x1") ** 2 + 3 * DPoly.var("x2")))
    F = pvar.flatten(S)
    assert F.Zbar == S.Z and F.B == S.C


def test_flat_add_zero_and_diff_q0():
    rng = np.random.default_rng(1)
    S = bench.random_dpoly(rng, ["x1", "x2"], ["a", "b"], 3)
    F = pvar.flatten(S)
    G = pvar.flat_add(F, pvar.flatten(DPoly.zero()))
    assert G.Zbar == F.Zbar and G.B == F.B
    P = bench.random_dpoly(rng, ["x1", "x2"], [], 3)
    np.testing.assert_allclose(
        pvar.flat_diff(pvar.flatten(P), "x1").B.to_dense(), dpvar.diff(P, "x1").C.to_dense()
    )


def test_flat_errors():
    F = pvar.flatten(DPoly.decvar("a") * DPoly.var("x"))
    with pytest.raises(NonlinearityError):
        pvar.flat_diff(F, "a")
    with pytest.raises(NonlinearityError):
        pvar.flat_mul(F, DPoly.decvar("b"))
    with pytest.raises(NonlinearityError):
        pvar.flat_mul(F, DPoly.var("a"))


def _close(F, S, rng):
    names = set(S.ivars) | set(F.allvars)
    for _ in range(5):
        vals = {v: float(rng.uniform(-1, 1)) for v in names}
        a = dpvar.eval(S, {v: vals[v] for v in S.ivars}, {d: vals[d] for d in S.dvars})
        b = pvar.flat_eval(F, vals)
        np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_cross_representation_equivalence(seed):
    rng = np.random.default_rng(seed)
    T1, S1 = oracle.random_case(rng)
    _, S2 = oracle.random_case(rng, shape=T1.shape)
    _, p = oracle.random_case(rng, shape=(T1.shape[1], 2), dvars=[], ivars=["x1", "x2"], maxdeg=2)
    v = "x1"
    _close(pvar.flat_add(pvar.flatten(S1), pvar.flatten(S2)), dpvar.add(S1, S2), rng)
    _close(pvar.flatten(dpvar.add(S1, S2)), dpvar.add(S1, S2), rng)
    _close(pvar.flat_mul(pvar.flatten(S1), PPoly.of(p)), dpvar.mul_poly(S1, PPoly.of(p)), rng)
    _close(pvar.flat_diff(pvar.flatten(S1), v), dpvar.diff(S1, v), rng)
    r = DPoly.var("x2") * 0.5 + 1.0
    _close(pvar.flat_subs(pvar.flatten(S1), v, r), dpvar.subs(S1, v, r), rng)
    _close(pvar.flat_integrate(pvar.flatten(S1), v), dpvar.integrate(S1, v), rng)
