import io
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from sosforge import sdp, sparse
from sosforge.dpvar import DPoly
from sosforge.errors import CapacityError, SdpaFormatError, StructuralInfeasibilityWarning
from sosforge.monomial import DegreeMatrix
from sosforge.sosprog import (
    SdpProblem,
    assemble,
    declare_decvar,
    eq_constraint,
    new_program,
    set_objective,
    sos_ineq,
    sosvar,
)

DATA = Path(__file__).parent / "data"


def one_free_problem():
    prog, (g,) = declare_decvar(new_program(), "gam")
    eq_constraint(prog, g - 1.0)
    set_objective(prog, {"gam": 1.0}, "max")
    return assemble(prog)


def gamma_le_5():
    prog, (g,) = declare_decvar(new_program(), "gam")
    prog, s = sosvar(prog, DegreeMatrix.constant())
    eq_constraint(prog, 5.0 - g - s)
    set_objective(prog, {"gam": 1.0}, "max")
    return assemble(prog)


def min_trace():
    A = sparse.from_triplets([0], [0], [1.0], (1, 4))
    return SdpProblem(0, (2,), A, np.array([1.0]), np.array([1.0, 0.0, 0.0, 1.0]), {})


def minus_one():
    return assemble(sos_ineq(new_program(["x1"]), DPoly.constant(-1.0)))


def same_problem(p, q):
    assert p.nfree == q.nfree and p.blocks == q.blocks
    np.testing.assert_array_equal(p.A.to_dense(), q.A.to_dense())
    np.testing.assert_array_equal(p.b, q.b)
    np.testing.assert_array_equal(p.c, q.c)


def check_invariants(p, sol, tol_feas=1e-8):
    assert sol.status == "optimal"
    assert sol.relgap <= 1e-8
    A = p.A.to_dense()
    assert np.max(np.abs(A @ sol.x - p.b), initial=0) <= tol_feas * (1 + np.max(np.abs(p.b), initial=0))
    for off, s in zip(p.offsets(), p.blocks):
        X = sol.x[off : off + s * s].reshape(s, s, order="F")
        assert np.linalg.eigvalsh(0.5 * (X + X.T)).min() >= -1e-7


def test_golden_empty():
    P = assemble(new_program())
    assert sdp.export_sdpa(P) == (DATA / "empty.dat-s").read_text()


def test_golden_one_free(tmp_path):
    P = one_free_problem()
    out = tmp_path / "p.dat-s"
    sdp.export_sdpa(P, out)
    assert out.read_bytes() == (DATA / "one_free.dat-s").read_bytes()
    buf = io.StringIO()
    sdp.export_sdpa(P, buf)
    assert buf.getvalue() == out.read_text()


def test_parse_golden_files():
    same_problem(sdp.parse_sdpa(DATA / "one_free.dat-s"), one_free_problem())
    same_problem(sdp.parse_sdpa(DATA / "empty.dat-s"), assemble(new_program()))


def test_parse_comments_and_errors():
    text = '"a comment\n* another\n' + (DATA / "one_free.dat-s").read_text()
    same_problem(sdp.parse_sdpa(text), one_free_problem())
    with pytest.raises(SdpaFormatError):
        sdp.parse_sdpa("1\n1\n2\n1\n1 1 3 3 1.0\n")
    with pytest.raises(SdpaFormatError):
        sdp.parse_sdpa("1\n1\n2\n1\n1 1 1\n")


def test_values_use_17_digits():
    prog, (g,) = declare_decvar(new_program(), "gam")
    eq_constraint(prog, g * (1 / 3) - 0.1)
    text = sdp.export_sdpa(assemble(prog))
    assert "0.10000000000000001" in text and "0.33333333333333331" in text


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_export_parse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    prog = oracle.random_program(rng)
    names = list(prog.registry)
    set_objective(prog, {n: float(rng.standard_normal()) for n in names[:3]}, "max" if rng.random() < 0.5 else "min")
    P = assemble(prog)
    same_problem(sdp.parse_sdpa(sdp.export_sdpa(P)), P)


def test_gamma_le_5():
    P = gamma_le_5()
    sol = sdp.solve_small(P)
    check_invariants(P, sol)
    assert P.dvar_values(sol.x)["gam"] == pytest.approx(5.0, abs=1e-6)
    assert P.program_objective(sol.obj_primal) == pytest.approx(5.0, abs=1e-6)


def test_min_trace():
    P = min_trace()
    sol = sdp.solve_small(P)
    check_invariants(P, sol)
    assert sol.obj_primal == pytest.approx(1.0, abs=1e-6)


def test_one_free_variable():
    P = one_free_problem()
    sol = sdp.solve_small(P)
    check_invariants(P, sol)
    assert sol.x[0] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("make", [gamma_le_5, min_trace, one_free_problem])
def test_weak_duality_every_iterate(make):
    sol = sdp.solve_small(make())
    assert sol.history
    for pobj, dobj in sol.history:
        assert dobj <= pobj + 1e-6


def test_minus_one_is_not_optimal():
    sol = sdp.solve_small(minus_one())
    assert sol.status != "optimal"


def test_odd_degree_program_not_optimal():
    with pytest.warns(StructuralInfeasibilityWarning):
        prog = sos_ineq(new_program(["x1"]), DPoly.var("x1") ** 3)
    assert sdp.solve_small(assemble(prog)).status != "optimal"


@pytest.mark.parametrize("make", [gamma_le_5, min_trace, one_free_problem])
def test_reparsed_problem_same_optimum(make):
    P = make()
    a = sdp.solve_small(P)
    b = sdp.solve_small(sdp.parse_sdpa(sdp.export_sdpa(P)))
    assert b.status == "optimal"
    assert abs(a.obj_primal - b.obj_primal) <= 1e-6


def test_deterministic():
    P = gamma_le_5()
    a, b = sdp.solve_small(P), sdp.solve_small(P)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_capacity_limit():
    big = SdpProblem(0, (sdp.MAX_SIDE + 1,), sparse.empty(0, (sdp.MAX_SIDE + 1) ** 2), np.zeros(0),
                     np.zeros((sdp.MAX_SIDE + 1) ** 2), {})
    with pytest.raises(CapacityError):
        sdp.solve_small(big)
