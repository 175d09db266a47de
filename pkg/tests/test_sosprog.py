import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from sosforge import dpvar
from sosforge.dpvar import DPoly
from sosforge.errors import (
    ArgumentError,
    DimensionError,
    OptionError,
    RegistrationError,
    StructuralInfeasibilityWarning,
)
from sosforge.examples import build_glb
from sosforge.monomial import DegreeMatrix, full_basis
from sosforge.parse import parse_poly
from sosforge.sosprog import (
    Origin,
    assemble,
    declare_decvar,
    eq_constraint,
    extract_affine,
    matrix_ineq,
    new_program,
    polymatrixvar,
    quadvar,
    set_objective,
    sos_ineq,
    sosvar,
)

X = ["x1", "x2"]


def dense_system(prog):
    names, A, b = extract_affine(prog)
    return names, A.to_dense(), b


def psd_name(prog, block, r, c):
    want = Origin("psd", block, min(r, c), max(r, c))
    (name,) = [n for n, o in prog.registry.items() if o == want]
    return name


def test_declare_decvar():
    prog, (g,) = declare_decvar(new_program(X), "gam")
    assert g.q == 1 and g.n == 1
    np.testing.assert_array_equal(g.C.to_dense(), [[0.0], [1.0]])
    with pytest.raises(RegistrationError):
        declare_decvar(prog, "gam")
    with pytest.raises(RegistrationError):
        declare_decvar(prog, "x1")
    other, _ = declare_decvar(new_program(X), "gam")
    assert other.registry.keys() == {"gam"} and other is not prog


def test_quadvar_scalar_sos_counting():
    Z = full_basis(["x1"], 1)
    prog, grid = quadvar(new_program(X), [Z], [Z], [1], [1], "pos")
    S = grid[0][0]
    assert S.q == 3 and len(prog.blocks) == 1 and prog.blocks[0].side == 2
    assert sorted(prog.blocks[0].entries) == [(0, 0), (0, 1), (1, 1)]


def test_quadvar_linear_variable():
    Z = full_basis(X, 1)
    prog, grid = quadvar(new_program(X), [Z], [DegreeMatrix.constant()])
    S = grid[0][0]
    assert S.q == 3 and S.degree() == 1
    xi = {d: float(k + 1) for k, d in enumerate(S.dvars)}
    # q^T Z1 with Z1 = (1, x2, x1)
    assert dpvar.eval(S, {"x1": 2.0, "x2": 3.0}, xi)[0, 0] == 1 + 2 * 3 + 3 * 2


def test_quadvar_errors():
    Z = full_basis(X, 1)
    Z2 = full_basis(X, 2)
    with pytest.raises(OptionError):
        quadvar(new_program(X), [Z], [Z2], opt="pos")
    with pytest.raises(OptionError):
        quadvar(new_program(X), [Z], [Z], [1], [2], opt="sym")
    with pytest.raises(OptionError):
        quadvar(new_program(X), [Z], [Z], opt="bogus")
    with pytest.raises(ArgumentError):
        quadvar(new_program(X), [], [Z])
    with pytest.raises(ArgumentError):
        quadvar(new_program(["x1"]), [Z], [Z])


def test_quadvar_composite_pos_offsets():
    rng = np.random.default_rng(6)
    for _ in range(20):
        oracle.check_quadvar_config(rng)


def test_quadvar_none_is_all_distinct():
    rng = np.random.default_rng(7)
    Z1 = [oracle.random_basis(rng, 2), oracle.random_basis(rng, 3)]
    Z2 = [oracle.random_basis(rng, 1)]
    prog, grid = quadvar(new_program(X), Z1, Z2, [2, 1], [3])
    assert len(prog.registry) == (2 * 2 + 1 * 3) * 3
    assert not prog.blocks
    assert set(grid[0][0].dvars).isdisjoint(grid[1][0].dvars)


def test_sosvar_and_polymatrixvar_counts():
    for d in range(1, 4):
        Z = full_basis(X, d)
        n = Z.nrows
        prog, S = sosvar(new_program(X), Z)
        assert S.q == n * (n + 1) // 2 == len(prog.registry)
    prog, P = polymatrixvar(new_program(X), DegreeMatrix.constant(), (2, 2))
    assert P.q == 4 and P.shape == (2, 2) and P.n == 1
    prog, P = polymatrixvar(new_program(X), full_basis(X, 1), (2, 2), "sym")
    assert P.q == 3 * 3
    assert P.T == P
    with pytest.raises(OptionError):
        polymatrixvar(new_program(X), full_basis(X, 1), (2, 2), "pos")


def test_sosvar_nonnegative_on_random_psd():
    rng = np.random.default_rng(8)
    Z = full_basis(X, 2)
    prog, S = sosvar(new_program(X), Z)
    for _ in range(20):
        L = rng.standard_normal((6, 3))
        Q = L @ L.T
        xi = {}
        for name, o in prog.registry.items():
            xi[name] = Q[o.r, o.c]
        x = {"x1": float(rng.uniform(-3, 3)), "x2": float(rng.uniform(-3, 3))}
        assert dpvar.eval(S, x, xi)[0, 0] >= -1e-9


def test_eq_constraint_examples():
    prog, (a,) = declare_decvar(new_program(X), "a")
    eq_constraint(prog, a - 1.0)
    names, A, b = dense_system(prog)
    assert names == ["a"]
    np.testing.assert_array_equal(A, [[1.0]])
    np.testing.assert_array_equal(b, [1.0])
    prog2, _ = declare_decvar(new_program(X), "a")
    eq_constraint(prog2, DPoly.zero())
    assert dense_system(prog2)[1].shape == (0, 1)
    with pytest.raises(RegistrationError):
        eq_constraint(prog, DPoly.decvar("zz"))
    with pytest.raises(ArgumentError):
        eq_constraint(prog, DPoly.var("y"))


def gram_vector(prog, Q):
    return np.array([Q[o.r, o.c] if o.kind == "psd" else 0.0 for o in prog.registry.values()])


def test_hand_gram_for_square():
    prog = sos_ineq(new_program(["x1"]), parse_poly("x1^2"))
    _, A, b = dense_system(prog)
    xi = gram_vector(prog, np.array([[0.0, 0.0], [0.0, 1.0]]))
    np.testing.assert_array_equal(A @ xi, b)


def test_hand_certificate_for_shifted_square():
    prog = sos_ineq(new_program(["x1"]), parse_poly("x1^2 + 2*x1 + 1"))
    _, A, b = dense_system(prog)
    xi = gram_vector(prog, np.ones((2, 2)))
    np.testing.assert_array_equal(A @ xi, b)


def test_odd_degree_warns():
    with pytest.warns(StructuralInfeasibilityWarning):
        sos_ineq(new_program(["x1"]), parse_poly("x1^3"))


def test_ineq_shape_errors():
    prog = new_program(X)
    with pytest.raises(DimensionError):
        sos_ineq(prog, DPoly.constant(np.eye(2)))
    with pytest.raises(DimensionError):
        matrix_ineq(prog, DPoly.constant(np.ones((1, 2))))


def test_empty_and_single_variable_programs():
    P = assemble(new_program())
    assert P.A.shape == (0, 0) and P.nvec == 0 and P.blocks == ()
    prog, (g,) = declare_decvar(new_program(), "gam")
    eq_constraint(prog, g - 1.0)
    set_objective(prog, {"gam": 1.0}, "max")
    P = assemble(prog)
    np.testing.assert_array_equal(P.A.to_dense(), [[1.0]])
    np.testing.assert_array_equal(P.b, [1.0])
    np.testing.assert_array_equal(P.c, [-1.0])
    with pytest.raises(OptionError):
        set_objective(prog, {"gam": 1.0}, "up")
    with pytest.raises(RegistrationError):
        set_objective(prog, {"nope": 1.0})


def test_glb_assembled_size():
    P = assemble(build_glb(2))
    assert P.nfree == 1 and P.blocks == (6, 6, 6, 10) and len(P.blocks) == 4
    assert P.nvec == 1 + 3 * 36 + 100


def test_reduced_glb_against_hand_assembly():
    prog = build_glb(1, box_halfwidth=1.0)
    names, A, b = dense_system(prog)
    col = {n: k for k, n in enumerate(names)}

    f = {(4, 0): 1, (0, 4): 1, (3, 1): -2, (2, 2): -3, (2, 0): 150, (0, 2): 150}
    g = [{(0, 0): 1, (2, 0): -1}, {(0, 0): 1, (0, 2): -1}, {(0, 0): 2, (2, 0): -1, (0, 2): -1}]
    z1 = sorted(t for t in itertools.product(range(2), repeat=2) if sum(t) <= 1)
    z2 = sorted(t for t in itertools.product(range(3), repeat=2) if sum(t) <= 2)
    monos = sorted(t for t in itertools.product(range(5), repeat=2) if sum(t) <= 4)
    add = lambda *ts: tuple(map(sum, zip(*ts)))

    rows = {m: np.zeros(len(names)) for m in monos}
    rhs = {m: -float(f.get(m, 0)) for m in monos}
    rows[(0, 0)][col["gam"]] -= 1.0
    for i, gi in enumerate(g):
        for a, za in enumerate(z1):
            for c, zc in enumerate(z1):
                for mk, gk in gi.items():
                    rows[add(za, zc, mk)][col[psd_name(prog, i, a, c)]] -= gk
    for a, za in enumerate(z2):
        for c, zc in enumerate(z2):
            rows[add(za, zc)][col[psd_name(prog, 3, a, c)]] -= 1.0
    hand = np.array([np.append(rows[m], rhs[m]) for m in monos if rows[m].any() or rhs[m]])
    lib = np.column_stack([A, b])
    key = lambda M: M[np.lexsort(M.T[::-1])]
    assert lib.shape == hand.shape
    np.testing.assert_allclose(key(lib), key(hand), atol=0)


def check_soundness(prog, rng):
    names, A, b = dense_system(prog)
    if A.shape[0] == 0:
        return
    xi, *_ = np.linalg.lstsq(A, b, rcond=None)
    assert np.allclose(A @ xi, b, atol=1e-9)
    N = scipy.linalg.null_space(A)
    if N.size:
        xi = xi + N @ rng.standard_normal(N.shape[1])
    vals = dict(zip(names, xi))
    for _ in range(20):
        x = {"x1": float(rng.uniform(-1, 1)), "x2": float(rng.uniform(-1, 1))}
        for D in prog.equalities:
            assert np.max(np.abs(dpvar.eval(D, {v: x[v] for v in D.ivars}, vals)), initial=0) <= 1e-9


def test_extraction_soundness_100_programs():
    rng = np.random.default_rng(9)
    for _ in range(100):
        check_soundness(oracle.random_program(rng), rng)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_assembled_solution_space_is_sound(seed):
    rng = np.random.default_rng(seed)
    prog = oracle.random_program(rng)
    P = assemble(prog)
    if P.m == 0:
        return
    A = P.A.to_dense()
    x, *_ = np.linalg.lstsq(A, P.b, rcond=None)
    assert np.allclose(A @ x, P.b, atol=1e-9)
    vals = P.dvar_values(x)
    for D in prog.equalities:
        got = dpvar.eval(D, {"x1": 0.3, "x2": -0.7}, vals)
        assert np.max(np.abs(got), initial=0) <= 1e-9
