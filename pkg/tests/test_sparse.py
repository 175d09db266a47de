import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sosforge import sparse
from sosforge.errors import ArgumentError, DimensionError


def random_sparse(rng, m, n, density=0.3):
    a = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
    return a, sparse.from_dense(a)


@st.composite
def dense_mats(draw, max_side=10):
    m = draw(st.integers(0, max_side))
    n = draw(st.integers(0, max_side))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.sampled_from([0.0, 0.1, 0.4, 1.0]))
    rng = np.random.default_rng(seed)
    a = np.round(rng.standard_normal((m, n)), 3) * (rng.random((m, n)) < density)
    return a


def test_from_triplets_empty():
    a = sparse.from_triplets([], [], [], (3, 2))
    assert a.shape == (3, 2) and a.nnz == 0
    a.check()


def test_from_triplets_sums_duplicates():
    a = sparse.from_triplets([0, 0], [1, 1], [2.0, 3.0], (2, 2))
    assert a.nnz == 1
    assert a.to_dense()[0, 1] == 5.0


def test_from_triplets_cancellation_is_pruned():
    a = sparse.from_triplets([1, 1], [0, 0], [2.0, -2.0], (2, 2))
    assert a.nnz == 0


def test_from_triplets_out_of_bounds():
    with pytest.raises(DimensionError):
        sparse.from_triplets([2], [0], [1.0], (2, 2))


def test_from_triplets_accumulation_oracle():
    rng = np.random.default_rng(1)
    r = rng.integers(0, 50, 100)
    c = rng.integers(0, 50, 100)
    v = rng.standard_normal(100)
    want = np.zeros((50, 50))
    for i, j, x in zip(r, c, v):
        want[i, j] += x
    a = sparse.from_triplets(r, c, v, (50, 50))
    a.check()
    np.testing.assert_array_equal(a.to_dense(), want)


def test_kron_identity_and_scalar():
    rng = np.random.default_rng(2)
    b, B = random_sparse(rng, 3, 4)
    k = sparse.kron(sparse.identity(2), B).to_dense()
    np.testing.assert_array_equal(k[:3, :4], b)
    np.testing.assert_array_equal(k[3:, 4:], b)
    assert not k[:3, 4:].any() and not k[3:, :4].any()
    np.testing.assert_array_equal(sparse.kron(sparse.from_dense([[3.0]]), B).to_dense(), 3 * b)


def test_kron_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, A = random_sparse(rng, *rng.integers(1, 9, 2))
        b, B = random_sparse(rng, *rng.integers(1, 9, 2))
        K = sparse.kron(A, B)
        K.check()
        np.testing.assert_array_equal(K.to_dense(), np.kron(a, b))
        assert K.nnz <= A.nnz * B.nnz


def test_permute_cols():
    a = np.arange(1.0, 7.0).reshape(2, 3)
    A = sparse.from_dense(a)
    assert sparse.permute_cols(A, [0, 1, 2]) == A
    np.testing.assert_array_equal(sparse.permute_cols(A, [2, 1, 0]).to_dense(), a[:, ::-1])
    rng = np.random.default_rng(4)
    for _ in range(20):
        d, D = random_sparse(rng, 6, 7)
        p = rng.permutation(7)
        out = sparse.permute_cols(D, p)
        out.check()
        np.testing.assert_array_equal(out.to_dense(), d[:, p])
        pr = rng.permutation(6)
        np.testing.assert_array_equal(sparse.permute_rows(D, pr).to_dense(), d[pr, :])


@pytest.mark.parametrize("perm", [[0, 0, 1], [0, 1], [0, 1, 3]])
def test_permute_rejects_non_permutations(perm):
    A = sparse.identity(3)
    with pytest.raises(ArgumentError):
        sparse.permute_cols(A, perm)


def test_vcat_empty_and_scale_col_pruning():
    rng = np.random.default_rng(5)
    _, A = random_sparse(rng, 4, 5, 0.6)
    assert sparse.vcat(A, sparse.empty(0, 5)) == A
    j = int(np.argmax(A.col_nnz()))
    before = A.nnz
    out = sparse.scale_col(A, j, 0.0)
    out.check()
    assert out.nnz == before - A.col_nnz()[j]


def test_transpose_involution():
    rng = np.random.default_rng(6)
    _, A = random_sparse(rng, 5, 8)
    assert sparse.transpose(sparse.transpose(A)) == A


def test_cat_dimension_errors():
    with pytest.raises(DimensionError):
        sparse.hcat(sparse.empty(2, 1), sparse.empty(3, 1))
    with pytest.raises(DimensionError):
        sparse.vcat(sparse.empty(2, 1), sparse.empty(2, 2))
    with pytest.raises(DimensionError):
        sparse.scale_col(sparse.empty(2, 2), 2, 1.0)


def test_ops_against_dense_many_cases():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        m, n = rng.integers(0, 11, 2)
        a, A = random_sparse(rng, m, n, rng.random())
        b, B = random_sparse(rng, m, n, rng.random())
        k = int(rng.integers(0, 11))
        c, Cm = random_sparse(rng, m, k, rng.random())
        e, E = random_sparse(rng, k, n, rng.random())
        results = {
            "add": (sparse.add(A, B), a + b),
            "hcat": (sparse.hcat(A, Cm), np.hstack([a, c])),
            "vcat": (sparse.vcat(A, E), np.vstack([a, e])),
            "transpose": (sparse.transpose(A), a.T),
            "scale": (sparse.scale(A, 2.5), 2.5 * a),
        }
        if n:
            j = int(rng.integers(n))
            want = a.copy()
            want[:, j] *= -3.0
            results["scale_col"] = (sparse.scale_col(A, j, -3.0), want)
        for name, (got, want) in results.items():
            got.check()
            np.testing.assert_array_equal(got.to_dense(), want, err_msg=name)
            assert sparse.canonicalize(got) == got
        assert sparse.hcat(A, Cm).nnz <= A.nnz + Cm.nnz


@settings(max_examples=200, deadline=None)
@given(dense_mats(), dense_mats())
def test_kron_property(a, b):
    K = sparse.kron(sparse.from_dense(a), sparse.from_dense(b))
    K.check()
    np.testing.assert_array_equal(K.to_dense(), np.kron(a, b).reshape(K.shape))


@settings(max_examples=200, deadline=None)
@given(dense_mats())
def test_roundtrip_and_canonical_idempotence(a):
    A = sparse.from_dense(a)
    A.check()
    np.testing.assert_array_equal(A.to_dense(), a)
    assert sparse.canonicalize(A) == A
    assert sparse.from_triplets(*A.coo(), A.shape) == A
