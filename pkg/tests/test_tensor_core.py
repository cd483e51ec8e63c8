import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kronlearn.errors import ArityError, ConvergenceError, DimensionError, PreconditionError, SizeError
from kronlearn.tensor_core import (
    as_matrix,
    frobenius_distance,
    khatri_rao,
    kron,
    kron_all,
    mode_k_fold,
    mode_k_product,
    mode_k_unfold,
    project_columns,
    project_unit_ball,
    spectral_norm,
    tucker_reconstruct,
    unvec,
    vec,
    vec_tensor,
)

# tiny magnitudes underflow when multiplied; they test nothing here
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False).filter(lambda v: v == 0 or abs(v) > 1e-50)


def small_matrix(max_dim=4):
    return st.tuples(st.integers(1, max_dim), st.integers(1, max_dim)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite))


def test_kron_identity_is_block_diagonal():
    b = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    out = kron(np.eye(2), b)
    expected = np.zeros((4, 6))
    expected[:2, :3] = b
    expected[2:, 3:] = b
    np.testing.assert_array_equal(out, expected)


def test_kron_frobenius_example():
    out = kron([[1, 2], [3, 4]], [[0, 1]])
    assert out.shape == (2, 4)
    np.testing.assert_array_equal(out, [[0, 1, 0, 2], [0, 3, 0, 4]])
    assert np.linalg.norm(out) == pytest.approx(math.sqrt(30), rel=1e-15)


def test_kron_matches_numpy():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(3, 2)), rng.normal(size=(2, 5))
    np.testing.assert_array_equal(kron(x, y), np.kron(x, y))


@settings(max_examples=50, deadline=None)
@given(small_matrix(), small_matrix(), small_matrix(), small_matrix())
def test_mixed_product(x1, x2, a, b):
    # shapes come from hypothesis; build conformable partners from them
    y1 = np.resize(a, (x1.shape[1], a.shape[1]))
    y2 = np.resize(b, (x2.shape[1], b.shape[1]))
    lhs = kron(x1, x2) @ kron(y1, y2)
    rhs = kron(x1 @ y1, x2 @ y2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=50, deadline=None)
@given(small_matrix(), small_matrix())
def test_kron_frobenius_factorizes(x, y):
    lhs = np.linalg.norm(kron(x, y))
    rhs = np.linalg.norm(x) * np.linalg.norm(y)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


def test_kron_size_guard():
    big = np.lib.stride_tricks.as_strided(np.zeros(1), shape=(50_000, 1), strides=(0, 0))
    with pytest.raises(SizeError):
        kron(big, big)


def test_kron_all_order_and_arity():
    rng = np.random.default_rng(1)
    a, b, c = (rng.normal(size=(2, 2)) for _ in range(3))
    np.testing.assert_allclose(kron_all([a, b, c]), np.kron(np.kron(a, b), c), atol=1e-15)
    with pytest.raises(ArityError):
        kron_all([])


def test_khatri_rao_identity_and_columns():
    np.testing.assert_array_equal(khatri_rao(np.eye(2), np.eye(2)),
                                  [[1, 0], [0, 0], [0, 0], [0, 1]])
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(3, 3)), rng.normal(size=(2, 3))
    kr, kk = khatri_rao(x, y), kron(x, y)
    for j in range(3):
        np.testing.assert_array_equal(kr[:, j], kk[:, 3 * j + j])
    with pytest.raises(DimensionError):
        khatri_rao(np.eye(2), np.eye(3))


def test_khatri_rao_single_column_is_vector_kron():
    u, v = np.array([[1.0], [2.0]]), np.array([[3.0], [4.0], [5.0]])
    np.testing.assert_array_equal(khatri_rao(u, v), np.kron(u, v))


def test_vec_examples():
    np.testing.assert_array_equal(vec(np.eye(2)).ravel(), [1, 0, 0, 1])
    u, v = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    np.testing.assert_array_equal(vec(np.outer(u, v)).ravel(), [3, 6, 4, 8])
    np.testing.assert_array_equal(vec(np.outer(u, v)).ravel(), kron(v, u).ravel())
    x = np.random.default_rng(3).normal(size=(3, 5))
    np.testing.assert_array_equal(unvec(vec(x), 3, 5), x)
    with pytest.raises(DimensionError):
        unvec(np.zeros(5), 2, 3)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(DimensionError):
        as_matrix(np.zeros((2, 2, 2)))
    with pytest.raises(PreconditionError):
        as_matrix([[np.nan]])


def test_unfold_second_order():
    t = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(mode_k_unfold(t, 1), t)
    np.testing.assert_array_equal(mode_k_unfold(t, 2), t.T)


def test_unfold_known_order3_layout():
    # frontal slices [[1,4,7,10],[2,5,8,11],[3,6,9,12]] and +12
    t = np.arange(1.0, 25.0).reshape((3, 4, 2), order="F")
    np.testing.assert_array_equal(mode_k_unfold(t, 1)[:, :4], [[1, 4, 7, 10], [2, 5, 8, 11], [3, 6, 9, 12]])
    np.testing.assert_array_equal(mode_k_unfold(t, 2)[:, :3], [[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12]])
    np.testing.assert_array_equal(mode_k_unfold(t, 3)[:, :2], [[1, 2], [13, 14]])
    assert mode_k_unfold(np.zeros((2, 3, 4)), 2).shape == (3, 8)
    np.testing.assert_array_equal(vec_tensor(t), vec(mode_k_unfold(t, 1)))


def test_unfold_fold_round_trip_and_errors():
    t = np.random.default_rng(4).normal(size=(2, 3, 4))
    for k in (1, 2, 3):
        np.testing.assert_array_equal(mode_k_fold(mode_k_unfold(t, k), k, t.shape), t)
    for bad in (0, 4):
        with pytest.raises(IndexError):
            mode_k_unfold(t, bad)
    with pytest.raises(DimensionError):
        mode_k_fold(np.zeros((3, 7)), 2, t.shape)


def test_mode_product_examples():
    rng = np.random.default_rng(5)
    t = rng.normal(size=(2, 3, 2))
    for k in (1, 2, 3):
        np.testing.assert_allclose(mode_k_product(t, np.eye(t.shape[k - 1]), k), t, atol=0)
        a = rng.normal(size=(4, t.shape[k - 1]))
        out = mode_k_product(t, a, k)
        assert out.shape[k - 1] == 4
        assert np.max(np.abs(mode_k_unfold(out, k) - a @ mode_k_unfold(t, k))) <= 1e-12
    a1, a2 = rng.normal(size=(3, 2)), rng.normal(size=(5, 3))
    x = mode_k_product(mode_k_product(t, a1, 1), a2, 2)
    y = mode_k_product(mode_k_product(t, a2, 2), a1, 1)
    assert np.max(np.abs(x - y)) <= 1e-12
    with pytest.raises(DimensionError):
        mode_k_product(t, np.eye(5), 1)


def test_tucker_examples():
    rng = np.random.default_rng(6)
    core = rng.normal(size=(3, 4))
    np.testing.assert_array_equal(tucker_reconstruct(core, [np.eye(3), np.eye(4)]), core)
    d1, d2 = rng.normal(size=(5, 3)), rng.normal(size=(2, 4))
    assert np.max(np.abs(tucker_reconstruct(core, [d1, d2]) - d1 @ core @ d2.T)) <= 1e-12
    core3 = rng.normal(size=(2, 2, 2))
    fs = [rng.normal(size=(3, 2)) for _ in range(3)]
    lhs = vec_tensor(tucker_reconstruct(core3, fs))
    rhs = kron_all(fs[::-1]) @ vec_tensor(core3)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12
    with pytest.raises(ArityError):
        tucker_reconstruct(core3, fs[:2])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=2, max_size=3), st.integers(0, 2**32 - 1))
def test_tucker_vec_identity_property(dims, seed):
    rng = np.random.default_rng(seed)
    core = rng.normal(size=dims)
    fs = [rng.normal(size=(int(rng.integers(1, 4)), d)) for d in dims]
    lhs = vec_tensor(tucker_reconstruct(core, fs))
    rhs = kron_all(fs[::-1]) @ vec_tensor(core)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_frobenius_distance():
    x = np.random.default_rng(7).normal(size=(3, 3))
    y = np.random.default_rng(8).normal(size=(3, 3))
    assert frobenius_distance(x, x) == 0.0
    assert frobenius_distance(np.eye(2), np.zeros((2, 2))) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert frobenius_distance(x, y) == frobenius_distance(y, x)
    with pytest.raises(DimensionError):
        frobenius_distance(np.eye(2), np.eye(3))


def test_spectral_norm_examples():
    assert spectral_norm(np.eye(5)) == pytest.approx(1.0, rel=1e-12)
    assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
    assert spectral_norm(np.outer([1.0, 2.0], [2.0, 0.0, 1.0])) == pytest.approx(5.0, rel=1e-12)
    assert spectral_norm(np.zeros((3, 2))) == 0.0
    with pytest.raises(PreconditionError):
        spectral_norm(np.eye(2), tol=0)


def test_spectral_norm_start_orthogonal_to_top_direction():
    # all-ones start is orthogonal to the dominant right singular vector (1, -1)
    x = np.array([[2.0, -2.0], [0.5, 0.5]])
    assert spectral_norm(x) == pytest.approx(np.linalg.norm(x, 2), rel=1e-10)


def test_spectral_norm_iteration_cap():
    x = np.random.default_rng(10).normal(size=(5, 5))
    with pytest.raises(ConvergenceError):
        spectral_norm(x, max_iter=0)


def test_spectral_norm_nearly_equal_singular_values():
    q, _ = np.linalg.qr(np.random.default_rng(11).normal(size=(6, 6)))
    x = q @ np.diag([1.0, 1.0 - 1e-7, 0.5, 0.2, 0.1, 0.0]) @ q.T
    assert spectral_norm(x) == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_spectral_norm_matches_svd(seed, m, n):
    x = np.random.default_rng(seed).normal(size=(m, n))
    assert spectral_norm(x) == pytest.approx(np.linalg.norm(x, 2), rel=1e-10)


def test_project_unit_ball_examples():
    np.testing.assert_array_equal(project_unit_ball([0.3, 0.4]), [0.3, 0.4])
    np.testing.assert_allclose(project_unit_ball([3.0, 4.0]), [0.6, 0.8], rtol=1e-15)
    np.testing.assert_array_equal(project_unit_ball([0.0, 0.0]), [0.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 6), elements=finite))
def test_project_unit_ball_idempotent_nonexpansive(u):
    p = project_unit_ball(u)
    assert np.linalg.norm(p) <= 1 + 1e-12
    assert np.linalg.norm(p) <= np.linalg.norm(u) + 1e-12
    np.testing.assert_allclose(project_unit_ball(p), p, rtol=1e-12, atol=1e-15)


def test_project_columns_matches_per_column():
    a = np.random.default_rng(9).normal(size=(3, 5)) * 2
    out = project_columns(a)
    for j in range(5):
        np.testing.assert_allclose(out[:, j], project_unit_ball(a[:, j]), rtol=1e-15)
