import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from attribnet.linalg import DimensionError, apply_transposed, l2_norm, top_singular_value
from oracles import brute_sigma_max

unit_floats = st.floats(-1.0, 1.0, allow_nan=False)
small_ints = st.integers(-4, 4).map(float)


def test_apply_transposed_examples():
    np.testing.assert_array_equal(apply_transposed(np.eye(2), [3, 4]), [3, 4])
    np.testing.assert_array_equal(apply_transposed([[1, 2], [3, 4]], [1, 1]), [4, 6])
    np.testing.assert_array_equal(apply_transposed(np.zeros((3, 2)), [1.5, -2, 7]), [0, 0])


def test_apply_transposed_rejects_mismatch():
    with pytest.raises(DimensionError):
        apply_transposed(np.eye(3), [1, 2])


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        apply_transposed([[np.nan]], [1.0])


@pytest.mark.parametrize("v, expected", [((3, 4), 5.0), ((0, 0, 0), 0.0), ((1, 1, 1, 1), 2.0)])
def test_l2_norm(v, expected):
    assert l2_norm(v) == expected


@given(arrays(float, (4, 3), elements=unit_floats), arrays(float, 4, elements=unit_floats),
       arrays(float, 4, elements=unit_floats))
def test_apply_transposed_is_additive(M, u, v):
    np.testing.assert_allclose(apply_transposed(M, u + v), apply_transposed(M, u) + apply_transposed(M, v),
                               rtol=0, atol=1e-12)


def test_top_singular_value_examples():
    assert top_singular_value(np.diag([3.0, 1.0])).value == pytest.approx(3.0, rel=1e-10)
    assert top_singular_value([[0.0, 1.0], [1.0, 0.0]]).value == pytest.approx(1.0, rel=1e-10)


def test_start_vector_orthogonal_to_dominant_space():
    # M M^T = [[2,-1],[-1,2]]: the ones vector is the eigenvector of the small eigenvalue
    M = np.linalg.cholesky(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert top_singular_value(M).value == pytest.approx(np.sqrt(3.0), rel=1e-10)


def test_matches_brute_force_on_random_5x4(rng):
    for _ in range(50):
        M = rng.normal(size=(5, 4))
        sv = top_singular_value(M)
        assert sv.converged
        assert abs(sv.value - brute_sigma_max(M)) < 1e-8


def test_deterministic():
    M = np.arange(12.0).reshape(3, 4) - 5
    assert top_singular_value(M) == top_singular_value(M)


def test_non_convergence_is_flagged():
    M = np.diag([1.0, 0.999999, 0.5])
    sv = top_singular_value(M, max_iters=3)
    assert not sv.converged
    assert 0.5 < sv.value <= 1.0


@given(st.integers(1, 4).flatmap(lambda r: st.integers(1, 4).flatmap(
    lambda c: arrays(float, (r, c), elements=small_ints))))
def test_small_integer_matrices_match_oracle(M):
    assert abs(top_singular_value(M).value - brute_sigma_max(M)) < 1e-8


@given(arrays(float, (3, 5), elements=unit_floats))
def test_transpose_invariance(M):
    assert abs(top_singular_value(M).value - top_singular_value(M.T).value) < 1e-9


@given(arrays(float, (4, 3), elements=unit_floats), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_absolute_homogeneity(M, c):
    a = top_singular_value(c * M).value
    b = abs(c) * top_singular_value(M).value
    assert abs(a - b) <= 1e-9 * max(1.0, b)
