import numpy as np
import pytest

from symtest import (
    DiscreteDelta,
    GaussianRBF,
    RotationKernelSO3,
    center,
    eval_kernel,
    gram,
    median_heuristic,
    parse_kernel,
)
from symtest.errors import (
    AllPointsIdentical,
    BadParameters,
    DimensionMismatch,
    SampleTooSmall,
    UnsupportedKind,
)
from symtest.groups import haar_rotations


def axis_rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


class TestRbf:
    def test_unit_at_zero_distance(self):
        k = GaussianRBF(2.0)
        assert eval_kernel(k, np.ones(3), np.ones(3)) == 1.0

    def test_frozen_value(self):
        # distance sqrt(2), sigma 1 -> exp(-1)
        k = GaussianRBF(1.0)
        v = eval_kernel(k, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert v == pytest.approx(np.exp(-1.0), rel=1e-12)

    def test_gram_matches_eval(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 3))
        Y = rng.standard_normal((4, 3))
        k = GaussianRBF(1.3)
        K = gram(k, X, Y)
        for i in range(6):
            for j in range(4):
                assert K[i, j] == pytest.approx(
                    eval_kernel(k, X[i], Y[j]), rel=1e-12
                )

    def test_gram_psd(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((40, 5))
        K = gram(GaussianRBF(0.8), X)
        np.testing.assert_allclose(K, K.T, atol=1e-12)
        assert np.linalg.eigvalsh(K).min() > -1e-10

    def test_unresolved_bandwidth_fails(self):
        with pytest.raises(BadParameters):
            gram(GaussianRBF(None), np.zeros((3, 2)))

    def test_bad_bandwidth(self):
        with pytest.raises(BadParameters):
            GaussianRBF(0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gram(GaussianRBF(1.0), np.zeros((3, 2)), np.zeros((3, 4)))

    def test_accepts_matrix_valued_points(self):
        # stacks of matrices are treated as flattened vectors
        rng = np.random.default_rng(2)
        stack = haar_rotations(2, 5, rng)
        K = gram(GaussianRBF(1.0), stack)
        flat = stack.reshape(5, -1)
        np.testing.assert_allclose(K, gram(GaussianRBF(1.0), flat), atol=1e-14)

    def test_huge_distances_underflow_to_zero(self):
        k = GaussianRBF(1e-3)
        X = np.array([[0.0], [1.0]])
        K = gram(k, X)
        assert K[0, 1] == 0.0 and K[0, 0] == 1.0


class TestRotationKernel:
    def test_value_at_identity(self):
        k = RotationKernelSO3()
        v = eval_kernel(k, np.eye(3), np.eye(3))
        assert v == pytest.approx(np.pi**2 / 8.0, rel=1e-12)

    def test_quarter_turn_closed_form(self):
        # rotation angle pi/2 -> half-angle pi/4:
        # k = pi * (pi/4) * (3pi/4) / (8 * sin(pi/4)) = 3 sqrt(2) pi^3 / 128
        k = RotationKernelSO3()
        v = eval_kernel(k, axis_rotation(np.pi / 2), np.eye(3))
        assert v == pytest.approx(3.0 * np.sqrt(2.0) * np.pi**3 / 128.0, rel=1e-12)

    def test_generic_angle_closed_form(self):
        k = RotationKernelSO3()
        for phi in (0.3, 1.2, 2.9):
            v = eval_kernel(k, axis_rotation(phi), np.eye(3))
            half = phi / 2.0
            expect = np.pi * half * (np.pi - half) / (8 * np.sin(half))
            assert v == pytest.approx(expect, rel=1e-12)

    def test_stable_near_zero_angle(self):
        k = RotationKernelSO3()
        for phi in (1e-9, 1e-7, 1e-5):
            v = eval_kernel(k, axis_rotation(phi), np.eye(3))
            assert np.isfinite(v)
            assert v == pytest.approx(np.pi**2 / 8.0, rel=1e-5)

    def test_half_turn_closed_form(self):
        # rotation angle pi -> half-angle pi/2: k = pi^3 / 32
        k = RotationKernelSO3()
        for phi in (np.pi, np.pi - 1e-9):
            v = eval_kernel(k, axis_rotation(phi), np.eye(3))
            assert v == pytest.approx(np.pi**3 / 32.0, rel=1e-6)

    def test_invariance_under_left_translation(self):
        rng = np.random.default_rng(3)
        k = RotationKernelSO3()
        a, b, q = haar_rotations(3, 3, rng)
        v1 = eval_kernel(k, a, b)
        v2 = eval_kernel(k, q @ a, q @ b)
        assert v1 == pytest.approx(v2, rel=1e-9)

    def test_gram_matches_eval(self):
        rng = np.random.default_rng(4)
        stack = haar_rotations(3, 5, rng)
        k = RotationKernelSO3()
        K = gram(k, stack)
        for i in range(5):
            for j in range(5):
                assert K[i, j] == pytest.approx(
                    eval_kernel(k, stack[i], stack[j]), rel=1e-12
                )

    def test_gram_psd(self):
        rng = np.random.default_rng(5)
        stack = haar_rotations(3, 30, rng)
        K = gram(RotationKernelSO3(), stack)
        assert np.linalg.eigvalsh(K).min() > -1e-8


class TestDelta:
    def test_eval(self):
        k = DiscreteDelta()
        assert eval_kernel(k, np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 1.0
        assert eval_kernel(k, np.array([1.0, 2.0]), np.array([1.0, 2.5])) == 0.0

    def test_gram(self):
        k = DiscreteDelta()
        X = np.array([[0.0], [1.0], [0.0]])
        K = gram(k, X)
        np.testing.assert_allclose(K, [[1, 0, 1], [0, 1, 0], [1, 0, 1]])


class TestMedianHeuristic:
    def test_frozen_example(self):
        # pairwise distances {1, 3, 2} -> median 2
        X = np.array([[0.0], [1.0], [3.0]])
        assert median_heuristic(X) == 2.0

    def test_identical_points(self):
        with pytest.raises(AllPointsIdentical):
            median_heuristic(np.ones((5, 2)))

    def test_too_small(self):
        with pytest.raises(SampleTooSmall):
            median_heuristic(np.ones((1, 2)))


class TestCenter:
    def test_rows_and_columns_sum_to_zero(self):
        rng = np.random.default_rng(6)
        K = gram(GaussianRBF(1.0), rng.standard_normal((8, 3)))
        C = center(K)
        np.testing.assert_allclose(C.sum(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(C.sum(axis=1), 0.0, atol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        K = gram(GaussianRBF(1.0), rng.standard_normal((8, 3)))
        C = center(K)
        np.testing.assert_allclose(center(C), C, atol=1e-12)

    def test_matches_explicit_h_k_h(self):
        rng = np.random.default_rng(8)
        K = rng.standard_normal((6, 6))
        H = np.eye(6) - np.ones((6, 6)) / 6
        np.testing.assert_allclose(center(K), H @ K @ H, atol=1e-12)


class TestParsing:
    def test_descriptors(self):
        assert parse_kernel("rbf(median)") == GaussianRBF(None)
        assert parse_kernel("rbf(1.5)") == GaussianRBF(1.5)
        assert parse_kernel("so3") == RotationKernelSO3()
        assert parse_kernel("delta") == DiscreteDelta()

    def test_rejects_garbage(self):
        for bad in ("rbf", "gauss(1)", "rbf(x)", ""):
            with pytest.raises(UnsupportedKind):
                parse_kernel(bad)
