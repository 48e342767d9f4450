import numpy as np
import pytest

from qconvnet.errors import ShapeError
from qconvnet.unitary import (
    orthogonality_defect,
    svd_full,
    unitarize,
    unitarize_backward,
    unitarize_with_factors,
)


def fd_probe_grad(stack: np.ndarray, probe: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of <unitarize(K), probe> entry by entry."""
    grad = np.zeros_like(stack)
    for i in range(stack.shape[0]):
        for j in range(stack.shape[1]):
            plus = stack.copy()
            plus[i, j] += h
            minus = stack.copy()
            minus[i, j] -= h
            grad[i, j] = (np.sum(unitarize(plus) * probe)
                          - np.sum(unitarize(minus) * probe)) / (2 * h)
    return grad


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-10)
    return float(np.max(np.abs(a - b) / scale))


class TestSvdFull:
    def test_identity(self):
        u, s, vt = svd_full(np.eye(3))
        np.testing.assert_allclose(s, np.ones(3))
        assert orthogonality_defect(u @ vt) < 1e-12

    def test_axis_aligned_row(self):
        u, s, vt = svd_full(np.array([[3.0, 0.0]]))
        np.testing.assert_allclose(s, [3.0])
        np.testing.assert_allclose(np.abs(vt[0]), [1.0, 0.0], atol=1e-15)

    def test_reconstruction_residual(self, rng):
        k = rng.normal(size=(16, 64))
        u, s, vt = svd_full(k)
        sigma = np.zeros((16, 64))
        sigma[np.arange(16), np.arange(16)] = s
        np.testing.assert_allclose(u @ sigma @ vt, k, atol=1e-10 * np.abs(k).max())


class TestUnitarize:
    def test_identity_stack(self):
        np.testing.assert_allclose(unitarize(np.eye(16)), np.eye(16), atol=1e-12)

    def test_orthogonal_stack_is_fixed_point(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(16, 16)))
        np.testing.assert_allclose(unitarize(q), q, atol=1e-12)

    def test_hand_svd_row(self):
        w = unitarize(np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(w[0], [0.6, 0.8], atol=1e-14)
        assert orthogonality_defect(w) < 1e-12

    def test_orthogonality_across_shapes(self, rng):
        for cols in (8, 16, 64, 256):
            for _ in range(5):
                w = unitarize(rng.normal(size=(16, cols)))
                assert orthogonality_defect(w) < 1e-10
                assert w.shape == (max(16, cols),) * 2

    def test_tall_stack_orthogonality(self, rng):
        w = unitarize(rng.normal(size=(16, 4)))
        assert w.shape == (16, 16)
        assert orthogonality_defect(w) < 1e-10

    def test_polar_idempotence(self, rng):
        w = unitarize(rng.normal(size=(16, 64)))
        rows = w[:16]
        np.testing.assert_allclose(unitarize(rows)[:16], rows, atol=1e-10)

    def test_row_permutation_commutes(self, rng):
        # only the canonical polar block is unique; completion rows/columns
        # may differ between the two factorizations
        for shape in ((16, 64), (16, 4)):
            k = rng.normal(size=shape)
            perm = rng.permutation(16)
            p = np.eye(16)[perm]
            direct = unitarize(p @ k)
            base = unitarize(k)
            if shape[1] >= 16:
                np.testing.assert_allclose(direct[:16], p @ base[:16], atol=1e-10)
            else:
                np.testing.assert_allclose(direct[:, :shape[1]],
                                           p @ base[:, :shape[1]], atol=1e-10)

    def test_determinism_bit_exact(self, rng):
        k = rng.normal(size=(16, 64))
        np.testing.assert_array_equal(unitarize(k), unitarize(k.copy()))

    def test_factors_variant_matches(self, rng):
        k = rng.normal(size=(16, 64))
        w, factors = unitarize_with_factors(k)
        np.testing.assert_array_equal(w, unitarize(k))
        u, s, vt = factors
        assert u.shape == (16, 16) and vt.shape == (64, 64)


class TestBackward:
    def test_zero_grad_gives_zero(self, rng):
        k = rng.normal(size=(16, 64))
        out = unitarize_backward(k, np.zeros((64, 64)))
        np.testing.assert_array_equal(out, np.zeros_like(k))

    def test_square_diag_example(self):
        k = np.diag([2.0, 3.0])
        probe = np.zeros((2, 2))
        probe[0, 1] = 1.0
        analytic = unitarize_backward(k, probe)
        assert rel_err(analytic, fd_probe_grad(k, probe)) < 1e-4

    def test_square_matches_fd(self, rng):
        for _ in range(5):
            k = rng.normal(size=(6, 6))
            probe = rng.normal(size=(6, 6))
            analytic = unitarize_backward(k, probe)
            assert rel_err(analytic, fd_probe_grad(k, probe)) < 1e-4

    def test_wide_polar_block_matches_fd(self, rng):
        k = rng.normal(size=(3, 7))
        probe = np.zeros((7, 7))
        probe[:3, :] = rng.normal(size=(3, 7))
        analytic = unitarize_backward(k, probe)
        assert rel_err(analytic, fd_probe_grad(k, probe)) < 1e-4

    def test_tall_polar_block_matches_fd(self, rng):
        k = rng.normal(size=(7, 3))
        probe = np.zeros((7, 7))
        probe[:, :3] = rng.normal(size=(7, 3))
        analytic = unitarize_backward(k, probe)
        assert rel_err(analytic, fd_probe_grad(k, probe)) < 1e-4

    def test_completion_rows_are_stop_gradient(self, rng):
        k = rng.normal(size=(3, 7))
        probe = np.zeros((7, 7))
        probe[3:, :] = rng.normal(size=(4, 7))
        out = unitarize_backward(k, probe)
        np.testing.assert_array_equal(out, np.zeros_like(k))

    def test_equal_singular_values_stay_finite(self, rng):
        k = np.eye(4) * 2.5
        out = unitarize_backward(k, rng.normal(size=(4, 4)))
        assert np.all(np.isfinite(out))

    def test_reused_factors_match(self, rng):
        k = rng.normal(size=(5, 9))
        probe = rng.normal(size=(9, 9))
        _, factors = unitarize_with_factors(k)
        np.testing.assert_array_equal(
            unitarize_backward(k, probe, factors=factors),
            unitarize_backward(k, probe))

    def test_bad_grad_shape(self, rng):
        with pytest.raises(ShapeError):
            unitarize_backward(rng.normal(size=(4, 8)), np.zeros((4, 8)))
