"""Grid Ito integrals: oracle equivalence, algebraic identities, moment checks."""

import numpy as np
import pytest

from matrixdiff.brownian import TimeGrid, BrownianPath, sample_path
from matrixdiff.integrals import (
    MatrixProcess,
    isometry_rhs,
    ito_integral,
    ito_integral_transposed,
    symmetrized_diffusion,
    time_integral,
)
from matrixdiff.symmat import SymmetricMatrix
from reference import entrywise_ito


def random_process(rng, grid, d, scale=1.0):
    raw = rng.standard_normal((grid.steps + 1, d, d))
    return MatrixProcess(grid, scale * 0.5 * (raw + raw.transpose(0, 2, 1)))


class TestMatrixProcess:
    def test_constant(self):
        grid = TimeGrid(1.0, 4)
        proc = MatrixProcess.constant(grid, SymmetricMatrix.diagonal([1.0, 2.0]))
        assert proc.values.shape == (5, 2, 2)
        np.testing.assert_array_equal(proc.value_at(3).entries, np.diag([1.0, 2.0]))

    def test_rejects_asymmetric_values(self):
        grid = TimeGrid(1.0, 1)
        bad = np.zeros((2, 2, 2))
        bad[0, 0, 1] = 1.0
        with pytest.raises(ValueError, match="symmetric"):
            MatrixProcess(grid, bad)

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            MatrixProcess(TimeGrid(1.0, 4), np.zeros((4, 2, 2)))


class TestItoIntegral:
    def test_identity_integrands_telescope(self):
        grid = TimeGrid(1.0, 16)
        path = sample_path(grid, 3, seed=1)
        ident = MatrixProcess.constant(grid, SymmetricMatrix.identity(3))
        np.testing.assert_allclose(ito_integral(ident, path, ident), path.value_at(16), atol=1e-13)
        np.testing.assert_allclose(ito_integral(ident, path, ident, k_end=7), path.value_at(7), atol=1e-13)

    def test_scalar_constants_commute(self):
        grid = TimeGrid(1.0, 8)
        path = sample_path(grid, 2, seed=2)
        a = MatrixProcess.constant(grid, 2.0 * SymmetricMatrix.identity(2))
        c = MatrixProcess.constant(grid, -3.0 * SymmetricMatrix.identity(2))
        np.testing.assert_allclose(ito_integral(a, path, c), -6.0 * path.value_at(8), atol=1e-12)

    def test_dimension_one_reduces_to_scalar_sum(self):
        grid = TimeGrid(1.0, 10)
        path = sample_path(grid, 1, seed=3)
        rng = np.random.default_rng(4)
        a_vals = rng.standard_normal((11, 1, 1))
        c_vals = rng.standard_normal((11, 1, 1))
        a = MatrixProcess(grid, a_vals)
        c = MatrixProcess(grid, c_vals)
        expected = sum(
            a_vals[m, 0, 0] * c_vals[m, 0, 0] * path.increments[m, 0, 0] for m in range(10)
        )
        assert abs(ito_integral(a, path, c)[0, 0] - expected) < 1e-14
        assert abs(ito_integral_transposed(c, path, a)[0, 0] - expected) < 1e-14

    def test_k_end_zero_and_bounds(self):
        grid = TimeGrid(1.0, 4)
        path = sample_path(grid, 2, seed=5)
        ident = MatrixProcess.constant(grid, SymmetricMatrix.identity(2))
        np.testing.assert_array_equal(ito_integral(ident, path, ident, k_end=0), np.zeros((2, 2)))
        with pytest.raises(IndexError):
            ito_integral(ident, path, ident, k_end=5)

    def test_grid_mismatch_raises(self):
        path = sample_path(TimeGrid(1.0, 4), 2, seed=6)
        proc = MatrixProcess.constant(TimeGrid(1.0, 8), SymmetricMatrix.identity(2))
        with pytest.raises(ValueError, match="grid mismatch"):
            ito_integral(proc, path, proc)

    def test_entrywise_oracle_equivalence(self):
        rng = np.random.default_rng(101)
        for trial in range(200):
            d = int(rng.integers(1, 5))
            n = int(rng.integers(1, 17))
            grid = TimeGrid(float(rng.uniform(0.25, 2.0)), n)
            path = sample_path(grid, d, seed=500, path_index=trial)
            a = random_process(rng, grid, d)
            c = random_process(rng, grid, d)
            fast = ito_integral(a, path, c)
            slow = entrywise_ito(a.values, c.values, path.increments)
            assert np.abs(fast - slow).max() < 1e-12

    def test_transpose_identity(self):
        rng = np.random.default_rng(7)
        grid = TimeGrid(1.0, 12)
        path = sample_path(grid, 3, seed=8)
        a = random_process(rng, grid, 3)
        c = random_process(rng, grid, 3)
        lhs = ito_integral_transposed(c, path, a)
        rhs = ito_integral(a, path, c).T
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_linearity(self):
        rng = np.random.default_rng(9)
        grid = TimeGrid(1.0, 8)
        path = sample_path(grid, 3, seed=10)
        a1 = random_process(rng, grid, 3)
        a2 = random_process(rng, grid, 3)
        c = random_process(rng, grid, 3)
        combo = MatrixProcess(grid, 2.0 * a1.values - 0.5 * a2.values)
        lhs = ito_integral(combo, path, c)
        rhs = 2.0 * ito_integral(a1, path, c) - 0.5 * ito_integral(a2, path, c)
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_martingale_mean_zero(self):
        rng = np.random.default_rng(11)
        grid = TimeGrid(1.0, 8)
        a = random_process(rng, grid, 2)
        c = random_process(rng, grid, 2)
        n_paths = 4000
        acc = np.zeros((2, 2))
        acc_sq = np.zeros((2, 2))
        for i in range(n_paths):
            val = ito_integral(a, sample_path(grid, 2, seed=600, path_index=i), c)
            acc += val
            acc_sq += val * val
        mean = acc / n_paths
        se = np.sqrt(np.maximum(acc_sq / n_paths - mean**2, 0.0) / n_paths)
        assert (np.abs(mean) <= 3.0 * se + 1e-12).all()


class TestSymmetrizedDiffusion:
    def test_identity_case(self):
        grid = TimeGrid(1.0, 6)
        path = sample_path(grid, 2, seed=13)
        ident = MatrixProcess.constant(grid, SymmetricMatrix.identity(2))
        b = path.value_at(6)
        np.testing.assert_allclose(symmetrized_diffusion(ident, path, ident).entries, b + b.T, atol=1e-13)

    def test_zero_integrand(self):
        grid = TimeGrid(1.0, 6)
        path = sample_path(grid, 2, seed=14)
        zero = MatrixProcess.constant(grid, SymmetricMatrix.zeros(2))
        ident = MatrixProcess.constant(grid, SymmetricMatrix.identity(2))
        np.testing.assert_array_equal(symmetrized_diffusion(zero, path, ident).entries, np.zeros((2, 2)))

    def test_single_step_hand_case(self):
        # A = I, C = diag(1, 0), one increment: M = dB @ C keeps only column 1
        grid = TimeGrid(1.0, 1)
        db = np.array([[[0.3, -0.7], [1.1, 0.4]]])
        path = BrownianPath(grid, db)
        a = MatrixProcess.constant(grid, SymmetricMatrix.identity(2))
        c = MatrixProcess.constant(grid, SymmetricMatrix.diagonal([1.0, 0.0]))
        expected = np.array([[2 * 0.3, 1.1], [1.1, 0.0]])
        np.testing.assert_allclose(symmetrized_diffusion(a, path, c).entries, expected, atol=1e-15)

    def test_exact_symmetry(self):
        rng = np.random.default_rng(15)
        grid = TimeGrid(1.0, 16)
        path = sample_path(grid, 3, seed=16)
        a = random_process(rng, grid, 3)
        c = random_process(rng, grid, 3)
        out = symmetrized_diffusion(a, path, c).entries
        assert (out == out.T).all()


class TestIsometryRhs:
    def test_identity_unit_vectors(self):
        grid = TimeGrid(2.0, 8)
        ident = MatrixProcess.constant(grid, SymmetricMatrix.identity(3))
        x = np.array([1.0, 0.0, 0.0])
        assert abs(isometry_rhs(ident, ident, x, x) - 2.0) < 1e-14
        assert abs(isometry_rhs(ident, ident, x, x, k_end=4) - 1.0) < 1e-14

    def test_orthogonal_vectors_vanish(self):
        grid = TimeGrid(1.0, 8)
        ident = MatrixProcess.constant(grid, SymmetricMatrix.identity(2))
        assert isometry_rhs(ident, ident, [1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_diagonal_weights(self):
        grid = TimeGrid(1.0, 4)
        a = MatrixProcess.constant(grid, SymmetricMatrix.diagonal([1.0, 2.0]))
        ident = MatrixProcess.constant(grid, SymmetricMatrix.identity(2))
        e2 = [0.0, 1.0]
        assert abs(isometry_rhs(a, ident, e2, e2) - 4.0) < 1e-14


class TestTimeIntegral:
    def test_constant_identity(self):
        grid = TimeGrid(3.0, 12)
        proc = MatrixProcess.constant(grid, SymmetricMatrix.identity(2))
        np.testing.assert_allclose(time_integral(proc).entries, 3.0 * np.eye(2), atol=1e-12)

    def test_zero(self):
        grid = TimeGrid(1.0, 4)
        proc = MatrixProcess.constant(grid, SymmetricMatrix.zeros(3))
        np.testing.assert_array_equal(time_integral(proc).entries, np.zeros((3, 3)))

    def test_linear_ramp_closed_form(self):
        n, horizon = 64, 1.0
        grid = TimeGrid(horizon, n)
        dt = grid.dt
        values = np.array([t * np.eye(2) for t in grid.times])
        proc = MatrixProcess(grid, values)
        # left-point Riemann sum of t over the grid
        expected = dt * dt * n * (n - 1) / 2.0
        np.testing.assert_allclose(time_integral(proc).entries, expected * np.eye(2), atol=1e-12)
        assert abs(expected - horizon**2 / 2.0) < 1.1 * dt
