"""Matrix Brownian sampling: determinism, moments, refinement, serialization."""

import io

import numpy as np
import pytest

from matrixdiff.brownian import (
    BrownianPath,
    TimeGrid,
    coarsen_path,
    dump_increments,
    load_increments,
    sample_path,
)


class TestTimeGrid:
    def test_basic(self):
        grid = TimeGrid(horizon=2.0, steps=4)
        assert grid.dt == 0.5
        np.testing.assert_allclose(grid.times, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(horizon=0.0, steps=4)
        with pytest.raises(ValueError):
            TimeGrid(horizon=1.0, steps=0)

    def test_value_equality(self):
        assert TimeGrid(1.0, 8) == TimeGrid(1.0, 8)
        assert TimeGrid(1.0, 8) != TimeGrid(1.0, 16)


class TestSampling:
    def test_single_step_shape(self):
        path = sample_path(TimeGrid(1.0, 1), dim=3, seed=1)
        assert path.increments.shape == (1, 3, 3)
        np.testing.assert_array_equal(path.value_at(0), np.zeros((3, 3)))

    def test_bitwise_determinism(self):
        grid = TimeGrid(1.0, 32)
        a = sample_path(grid, 2, seed=99, path_index=5)
        b = sample_path(grid, 2, seed=99, path_index=5)
        assert (a.increments == b.increments).all()

    def test_distinct_streams_differ(self):
        grid = TimeGrid(1.0, 8)
        a = sample_path(grid, 2, seed=99, path_index=0)
        b = sample_path(grid, 2, seed=99, path_index=1)
        c = sample_path(grid, 2, seed=100, path_index=0)
        assert not (a.increments == b.increments).all()
        assert not (a.increments == c.increments).all()

    def test_entry_variance_at_horizon(self):
        # E[B_1(i,j)^2] = 1 for every entry, 3 SE band at 1e5 paths
        n_paths = 100_000
        grid = TimeGrid(1.0, 1)
        acc = np.zeros((2, 2))
        for i in range(n_paths):
            b = sample_path(grid, 2, seed=12, path_index=i).value_at(1)
            acc += b * b
        mean_sq = acc / n_paths
        band = 3.0 * np.sqrt(2.0) / np.sqrt(n_paths)
        assert np.abs(mean_sq - 1.0).max() < band

    def test_entry_independence(self):
        n_paths = 10_000
        grid = TimeGrid(1.0, 1)
        pairs = np.empty((n_paths, 2))
        for i in range(n_paths):
            b = sample_path(grid, 2, seed=21, path_index=i).value_at(1)
            pairs[i] = (b[0, 0], b[0, 1])
        corr = np.corrcoef(pairs.T)[0, 1]
        assert abs(corr) < 3.3 / np.sqrt(n_paths)

    def test_quadratic_variation(self):
        # per-entry sum of squared increments concentrates on the horizon
        n, n_paths = 256, 200
        grid = TimeGrid(1.0, n)
        qv = np.empty((n_paths, 2, 2))
        for i in range(n_paths):
            inc = sample_path(grid, 2, seed=33, path_index=i).increments
            qv[i] = (inc * inc).sum(axis=0)
        mean = qv.mean()
        se = np.sqrt(2.0 / n) / np.sqrt(n_paths * 4)
        assert abs(mean - 1.0) < 3.0 * se
        # per-path relative scatter is O(1/sqrt(n))
        assert 0.5 * np.sqrt(2.0 / n) < qv.std() < 2.0 * np.sqrt(2.0 / n)


class TestValueAt:
    def test_partial_sums(self):
        grid = TimeGrid(1.0, 10)
        path = sample_path(grid, 2, seed=4)
        np.testing.assert_array_equal(path.value_at(0), np.zeros((2, 2)))
        np.testing.assert_allclose(path.value_at(10), path.increments.sum(axis=0), atol=1e-15)
        lo, hi = 3, 7
        np.testing.assert_allclose(
            path.value_at(hi) - path.value_at(lo),
            path.increments[lo:hi].sum(axis=0),
            atol=1e-13,
        )

    def test_out_of_range(self):
        path = sample_path(TimeGrid(1.0, 4), 2, seed=4)
        with pytest.raises(IndexError):
            path.value_at(5)
        with pytest.raises(IndexError):
            path.value_at(-1)

    def test_zeros_path(self):
        path = BrownianPath.zeros(TimeGrid(1.0, 4), dim=3)
        np.testing.assert_array_equal(path.value_at(4), np.zeros((3, 3)))


class TestRefinement:
    def test_coarsen_shapes_and_sums(self):
        path = sample_path(TimeGrid(1.0, 64), 2, seed=8)
        coarse = coarsen_path(path, 2)
        assert coarse.grid.steps == 32
        np.testing.assert_allclose(coarse.value_at(32), path.value_at(64), atol=1e-14)
        np.testing.assert_allclose(coarse.increments[0], path.increments[:2].sum(axis=0), atol=1e-15)

    def test_coarsen_validation(self):
        path = sample_path(TimeGrid(1.0, 6), 2, seed=8)
        with pytest.raises(ValueError):
            coarsen_path(path, 4)

    def test_coarsened_variance_matches_direct(self):
        # squared coarse increments estimate the coarse step size either way
        n_paths, n = 400, 64
        grid = TimeGrid(1.0, n)
        coarse_sq, direct_sq = [], []
        for i in range(n_paths):
            fine = sample_path(grid, 2, seed=77, path_index=i)
            coarse_sq.append((coarsen_path(fine, 2).increments ** 2).mean())
            direct = sample_path(TimeGrid(1.0, n // 2), 2, seed=78, path_index=i)
            direct_sq.append((direct.increments ** 2).mean())
        dt_coarse = 2.0 / n
        samples = n_paths * (n // 2) * 4
        band = 3.0 * np.sqrt(2.0) * dt_coarse / np.sqrt(samples)
        assert abs(np.mean(coarse_sq) - dt_coarse) < band
        assert abs(np.mean(direct_sq) - dt_coarse) < band


class TestSerialization:
    def test_round_trip_bitwise(self):
        path = sample_path(TimeGrid(0.75, 12), 3, seed=2**40 + 17)
        buf = io.BytesIO()
        dump_increments(path, buf)
        buf.seek(0)
        loaded = load_increments(buf)
        assert loaded.grid == path.grid
        assert loaded.dim == path.dim
        assert loaded.seed == path.seed
        assert (loaded.increments == path.increments).all()

    def test_header_layout(self):
        path = sample_path(TimeGrid(1.0, 2), 2, seed=5)
        buf = io.BytesIO()
        dump_increments(path, buf)
        raw = buf.getvalue()
        # header: u32 dim, u32 steps, f64 horizon, u64 seed -> 24 bytes
        assert len(raw) == 24 + 2 * 2 * 2 * 8

    def test_rejects_bad_shapes(self):
        grid = TimeGrid(1.0, 4)
        with pytest.raises(ValueError):
            BrownianPath(grid, np.zeros((3, 2, 2)))
        with pytest.raises(ValueError):
            BrownianPath(grid, np.full((4, 2, 2), np.nan))
