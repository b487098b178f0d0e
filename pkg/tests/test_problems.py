import numpy as np
import pytest

from sinkrelax import (ExperimentSpec, InvalidInputError, build_problem,
                       gaussian_kernel, grid_kernel_1d, random_kernel,
                       random_measure, sample_rgb_cloud)


class TestGaussianKernel:
    def test_coincident_points_give_unit_entry(self):
        pts = np.array([[0.2, 0.5, 0.9], [0.1, 0.1, 0.1]])
        kernel = gaussian_kernel(pts, pts, 0.5)
        np.testing.assert_allclose(np.diag(kernel.entries), 1.0, atol=1e-15)

    def test_exact_log_entry_for_unit_distance(self):
        x = np.array([[0.0, 0.0, 0.0]] * 2)
        y = np.array([[1.0, 0.0, 0.0]] * 2)
        kernel = gaussian_kernel(x, y, 0.01)
        assert kernel.log_entries[0, 0] == -100.0
        assert kernel.entries[0, 0] == pytest.approx(np.exp(-100.0), rel=1e-15)

    def test_symmetry_for_identical_point_sets(self, rng):
        pts = rng.uniform(0.0, 1.0, size=(6, 3))
        kernel = gaussian_kernel(pts, pts, 0.3)
        np.testing.assert_allclose(kernel.log_entries, kernel.log_entries.T, atol=1e-12)

    def test_out_of_cube_rejected(self):
        good = np.array([[0.1, 0.2, 0.3]] * 2)
        bad = np.array([[1.2, 0.0, 0.0]] * 2)
        with pytest.raises(InvalidInputError):
            gaussian_kernel(good, bad, 0.5)


class TestGridKernel:
    def test_matching_grid_points_give_unit_entry(self):
        kernel = grid_kernel_1d(5, 5, 0.1)
        np.testing.assert_array_equal(np.diag(kernel.log_entries), np.zeros(5))

    def test_exact_corner_entry(self):
        kernel = grid_kernel_1d(10, 10, 0.01)
        assert kernel.log_entries[0, 9] == -100.0

    def test_square_grid_symmetric(self):
        kernel = grid_kernel_1d(7, 7, 0.2)
        np.testing.assert_array_equal(kernel.log_entries, kernel.log_entries.T)

    def test_rectangular_shape(self):
        kernel = grid_kernel_1d(4, 9, 0.5)
        assert kernel.shape == (4, 9)


class TestRandomMeasure:
    def test_sums_to_one_and_bounded_below(self):
        for seed in range(20):
            for n in (2, 5, 50):
                v = random_measure(n, seed)
                assert abs(v.sum() - 1.0) < 1e-14
                assert (v > 0.1 / (1.1 * n)).all()

    def test_deterministic_per_seed(self):
        np.testing.assert_array_equal(random_measure(10, 3), random_measure(10, 3))

    def test_two_entry_bounds(self):
        for seed in range(50):
            v = random_measure(2, seed)
            assert (v > 1 / 12).all()
            assert (v < 11 / 12).all()


class TestRgbCloud:
    def test_inside_unit_cube(self):
        pts = sample_rgb_cloud(500, 1)
        assert (pts >= 0.0).all() and (pts <= 1.0).all()
        assert pts.shape == (500, 3)

    def test_deterministic_per_seed(self):
        np.testing.assert_array_equal(sample_rgb_cloud(64, 5), sample_rgb_cloud(64, 5))

    def test_different_seeds_differ(self):
        assert (sample_rgb_cloud(64, 1) != sample_rgb_cloud(64, 2)).any()


class TestBuildProblem:
    def test_families_and_shapes(self):
        for family in ("rgb_gaussian", "grid_1d", "random_dense"):
            spec = ExperimentSpec(family, 8, 6, 0.3, seed=2, marginal_kind="random")
            problem = build_problem(spec)
            assert problem.kernel.shape == (8, 6)
            assert problem.a.size == 8 and problem.b.size == 6

    def test_uniform_marginals(self):
        spec = ExperimentSpec("random_dense", 10, 10, 0.5, seed=0, marginal_kind="uniform")
        problem = build_problem(spec)
        np.testing.assert_allclose(problem.a, 0.1, rtol=1e-15)

    def test_generation_deterministic(self):
        spec = ExperimentSpec("rgb_gaussian", 12, 12, 0.1, seed=9, marginal_kind="random")
        p1, p2 = build_problem(spec), build_problem(spec)
        np.testing.assert_array_equal(p1.kernel.log_entries, p2.kernel.log_entries)
        np.testing.assert_array_equal(p1.a, p2.a)

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            ExperimentSpec("unknown", 4, 4, 0.1, seed=0)
        with pytest.raises(InvalidInputError):
            ExperimentSpec("grid_1d", 1, 4, 0.1, seed=0)
        with pytest.raises(InvalidInputError):
            ExperimentSpec("grid_1d", 4, 4, -0.1, seed=0)

    def test_random_kernel_full_log_range(self):
        kernel = random_kernel(20, 20, 0.1, seed=4)
        assert kernel.log_entries.min() >= -10.0
        assert kernel.log_entries.max() <= 0.0

    def test_thousand_point_generation_is_fast(self):
        import time
        start = time.perf_counter()
        spec = ExperimentSpec("rgb_gaussian", 1000, 1000, 0.01, seed=0)
        problem = build_problem(spec)
        grid = grid_kernel_1d(1000, 1000, 0.01)
        elapsed = time.perf_counter() - start
        assert np.isfinite(problem.kernel.log_entries).all()
        assert np.isfinite(grid.log_entries).all()
        assert elapsed < 5.0
