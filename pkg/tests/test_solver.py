import math

import numpy as np
import pytest

from conftest import random_problem
from sinkrelax import (InvalidInputError, Kernel, RelaxationPolicy, ScalingState,
                       SolverConfig, TerminationReason, TransportProblem,
                       birkhoff_contraction, grid_kernel_1d, hilbert_distance,
                       local_rate, marginal_residual, normalize_representatives,
                       random_measure, solve, sor_step, tail_rate, transport_plan)
from sinkrelax.adaptive import RelaxationController
from sinkrelax.hilbert import hilbert_distance_log
from sinkrelax.spectral import error_recursion_matrix


def all_ones_problem():
    kernel = Kernel.from_entries(np.ones((2, 2)))
    return TransportProblem(kernel, np.array([0.5, 0.5]), np.array([0.5, 0.5]))


def standard_sinkhorn_linear(entries, a, b, v0, sweeps):
    """Direct linear-arithmetic oracle for the standard method."""
    states = []
    v = v0.copy()
    u = np.ones(len(a))
    for _ in range(sweeps):
        u = a / (entries @ v)
        v = b / (entries.T @ u)
        states.append((u.copy(), v.copy()))
    return states


class TestSorStep:
    def test_all_ones_kernel_one_sweep(self):
        problem = all_ones_problem()
        state = ScalingState(np.zeros(2), np.zeros(2), 0)
        new = sor_step(state, problem, 1.0)
        np.testing.assert_allclose(np.exp(new.log_u), [0.25, 0.25], rtol=1e-14)
        np.testing.assert_allclose(np.exp(new.log_v), [1.0, 1.0], rtol=1e-14)
        assert new.iteration == 1
        # fixed point reached: the next sweep does not move the class
        again = sor_step(new, problem, 1.0)
        assert hilbert_distance_log(again.log_u, new.log_u) < 1e-13
        assert hilbert_distance_log(again.log_v, new.log_v) < 1e-13

    @pytest.mark.parametrize("omega", [0.3, 1.0, 1.5, 1.9])
    def test_fixed_point_invariant_for_any_omega(self, omega):
        # (u, v) = (a, b) is an exact fixed point for the all-ones kernel
        problem = all_ones_problem()
        state = ScalingState(np.log(problem.a), np.log(problem.b), 0)
        new = sor_step(state, problem, omega)
        assert hilbert_distance_log(new.log_u, state.log_u) < 1e-12
        assert hilbert_distance_log(new.log_v, state.log_v) < 1e-12

    def test_standard_update_matches_linear_oracle(self, rng):
        problem = random_problem(5, 5, 2.0, seed=11)  # well conditioned
        v0 = rng.uniform(0.5, 2.0, size=5)
        state = ScalingState(np.zeros(5), np.log(v0), 0)
        new = sor_step(state, problem, 1.0)
        entries = problem.kernel.entries
        u_direct = problem.a / (entries @ v0)
        v_direct = problem.b / (entries.T @ u_direct)
        np.testing.assert_allclose(np.exp(new.log_u), u_direct, rtol=1e-13)
        np.testing.assert_allclose(np.exp(new.log_v), v_direct, rtol=1e-13)

    def test_iterate_sequence_matches_linear_oracle(self, rng):
        problem = random_problem(6, 7, 1.5, seed=3)
        v0 = rng.uniform(0.5, 2.0, size=7)
        oracle = standard_sinkhorn_linear(problem.kernel.entries, problem.a,
                                          problem.b, v0, sweeps=20)
        state = ScalingState(np.zeros(6), np.log(v0), 0)
        for u_want, v_want in oracle:
            state = sor_step(state, problem, 1.0)
            np.testing.assert_allclose(np.exp(state.log_u), u_want, rtol=1e-12)
            np.testing.assert_allclose(np.exp(state.log_v), v_want, rtol=1e-12)

    def test_relaxed_update_matches_linear_oracle(self, rng):
        problem = random_problem(5, 6, 1.5, seed=17)
        omega = 1.3
        u0 = rng.uniform(0.5, 2.0, size=5)
        v0 = rng.uniform(0.5, 2.0, size=6)
        state = ScalingState(np.log(u0), np.log(v0), 0)
        new = sor_step(state, problem, omega)
        entries = problem.kernel.entries
        u_direct = u0 ** (1 - omega) * (problem.a / (entries @ v0)) ** omega
        v_direct = v0 ** (1 - omega) * (problem.b / (entries.T @ u_direct)) ** omega
        np.testing.assert_allclose(np.exp(new.log_u), u_direct, rtol=1e-12)
        np.testing.assert_allclose(np.exp(new.log_v), v_direct, rtol=1e-12)

    def test_row_scaling_exact_after_u_half_update(self):
        problem = random_problem(6, 6, 0.8, seed=5)
        state = ScalingState(np.zeros(6), np.zeros(6), 0)
        for _ in range(3):
            new = sor_step(state, problem, 1.0)
            # plan with the fresh u against the v it was computed from
            half = ScalingState(new.log_u, state.log_v, new.iteration)
            plan = transport_plan(half, problem.kernel)
            assert marginal_residual(plan, problem.a, axis=1) < 1e-13
            state = new

    def test_omega_out_of_range(self):
        problem = all_ones_problem()
        state = ScalingState(np.zeros(2), np.zeros(2), 0)
        with pytest.raises(InvalidInputError):
            sor_step(state, problem, 2.0)
        with pytest.raises(InvalidInputError):
            sor_step(state, problem, 0.0)


class TestMarginalResidual:
    def test_exact_marginals(self):
        plan = np.array([[0.3, 0.2], [0.2, 0.3]])
        assert marginal_residual(plan, np.array([0.5, 0.5]), axis=1) == 0.0

    def test_arithmetic(self):
        plan = np.array([[0.5, 0.0], [0.0, 0.5]])
        got = marginal_residual(plan, np.array([0.25, 0.75]), axis=1)
        assert got == pytest.approx(0.5, abs=1e-15)

    def test_dimension_check(self):
        with pytest.raises(InvalidInputError):
            marginal_residual(np.ones((2, 3)), np.array([1.0, 1.0, 1.0]), axis=1)


class TestTransportPlan:
    def test_identity_scalings_reproduce_kernel(self, rng):
        entries = rng.uniform(0.2, 3.0, size=(4, 5))
        kernel = Kernel.from_entries(entries)
        state = ScalingState(np.zeros(4), np.zeros(5), 0)
        np.testing.assert_array_equal(transport_plan(state, kernel), kernel.entries)
        np.testing.assert_allclose(transport_plan(state, kernel), entries, rtol=1e-15)

    def test_symmetric_closed_form(self):
        kernel = Kernel.from_entries(np.array([[2.0, 1.0], [1.0, 2.0]]))
        log_c = -0.5 * math.log(6.0)
        state = ScalingState(np.full(2, log_c), np.full(2, log_c), 0)
        plan = transport_plan(state, kernel)
        want = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
        np.testing.assert_allclose(plan, want, rtol=1e-14)
        np.testing.assert_allclose(plan.sum(axis=1), [0.5, 0.5], rtol=1e-14)
        np.testing.assert_allclose(plan.sum(axis=0), [0.5, 0.5], rtol=1e-14)

    def test_scaling_indeterminacy(self, rng):
        kernel = Kernel.from_entries(rng.uniform(0.2, 3.0, size=(3, 3)))
        log_u = rng.normal(size=3)
        log_v = rng.normal(size=3)
        t = math.log(17.0)
        p1 = transport_plan(ScalingState(log_u, log_v, 0), kernel)
        p2 = transport_plan(ScalingState(log_u + t, log_v - t, 0), kernel)
        np.testing.assert_allclose(p1, p2, rtol=1e-13)


class TestNormalizeRepresentatives:
    def test_solves_problem_at_fixed_point(self):
        problem = all_ones_problem()
        result = solve(problem, SolverConfig(tol=1e-13, max_iter=50))
        u_plus, v_plus = normalize_representatives(result.state, problem.kernel)
        entries = problem.kernel.entries
        np.testing.assert_allclose(u_plus * (entries @ v_plus), problem.a, atol=1e-13)
        np.testing.assert_allclose(v_plus * (entries.T @ u_plus), problem.b, atol=1e-13)

    def test_solves_general_problem_at_converged_state(self):
        problem = random_problem(7, 9, 0.5, seed=15)
        result = solve(problem, SolverConfig(tol=1e-13, max_iter=20_000))
        assert result.converged
        u_plus, v_plus = normalize_representatives(result.state, problem.kernel)
        entries = problem.kernel.entries
        np.testing.assert_allclose(u_plus * (entries @ v_plus), problem.a, atol=1e-12)
        np.testing.assert_allclose(v_plus * (entries.T @ u_plus), problem.b, atol=1e-12)

    def test_class_invariance(self, rng):
        problem = random_problem(4, 6, 1.0, seed=2)
        log_u = rng.normal(size=4)
        log_v = rng.normal(size=6)
        t = math.log(10.0)
        base = normalize_representatives(ScalingState(log_u, log_v, 0), problem.kernel)
        for shifted in (ScalingState(log_u + t, log_v, 0),
                        ScalingState(log_u, log_v + t, 0)):
            out = normalize_representatives(shifted, problem.kernel)
            np.testing.assert_allclose(out[0], base[0], rtol=1e-13)
            np.testing.assert_allclose(out[1], base[1], rtol=1e-13)

    def test_bilinear_identity(self, rng):
        problem = random_problem(5, 5, 1.0, seed=9)
        state = ScalingState(rng.normal(size=5), rng.normal(size=5), 0)
        u_plus, v_plus = normalize_representatives(state, problem.kernel)
        assert u_plus @ problem.kernel.entries @ v_plus == pytest.approx(1.0, rel=1e-12)


class TestSolve:
    def test_rank_one_kernel_converges_immediately(self, rng):
        x = rng.uniform(0.5, 2.0, size=6)
        y = rng.uniform(0.5, 2.0, size=5)
        kernel = Kernel.from_log_entries(np.log(x)[:, None] + np.log(y)[None, :])
        problem = TransportProblem(kernel, random_measure(6, 1), random_measure(5, 2))
        result = solve(problem)
        assert result.converged
        assert result.iterations <= 2

    def test_tail_ratio_matches_local_rate(self):
        problem = random_problem(20, 20, 0.05, seed=8)
        result = solve(problem, SolverConfig(tol=1e-12, max_iter=20000))
        assert result.converged
        plan = transport_plan(result.state, problem.kernel)
        theta_sq = local_rate(plan, problem.a, problem.b)
        measured = tail_rate(result.trace.residuals_a(), window=20)
        assert measured == pytest.approx(theta_sq, rel=0.05)

    def test_contraction_of_v_iterates_at_squared_ratio(self, rng):
        problem = random_problem(8, 8, 0.6, seed=4)
        lam = birkhoff_contraction(problem.kernel)
        reference = solve(problem, SolverConfig(tol=1e-13, max_iter=10000))
        assert reference.converged
        state = ScalingState(np.zeros(8), rng.normal(0.0, 1.0, size=8), 0)
        d_prev = hilbert_distance_log(state.log_v, reference.state.log_v)
        for _ in range(30):
            state = sor_step(state, problem, 1.0)
            d_next = hilbert_distance_log(state.log_v, reference.state.log_v)
            if d_prev < 1e-9:
                break
            assert d_next <= lam * lam * d_prev * (1.0 + 1e-9) + 1e-12
            d_prev = d_next

    def test_error_recursion_bound_entrywise(self, rng):
        problem = random_problem(10, 10, 0.4, seed=14)
        lam = birkhoff_contraction(problem.kernel)
        omega = 0.95 * 2.0 / (1.0 + lam)
        reference = solve(problem, SolverConfig(tol=1e-13, max_iter=20000))
        assert reference.converged
        t_mat = error_recursion_matrix(lam, omega)
        state = ScalingState(np.zeros(10), rng.normal(0.0, 1.5, size=10), 0)
        delta = np.array([
            hilbert_distance_log(state.log_u, reference.state.log_u),
            hilbert_distance_log(state.log_v, reference.state.log_v),
        ])
        for _ in range(50):
            state = sor_step(state, problem, omega)
            new_delta = np.array([
                hilbert_distance_log(state.log_u, reference.state.log_u),
                hilbert_distance_log(state.log_v, reference.state.log_v),
            ])
            bound = t_mat @ delta
            if bound.min() < 1e-8:
                break
            assert (new_delta <= bound * (1.0 + 1e-9) + 1e-12).all()
            delta = new_delta

    def test_residual_b_exact_after_standard_sweep(self):
        # with omega = 1 the v half-update makes column sums exact
        problem = random_problem(7, 7, 0.8, seed=6)
        result = solve(problem, SolverConfig(tol=1e-9, max_iter=50))
        for rec in result.trace:
            assert rec.residual_b < 1e-12

    def test_deterministic_traces(self):
        problem = random_problem(9, 9, 0.5, seed=10)
        config = SolverConfig(policy=RelaxationPolicy.adaptive_residual(warmup=5),
                              tol=1e-11, max_iter=5000)
        r1 = solve(problem, config)
        r2 = solve(problem, config)
        np.testing.assert_array_equal(r1.trace.residuals_a(), r2.trace.residuals_a())
        np.testing.assert_array_equal(r1.trace.residuals_b(), r2.trace.residuals_b())
        np.testing.assert_array_equal(r1.trace.omegas(), r2.trace.omegas())
        assert r1.reason == r2.reason

    def test_overrelaxation_outside_range_hits_iteration_limit(self, rng):
        # contraction ratio close to 1; omega = 1.999 is locally convergent at
        # a glacial rate, so a modest budget ends in the iteration limit
        n = 12
        kernel = grid_kernel_1d(n, n, 0.2)
        problem = TransportProblem(kernel, random_measure(n, 1), random_measure(n, 2))
        assert birkhoff_contraction(kernel) > 0.98
        good = solve(problem, SolverConfig(policy=RelaxationPolicy.adaptive_svd(warmup=20),
                                           tol=1e-8, max_iter=20000))
        assert good.converged
        perturbed = good.state.log_v + rng.normal(0.0, 1e-3, size=n)
        result = solve(problem,
                       SolverConfig(policy=RelaxationPolicy.fixed(1.999),
                                    tol=1e-9, max_iter=300),
                       initial_log_v=perturbed)
        assert result.reason == TerminationReason.ITERATION_LIMIT

    def test_initial_log_v_validation(self):
        problem = all_ones_problem()
        with pytest.raises(InvalidInputError):
            solve(problem, initial_log_v=np.array([0.0, np.inf]))
        with pytest.raises(InvalidInputError):
            solve(problem, initial_log_v=np.zeros(3))


class TestOmegaPolicyWiring:
    def test_fixed_policy_recorded_in_trace(self):
        problem = random_problem(6, 6, 0.8, seed=12)
        result = solve(problem, SolverConfig(policy=RelaxationPolicy.fixed(1.2),
                                             tol=1e-10, max_iter=1000))
        assert set(result.trace.omegas()) == {1.2}

    def test_adaptive_switches_once_after_warmup(self):
        problem = random_problem(15, 15, 0.08, seed=13)
        result = solve(problem, SolverConfig(
            policy=RelaxationPolicy.adaptive_residual(warmup=10, lookback=2),
            tol=1e-11, max_iter=5000))
        omegas = result.trace.omegas()
        assert (omegas[:10] == 1.0).all()
        post = set(omegas[10:])
        assert len(post) == 1
        chosen = post.pop()
        assert 1.0 < chosen < 2.0


class TestConcurrentSolves:
    def test_parallel_runs_match_serial(self):
        from concurrent.futures import ThreadPoolExecutor

        problems = [random_problem(10, 10, 0.3, seed=s) for s in range(8)]
        config = SolverConfig(tol=1e-10, max_iter=5000)
        serial = [solve(p, config) for p in problems]
        with ThreadPoolExecutor(max_workers=4) as pool:
            parallel = list(pool.map(lambda p: solve(p, config), problems))
        for s, q in zip(serial, parallel):
            assert s.reason == q.reason
            np.testing.assert_array_equal(s.trace.residuals_a(), q.trace.residuals_a())
            np.testing.assert_array_equal(s.state.log_v, q.state.log_v)


class TestTailRate:
    def test_geometric_sequence_is_exact(self):
        r = 0.85 ** np.arange(60)
        assert tail_rate(r, window=20) == pytest.approx(0.85, rel=1e-12)
        assert tail_rate(r, window=20, method="lsq") == pytest.approx(0.85, rel=1e-12)

    def test_floor_filtering(self):
        r = np.concatenate([0.5 ** np.arange(40), np.full(5, 1e-16)])
        assert tail_rate(r, window=10, floor=1e-13) == pytest.approx(0.5, rel=1e-12)

    def test_needs_two_points(self):
        with pytest.raises(InvalidInputError):
            tail_rate([1.0], window=5)
