import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from awhmm import (
    CouplingMatrix,
    InfeasibleError,
    InvalidInputError,
    NonConvergenceError,
    project_to_polytope,
    solve_exact,
    solve_sinkhorn,
)


def brute_force_optimum(cost, row, col, grid=201):
    """Exact optimum of a 2xN transportation problem by sweeping the free
    corner variables on a fine grid of polytope vertices."""
    m, n = cost.shape
    assert m == 2
    # parametrize w[0, :] subject to 0 <= w0j <= min(row0 remainder, col j)
    best = np.inf
    # vertices have at most m+n-1 nonzero entries; enumerate supports
    for support in itertools.combinations(range(m * n), m + n - 1):
        a_eq = np.zeros((m + n, len(support)))
        for k, idx in enumerate(support):
            i, j = divmod(idx, n)
            a_eq[i, k] = 1.0
            a_eq[m + j, k] = 1.0
        b = np.concatenate([row, col])
        sol, *_ = np.linalg.lstsq(a_eq, b, rcond=None)
        w = np.zeros(m * n)
        w[list(support)] = sol
        if np.min(sol) < -1e-9:
            continue
        if np.max(np.abs(a_eq @ sol - b)) > 1e-9:
            continue
        best = min(best, float(cost.ravel() @ w))
    return best


def random_instance(rng, m, n):
    cost = rng.random((m, n)) * 5.0
    row = rng.dirichlet(np.ones(m))
    col = rng.dirichlet(np.ones(n))
    return cost, row, col


class TestCouplingMatrix:
    def test_accepts_valid(self):
        c = CouplingMatrix([[0.25, 0.25], [0.25, 0.25]], [0.5, 0.5], [0.5, 0.5])
        assert c.w.shape == (2, 2)

    def test_rejects_negative(self):
        with pytest.raises(InvalidInputError):
            CouplingMatrix([[0.6, -0.1], [0.2, 0.3]], [0.5, 0.5], [0.8, 0.2])

    def test_rejects_marginal_violation(self):
        with pytest.raises(InvalidInputError):
            CouplingMatrix([[0.5, 0.0], [0.0, 0.4]], [0.5, 0.5], [0.5, 0.5])


class TestSolveExact:
    def test_known_instance(self):
        # vertex sweep of this polytope gives objective 1.4 + t on t in
        # [0.1, 0.4]; the minimum is 1.5
        cost = np.array([[0.0, 2.0], [1.0, 4.0]])
        coupling, objective = solve_exact(cost, [0.7, 0.3], [0.4, 0.6])
        assert objective == pytest.approx(1.5, abs=1e-10)
        np.testing.assert_allclose(coupling.w.sum(axis=1), [0.7, 0.3], atol=1e-12)
        np.testing.assert_allclose(coupling.w.sum(axis=0), [0.4, 0.6], atol=1e-12)

    def test_identity_cost_prefers_diagonal(self):
        cost = 1.0 - np.eye(3)
        coupling, objective = solve_exact(cost, np.full(3, 1 / 3), np.full(3, 1 / 3))
        assert objective == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(coupling.w, np.eye(3) / 3, atol=1e-9)

    @pytest.mark.parametrize("shape", [(2, 2), (2, 3)])
    def test_matches_vertex_enumeration(self, rng, shape):
        for _ in range(200):
            cost, row, col = random_instance(rng, *shape)
            _, objective = solve_exact(cost, row, col)
            assert objective == pytest.approx(
                brute_force_optimum(cost, row, col), abs=1e-10
            )

    def test_permutation_cost_recovers_permutation(self, rng):
        perm = rng.permutation(4)
        cost = np.ones((4, 4))
        cost[np.arange(4), perm] = 0.0
        u = np.full(4, 0.25)
        coupling, objective = solve_exact(cost, u, u)
        assert objective == pytest.approx(0.0, abs=1e-12)
        expected = np.zeros((4, 4))
        expected[np.arange(4), perm] = 0.25
        np.testing.assert_allclose(coupling.w, expected, atol=1e-9)

    def test_rejects_marginal_sum_mismatch(self):
        with pytest.raises(InvalidInputError):
            solve_exact(np.eye(2), [0.7, 0.2], [0.5, 0.5])

    def test_rejects_infinite_cost(self):
        with pytest.raises(InvalidInputError):
            solve_exact(np.array([[np.inf, 1.0], [1.0, 0.0]]), [0.5, 0.5], [0.5, 0.5])


class TestSolveSinkhorn:
    def test_small_epsilon_approaches_exact(self):
        cost = np.array([[0.0, 2.0], [1.0, 4.0]])
        row, col = np.array([0.7, 0.3]), np.array([0.4, 0.6])
        _, exact = solve_exact(cost, row, col)
        span = cost.max() - cost.min()
        coupling = solve_sinkhorn(cost, row, col, epsilon=0.01 * span)
        objective = float(np.sum(coupling.w * cost))
        assert objective <= exact * 1.02

    def test_objective_monotone_in_epsilon(self):
        cost = np.array([[0.0, 2.0], [1.0, 4.0]])
        row, col = np.array([0.7, 0.3]), np.array([0.4, 0.6])
        span = cost.max() - cost.min()
        objectives = [
            float(np.sum(solve_sinkhorn(cost, row, col, m * span).w * cost))
            for m in (1.0, 0.1, 0.01)
        ]
        _, exact = solve_exact(cost, row, col)
        assert objectives[0] >= objectives[1] >= objectives[2] >= exact - 1e-9
        assert all(o >= exact - 1e-9 for o in objectives)

    def test_marginals_match(self, rng):
        cost, row, col = random_instance(rng, 5, 7)
        coupling = solve_sinkhorn(cost, row, col)
        np.testing.assert_allclose(coupling.w.sum(axis=1), row, atol=1e-8)
        np.testing.assert_allclose(coupling.w.sum(axis=0), col, atol=1e-8)

    def test_default_epsilon_scale_invariance(self, rng):
        cost, row, col = random_instance(rng, 4, 4)
        a = solve_sinkhorn(cost, row, col)
        b = solve_sinkhorn(100.0 * cost, row, col)
        np.testing.assert_allclose(a.w, b.w, atol=1e-6)

    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(InvalidInputError):
            solve_sinkhorn(np.eye(2), [0.5, 0.5], [0.5, 0.5], epsilon=0.0)

    def test_nonconvergence_reports_residual(self):
        # adversarial: huge cost spread and near-singular marginals at a
        # tiny epsilon stall the scaling well past the iteration cap
        cost = np.array([[0.0, 1e6], [1e6, 0.0]])
        with pytest.raises(NonConvergenceError) as exc_info:
            solve_sinkhorn(cost, [1e-9, 1 - 1e-9], [1 - 1e-9, 1e-9], epsilon=1e-2)
        assert exc_info.value.residual is None or exc_info.value.residual >= 0


class TestProjectToPolytope:
    def test_fixed_point_unchanged(self):
        w = np.array([[0.2, 0.3], [0.2, 0.3]])
        out = project_to_polytope(w, [0.5, 0.5], [0.4, 0.6])
        np.testing.assert_allclose(out.w, w, atol=1e-12)

    def test_uniform_example(self):
        out = project_to_polytope(np.ones((2, 2)), [0.5, 0.5], [0.5, 0.5])
        np.testing.assert_allclose(out.w, np.full((2, 2), 0.25), atol=1e-12)

    def test_derived_example_reaches_marginals(self):
        w = np.array([[0.3, 0.1], [0.1, 0.5]])
        out = project_to_polytope(w, [0.5, 0.5], [0.4, 0.6])
        np.testing.assert_allclose(out.w.sum(axis=1), [0.5, 0.5], atol=1e-9)
        np.testing.assert_allclose(out.w.sum(axis=0), [0.4, 0.6], atol=1e-9)

    def test_structural_infeasibility(self):
        w = np.array([[0.0, 0.0], [0.5, 0.5]])
        with pytest.raises(InfeasibleError):
            project_to_polytope(w, [0.5, 0.5], [0.5, 0.5])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_matrices_project(self, seed):
        rng = np.random.default_rng(seed)
        w = rng.random((3, 4)) + 0.01
        row = rng.dirichlet(np.ones(3))
        col = rng.dirichlet(np.ones(4))
        out = project_to_polytope(w, row, col)
        np.testing.assert_allclose(out.w.sum(axis=1), row, atol=1e-8)
        np.testing.assert_allclose(out.w.sum(axis=0), col, atol=1e-8)


class TestCrossSolverInvariants:
    def test_exact_no_worse_than_sinkhorn(self, rng):
        for _ in range(20):
            cost, row, col = random_instance(rng, 3, 3)
            _, exact = solve_exact(cost, row, col)
            sink = solve_sinkhorn(cost, row, col)
            assert exact <= float(np.sum(sink.w * cost)) + 1e-9
