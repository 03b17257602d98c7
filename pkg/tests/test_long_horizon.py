import numpy as np
import pytest

from wavestat import BasisConfig, SpectralVector
from wavestat.errors import ConjugatePointError, HorizonError
from wavestat.long_horizon import (ConcatenationPlan, first_segment_velocity, plan_concatenation,
                                   singular_junction_modes, solve_intermediate_states, stat_value,
                                   stationarity_residual, theta_gradient, theta_value, thomas_solve)
from wavestat.propagator import propagate_profile
from wavestat.riccati import ModeParams, concavity_horizon, eval_W, fundamental_solution

from conftest import smooth_vector

# kappa = 2 keeps t = 3 away from every mode's conjugate points
LONG = BasisConfig(N=32, kappa=2.0)


def dense_junctions(plan, x, z):
    """Brute-force stationary point from the full (n_t - 1) N system."""
    p, q, r = plan.segment_eigs()
    k, N = plan.n_t - 1, plan.cfg.N
    A = np.zeros((k * N, k * N))
    b = np.zeros(k * N)
    for j in range(k):
        rows = slice(j * N, (j + 1) * N)
        A[rows, rows] = np.diag(p + r)
        if j > 0:
            A[rows, (j - 1) * N:j * N] = np.diag(q)
        if j < k - 1:
            A[rows, (j + 1) * N:(j + 2) * N] = np.diag(q)
    b[:N] -= q * x.coeffs
    b[-N:] -= q * z.coeffs
    return np.linalg.solve(A, b).reshape(k, N)


class TestPlanner:
    def test_explicit(self):
        plan = plan_concatenation(LONG, 3.0, n_t=7)
        assert plan.n_t == 7 and plan.tau == pytest.approx(3 / 7)

    def test_explicit_inadmissible(self, unit):
        with pytest.raises(HorizonError, match="conjugate"):
            plan_concatenation(unit, 2.0, n_t=2)

    def test_auto_is_admissible(self):
        plan = plan_concatenation(LONG, 3.0)
        assert plan.n_t >= 2 and not plan.problems()

    def test_auto_respects_concavity(self):
        mu = 0.2
        plan = plan_concatenation(LONG, 3.0, mu)
        assert plan.tau < concavity_horizon(mu, LONG.m, LONG.kappa)

    def test_cap(self):
        with pytest.raises(HorizonError, match="up to 3"):
            plan_concatenation(LONG, 3.0, 0.01, cap=3)

    def test_bad_plan(self, unit):
        with pytest.raises(ValueError):
            ConcatenationPlan(unit, 1.0, 0)
        with pytest.raises(ValueError):
            ConcatenationPlan(unit, -1.0, 2)


class TestThomas:
    def test_matches_dense(self, rng):
        k, N = 9, 4
        lower, upper = rng.normal(size=(k, N)), rng.normal(size=(k, N))
        diag = 4 + rng.normal(size=(k, N))
        rhs = rng.normal(size=(k, N))
        x, piv = thomas_solve(lower, diag, upper, rhs)
        for col in range(N):
            A = np.diag(diag[:, col]) + np.diag(lower[1:, col], -1) + np.diag(upper[:-1, col], 1)
            assert np.allclose(A @ x[:, col], rhs[:, col], atol=1e-13)
        assert np.all(piv > 0)

    def test_zero_pivot_falls_back(self):
        # first pivot is zero; partial pivoting still solves it
        lower = np.array([[0.0], [1.0], [1.0]])
        diag = np.array([[0.0], [1.0], [2.0]])
        upper = np.array([[1.0], [1.0], [0.0]])
        rhs = np.array([[1.0], [2.0], [3.0]])
        x, piv = thomas_solve(lower, diag, upper, rhs)
        A = np.array([[0.0, 1, 0], [1, 1, 1], [0, 1, 2]])
        assert piv[0] == 0.0
        assert np.allclose(A @ x[:, 0], rhs[:, 0], atol=1e-14)


class TestJunctions:
    def test_two_segments_closed_form(self, rng):
        plan = plan_concatenation(LONG, 3.0, n_t=2)
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        (zeta,) = solve_intermediate_states(plan, x, z)
        om = ModeParams.build(LONG, 0.0).omega
        expected = (x.coeffs + z.coeffs) / (2 * np.cos(om * plan.tau))
        assert np.allclose(zeta.coeffs, expected, rtol=1e-12, atol=1e-15)

    def test_zero_data(self):
        plan = plan_concatenation(LONG, 3.0, n_t=5)
        zero = SpectralVector.zeros(LONG)
        assert all(np.all(v.coeffs == 0) for v in solve_intermediate_states(plan, zero, zero))

    def test_one_segment(self, rng):
        plan = ConcatenationPlan(LONG, 0.4, 1)
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        assert solve_intermediate_states(plan, x, z) == []
        assert stat_value(plan, x, z) == pytest.approx(eval_W(fundamental_solution(LONG, 0.0, 0.4), x, z), rel=1e-14)

    def test_dense_agreement(self, rng):
        plan = plan_concatenation(LONG, 3.0, n_t=6)
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        zeta = np.array([v.coeffs for v in solve_intermediate_states(plan, x, z)])
        assert np.allclose(zeta, dense_junctions(plan, x, z), rtol=1e-11, atol=1e-14)

    def test_residual_small(self, rng):
        plan = plan_concatenation(LONG, 3.0)
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        zeta = solve_intermediate_states(plan, x, z)
        assert stationarity_residual(plan, x, zeta, z) < 1e-10

    def test_residual_count_checked(self, rng):
        plan = plan_concatenation(LONG, 3.0, n_t=4)
        x = smooth_vector(rng, LONG)
        with pytest.raises(ValueError):
            stationarity_residual(plan, x, [x], x)

    def test_gradient_matches_difference(self, rng):
        plan = plan_concatenation(LONG, 3.0, n_t=4)
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        zeta = [smooth_vector(rng, LONG) for _ in range(3)]
        grad = theta_gradient(plan, x, zeta, z)
        h = 1e-6
        for j, n in ((0, 0), (1, 5), (2, 31)):
            bump = np.zeros((3, LONG.N))
            bump[j, n] = h
            up = [v + SpectralVector(e, LONG) for v, e in zip(zeta, bump)]
            dn = [v - SpectralVector(e, LONG) for v, e in zip(zeta, bump)]
            fd = (theta_value(plan, x, up, z) - theta_value(plan, x, dn, z)) / (2 * h)
            assert fd == pytest.approx(grad[j, n], rel=1e-6, abs=1e-8)

    def test_linear_in_data(self, rng):
        plan = plan_concatenation(LONG, 3.0, n_t=5)
        x1, z1, x2, z2 = (smooth_vector(rng, LONG) for _ in range(4))
        a = solve_intermediate_states(plan, x1 * 2.0 + x2, z1 * 2.0 + z2)
        b1 = solve_intermediate_states(plan, x1, z1)
        b2 = solve_intermediate_states(plan, x2, z2)
        for u, v1, v2 in zip(a, b1, b2):
            assert np.allclose(u.coeffs, 2 * v1.coeffs + v2.coeffs, rtol=1e-12, atol=1e-15)


class TestValue:
    @pytest.mark.parametrize("n_t", [2, 3, 5, 11])
    def test_invariant_in_segment_count(self, rng, n_t):
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        ref = eval_W(fundamental_solution(LONG, 0.0, 3.0), x, z)
        assert stat_value(plan_concatenation(LONG, 3.0, n_t=n_t), x, z) == pytest.approx(ref, rel=1e-11)

    def test_short_horizon_split(self, rng):
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        t = 0.3
        ref = eval_W(fundamental_solution(LONG, 0.0, t), x, z)
        assert stat_value(ConcatenationPlan(LONG, t, 2), x, z) == pytest.approx(ref, rel=1e-12)

    def test_first_segment_velocity_propagates(self, rng):
        plan = plan_concatenation(LONG, 3.0)
        x, z = smooth_vector(rng, LONG), smooth_vector(rng, LONG)
        w0 = first_segment_velocity(plan, x, z)
        end = propagate_profile(x, w0, 3.0)[-1].xi
        assert (end - z).norm_l2() < 1e-10 * max(1.0, z.norm_l2())

    def test_singular_whole_horizon(self, unit, rng):
        plan = plan_concatenation(unit, 1.0, n_t=11)
        assert list(singular_junction_modes(plan)) == list(range(1, 9))
        x, z = smooth_vector(rng, unit), smooth_vector(rng, unit)
        with pytest.raises(ConjugatePointError):
            solve_intermediate_states(plan, x, z)
        zeta = solve_intermediate_states(plan, x, z, skip_singular=True)
        assert all(np.all(v.coeffs == 0) for v in zeta)
