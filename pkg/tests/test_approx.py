import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cidim.approx import (
    achievable_rho,
    approx_ci,
    approx_ratio,
    lower_bound_closed_form,
    project_ball_box,
    solve_reduced,
)
from cidim.errors import InfeasibleBudget, NonConvergenceWarning
from cidim.presets import setup1, setup2

from oracles import reduced_kkt, wyner_closed


class TestCertificates:
    def test_achievable(self):
        np.testing.assert_allclose(achievable_rho([1, 1, 0.3], 0.2), [1 - 0.2 / math.sqrt(2)] * 2 + [0.3])

    def test_lower(self):
        assert lower_bound_closed_form([1, 1, 1, 0.3], 1e-3) == pytest.approx(1.5 * math.log2(math.sqrt(3) / 1e-3))

    def test_lower_floor(self):
        assert lower_bound_closed_form([1.0], 5.0) == 0.0

    def test_lower_no_units(self):
        assert lower_bound_closed_form([0.5, 0.2], 0.1) == 0.0


class TestProjection:
    def test_inside(self):
        x = np.array([0.2, 0.3])
        np.testing.assert_array_equal(project_ball_box(x, np.array([0.2, 0.3]), 0.1, 1.0), x)

    def test_ball_only(self):
        z = project_ball_box(np.array([0.5]), np.array([0.0]), 0.1, 1.0)
        np.testing.assert_allclose(z, [0.1])

    @given(st.integers(0, 2**32 - 1))
    def test_matches_slsqp(self, seed):
        from scipy.optimize import minimize

        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 5))
        c = rng.uniform(0, 1, k)
        r = float(rng.uniform(0.05, 0.8))
        x = rng.uniform(-0.5, 1.5, k)
        z = project_ball_box(x, c, r, 1.0)
        res = minimize(
            lambda v: float(np.sum((v - x) ** 2)),
            np.clip(c, 0, 1),
            bounds=[(0, 1)] * k,
            constraints=[{"type": "ineq", "fun": lambda v: r * r - float(np.sum((v - c) ** 2))}],
            method="SLSQP",
            options={"ftol": 1e-14, "maxiter": 500},
        )
        assert np.sum((z - x) ** 2) <= res.fun + 1e-7
        assert np.linalg.norm(z - c) <= r + 1e-12

    def test_empty(self):
        with pytest.raises(InfeasibleBudget):
            project_ball_box(np.array([0.0]), np.array([0.0]), 0.1, 1.0, lower=0.5)


class TestSolveReduced:
    def test_single_unit(self):
        sol = solve_reduced([1.0], 0.1)
        np.testing.assert_allclose(sol.rho_star, [0.9], atol=1e-9)
        assert sol.ci_bits == pytest.approx(0.5 * math.log2(19.0), abs=1e-9)

    def test_two_units_even_split(self):
        sol = solve_reduced([1.0, 1.0], 0.1)
        np.testing.assert_allclose(sol.rho_star, [1 - 0.1 / math.sqrt(2)] * 2, atol=1e-7)

    def test_mixed_matches_kkt(self):
        rho, bits = reduced_kkt([0.9, 0.5, 0.2], 0.5)
        sol = solve_reduced([0.9, 0.5, 0.2], 0.5)
        assert sol.ci_bits == pytest.approx(bits, abs=1e-8)
        np.testing.assert_allclose(sol.rho_star, rho, atol=1e-4)
        assert sol.rho_star[2] == pytest.approx(0.0, abs=1e-9)

    def test_budget_covers_everything(self):
        sol = solve_reduced([0.3, 0.4], 0.5)
        assert sol.ci_bits == 0.0
        np.testing.assert_array_equal(sol.rho_star, [0.0, 0.0])

    def test_zero_spectrum(self):
        assert solve_reduced([0.0, 0.0], 1e-3).ci_bits == 0.0

    def test_tiny_budget(self):
        with pytest.raises(InfeasibleBudget):
            solve_reduced([1.0, 1.0], 1e-9)

    def test_nonpositive_budget(self):
        with pytest.raises(InfeasibleBudget):
            solve_reduced([1.0], 0.0)

    def test_iteration_cap_warns(self):
        with pytest.warns(NonConvergenceWarning):
            sol = solve_reduced([1.0, 0.9, 0.8, 0.7], 0.3, max_iter=1)
        assert not sol.converged

    @given(
        st.lists(st.floats(0.0, 1.0), min_size=1, max_size=5),
        st.floats(1e-4, 0.9),
        st.integers(0, 3),
    )
    def test_kkt_oracle(self, sig, budget, units):
        s = np.sort(np.array([1.0] * units + sig))[::-1]
        if units and budget < math.sqrt(units) * 1e-8:
            return
        sol = solve_reduced(s, budget)
        _, bits = reduced_kkt(s, budget)
        assert sol.ci_bits == pytest.approx(bits, abs=1e-6)
        assert np.linalg.norm(s - sol.rho_star) <= budget * (1 + 1e-9)
        assert np.all(sol.rho_star <= s) and np.all(sol.rho_star >= 0)
        assert sol.lower_bound_bits <= sol.ci_bits + 1e-10 <= sol.achievable_bits + 2e-10

    @given(st.integers(0, 2**32 - 1))
    def test_monotone_in_budget(self, seed):
        rng = np.random.default_rng(seed)
        s = np.sort(np.concatenate([[1.0], rng.uniform(0, 1, 3)]))[::-1]
        vals = [solve_reduced(s, b).ci_bits for b in (0.02, 0.05, 0.1, 0.3)]
        assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))


class TestApproxCI:
    @pytest.mark.parametrize("eps", [2.0**-5, 2.0**-20])
    def test_setup2_certificates(self, eps):
        sol = approx_ci(setup2(5), eps)
        assert sol.lower_bound_bits <= sol.ci_bits <= sol.achievable_bits
        assert sol.frobenius_distance <= eps
        assert sol.converged

    def test_setup2_oracle(self):
        eps = 2.0**-20
        sol = approx_ci(setup2(5), eps)
        _, bits = reduced_kkt([1.0] * 5 + [0.5] * 2, eps / math.sqrt(2))
        assert sol.ci_bits == pytest.approx(bits, abs=1e-6)

    def test_frobenius_direct(self):
        j = setup1()
        for eps in (1e-2, 1e-4, 1e-6):
            sol = approx_ci(j, eps)
            assert sol.frobenius_distance <= eps

    def test_setup1_ratio(self):
        # sv budget: eps / (sqrt 2 * lambda_max(S_X)), lambda_max = 1.5
        eps = 1e-6
        _, bits = reduced_kkt([1, 1, 1, 0.3], eps / (math.sqrt(2) * 1.5))
        assert approx_ratio(setup1(), eps) == pytest.approx(bits / (0.5 * math.log2(1e6)), abs=1e-6)

    def test_nonsingular_large_eps(self):
        j = setup2(0)
        w = wyner_closed([0.5] * 7)
        sol = approx_ci(j, 1e-2)
        assert 0 < sol.ci_bits < w
        assert sol.lower_bound_bits == 0.0

    def test_decreasing_in_eps(self):
        vals = [approx_ci(setup1(), e).ci_bits for e in (1e-6, 1e-4, 1e-2, 1e-1)]
        assert np.all(np.diff(vals) < 0)

    def test_eps_ge_one_ratio_none(self):
        assert approx_ci(setup1(), 2.0).ratio is None

    def test_bad_eps(self):
        with pytest.raises(InfeasibleBudget):
            approx_ci(setup1(), -1.0)
