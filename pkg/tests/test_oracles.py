import math

import numpy as np
import pytest
import sympy

from malab.boundary_data import check_condition
from malab.oracles import (
    case_library,
    pk,
    pk_coefficients,
    pk_exact,
    qk,
    qk_coefficients,
    qk_exact,
    sandwich_constants,
)


class TestPolynomials:
    @pytest.mark.parametrize("k", [2, 4, 6, 8, 10, 12])
    def test_coefficients_match_sympy_expansion(self, k):
        t = sympy.Symbol("t")
        p_expr = sympy.expand((t + 1) ** k - t**k - k * t ** (k - 1))
        q_expr = sympy.expand(t**k + k * (t + 1) ** (k - 1) - (t + 1) ** k)
        p_coeffs = pk_coefficients(k)
        q_coeffs = qk_coefficients(k)
        for i in range(k + 1):
            pc = p_coeffs[i] if i < len(p_coeffs) else 0.0
            qc = q_coeffs[i] if i < len(q_coeffs) else 0.0
            assert pc == float(p_expr.coeff(t, i))
            assert qc == float(q_expr.coeff(t, i))

    def test_p2_q2_constant_one(self):
        ts = np.linspace(-1e6, 1e6, 101)
        assert np.all(pk(2, ts) == 1.0)
        assert np.all(qk(2, ts) == 1.0)

    def test_p4_at_three(self):
        # P4(t) = 6t^2 + 4t + 1 by symbolic expansion
        assert pk(4, 3.0) == 67.0

    def test_odd_k_rejected(self):
        with pytest.raises(ValueError):
            pk(3, 1.0)
        with pytest.raises(ValueError):
            qk_coefficients(5)

    def test_large_argument_no_cancellation(self):
        # evaluating the expanded form at large |t| stays within a few ulp of
        # the exact integer value
        t = 10**5
        exact = pk_exact(8, t)
        assert pk(8, float(t)) == pytest.approx(float(exact), rel=1e-12)

    def test_reflection_identity_exact(self, rng):
        ts = rng.integers(-(10**6), 10**6, 10000)
        for k in (2, 4, 6, 8, 10, 12):
            assert all(qk_exact(k, int(t)) == pk_exact(k, -(int(t) + 1)) for t in ts)


class TestSandwich:
    @pytest.mark.parametrize("k", [2, 4, 6, 8, 10, 12])
    def test_positive_lower_constant(self, k):
        rep = sandwich_constants(k)
        assert rep.c_lower > 0
        assert rep.c_upper >= rep.c_lower

    def test_k2_exact_half(self):
        rep = sandwich_constants(2)
        assert rep.c_lower == pytest.approx(0.5, abs=1e-12)
        assert rep.c_upper == pytest.approx(0.5, abs=1e-12)

    def test_k4_against_stationary_oracle(self):
        # stationary points of (6t^2+4t+1)/(t^2+1): roots of -4t^2+10t+4
        roots = np.roots([-4.0, 10.0, 4.0])

        def ratio(t):
            return (6 * t**2 + 4 * t + 1) / (t**2 + 1)

        lo = min(ratio(r) for r in roots)
        hi = max(ratio(r) for r in roots)
        rep = sandwich_constants(4)
        assert rep.c_lower == pytest.approx(lo, abs=1e-3)
        assert rep.c_upper == pytest.approx(hi, abs=1e-3)
        assert rep.c_lower == pytest.approx(0.2984, abs=1e-3)
        assert rep.c_upper == pytest.approx(6.70, abs=1e-2)

    @pytest.mark.parametrize("k", [2, 4, 6, 8, 10])
    def test_asymptote(self, k):
        rep = sandwich_constants(k)
        assert rep.asymptote_rel_err <= 0.01

    @pytest.mark.parametrize("k", [4, 6, 8])
    def test_reflected_extrema_match(self, k):
        # the Q ratio extremes computed directly coincide with the ones
        # computed through the reflection s = -(t+1) into P_k, and stay
        # positive (two independent coefficient sets, one function)
        ts = np.linspace(-50, 50, 20001)
        denom = ts ** (k - 2) + 1.0
        direct = qk(k, ts) / denom
        via_reflection = pk(k, -(ts + 1.0)) / denom
        assert np.min(direct) > 0
        assert np.min(direct) == pytest.approx(np.min(via_reflection), rel=1e-12)
        assert np.max(direct) == pytest.approx(np.max(via_reflection), rel=1e-12)
        assert np.allclose(qk(k, ts), pk(k, -(ts + 1.0)), rtol=1e-12, atol=1e-9)

    def test_range_guard(self):
        with pytest.raises(ValueError):
            sandwich_constants(4, t_range=(-10, 10))


class TestCaseLibrary:
    def test_four_cases(self):
        cases = case_library()
        assert [c.ident for c in cases] == ["power", "log", "sqrt", "mixed"]

    def test_power_case_annihilates_hessian(self):
        case = case_library(alpha=0.5)[0]
        pts = np.array([[0.1, 0.3], [-0.4, 0.7], [0.0, 0.9]])
        # u depends on x2 alone, so u_11 = u_12 = 0 and det D2 u = 0
        g = case.grad_u(pts)
        assert np.all(g[:, 0] == 0.0)
        h = 1e-5
        for p in pts:
            u11 = (case.u([p + [h, 0]]) - 2 * case.u([p]) + case.u([p - [h, 0]]))[0] / h**2
            assert abs(u11) < 1e-8

    def test_power_trace_is_polynomial_for_half(self):
        case = case_library(alpha=0.5)[0]
        assert case.trace.is_polynomial
        xs = np.linspace(-1, 1, 11)
        assert np.allclose(case.trace.value(xs), xs**6)

    def test_log_case_determinant_bound(self):
        case = case_library()[1]
        det_fn = case.params["hessian_det"]
        xs = np.linspace(-0.99, 0.99, 31)
        ys = np.geomspace(1e-8, 1.0 - 1e-6, 61)
        pts = np.array([(x * min(1.0, y**0.25), y) for x in xs for y in ys])
        assert np.all(det_fn(pts) >= case.det_lower(pts))

    def test_sqrt_case_conditions(self):
        case = case_library()[2]
        rep = check_condition(case.trace, "P1")
        assert not rep.passed
        assert rep.residuals == (2.0,)

    def test_mixed_case_conditions(self):
        case = case_library(beta_mixed=2.5)[3]
        assert check_condition(case.trace, "P1").passed
        assert not check_condition(case.trace, "P2").passed

    def test_traces_match_solutions_on_boundary(self):
        for case in (case_library()[0], case_library()[2], case_library()[3]):
            xs = np.linspace(-0.9, 0.9, 13)
            pts = np.stack([xs, xs**4], axis=1)
            assert np.allclose(case.trace.value(xs), case.u(pts), atol=1e-12)
