import math

import numpy as np
import pytest

from malab.envelope import PiecewiseAffineConvexFunction, homogeneous_solution
from malab.geometry import BoundaryProfile, Domain2D, tangent_transform
from malab.oracles import case_library
from malab.regularity import (
    c1alpha_seminorm,
    default_radii,
    gradient_sup,
    holder_fit,
    sublevel_analysis,
    support_gradient_spread,
    tangential_holder_check,
)
from malab.solver import FieldSpec, solve

ZERO = lambda pts: np.zeros(len(np.atleast_2d(pts)))


def power_fn(a):
    return lambda pts: np.clip(np.atleast_2d(pts)[:, 1], 0, None) ** (1 + a)


class TestGradientSup:
    def test_affine_exact(self, quartic_domain):
        aff = lambda pts: 3.0 * np.atleast_2d(pts)[:, 0] - 4.0 * np.atleast_2d(pts)[:, 1]
        u = homogeneous_solution(quartic_domain, aff, boundary_samples=100)
        assert gradient_sup(u) == pytest.approx(5.0, rel=1e-12)

    def test_sqrt_case_diverges_under_refinement(self):
        case = case_library()[2]
        dom = case.domain()
        grads = [
            gradient_sup(homogeneous_solution(dom, case.boundary_values, boundary_samples=n))
            for n in (200, 400, 800)
        ]
        assert grads[1] / grads[0] >= 1.3
        assert grads[2] / grads[1] >= 1.3

    def test_power_case_bounded_and_stable(self):
        case = case_library(alpha=0.5)[0]
        dom = case.domain()
        grads = [
            gradient_sup(homogeneous_solution(dom, case.boundary_values, boundary_samples=n))
            for n in (500, 1000)
        ]
        # |Du| of the reference solution is 1.5 * sqrt(x2) <= 1.5
        assert grads[1] <= 1.6
        assert abs(grads[1] - grads[0]) <= 0.1


class TestHolderFit:
    @pytest.mark.parametrize("a", [0.25, 0.5, 0.75, 1.0])
    def test_power_exponents(self, a, quartic_domain):
        fit = holder_fit(
            power_fn(a), (0, 0), default_radii(), support=(0.0, (0.0, 0.0)),
            domain=quartic_domain,
        )
        assert fit.conclusive
        assert fit.alpha == pytest.approx(a, abs=0.05)

    def test_power_case_hull(self, quartic_domain):
        case = case_library(alpha=0.5)[0]
        u = homogeneous_solution(quartic_domain, case.boundary_values, boundary_samples=4000)
        fit = holder_fit(u, (0, 0), default_radii(), domain=quartic_domain)
        assert fit.alpha == pytest.approx(0.5, abs=0.05)

    def test_mixed_case_normal_gradient_exponent(self):
        case = case_library(beta_mixed=2.5)[3]
        fit = holder_fit(
            case.u, (0, 0), default_radii(), mode="gradient", direction=(0.0, 1.0),
            grad=case.grad_u,
        )
        assert fit.alpha == pytest.approx(0.5, abs=0.05)
        # strictly below beta/4, witnessing the failure of the better class
        assert fit.alpha + 0.05 < case.params["beta"] / 4.0

    def test_degenerate_flag(self, quartic_domain):
        aff = lambda pts: np.full(len(np.atleast_2d(pts)), 2.0)
        fit = holder_fit(aff, (0, 0), default_radii(), support=(2.0, (0.0, 0.0)),
                         domain=quartic_domain)
        assert fit.flag == "degenerate"
        assert math.isinf(fit.alpha)

    def test_radii_guard(self, quartic_domain):
        with pytest.raises(ValueError):
            holder_fit(power_fn(0.5), (0, 0), [0.1, 0.05], support=(0.0, (0.0, 0.0)))

    def test_invariant_under_affine_subtraction(self, quartic_domain):
        base = power_fn(0.5)
        shifted = lambda pts: base(pts) + 0.7 * np.atleast_2d(pts)[:, 0] - 0.2
        f1 = holder_fit(base, (0, 0), default_radii(), support=(0.0, (0.0, 0.0)),
                        domain=quartic_domain)
        f2 = holder_fit(shifted, (0, 0), default_radii(), support=(-0.2, (0.7, 0.0)),
                        domain=quartic_domain)
        assert f2.alpha == pytest.approx(f1.alpha, abs=1e-9)

    def test_invariant_under_unimodular_shear(self, quartic_profile):
        # exponent unchanged by the tangent shear; constants may move
        T = tangent_transform(quartic_profile, 0.3)
        Tinv = T.inverse()
        base = power_fn(0.5)
        sheared = lambda pts: base(Tinv.apply(pts))
        x0_y = T.apply(np.array([0.0, 0.0]))
        f1 = holder_fit(base, (0, 0), default_radii(), support=(0.0, (0.0, 0.0)))
        f2 = holder_fit(sheared, x0_y, default_radii(), support=(0.0, (0.0, 0.0)))
        assert f2.alpha == pytest.approx(f1.alpha, abs=0.02)


class TestSeminorm:
    def test_affine_zero(self, quartic_domain):
        aff = lambda pts: 1.0 + 0.5 * np.atleast_2d(pts)[:, 0]
        val = c1alpha_seminorm(aff, (0, 0), 0.5, support=(1.0, (0.5, 0.0)),
                               domain=quartic_domain)
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_power_attains_one_on_axis(self, quartic_domain):
        # direct maximization oracle: (x2^1.5)/|x|^1.5 <= 1 with equality on
        # the vertical axis
        val = c1alpha_seminorm(power_fn(0.5), (0, 0), 0.5, support=(0.0, (0.0, 0.0)),
                               domain=quartic_domain)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_divergence_above_true_exponent(self, quartic_domain):
        shallow = c1alpha_seminorm(
            power_fn(0.5), (0, 0), 0.6, radii=default_radii(1.0, (1e-2, 1e-1)),
            support=(0.0, (0.0, 0.0)), domain=quartic_domain,
        )
        deep = c1alpha_seminorm(
            power_fn(0.5), (0, 0), 0.6, radii=default_radii(1.0, (1e-6, 1e-1)),
            support=(0.0, (0.0, 0.0)), domain=quartic_domain,
        )
        assert deep >= 2.0 * shallow

    def test_monotone_in_alpha(self, quartic_domain):
        radii = default_radii(1.0, (1e-3, 1e-1))
        vals = [
            c1alpha_seminorm(power_fn(0.5), (0, 0), a, radii=radii,
                             support=(0.0, (0.0, 0.0)), domain=quartic_domain)
            for a in (0.1, 0.3, 0.5, 0.7)
        ]
        assert all(vals[i] <= vals[i + 1] + 1e-12 for i in range(len(vals) - 1))


class TestSublevel:
    def test_radial_quadratic(self, disk_domain):
        u = lambda pts: np.sum((np.atleast_2d(pts) - 0.1) ** 2, axis=1)
        rep = sublevel_analysis(u, (0.1, 0.1), [0.1 / 2**j for j in range(4)], disk_domain,
                                support=(0.0, (0.0, 0.0)))
        assert rep.has_sections
        assert np.allclose(rep.rows[:, 1], 1.0, atol=1e-6)  # balance
        assert np.allclose(rep.rows[:, 2], 0.25, atol=1e-6)  # decay
        assert rep.sigma == pytest.approx(0.25, abs=1e-6)

    def test_disk_solution_sigma(self, disk_domain):
        u = solve(disk_domain, FieldSpec.constant(1.0), ZERO, resolution=32)
        v0 = float(u.evaluate((0.0, 0.0)))
        rep = sublevel_analysis(u, (0, 0), [0.2 / 2**j for j in range(4)], disk_domain,
                                support=(v0, (0.0, 0.0)))
        assert rep.has_sections
        assert 0.0 < rep.sigma < 0.5
        assert np.all(rep.rows[:, 4] <= 1e-8)  # sections convex

    def test_contact_segment_sentinel(self, disk_domain):
        u = lambda pts: np.abs(np.atleast_2d(pts)[:, 0])
        rep = sublevel_analysis(u, (0.0, 0.2), [0.05], disk_domain,
                                support=(0.0, (0.0, 0.0)))
        assert rep.h0 <= 1e-12
        assert not rep.has_sections

    def test_decay_growth_link(self, disk_domain):
        # sigma = 1/4 at all dyadic scales forces growth exponent
        # alpha = -log2(1/2 - sigma) - 1 = 1
        u = lambda pts: np.sum(np.atleast_2d(pts) ** 2, axis=1)
        rep = sublevel_analysis(u, (0, 0), [0.2 / 2**j for j in range(5)], disk_domain,
                                support=(0.0, (0.0, 0.0)))
        alpha_implied = -math.log2(0.5 - rep.sigma) - 1.0
        fit = holder_fit(u, (0, 0), default_radii(), support=(0.0, (0.0, 0.0)),
                         domain=disk_domain)
        assert fit.alpha >= alpha_implied - 0.05


class TestTangential:
    def test_affine_zero_constant(self, quartic_domain):
        aff = lambda pts: 0.3 * np.atleast_2d(pts)[:, 0] + 0.1 * np.atleast_2d(pts)[:, 1]
        u = homogeneous_solution(quartic_domain, aff, boundary_samples=120)
        rep = tangential_holder_check(u, quartic_domain, (0.0, 0.0), 0.5)
        assert rep.constant == pytest.approx(0.0, abs=1e-9)

    def test_power_case_finite(self, quartic_domain):
        case = case_library(alpha=0.5)[0]
        u = homogeneous_solution(quartic_domain, case.boundary_values, boundary_samples=3000)
        rep = tangential_holder_check(u, quartic_domain, (0.0, 0.0), 0.5)
        assert math.isfinite(rep.constant)
        assert rep.constant <= 1.0
        assert rep.target_exponent == pytest.approx(1.0 / 3.0)

    def test_sqrt_case_tangential_bounded_gradient_not(self):
        # the tangential estimate needs only smooth data, so it survives the
        # counterexample whose full gradient blows up at the flat point
        case = case_library()[2]
        dom = case.domain()
        consts, grads = [], []
        for n in (400, 800):
            u = homogeneous_solution(dom, case.boundary_values, boundary_samples=n)
            consts.append(tangential_holder_check(u, dom, (0.0, 0.0), 0.5).constant)
            grads.append(gradient_sup(u))
        assert max(consts) <= 1.0
        assert grads[1] / grads[0] >= 1.3

    def test_off_boundary_tangent_requires_profile(self, disk_domain):
        u = lambda pts: np.sum(np.atleast_2d(pts) ** 2, axis=1)
        with pytest.raises(ValueError):
            tangential_holder_check(u, disk_domain, (0.0, -1.0), 0.5)


class TestSupportSpread:
    def test_unique_boundary_support_under_refinement(self, quartic_domain):
        # away from the flat point the boundary support plane is unique: the
        # face-gradient spread at a boundary vertex shrinks with refinement
        case = case_library(alpha=0.5)[0]
        z = (0.5, 0.5**4)
        spreads = [
            support_gradient_spread(
                homogeneous_solution(quartic_domain, case.boundary_values,
                                     boundary_samples=n),
                z,
            )
            for n in (500, 2000)
        ]
        assert spreads[1] < spreads[0]
        assert spreads[1] < 0.2
