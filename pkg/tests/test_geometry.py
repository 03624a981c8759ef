import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from malab.geometry import (
    BoundaryProfile,
    Domain2D,
    angle_bound_check,
    curvature,
    graded_offsets,
    profile_comparability,
    tangent_transform,
    transformed_profile,
)


def sympy_curvature(expr, x, at):
    d1 = sympy.diff(expr, x)
    d2 = sympy.diff(expr, x, 2)
    val = (d2 / (1 + d1**2) ** sympy.Rational(3, 2)).subs(x, at)
    return float(val)


class TestProfile:
    def test_quartic_values_and_derivatives(self, quartic_profile):
        x = sympy.Symbol("x")
        expr = x**4
        for pt in (0.0, 0.3, -0.7):
            for order in range(5):
                expected = float(sympy.diff(expr, x, order).subs(x, pt))
                assert quartic_profile.value(pt, order) == pytest.approx(expected, abs=1e-14)

    def test_degeneracy_residuals(self, quartic_profile):
        res = quartic_profile.degeneracy_residuals()
        assert all(v == 0.0 for v in res.values())

    def test_remainder_growth_constant(self):
        # remainder x1^6 against |x1|^(4+2): constant exactly 1
        prof = BoundaryProfile(k=4, beta=2.0, leading_coeff=1.0,
                               remainder=(0, 0, 0, 0, 0, 0, 1.0), half_width=1.0)
        assert prof.remainder_growth_constant() == pytest.approx(1.0)

    def test_window_enforced(self, quartic_profile):
        with pytest.raises(ValueError):
            quartic_profile.value(1.5)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            BoundaryProfile(k=3, beta=1.0, leading_coeff=1.0)
        with pytest.raises(ValueError):
            BoundaryProfile(k=4, beta=0.0, leading_coeff=1.0)
        with pytest.raises(ValueError):
            BoundaryProfile(k=4, beta=1.0, leading_coeff=-1.0)

    def test_record_round_trip(self, quartic_profile):
        rec = quartic_profile.to_record()
        back = BoundaryProfile.from_record(rec)
        assert back == quartic_profile
        prof = BoundaryProfile(k=6, beta=0.5, leading_coeff=2.0,
                               remainder=(0.0, 0.0, 0.125), half_width=0.5)
        assert BoundaryProfile.from_record(prof.to_record()) == prof


class TestCurvature:
    def test_flat_point_exactly_zero(self, quartic_profile):
        assert curvature(quartic_profile, 0.0) == 0.0

    def test_quartic_at_half(self, quartic_profile):
        x = sympy.Symbol("x")
        assert curvature(quartic_profile, 0.5) == pytest.approx(
            sympy_curvature(x**4, x, 0.5), rel=1e-14
        )
        assert curvature(quartic_profile, 0.5) == pytest.approx(3.0 / 1.25**1.5, rel=1e-14)

    def test_unit_parabola(self):
        prof = BoundaryProfile(k=2, beta=1.0, leading_coeff=0.5)
        assert curvature(prof, 0.0) == pytest.approx(1.0)

    def test_out_of_range(self, quartic_profile):
        with pytest.raises(ValueError):
            curvature(quartic_profile, 2.0)


class TestTangentTransform:
    def test_identity_at_flat_point(self, quartic_profile):
        T = tangent_transform(quartic_profile, 0.0)
        pts = np.array([[0.2, 0.5], [-0.1, 0.3]])
        assert np.allclose(T.apply(pts), pts)

    def test_half_point_formula(self, quartic_profile):
        # y1 = x1 - 1/2, y2 = x2 - (1/2)(x1 - 1/2) - 1/16
        T = tangent_transform(quartic_profile, 0.5)
        x = np.array([[0.7, 0.9]])
        y = T.apply(x)[0]
        assert y[0] == pytest.approx(0.2)
        assert y[1] == pytest.approx(0.9 - 0.5 * 0.2 - 1.0 / 16.0)

    @settings(max_examples=60, deadline=None)
    @given(
        z1=st.floats(-0.49, 0.49),
        lead=st.floats(0.2, 3.0),
        k=st.sampled_from([4, 6, 8]),
    )
    def test_unit_determinant_exact(self, z1, lead, k):
        prof = BoundaryProfile(k=k, beta=1.0, leading_coeff=lead, half_width=1.0)
        assert tangent_transform(prof, z1).det == 1.0

    def test_image_in_upper_half_plane(self, quartic_profile):
        T = tangent_transform(quartic_profile, 0.4)
        xs = np.linspace(-1.0, 1.0, 201)
        boundary = np.stack([xs, xs**4], axis=1)
        assert np.all(T.apply(boundary)[:, 1] >= -1e-15)

    def test_inverse_round_trip(self, quartic_profile):
        T = tangent_transform(quartic_profile, 0.3)
        pts = np.array([[0.1, 0.4], [-0.6, 0.8]])
        assert np.allclose(T.inverse().apply(T.apply(pts)), pts, atol=1e-15)


class TestTransformedProfile:
    def test_flat_point_is_identity(self, quartic_profile):
        rt = transformed_profile(quartic_profile, 0.0)
        assert np.allclose(rt.poly.coef, [0, 0, 0, 0, 1])

    def test_half_point_exact_coefficients(self):
        # sympy oracle: expand (y+1/2)^4 - 4 (1/2)^3 y - (1/2)^4
        y, z = sympy.symbols("y z")
        expr = sympy.expand(((y + z) ** 4 - 4 * z**3 * y - z**4).subs(z, sympy.Rational(1, 2)))
        expected = [float(expr.coeff(y, i)) for i in range(5)]
        prof_wide = BoundaryProfile(k=4, beta=2.0, leading_coeff=1.0, half_width=1.5)
        rt = transformed_profile(prof_wide, 0.5)
        assert np.allclose(rt.poly.coef, expected, atol=1e-15)
        assert expected[2:] == [1.5, 2.0, 1.0]

    def test_sandwich_bounds_quartic(self, quartic_profile):
        # 1/4 (z^2 y^2 + y^4) <= rho_t(y) <= 12 (z^2 y^2 + y^4)
        for z1 in (0.1, 0.25, 0.45):
            rt = transformed_profile(quartic_profile, z1)
            ys = np.linspace(-rt.half_width, rt.half_width, 501)
            ys = ys[ys != 0]
            mid = z1**2 * ys**2 + ys**4
            vals = rt.value(ys)
            assert np.all(vals >= 0.25 * mid - 1e-15)
            assert np.all(vals <= 12.0 * mid + 1e-15)

    def test_origin_height_identity(self, quartic_profile):
        # rho_t(-z1) = z1 rho'(z1) - rho(z1) >= 0
        for z1 in (0.1, 0.3, 0.45):
            rt = transformed_profile(quartic_profile, z1)
            expected = z1 * quartic_profile.value(z1, 1) - quartic_profile.value(z1)
            assert rt.value(-z1) == pytest.approx(expected, rel=1e-12)
            assert expected >= 0

    def test_nonnegative_and_convex(self, quartic_profile):
        for z1 in (0.0, 0.2, 0.4):
            rt = transformed_profile(quartic_profile, z1)
            ys = np.linspace(-rt.half_width, rt.half_width, 301)
            assert np.all(rt.value(ys) >= -1e-15)
            assert np.all(rt.value(ys, 2) >= -1e-12)

    def test_window_shrinks_and_guards(self, quartic_profile):
        with pytest.raises(ValueError):
            transformed_profile(quartic_profile, 0.6)
        rt = transformed_profile(quartic_profile, 0.3)
        assert rt.half_width == pytest.approx(0.7)


class TestComparability:
    def test_flat_point_ratios(self, quartic_profile):
        rep = profile_comparability(quartic_profile, 0.0, 64)
        assert rep.kappa == 0.0
        assert rep.value_ratio == pytest.approx((1.0, 1.0), rel=1e-9)
        assert rep.excess_ratio == pytest.approx((3.0, 3.0), rel=1e-9)

    def test_dense_sampling_bounded(self, quartic_profile):
        rep = profile_comparability(quartic_profile, 0.3, 1000)
        assert rep.all_positive
        assert math.isfinite(rep.bound)

    def test_minimum_sample_count(self, quartic_profile):
        with pytest.raises(ValueError):
            profile_comparability(quartic_profile, 0.1, 8)

    @pytest.mark.parametrize("k", [4, 6])
    def test_bound_uniform_over_z1_sweep(self, k):
        prof = BoundaryProfile(k=k, beta=1.0, leading_coeff=1.0, half_width=1.0)
        bounds = []
        for z1 in np.linspace(0.0, 0.45, 9):
            rep = profile_comparability(prof, float(z1), 512)
            assert rep.all_positive
            bounds.append(rep.bound)
        worst = max(bounds)
        assert math.isfinite(worst)


class TestAngleBound:
    def test_quartic_flat_point_branch_bound(self, quartic_profile):
        # ratio >= 1/144 on the branch p2 > y2
        rep = angle_bound_check(quartic_profile, 0.0, np.geomspace(1e-6, 1e-2, 8))
        assert rep.min_ratio_above() >= 1.0 / 144.0
        assert rep.min_ratio > 0

    def test_axis_points_excluded(self, quartic_profile):
        rep = angle_bound_check(quartic_profile, 0.0, [1e-4])
        assert np.all(rep.samples[:, 1] != 0.0)

    def test_k6_fitted_constant_positive(self):
        prof = BoundaryProfile(k=6, beta=1.0, leading_coeff=1.0, half_width=1.0)
        rep = angle_bound_check(prof, 0.0, np.geomspace(1e-6, 1e-2, 10))
        assert rep.fit_const > 0
        assert rep.fit_slope == pytest.approx((6 - 1) / 6, abs=0.1)

    @pytest.mark.parametrize("k", [4, 6])
    def test_positive_across_sweep(self, k):
        prof = BoundaryProfile(k=k, beta=1.0, leading_coeff=1.0, half_width=1.0)
        worst = math.inf
        arg = None
        for z1 in (0.0, 0.05, 0.15, 0.25):
            rep = angle_bound_check(prof, z1, np.geomspace(1e-6, 1e-3, 6))
            if rep.min_ratio < worst:
                worst, arg = rep.min_ratio, (z1, rep.argmin)
        assert worst > 0, f"argmin at {arg}"

    def test_height_guard(self, quartic_profile):
        with pytest.raises(ValueError):
            angle_bound_check(quartic_profile, 0.0, [0.9])


class TestDomain:
    def test_strip_membership(self, quartic_domain):
        inside = np.array([[0.0, 0.5], [0.5, 0.2], [0.9, 0.99]])
        outside = np.array([[0.5, 0.01], [1.2, 0.5], [0.0, 1.2]])
        assert np.all(quartic_domain.contains(inside))
        assert not np.any(quartic_domain.contains(outside))

    def test_boundary_polyline_convex(self, quartic_domain):
        from scipy.spatial import ConvexHull

        pts = quartic_domain.boundary_polyline(256)
        hull = ConvexHull(pts)
        # every sampled boundary vertex lies on the hull of the sample set
        dists = []
        for eq in hull.equations:
            dists.append(pts @ eq[:2] + eq[2])
        assert np.max(np.min(np.abs(np.stack(dists)), axis=0)) < 1e-9

    def test_lower_profile_on_boundary(self, quartic_domain):
        pts, mask = quartic_domain.boundary_points(400)
        lower = pts[mask]
        assert np.allclose(lower[:, 1], lower[:, 0] ** 4, atol=1e-15)

    def test_graded_offsets_shape(self):
        offs = graded_offsets(200, 1.0, ratio=1.2)
        assert offs[0] > 0 and offs[-1] == pytest.approx(1.0)
        assert np.all(np.diff(offs) > 0)

    def test_exit_distance_disk(self, disk_domain):
        d = disk_domain.exit_distance((0.0, 0.0), (1.0, 0.0))
        assert d == pytest.approx(1.0, abs=1e-9)
