"""Planar convex domains with a flat boundary point.

A lower boundary is the graph x2 = rho(x1) of a convex function that vanishes
to even order k at x1 = 0.  The central tool is the unimodular shear that maps
a boundary point and its tangent line to the origin and the horizontal axis;
in the sheared frame the boundary graph is comparable to
kappa * y1**2 + y1**k, and the angle between boundary tangents and rays from
points on the vertical axis admits a power-law lower bound.  Those two facts
are exposed here as sample-based reports rather than proved constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "AffineMap2D",
    "AngleReport",
    "BoundaryProfile",
    "ComparabilityReport",
    "Domain2D",
    "angle_bound_check",
    "curvature",
    "graded_offsets",
    "profile_comparability",
    "tangent_transform",
    "transformed_profile",
]

_WINDOW_SLACK = 1e-12


@dataclass(frozen=True)
class BoundaryProfile:
    """Boundary graph rho(x1) = leading_coeff * x1**k + remainder(x1).

    ``remainder`` holds polynomial coefficients (constant term first); the
    profile is only trusted on [-half_width, half_width].  ``k`` is the even
    contact order at the flat point and ``beta`` the extra Holder order of the
    remainder, so a well-formed flat-point profile has remainder =
    O(|x1|**(k+beta)).  Sheared profiles produced by :func:`transformed_profile`
    reuse this container with low-order remainder terms.
    """

    k: int
    beta: float
    leading_coeff: float
    remainder: tuple = ()
    half_width: float = 1.0

    def __post_init__(self):
        if self.k < 2 or self.k % 2 != 0:
            raise ValueError(f"degeneracy order k must be even and >= 2, got {self.k}")
        if not (0.0 < self.beta <= self.k):
            raise ValueError(f"holder order beta must lie in (0, k], got {self.beta}")
        if self.leading_coeff <= 0.0:
            raise ValueError("leading_coeff must be positive")
        if self.half_width <= 0.0:
            raise ValueError("half_width must be positive")
        object.__setattr__(self, "remainder", tuple(float(c) for c in self.remainder))

    @cached_property
    def poly(self) -> Polynomial:
        coeffs = np.zeros(max(self.k + 1, len(self.remainder)))
        coeffs[: len(self.remainder)] += self.remainder
        coeffs[self.k] += self.leading_coeff
        return Polynomial(coeffs)

    @cached_property
    def _derivs(self) -> dict:
        return {}

    def _deriv_poly(self, order: int) -> Polynomial:
        cache = self._derivs
        if order not in cache:
            cache[order] = self.poly.deriv(order) if order else self.poly
        return cache[order]

    def value(self, x1, order: int = 0):
        """Evaluate rho or its derivative of the given order inside the window."""
        x = np.asarray(x1, dtype=float)
        if np.any(np.abs(x) > self.half_width * (1 + _WINDOW_SLACK)):
            raise ValueError(
                f"query outside validity window [-{self.half_width}, {self.half_width}]"
            )
        out = self._deriv_poly(order)(x)
        return float(out) if np.isscalar(x1) else out

    def __call__(self, x1):
        return self.value(x1)

    def degeneracy_residuals(self) -> dict:
        """|rho^(i)(0)| for i = 0, 1 and 2..k-1; zero for a k-flat profile."""
        res = {i: abs(self._deriv_poly(i)(0.0)) for i in (0, 1)}
        for i in range(2, self.k):
            res[i] = abs(self._deriv_poly(i)(0.0))
        return res

    def remainder_growth_constant(self, samples: int = 256) -> float:
        """max |remainder(x)| / |x|**(k+beta) over a window sample set."""
        if not any(self.remainder):
            return 0.0
        rem = Polynomial(np.asarray(self.remainder, dtype=float))
        x = np.geomspace(1e-8 * self.half_width, self.half_width, samples)
        x = np.concatenate([-x[::-1], x])
        return float(np.max(np.abs(rem(x)) / np.abs(x) ** (self.k + self.beta)))

    def to_record(self) -> str:
        parts = [f"{self.k}", repr(self.beta), repr(self.leading_coeff), repr(self.half_width)]
        parts += [repr(c) for c in self.remainder]
        return ",".join(parts)

    @classmethod
    def from_record(cls, record: str) -> "BoundaryProfile":
        items = [s.strip() for s in record.split(",") if s.strip()]
        if len(items) < 4:
            raise ValueError("profile record needs k,beta,leading_coeff,half_width[,coeffs...]")
        return cls(
            k=int(items[0]),
            beta=float(items[1]),
            leading_coeff=float(items[2]),
            half_width=float(items[3]),
            remainder=tuple(float(c) for c in items[4:]),
        )


@dataclass(frozen=True, eq=False)
class AffineMap2D:
    """y = linear @ x + offset."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(2, 2))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).reshape(2))

    @property
    def det(self) -> float:
        a = self.linear
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])

    def apply(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.offset

    __call__ = apply

    def inverse(self) -> "AffineMap2D":
        inv = np.linalg.inv(self.linear)
        return AffineMap2D(inv, -inv @ self.offset)


def curvature(profile: BoundaryProfile, x1: float) -> float:
    """Curvature rho''/(1 + rho'**2)**1.5 of the boundary graph at x1.

    Exactly zero at the flat point; no epsilon flooring.
    """
    if abs(x1) > profile.half_width * (1 + _WINDOW_SLACK):
        raise ValueError("x1 outside the profile validity window")
    d1 = profile.value(x1, 1)
    d2 = profile.value(x1, 2)
    return d2 / (1.0 + d1 * d1) ** 1.5


def tangent_transform(profile: BoundaryProfile, z1: float) -> AffineMap2D:
    """Unimodular shear sending (z1, rho(z1)) to the origin and the tangent
    line there to {y2 = 0}:  y1 = x1 - z1,  y2 = x2 - l_z(x1)."""
    if abs(z1) >= profile.half_width:
        raise ValueError("z1 outside the open validity window")
    slope = profile.value(z1, 1)
    rho_z = profile.value(z1)
    linear = np.array([[1.0, 0.0], [-slope, 1.0]])
    offset = np.array([-z1, z1 * slope - rho_z])
    return AffineMap2D(linear, offset)


def transformed_profile(profile: BoundaryProfile, z1: float) -> BoundaryProfile:
    """Boundary graph in the sheared frame of :func:`tangent_transform`.

    rho_t(y1) = rho(z1 + y1) - rho(z1) - rho'(z1) * y1, expanded exactly on
    the polynomial coefficients.  Valid on the shrunken window
    [-(half_width - |z1|), half_width - |z1|].
    """
    if abs(z1) >= profile.half_width / 2:
        raise ValueError("z1 must satisfy |z1| < half_width/2")
    shifted = profile.poly(Polynomial([z1, 1.0]))
    tilted = shifted - Polynomial([profile.value(z1), profile.value(z1, 1)])
    coeffs = np.zeros(profile.k + 1)
    raw = tilted.coef
    coeffs[: len(raw)] = raw
    # the degree-k coefficient is untouched by the shear
    coeffs[profile.k] -= profile.leading_coeff
    # kill roundoff dust in the constant/linear slots, they vanish identically
    coeffs[0] = 0.0
    coeffs[1] = 0.0
    return BoundaryProfile(
        k=profile.k,
        beta=profile.beta,
        leading_coeff=profile.leading_coeff,
        remainder=tuple(coeffs),
        half_width=profile.half_width - abs(z1),
    )


@dataclass(frozen=True)
class ComparabilityReport:
    """Sampled extremes of rho_t / (kappa y**2 + y**k) and its two relatives."""

    z1: float
    kappa: float
    value_ratio: tuple
    slope_ratio: tuple
    excess_ratio: tuple
    sample_count: int

    @property
    def bound(self) -> float:
        """Smallest C with all three ratios inside [1/C, C]."""
        c = 0.0
        for lo, hi in (self.value_ratio, self.slope_ratio, self.excess_ratio):
            c = max(c, hi, 1.0 / lo if lo > 0 else math.inf)
        return c

    @property
    def all_positive(self) -> bool:
        return all(
            lo > 0 and math.isfinite(hi)
            for lo, hi in (self.value_ratio, self.slope_ratio, self.excess_ratio)
        )


def profile_comparability(
    profile: BoundaryProfile, z1: float, sample_count: int = 1024
) -> ComparabilityReport:
    """Sample, in the sheared frame, the three ratios

        rho_t / d,   y * rho_t' / d,   (y * rho_t' - rho_t) / d,

    against d = kappa * y**2 + y**k with kappa the curvature at the base
    point.  Extremes over the sample set are reported, not certified.
    """
    if sample_count < 16:
        raise ValueError("sample_count must be at least 16")
    rt = transformed_profile(profile, z1)
    kappa = curvature(profile, z1)
    w = 0.98 * rt.half_width
    mags = np.geomspace(1e-8 * w, w, sample_count // 2)
    ys = np.concatenate([-mags[::-1], mags])
    denom = kappa * ys**2 + ys**rt.k
    val = rt.value(ys)
    slope = ys * rt.value(ys, 1)
    ratios = (val / denom, slope / denom, (slope - val) / denom)
    extremes = tuple((float(np.min(r)), float(np.max(r))) for r in ratios)
    return ComparabilityReport(
        z1=z1,
        kappa=kappa,
        value_ratio=extremes[0],
        slope_ratio=extremes[1],
        excess_ratio=extremes[2],
        sample_count=len(ys),
    )


@dataclass(frozen=True)
class AngleReport:
    """Angles between boundary tangents and rays from axis points (0, y2).

    Each sample row is (y2, p1, p2, theta, ratio, above) with
    ratio = theta / y2**((k-1)/k) and ``above`` flagging the branch p2 > y2.
    """

    k: int
    z1: float
    samples: np.ndarray
    min_ratio: float
    argmin: tuple
    fit_slope: float
    fit_const: float

    @property
    def empty(self) -> bool:
        return self.samples.size == 0

    def min_ratio_above(self) -> float:
        """Min ratio restricted to the branch p2 > y2 (nan if no such sample)."""
        if self.empty:
            return math.nan
        rows = self.samples[self.samples[:, 5] > 0.5]
        return float(rows[:, 4].min()) if len(rows) else math.nan


def _bisect_root(fn: Callable[[float], float], lo: float, hi: float, iters: int = 80) -> float:
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (fn(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def angle_bound_check(
    profile: BoundaryProfile,
    z1: float,
    heights: Sequence[float],
    samples_per_height: int = 48,
) -> AngleReport:
    """For axis points y = (0, y2) and boundary points p with 0 < p2 <= 2*y2
    on either branch (p1 != 0), measure the acute angle theta between the
    boundary tangent at p and the ray direction p - y, and report the minimum
    of theta / y2**((k-1)/k) together with a log-log fit of the per-height
    minima against y2.
    """
    rt = transformed_profile(profile, z1)
    w = 0.98 * rt.half_width
    reach = min(rt.value(-w), rt.value(w))
    heights = np.asarray(list(heights), dtype=float)
    if np.any(heights <= 0):
        raise ValueError("heights must be positive")
    if np.any(heights > reach / 2):
        raise ValueError("heights too large for the profile validity window")
    expo = (rt.k - 1) / rt.k
    rows = []
    per_height_min = []
    for y2 in heights:
        cap = min(2.0 * y2, reach)
        best = math.inf
        for side in (+1.0, -1.0):
            t_hi = side * _bisect_root(lambda t: rt.value(t) - cap, 0.0, side * w)
            t_vals = side * np.geomspace(1e-4 * abs(t_hi), abs(t_hi), samples_per_height)
            p2 = rt.value(t_vals)
            keep = (p2 > 0) & (p2 <= cap * (1 + 1e-9))
            t_vals, p2 = t_vals[keep], p2[keep]
            slopes = rt.value(t_vals, 1)
            tangents = np.stack([np.ones_like(t_vals), slopes], axis=1)
            tangents /= np.linalg.norm(tangents, axis=1, keepdims=True)
            rays = np.stack([t_vals, p2 - y2], axis=1)
            rays /= np.linalg.norm(rays, axis=1, keepdims=True)
            cosang = np.clip(np.abs(np.sum(tangents * rays, axis=1)), 0.0, 1.0)
            theta = np.arccos(cosang)
            ratio = theta / y2**expo
            above = (p2 > y2).astype(float)
            for j in range(len(t_vals)):
                rows.append((y2, t_vals[j], p2[j], theta[j], ratio[j], above[j]))
            if len(ratio):
                best = min(best, float(ratio.min()))
        per_height_min.append(best)
    samples = np.asarray(rows, dtype=float).reshape(-1, 6)
    if samples.size == 0:
        return AngleReport(rt.k, z1, samples, math.nan, (), math.nan, math.nan)
    i = int(np.argmin(samples[:, 4]))
    min_ratio = float(samples[i, 4])
    argmin = (float(samples[i, 0]), float(samples[i, 1]), float(samples[i, 2]))
    # per-height minimum of theta should scale like const * y2**expo
    if len(heights) >= 2:
        logh = np.log(heights)
        logt = np.log(np.asarray(per_height_min) * heights**expo)
        slope, intercept = np.polyfit(logh, logt, 1)
    else:
        slope, intercept = math.nan, math.log(min_ratio)
    return AngleReport(
        k=rt.k,
        z1=z1,
        samples=samples,
        min_ratio=min_ratio,
        argmin=argmin,
        fit_slope=float(slope),
        fit_const=float(math.exp(intercept)),
    )


def graded_offsets(n: int, r0: float, ratio: float = 1.2, depth: float = 1e-6) -> np.ndarray:
    """n positive offsets in (0, r0] accumulating geometrically toward 0.

    Band edges fall at r0 * ratio**-j; the band count grows like sqrt(n) but
    is capped so offsets never drop below depth * r0, keeping hull input
    spacing well above floating-point merge tolerances.
    """
    if n < 2:
        return np.array([r0])
    max_bands = int(math.floor(math.log(1.0 / depth) / math.log(ratio)))
    m = max(2, min(int(round(math.sqrt(n))), max_bands))
    edges = r0 * ratio ** -np.arange(m + 1, dtype=float)
    per_band = np.full(m, n // m)
    per_band[: n % m] += 1
    chunks = []
    for j in range(m):
        hi, lo = edges[j], edges[j + 1]
        cnt = int(per_band[j])
        if cnt > 0:
            chunks.append(np.linspace(lo, hi, cnt, endpoint=True))
    out = np.unique(np.concatenate(chunks))
    return out


class Domain2D:
    """Bounded convex planar region with membership and boundary sampling.

    Two constructions are supported: a strip domain bounded below by a
    :class:`BoundaryProfile` graph, laterally by the window edges and above
    by a flat cap, and a disk (used by solver reference tests).
    """

    def __init__(self, kind, lower_profile=None, height=1.0, center=(0.0, 0.0), radius=1.0):
        if kind not in ("strip", "disk"):
            raise ValueError(f"unknown domain kind {kind!r}")
        self.kind = kind
        self.lower_profile = lower_profile
        self.height = float(height)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if kind == "strip":
            if lower_profile is None:
                raise ValueError("strip domain needs a lower profile")
            w = lower_profile.half_width
            if min(lower_profile.value(w), lower_profile.value(-w)) > height:
                raise ValueError("cap height lies below the profile edge heights")

    @classmethod
    def from_profile(cls, profile: BoundaryProfile, height: float = 1.0) -> "Domain2D":
        return cls("strip", lower_profile=profile, height=height)

    @classmethod
    def disk(cls, radius: float = 1.0, center=(0.0, 0.0)) -> "Domain2D":
        return cls("disk", center=center, radius=radius)

    @property
    def bbox(self):
        if self.kind == "strip":
            w = self.lower_profile.half_width
            return (-w, w, 0.0, self.height)
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r)

    @property
    def diameter(self) -> float:
        x0, x1, y0, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    def contains(self, points, slack: float = 0.0):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "strip":
            prof = self.lower_profile
            w = prof.half_width
            inside_x = np.abs(pts[:, 0]) <= w + slack
            rho = np.where(inside_x, prof.poly(np.clip(pts[:, 0], -w, w)), np.inf)
            ok = inside_x & (pts[:, 1] >= rho - slack) & (pts[:, 1] <= self.height + slack)
        else:
            ok = np.linalg.norm(pts - self.center, axis=1) <= self.radius + slack
        return ok if np.asarray(points).ndim > 1 else bool(ok[0])

    def boundary_points(self, n: int, grading: float = 1.2):
        """Sample the boundary; strip domains grade the lower profile toward
        the flat point.  Returns (points, on_lower_profile mask)."""
        if n < 8:
            raise ValueError("need at least 8 boundary samples")
        if self.kind == "disk":
            ang = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
            pts = self.center + self.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            return pts, np.zeros(n, dtype=bool)
        prof = self.lower_profile
        w = prof.half_width
        hl = prof.value(-w)
        hr = prof.value(w)
        side_len = (self.height - hl) + (self.height - hr)
        n_side = max(2, n // 10) if side_len > 1e-12 else 0
        n_cap = max(2, n // 10)
        n_prof = max(4, n - 2 * n_side - n_cap)
        offs = graded_offsets(n_prof // 2, w, ratio=grading)
        xs = np.concatenate([-offs[::-1], [0.0], offs])
        lower = np.stack([xs, prof.poly(xs)], axis=1)
        pieces = [lower]
        if n_side:
            pieces.append(
                np.stack(
                    [np.full(n_side - 1, w), np.linspace(hr, self.height, n_side, endpoint=False)[1:]],
                    axis=1,
                )
            )
        pieces.append(
            np.stack(
                [np.linspace(w, -w, n_cap, endpoint=False), np.full(n_cap, self.height)], axis=1
            )
        )
        if n_side:
            pieces.append(
                np.stack(
                    [np.full(n_side - 1, -w), np.linspace(self.height, hl, n_side, endpoint=False)[1:]],
                    axis=1,
                )
            )
        pts = np.concatenate(pieces)
        mask = np.zeros(len(pts), dtype=bool)
        mask[: len(lower)] = True
        return pts, mask

    def boundary_polyline(self, n: int = 256) -> np.ndarray:
        """Counterclockwise boundary vertices (closed implicitly)."""
        pts, _ = self.boundary_points(n)
        if self.kind == "disk":
            return pts
        return pts  # strip sampling is already ccw: lower left-to-right, right side up, cap, left side down

    def boundary_crossing(self, inside, outside, iters: int = 60) -> np.ndarray:
        """Bisect along the segment from an inside point to an outside point;
        returns the last iterate verified inside, so closed-domain callables
        can be evaluated on the result."""
        a = np.asarray(inside, dtype=float)
        b = np.asarray(outside, dtype=float)
        for _ in range(iters):
            mid = 0.5 * (a + b)
            if self.contains(mid):
                a = mid
            else:
                b = mid
        return a

    def exit_distance(self, point, direction, cap: float = None) -> float:
        """Distance from an interior point to the boundary along a direction."""
        p = np.asarray(point, dtype=float)
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        hi = cap if cap is not None else self.diameter
        if self.contains(p + hi * d):
            return hi
        lo = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.contains(p + mid * d):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
