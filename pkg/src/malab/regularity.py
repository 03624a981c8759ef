"""Measurement apparatus: gradient bounds, Holder exponent fits, pointwise
C^(1,alpha) seminorms, sub-level-set balance/decay analysis and tangential
derivative checks.

Exponents come from least-squares fits on log-log axes over geometric radii;
fits with R^2 below 0.98 are flagged inconclusive rather than reported as
exponents.  Sphere suprema use a direction fan (128 rays by default) clipped
to the closed domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .envelope import PiecewiseAffineConvexFunction
from .geometry import Domain2D
from .solver import ScalarField2D

__all__ = [
    "ExponentFit",
    "FieldFunction",
    "SublevelReport",
    "TangentialReport",
    "c1alpha_seminorm",
    "gradient_sup",
    "holder_fit",
    "sublevel_analysis",
    "support_gradient_spread",
    "tangential_holder_check",
]

INCONCLUSIVE_R2 = 0.98


@dataclass(frozen=True)
class FieldFunction:
    """Uniform adapter around hull functions, grid fields and raw callables."""

    value: Callable
    grad: Optional[Callable] = None

    @classmethod
    def wrap(cls, u, grad: Callable = None) -> "FieldFunction":
        if isinstance(u, FieldFunction):
            return u
        if isinstance(u, PiecewiseAffineConvexFunction):
            return cls(value=u.evaluate, grad=u.gradient)
        if isinstance(u, ScalarField2D):
            return cls(value=u.evaluate, grad=grad)
        return cls(value=u, grad=grad)


def _support_plane(u, x0, support, domain: Domain2D = None, probe: float = None):
    """(value_at_x0, gradient) of the affine minorant used as base plane.

    At boundary points of a sampled hull the support plane is not unique
    (any slightly tilted minorant of the data passes through), so the plane
    is taken as the one-sided limit along the inner direction: the face
    active just inside the domain.
    """
    if support is not None:
        v0, g = support
        return float(v0), np.asarray(g, dtype=float)
    if isinstance(u, PiecewiseAffineConvexFunction):
        x0 = np.asarray(x0, dtype=float)
        point = x0
        if domain is not None and probe is not None:
            dirs = _fan(64)
            keep = domain.contains(x0 + probe * dirs)
            if np.any(keep) and not np.all(keep):
                inward = dirs[keep].mean(axis=0)
                norm = np.linalg.norm(inward)
                if norm > 0:
                    point = x0 + (1e-3 * probe / norm) * inward
        p = u.planes[u.active_face(point)]
        return float(p[:2] @ x0 + p[2]), p[:2].copy()
    raise ValueError("pass support=(value, gradient) for non-hull fields")


def _fan(n: int) -> np.ndarray:
    # includes the axes when 4 | n, so flat directions and vertical suprema
    # are sampled exactly
    ang = 2.0 * math.pi * np.arange(n) / n
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def gradient_sup(u, grad: Callable = None) -> float:
    """Largest gradient magnitude: face gradients for hull functions,
    central differences for grid fields."""
    if isinstance(u, PiecewiseAffineConvexFunction):
        return float(np.max(np.linalg.norm(u.face_gradients(), axis=1)))
    if isinstance(u, ScalarField2D):
        _, g = u.gradient_nodes()
        return float(np.max(np.linalg.norm(g, axis=1)))
    raise TypeError("gradient_sup needs a hull function or a grid field")


@dataclass(frozen=True)
class ExponentFit:
    x0: tuple
    radii: np.ndarray
    measurements: np.ndarray
    alpha: float
    constant: float
    r2: float
    mode: str
    flag: str = "ok"

    @property
    def conclusive(self) -> bool:
        return self.flag == "ok" and self.r2 >= INCONCLUSIVE_R2


def _loglog_fit(radii, vals):
    lx, ly = np.log(radii), np.log(vals)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(math.exp(intercept)), r2


def default_radii(diameter: float = 1.0, decades=(1e-4, 1e-1), ratio: float = 2.0):
    lo, hi = decades[0] * diameter, decades[1] * diameter
    n = int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1
    return hi * ratio ** -np.arange(n, dtype=float)


def holder_fit(
    u,
    x0,
    radii: Sequence[float],
    mode: str = "value",
    direction=None,
    support=None,
    domain: Domain2D = None,
    grad: Callable = None,
    fan: int = 128,
) -> ExponentFit:
    """Fit the growth exponent at x0.

    value mode fits sup over the r-sphere (clipped to the domain) of
    u - support plane against C r**(1+alpha); gradient mode fits
    |Du(x0 + r d) - Du(x0)| against C r**alpha along the given direction.
    Nonpositive suprema flag the fit as degenerate with an infinite exponent
    sentinel.
    """
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if len(radii) < 4 or radii[0] / radii[-1] < 99:
        raise ValueError("need >= 4 radii spanning at least two decades")
    ff = FieldFunction.wrap(u, grad=grad)
    x0 = np.asarray(x0, dtype=float)
    if mode == "value":
        v0, g0 = _support_plane(u, x0, support, domain=domain, probe=float(radii[-1]))
        dirs = _fan(fan)
        sups = np.empty(len(radii))
        for i, r in enumerate(radii):
            pts = x0 + r * dirs
            keep = domain.contains(pts, slack=1e-12) if domain is not None else np.ones(len(pts), bool)
            if not np.any(keep):
                sups[i] = -np.inf
                continue
            vals = np.asarray(ff.value(pts[keep]), dtype=float)
            plane = v0 + (pts[keep] - x0) @ g0
            sups[i] = float(np.max(vals - plane))
        good = sups > 0
        if not np.all(good):
            return ExponentFit(tuple(x0), radii, sups, math.inf, 0.0, 0.0, mode, flag="degenerate")
        slope, const, r2 = _loglog_fit(radii, sups)
        alpha = slope - 1.0
    elif mode == "gradient":
        if direction is None:
            raise ValueError("gradient mode needs a direction")
        if ff.grad is None:
            raise ValueError("gradient mode needs gradient access")
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        g0 = np.asarray(ff.grad(np.asarray([x0]))).reshape(-1, 2)[0]
        pts = x0 + radii[:, None] * d
        g = np.asarray(ff.grad(pts)).reshape(-1, 2)
        sups = np.linalg.norm(g - g0, axis=1)
        if np.any(sups <= 0):
            return ExponentFit(tuple(x0), radii, sups, math.inf, 0.0, 0.0, mode, flag="degenerate")
        slope, const, r2 = _loglog_fit(radii, sups)
        alpha = slope
    else:
        raise ValueError("mode must be 'value' or 'gradient'")
    flag = "ok" if r2 >= INCONCLUSIVE_R2 else "inconclusive"
    return ExponentFit(tuple(x0), radii, sups, float(alpha), const, r2, mode, flag=flag)


def c1alpha_seminorm(
    u, x0, alpha: float, radii=None, support=None, domain: Domain2D = None, fan: int = 128
) -> float:
    """max over fan samples of (u - support plane) / |x - x0|**(1+alpha)."""
    ff = FieldFunction.wrap(u)
    x0 = np.asarray(x0, dtype=float)
    if radii is None:
        radii = default_radii()
    radii = np.asarray(radii, dtype=float)
    v0, g0 = _support_plane(u, x0, support, domain=domain, probe=float(np.min(radii)))
    dirs = _fan(fan)
    best = 0.0
    for r in radii:
        pts = x0 + r * dirs
        keep = domain.contains(pts, slack=1e-12) if domain is not None else np.ones(len(pts), bool)
        if not np.any(keep):
            continue
        vals = np.asarray(ff.value(pts[keep]), dtype=float)
        plane = v0 + (pts[keep] - x0) @ g0
        best = max(best, float(np.max((vals - plane) / r ** (1.0 + alpha))))
    return best


@dataclass(frozen=True)
class SublevelReport:
    """Per-height section measurements around a strictly convex point.

    rows: (h, balance_min, decay_max, sigma_h, convexity_defect)
    sigma: a single constant in (0, 1/2) serving every reported height.
    """

    x0: tuple
    h0: float
    rows: np.ndarray
    sigma: float

    @property
    def has_sections(self) -> bool:
        return self.rows.size > 0


def sublevel_analysis(
    u,
    x0,
    hs: Sequence[float],
    domain: Domain2D,
    support=None,
    fan: int = 32,
    grad: Callable = None,
) -> SublevelReport:
    """Measure chord balance and midpoint decay of the sections
    S_h = {u < support plane + h}.

    Heights whose section escapes the domain are excluded; h0 is the largest
    usable height.  If the function is flat in some direction at x0 the
    report carries h0 = 0 and no sections.
    """
    ff = FieldFunction.wrap(u, grad=grad)
    x0 = np.asarray(x0, dtype=float)
    v0, g0 = _support_plane(u, x0, support)

    def excess(pts):
        pts = np.atleast_2d(pts)
        return np.asarray(ff.value(pts), dtype=float) - (v0 + (pts - x0) @ g0)

    def excess1(pt):
        return float(excess(pt)[0])

    dirs = _fan(fan)
    exits = []
    edge_vals = []
    for d in dirs:
        t = 0.995 * domain.exit_distance(x0, d)
        val = None
        for _ in range(40):
            try:
                val = excess1(x0 + t * d)
                break
            except ValueError:
                t *= 0.95  # grid fields cannot be evaluated hard against the boundary
        if val is None:
            raise ValueError("no evaluable probe along a section direction")
        exits.append(t)
        edge_vals.append(val)
    exits = np.asarray(exits)
    h0 = float(np.min(edge_vals))
    if h0 <= 0:
        return SublevelReport(tuple(x0), 0.0, np.zeros((0, 5)), math.nan)

    def chord(h, d, tmax):
        lo, hi = 0.0, tmax
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if excess1(x0 + mid * d) < h:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    rows = []
    half = len(dirs) // 2
    for h in hs:
        if h > h0:
            continue
        t_pos = np.array([chord(h, dirs[i], exits[i]) for i in range(len(dirs))])
        balance = np.inf
        decay = -np.inf
        defect = 0.0
        for i in range(half):
            tp, tm = t_pos[i], t_pos[i + half]
            ratio = tp / tm if tm > 0 else np.inf
            balance = min(balance, ratio, 1.0 / ratio if ratio > 0 else np.inf)
            for t, d in ((tp, dirs[i]), (tm, dirs[i + half])):
                z = x0 + t * d
                vz = excess1(z)
                vmid = excess1(x0 + 0.5 * t * d)
                if vz > 0:
                    decay = max(decay, vmid / vz)
            # section convexity spot check: midpoints of chords stay inside
            zmid = 0.5 * ((x0 + tp * dirs[i]) + (x0 + tm * dirs[i + half]))
            defect = max(defect, excess1(zmid) - h)
        sigma_h = min(balance, 0.5 - decay)
        rows.append((h, balance, decay, sigma_h, defect))
    rows = np.asarray(rows, dtype=float).reshape(-1, 5)
    sigma = float(rows[:, 3].min()) if len(rows) else math.nan
    if len(rows):
        sigma = min(max(sigma, 0.0), 0.5 - 1e-12)
    return SublevelReport(tuple(x0), h0, rows, sigma)


@dataclass(frozen=True)
class TangentialReport:
    z: tuple
    tangent: tuple
    alpha: float
    target_exponent: float
    constant: float
    fitted_exponent: float
    r2: float
    flag: str = "ok"


def tangential_holder_check(
    u,
    domain: Domain2D,
    z,
    alpha: float,
    samples: int = 24,
    tangent=None,
    grad: Callable = None,
) -> TangentialReport:
    """Fit C in |u_tau(x) - u_tau(z)| <= C |x - z|**(alpha/(1+alpha)) with tau
    the boundary tangent at z, over boundary-proximal interior samples, and
    fit the observed exponent for comparison."""
    ff = FieldFunction.wrap(u, grad=grad)
    if ff.grad is None:
        raise ValueError("tangential check needs gradient access")
    z = np.asarray(z, dtype=float)
    if tangent is None:
        if domain.lower_profile is None:
            raise ValueError("pass tangent= for non-strip domains")
        s = domain.lower_profile.value(z[0], 1)
        tangent = np.array([1.0, s]) / math.hypot(1.0, s)
    tau = np.asarray(tangent, dtype=float)
    tau = tau / np.linalg.norm(tau)
    normal = np.array([-tau[1], tau[0]])
    if not domain.contains(z + 1e-6 * domain.diameter * normal):
        normal = -normal
    target = alpha / (1.0 + alpha)
    g_z = np.asarray(ff.grad(np.asarray([z + 1e-9 * domain.diameter * normal]))).reshape(-1, 2)[0]
    u_tau_z = float(g_z @ tau)
    radii = np.geomspace(1e-4, 1e-1, samples) * domain.diameter
    offsets = [normal, (normal + 0.5 * tau) / np.linalg.norm(normal + 0.5 * tau),
               (normal - 0.5 * tau) / np.linalg.norm(normal - 0.5 * tau)]
    pts, dists = [], []
    for r in radii:
        for d in offsets:
            p = z + r * d
            if domain.contains(p):
                pts.append(p)
                dists.append(r)
    pts = np.asarray(pts)
    dists = np.asarray(dists)
    g = np.asarray(ff.grad(pts)).reshape(-1, 2)
    diffs = np.abs(g @ tau - u_tau_z)
    const = float(np.max(diffs / dists**target))
    pos = diffs > 0
    if np.count_nonzero(pos) >= 4:
        slope, _, r2 = _loglog_fit(dists[pos], diffs[pos])
        flag = "ok"
    else:
        slope, r2, flag = math.inf, 0.0, "degenerate"
    return TangentialReport(
        z=tuple(z),
        tangent=tuple(tau),
        alpha=alpha,
        target_exponent=target,
        constant=const,
        fitted_exponent=float(slope),
        r2=r2,
        flag=flag,
    )


def support_gradient_spread(u: PiecewiseAffineConvexFunction, point) -> float:
    """Diameter of the face-gradient set at the hull vertex nearest the
    point; shrinks under refinement where the support plane is unique."""
    pts = u.vertex_points()
    idx = int(np.argmin(np.linalg.norm(pts - np.asarray(point, dtype=float), axis=1)))
    planes = u.faces_at_vertex(int(u.hull_vertices[idx]))
    if len(planes) <= 1:
        return 0.0
    g = planes[:, :2]
    return float(np.max(np.linalg.norm(g[:, None, :] - g[None, :, :], axis=2)))
