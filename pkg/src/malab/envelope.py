"""Convex envelopes and homogeneous solutions as lower convex hulls.

Lifting sample points (x, g(x)) to 3-space and keeping the downward-facing
hull faces yields the largest convex function below the samples; when only
boundary samples are lifted this is the supremum of affine minorants of the
boundary data, i.e. the solution of the homogeneous Monge-Ampere problem on
the sampled domain.  Evaluation takes the max over face planes, which is
exact for the piecewise-affine hull function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .geometry import Domain2D

__all__ = [
    "ContactSet",
    "PiecewiseAffineConvexFunction",
    "contact_set",
    "convex_envelope",
    "homogeneous_solution",
]

_CHUNK = 2**22  # max plane-times-point products per evaluation block


def _plane_through(points3) -> tuple:
    a, b, c = (np.asarray(p, dtype=float) for p in points3)
    n = np.cross(b - a, c - a)
    if n[2] == 0:
        raise ValueError("vertical face")
    g = -n[:2] / n[2]
    off = a[2] - g @ a[:2]
    return g[0], g[1], off


class PiecewiseAffineConvexFunction:
    """Lower convex hull of lifted samples, evaluated as max of face planes.

    ``planes`` has rows (gx, gy, c) so a face's affine function is
    gx*x + gy*y + c; ``faces`` indexes the input samples; ``hull_vertices``
    are the indices that actually support the hull from below.
    """

    def __init__(self, points, values, planes, faces, hull_vertices):
        self.points = np.asarray(points, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.planes = np.asarray(planes, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(faces, dtype=int).reshape(-1, 3) if len(faces) else np.zeros((0, 3), int)
        self.hull_vertices = np.asarray(hull_vertices, dtype=int)

    @classmethod
    def from_lifted_points(cls, points, values) -> "PiecewiseAffineConvexFunction":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        vals = np.asarray(values, dtype=float).reshape(-1)
        if len(pts) != len(vals):
            raise ValueError("points and values must align")
        if len(pts) < 3:
            raise ValueError("need at least 3 samples")
        span = np.ptp(pts, axis=0)
        if np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-12 * max(span.max(), 1.0)) < 2:
            raise ValueError("degenerate (collinear) sample geometry")
        # affine data: the lifted cloud is coplanar and qhull would choke
        scale = max(1.0, float(np.abs(vals).max()))
        A = np.column_stack([pts, np.ones(len(pts))])
        sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
        if np.max(np.abs(A @ sol - vals)) <= 1e-12 * scale:
            plane = np.array([[sol[0], sol[1], sol[2]]])
            hull2 = ConvexHull(pts)
            return cls(pts, vals, plane, [], hull2.vertices)
        lifted = np.column_stack([pts, vals])
        try:
            hull = ConvexHull(lifted)
        except QhullError:
            hull = ConvexHull(lifted, qhull_options="QJ")
        eq = hull.equations  # nx, ny, nz, off with outward normals
        lower = eq[:, 2] < -1e-12
        faces = hull.simplices[lower]
        planes = np.empty((len(faces), 3))
        nz = eq[lower, 2]
        planes[:, 0] = -eq[lower, 0] / nz
        planes[:, 1] = -eq[lower, 1] / nz
        planes[:, 2] = -eq[lower, 3] / nz
        verts = np.unique(faces)
        return cls(pts, vals, planes, faces, verts)

    @property
    def is_single_plane(self) -> bool:
        return len(self.planes) == 1 and len(self.faces) == 0

    def evaluate(self, points):
        q = np.atleast_2d(np.asarray(points, dtype=float))
        n, m = len(q), len(self.planes)
        out = np.full(n, -np.inf)
        block = max(1, _CHUNK // max(m, 1))
        for s in range(0, n, block):
            chunk = q[s : s + block]
            vals = chunk @ self.planes[:, :2].T + self.planes[:, 2]
            out[s : s + block] = vals.max(axis=1)
        return out if np.asarray(points).ndim > 1 else float(out[0])

    __call__ = evaluate

    def active_face(self, point) -> int:
        q = np.asarray(point, dtype=float)
        vals = self.planes[:, :2] @ q + self.planes[:, 2]
        return int(np.argmax(vals))

    def support_plane(self, point) -> np.ndarray:
        """(gx, gy, c) of a face plane attaining the hull value at the point."""
        return self.planes[self.active_face(point)].copy()

    def gradient(self, points):
        q = np.atleast_2d(np.asarray(points, dtype=float))
        vals = q @ self.planes[:, :2].T + self.planes[:, 2]
        idx = vals.argmax(axis=1)
        g = self.planes[idx, :2]
        return g if np.asarray(points).ndim > 1 else g[0]

    def face_gradients(self) -> np.ndarray:
        return self.planes[:, :2]

    def vertex_points(self) -> np.ndarray:
        return self.points[self.hull_vertices]

    def faces_at_vertex(self, index: int) -> np.ndarray:
        if self.is_single_plane:
            return self.planes
        hit = np.any(self.faces == index, axis=1)
        return self.planes[hit]

    def export_off(self, path) -> None:
        from pathlib import Path

        lines = ["OFF", f"{len(self.points)} {len(self.faces)} 0"]
        for p, v in zip(self.points, self.values):
            lines.append(f"{p[0]!r} {p[1]!r} {v!r}")
        for f in self.faces:
            lines.append(f"3 {f[0]} {f[1]} {f[2]}")
        Path(path).write_text("\n".join(lines) + "\n")

    def export_csv(self, path, points) -> None:
        from .fileio import write_csv

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = self.evaluate(pts)
        write_csv(path, ("x1", "x2", "u"), zip(pts[:, 0], pts[:, 1], vals))


def homogeneous_solution(
    domain: Domain2D,
    boundary_values: Callable,
    boundary_samples: int = 2000,
    grading: float = 1.2,
) -> PiecewiseAffineConvexFunction:
    """Supremum of affine minorants of the boundary data, realized as the
    lower hull of the lifted boundary samples.  All hull vertices are
    boundary points, so the interior Monge-Ampere measure vanishes.
    """
    if boundary_samples < 8:
        raise ValueError("need at least 8 boundary samples")
    pts, _ = domain.boundary_points(boundary_samples, grading=grading)
    vals = np.asarray(boundary_values(pts), dtype=float)
    return PiecewiseAffineConvexFunction.from_lifted_points(pts, vals)


def _interior_grid(domain: Domain2D, n: int) -> np.ndarray:
    x0, x1, y0, y1 = domain.bbox
    side = max(2, int(math.sqrt(0.7 * n)))
    xs = np.linspace(x0, x1, side + 2)[1:-1]
    ys = np.linspace(y0, y1, side + 2)[1:-1]
    grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    pieces = [grid[domain.contains(grid)]]
    if domain.kind == "strip":
        # graded fan toward the flat point, so measurements near it resolve
        n_fan = max(0, n - len(pieces[0]))
        if n_fan >= 8:
            m = max(4, int(math.sqrt(n_fan)))
            radii = np.geomspace(1e-5, 0.5 * domain.height, m)
            # angles graded toward the boundary tangent on both sides, so no
            # long sliver faces bridge the near-boundary wedges
            half = np.geomspace(1e-4, math.pi / 2, max(2, m // 2))
            ang = np.concatenate([half, math.pi - half[:-1][::-1]])
            fan = np.stack(
                [
                    np.outer(radii, np.cos(ang)).ravel(),
                    np.outer(radii, np.sin(ang)).ravel(),
                ],
                axis=1,
            )
            pieces.append(fan[domain.contains(fan)])
    return np.concatenate(pieces)


def convex_envelope(
    domain: Domain2D,
    obstacle: Callable,
    interior_samples: int = 900,
    boundary_samples: int = 256,
    grading: float = 1.2,
) -> PiecewiseAffineConvexFunction:
    """Largest convex function below the obstacle on the sampled closure."""
    if boundary_samples < 8:
        raise ValueError("need at least 8 boundary samples")
    bpts, _ = domain.boundary_points(boundary_samples, grading=grading)
    ipts = _interior_grid(domain, interior_samples)
    pts = np.concatenate([bpts, ipts]) if len(ipts) else bpts
    vals = np.asarray(obstacle(pts), dtype=float)
    return PiecewiseAffineConvexFunction.from_lifted_points(pts, vals)


@dataclass(frozen=True)
class ContactSet:
    """Connected contact region {u = support plane} around a base point."""

    x0: np.ndarray
    plane: np.ndarray
    vertex_indices: np.ndarray
    extreme_points: np.ndarray
    segments: tuple
    touches_reference: Optional[np.ndarray]
    tol: float

    @property
    def is_singleton(self) -> bool:
        return len(self.extreme_points) <= 1


def contact_set(
    u: PiecewiseAffineConvexFunction,
    reference: Optional[Callable],
    x0,
    tol: float = None,
) -> ContactSet:
    """Support plane at x0 and the contact set where the hull meets it.

    The contact set of a support plane of a convex function is convex, so
    collecting the hull vertices within tolerance and taking their planar
    hull recovers it; its extreme points decompose into segments.
    """
    x0 = np.asarray(x0, dtype=float)
    value_range = float(np.ptp(u.values)) or 1.0
    if tol is None:
        tol = 1e-8 * value_range
    if tol <= 0:
        raise ValueError("tol must be positive")
    plane = u.support_plane(x0)
    gap = u.values - (u.points @ plane[:2] + plane[2])
    idx = np.nonzero(gap <= tol)[0]
    candidates = u.points[idx]
    if len(candidates) == 0:
        extremes = x0.reshape(1, 2)
        idx = np.array([], dtype=int)
    elif len(candidates) == 1:
        extremes = candidates
    else:
        span = candidates.max(axis=0) - candidates.min(axis=0)
        scale = max(float(span.max()), 1e-300)
        centered = candidates - candidates.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-9 * scale) < 2:
            d = centered / scale
            axis = d[np.argmax(np.linalg.norm(d, axis=1))]
            axis = axis / (np.linalg.norm(axis) or 1.0)
            proj = centered @ axis
            extremes = candidates[[int(np.argmin(proj)), int(np.argmax(proj))]]
        else:
            hull2 = ConvexHull(candidates)
            extremes = candidates[hull2.vertices]
    if len(extremes) == 1:
        segments = ()
    elif len(extremes) == 2:
        segments = ((extremes[0], extremes[1]),)
    else:
        segments = tuple(
            (extremes[i], extremes[(i + 1) % len(extremes)]) for i in range(len(extremes))
        )
    touches = None
    if reference is not None and len(extremes):
        ref_vals = np.asarray(reference(extremes), dtype=float)
        hull_vals = u.evaluate(extremes)
        touches = np.abs(ref_vals - hull_vals) <= tol
    return ContactSet(
        x0=x0,
        plane=plane,
        vertex_indices=idx,
        extreme_points=np.atleast_2d(extremes),
        segments=segments,
        touches_reference=touches,
        tol=tol,
    )
