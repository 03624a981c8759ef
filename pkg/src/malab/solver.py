"""Wide-stencil monotone solver for det D2 u = f with Dirichlet data.

The discrete operator takes, over orthogonal lattice direction pairs, the
minimum of products of second directional differences clamped at zero.  It
stays monotone when f vanishes, which is why it is preferred here over
mesh-based alternatives.  Cut arms at the boundary use unequal-arm second
differences with the datum imposed at the bisected crossing point.  The
fixed point is reached by damped Jacobi-style sweeps; several right-hand
sides can share one sweep loop, which keeps comparison experiments exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import Domain2D

__all__ = [
    "ConvergenceError",
    "DoublingReport",
    "FieldSpec",
    "ScalarField2D",
    "direction_pairs",
    "doubling_estimate",
    "doubling_ratio",
    "residual",
    "solve",
    "solve_many",
    "triangle_quadrature",
]


class ConvergenceError(RuntimeError):
    def __init__(self, residual_value: float, sweeps: int):
        self.residual = residual_value
        self.sweeps = sweeps
        super().__init__(f"no convergence after {sweeps} sweeps, residual {residual_value:g}")


@dataclass(frozen=True)
class FieldSpec:
    """Right-hand side with its declared bound near the boundary."""

    f: Callable
    f0: float
    doubling_hint: Optional[float] = None

    def __post_init__(self):
        if self.f0 < 0:
            raise ValueError("f0 must be nonnegative")

    @classmethod
    def constant(cls, value: float) -> "FieldSpec":
        if value < 0:
            raise ValueError("constant right-hand side must be nonnegative")
        return cls(f=lambda pts: np.full(len(np.atleast_2d(pts)), float(value)), f0=float(value))


def direction_pairs(width: int = 3):
    """Orthogonal lattice direction pairs (v, v_perp) with coprime entries
    bounded by ``width``; width 3 gives 8 pairs / 16 lattice directions."""
    if width < 1:
        raise ValueError("stencil width must be >= 1")
    dirs = []
    seen = set()
    for a in range(0, width + 1):
        for b in range(-width, width + 1):
            if a == 0 and b <= 0:
                continue
            if a == 0 and b != 1:
                continue
            if math.gcd(a, abs(b)) != 1:
                continue
            dirs.append((a, b))
    pairs = []
    for a, b in dirs:
        v, w = (a, b), (-b, a)
        key = frozenset({(a, b), (-a, -b), (-b, a), (b, -a)})
        if key in seen:
            continue
        seen.add(key)
        pairs.append((v, w))
    return pairs


class _Stencil:
    """Per-direction arm data for the interior nodes of a cut-cell grid."""

    def __init__(self, domain: Domain2D, datum: Callable, resolution: int, width: int):
        x0, x1, y0, y1 = domain.bbox
        h = (x1 - x0) / resolution
        nx = resolution
        ny = max(4, int(math.floor((y1 - y0) / h + 1e-9)))
        xs = x0 + h * (np.arange(nx) + 0.5)
        ys = y0 + h * (np.arange(ny) + 0.5)
        gx, gy = np.meshgrid(xs, ys)
        nodes = np.stack([gx.ravel(), gy.ravel()], axis=1)
        inside = domain.contains(nodes).reshape(ny, nx)
        self.domain = domain
        self.h = h
        self.xs, self.ys = xs, ys
        self.nx, self.ny = nx, ny
        self.interior_mask = inside
        flat_index = -np.ones((ny, nx), dtype=int)
        ii, jj = np.nonzero(inside)
        flat_index[ii, jj] = np.arange(len(ii))
        self.flat_index = flat_index
        self.node_rows, self.node_cols = ii, jj
        self.points = np.stack([xs[jj], ys[ii]], axis=1)
        self.n = len(ii)
        self.pairs = direction_pairs(width)
        dirs = []
        for v, w in self.pairs:
            for d in (v, w):
                if d not in dirs:
                    dirs.append(d)
        self.dirs = dirs
        self.pair_dir_idx = [(dirs.index(v), dirs.index(w)) for v, w in self.pairs]
        self._build_arms(datum)

    def _build_arms(self, datum: Callable):
        self.arm_idx = []
        self.arm_w = []
        self.arm_b = []
        self.c_dir = []
        bmin, bmax = math.inf, -math.inf
        for a, b in self.dirs:
            step = np.array([a, b], dtype=float)
            data = []
            for sgn in (+1, -1):
                rr = self.node_rows + sgn * b  # rows move with x2
                cc = self.node_cols + sgn * a
                in_range = (rr >= 0) & (rr < self.ny) & (cc >= 0) & (cc < self.nx)
                nb = np.where(in_range, self.flat_index[rr % self.ny, cc % self.nx], -1)
                t = np.full(self.n, self.h * math.hypot(a, b))
                bval = np.zeros(self.n)
                cut = np.nonzero(nb < 0)[0]
                if len(cut):
                    pts = self.points[cut]
                    tips = pts + sgn * self.h * step
                    bpts = np.array(
                        [self.domain.boundary_crossing(p, q) for p, q in zip(pts, tips)]
                    )
                    t[cut] = np.maximum(
                        np.linalg.norm(bpts - pts, axis=1), 1e-9 * self.h
                    )
                    bv = np.asarray(datum(bpts), dtype=float)
                    bval[cut] = bv
                    bmin = min(bmin, float(bv.min()))
                    bmax = max(bmax, float(bv.max()))
                data.append((nb, t, bval))
            (nbp, tp, bp_), (nbm, tm, bm_) = data
            tsum = tp + tm
            wp = 2.0 / (tp * tsum)
            wm = 2.0 / (tm * tsum)
            self.arm_idx.append((nbp, nbm))
            self.arm_w.append((wp, wm))
            self.arm_b.append((np.where(nbp < 0, wp * bp_, 0.0), np.where(nbm < 0, wm * bm_, 0.0)))
            self.c_dir.append(wp + wm)
        self.boundary_value_range = (bmin, bmax)

    def linear_parts(self, u: np.ndarray):
        """A_d(u) for each direction; u has shape (..., n)."""
        out = []
        for (nbp, nbm), (wp, wm), (bp_, bm_) in zip(self.arm_idx, self.arm_w, self.arm_b):
            up = np.where(nbp >= 0, u[..., np.clip(nbp, 0, None)], 0.0)
            um = np.where(nbm >= 0, u[..., np.clip(nbm, 0, None)], 0.0)
            out.append(np.where(nbp >= 0, wp * up, bp_) + np.where(nbm >= 0, wm * um, bm_))
        return out

    def second_differences(self, u: np.ndarray):
        parts = self.linear_parts(u)
        return [a - c * u for a, c in zip(parts, self.c_dir)]

    def ma_operator(self, u: np.ndarray):
        diffs = self.second_differences(u)
        ma = None
        for iv, iw in self.pair_dir_idx:
            prod = np.maximum(diffs[iv], 0.0) * np.maximum(diffs[iw], 0.0)
            ma = prod if ma is None else np.minimum(ma, prod)
        return ma

    def sweep(self, u: np.ndarray, f: np.ndarray, damping: float):
        parts = self.linear_parts(u)
        t_best = None
        for iv, iw in self.pair_dir_idx:
            av, aw = parts[iv], parts[iw]
            cv, cw = self.c_dir[iv], self.c_dir[iw]
            s = av * cw + aw * cv
            disc = (av * cw - aw * cv) ** 2 + 4.0 * f * cv * cw
            t = (s - np.sqrt(disc)) / (2.0 * cv * cw)
            t_best = t if t_best is None else np.minimum(t_best, t)
        step = damping * (t_best - u)
        return u + step, float(np.max(np.abs(step)))


@dataclass
class ScalarField2D:
    """Solution samples on the cut-cell grid, with bilinear evaluation."""

    xs: np.ndarray
    ys: np.ndarray
    h: float
    interior_mask: np.ndarray
    values_grid: np.ndarray
    domain: Domain2D
    stencil: _Stencil = field(repr=False, default=None)
    f_at_nodes: np.ndarray = field(repr=False, default=None)
    sweeps: int = 0
    final_residual: float = math.nan

    @property
    def interior_values(self) -> np.ndarray:
        return self.values_grid[self.interior_mask]

    @property
    def interior_points(self) -> np.ndarray:
        return self.stencil.points

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (pts[:, 0] - self.xs[0]) / self.h
        yi = (pts[:, 1] - self.ys[0]) / self.h
        i0 = np.clip(np.floor(xi).astype(int), 0, len(self.xs) - 2)
        j0 = np.clip(np.floor(yi).astype(int), 0, len(self.ys) - 2)
        fx = xi - i0
        fy = yi - j0
        corners = [
            self.values_grid[j0, i0],
            self.values_grid[j0, i0 + 1],
            self.values_grid[j0 + 1, i0],
            self.values_grid[j0 + 1, i0 + 1],
        ]
        ok = (
            self.interior_mask[j0, i0]
            & self.interior_mask[j0, i0 + 1]
            & self.interior_mask[j0 + 1, i0]
            & self.interior_mask[j0 + 1, i0 + 1]
        )
        if not np.all(ok):
            raise ValueError("evaluation stencil leaves the interior grid")
        out = (
            corners[0] * (1 - fx) * (1 - fy)
            + corners[1] * fx * (1 - fy)
            + corners[2] * (1 - fx) * fy
            + corners[3] * fx * fy
        )
        return out if np.asarray(points).ndim > 1 else float(out[0])

    __call__ = evaluate

    def gradient_nodes(self):
        """Central-difference gradients at nodes whose four neighbors are
        interior; returns (points, gradients)."""
        m = self.interior_mask
        core = m[1:-1, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:] & m[:-2, 1:-1] & m[2:, 1:-1]
        jj, ii = np.nonzero(core)
        jj, ii = jj + 1, ii + 1
        gx = (self.values_grid[jj, ii + 1] - self.values_grid[jj, ii - 1]) / (2 * self.h)
        gy = (self.values_grid[jj + 1, ii] - self.values_grid[jj - 1, ii]) / (2 * self.h)
        pts = np.stack([self.xs[ii], self.ys[jj]], axis=1)
        return pts, np.stack([gx, gy], axis=1)

    def ma_values(self) -> np.ndarray:
        return self.stencil.ma_operator(self.interior_values)

    def convexity_defect(self) -> float:
        """Most negative wide-stencil second difference (>= -tol when convex)."""
        diffs = self.stencil.second_differences(self.interior_values)
        return float(min(np.min(d) for d in diffs))

    def export_csv(self, path) -> None:
        from .fileio import write_csv

        pts, grads = self.gradient_nodes()
        m = self.interior_mask
        core = m[1:-1, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:] & m[:-2, 1:-1] & m[2:, 1:-1]
        jj, ii = np.nonzero(core)
        vals = self.values_grid[jj + 1, ii + 1]
        rows = zip(pts[:, 0], pts[:, 1], vals, grads[:, 0], grads[:, 1])
        write_csv(path, ("x1", "x2", "u", "u1", "u2"), rows)


def _prepare(domain, datum, resolution, stencil_width):
    st = _Stencil(domain, datum, resolution, stencil_width)
    if st.n < 4:
        raise ValueError("grid too coarse: fewer than 4 interior nodes")
    return st


def solve_many(
    domain: Domain2D,
    fields: Sequence[FieldSpec],
    datum: Callable,
    resolution: int = 64,
    stencil_width: int = 3,
    tol: float = None,
    max_sweeps: int = 100000,
    damping: float = 1.0,
    stencil: _Stencil = None,
):
    """Solve for several right-hand sides with one shared sweep loop.

    All members share the initial iterate and the sweep count, so the
    pointwise monotonicity of the update in (u, f, datum) transfers exactly
    to the returned fields.
    """
    if not (0.0 < damping <= 1.0):
        raise ValueError("damping must lie in (0, 1]")
    st = stencil if stencil is not None else _prepare(domain, datum, resolution, stencil_width)
    fvals = []
    for spec in fields:
        fv = np.asarray(spec.f(st.points), dtype=float)
        if np.any(fv < 0):
            raise ValueError("right-hand side must be nonnegative")
        fvals.append(fv)
    fstack = np.stack(fvals)
    if tol is None:
        tol = 1e-8 * max(1.0, float(fstack.max()))
    u0 = st.boundary_value_range[1]
    if not math.isfinite(u0):
        raise ValueError("no boundary crossings found; domain/grid mismatch")
    value_scale = max(1.0, abs(st.boundary_value_range[0]), abs(st.boundary_value_range[1]))
    # zero residual alone only certifies a supersolution (clamped products
    # vanish on any discrete supersolution when f does), so the fixed-point
    # increment must die as well
    step_tol = 1e-12 * value_scale
    u = np.full((len(fields), st.n), u0)
    sweeps = 0
    res = np.inf
    check_every = 8
    converged = False
    while sweeps < max_sweeps:
        u, du = st.sweep(u, fstack, damping)
        sweeps += 1
        if du <= step_tol or sweeps % check_every == 0 or sweeps == max_sweeps:
            ma = st.ma_operator(u)
            res = float(np.max(np.abs(ma - fstack)))
            if res <= tol and du <= step_tol:
                converged = True
                break
    if not converged:
        raise ConvergenceError(res, sweeps)
    out = []
    for m, spec in enumerate(fields):
        grid = np.full((st.ny, st.nx), np.nan)
        grid[st.interior_mask] = u[m]
        out.append(
            ScalarField2D(
                xs=st.xs,
                ys=st.ys,
                h=st.h,
                interior_mask=st.interior_mask,
                values_grid=grid,
                domain=domain,
                stencil=st,
                f_at_nodes=fvals[m],
                sweeps=sweeps,
                final_residual=res,
            )
        )
    return out


def solve(
    domain: Domain2D,
    field_spec: FieldSpec,
    datum: Callable,
    resolution: int = 64,
    stencil_width: int = 3,
    tol: float = None,
    max_sweeps: int = 100000,
    damping: float = 1.0,
) -> ScalarField2D:
    """Monotone wide-stencil solve of det D2 u = f, u = datum on the boundary."""
    return solve_many(
        domain,
        [field_spec],
        datum,
        resolution=resolution,
        stencil_width=stencil_width,
        tol=tol,
        max_sweeps=max_sweeps,
        damping=damping,
    )[0]


def residual(field2d: ScalarField2D, spec: FieldSpec) -> float:
    """max |MA_h(u) - f| over interior nodes."""
    if field2d.stencil is None:
        raise ValueError("field carries no stencil; was it produced by solve?")
    fv = np.asarray(spec.f(field2d.stencil.points), dtype=float)
    if fv.shape != (field2d.stencil.n,):
        raise ValueError("right-hand side does not match the solver grid")
    return float(np.max(np.abs(field2d.ma_values() - fv)))


def triangle_quadrature(vertices, subdiv: int = 24):
    """Midpoint rule on the uniform subdivision into subdiv**2 subtriangles:
    returns (points, total_area)."""
    v = np.asarray(vertices, dtype=float).reshape(3, 2)
    m = subdiv
    cents = []
    for i in range(m):
        for j in range(m - i):
            cents.append(((3 * i + 1) / (3 * m), (3 * j + 1) / (3 * m)))
            if i + j <= m - 2:
                cents.append(((3 * i + 2) / (3 * m), (3 * j + 2) / (3 * m)))
    ref = np.asarray(cents)
    pts = v[0] + ref[:, :1] * (v[1] - v[0]) + ref[:, 1:] * (v[2] - v[0])
    area = 0.5 * abs(
        (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])
    )
    return pts, area


def doubling_ratio(f: Callable, vertices, subdiv: int = 24) -> float:
    """integral of f over a triangle divided by the integral over its
    half-dilation about the centroid, with congruent midpoint rules."""
    pts, area = triangle_quadrature(vertices, subdiv)
    c = np.asarray(vertices, dtype=float).mean(axis=0)
    half_pts = c + 0.5 * (pts - c)
    num = float(np.mean(np.asarray(f(pts), dtype=float)))
    den = float(np.mean(np.asarray(f(half_pts), dtype=float)))
    if den == 0.0:
        return math.inf if num > 0 else math.nan
    return 4.0 * num / den


@dataclass(frozen=True)
class DoublingReport:
    max_ratio: float
    trials: int
    failures: int
    argmax_vertices: np.ndarray


def doubling_estimate(
    field_spec, domain: Domain2D, trials: int = 1000, seed: int = 0, subdiv: int = 24
) -> DoublingReport:
    """Max over random convex subsets (triangles inside the convex domain) of
    the mass ratio against the half-dilation about the centroid.  An empty
    half-dilation mass with positive total mass reports as a doubling
    failure (infinite ratio)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    f = field_spec.f if isinstance(field_spec, FieldSpec) else field_spec
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = domain.bbox
    bbox_area = (x1 - x0) * (y1 - y0)
    best = -math.inf
    best_v = None
    failures = 0
    done = 0
    while done < trials:
        v = np.column_stack(
            [rng.uniform(x0, x1, size=3), rng.uniform(y0, y1, size=3)]
        )
        if not np.all(domain.contains(v)):
            continue
        area = 0.5 * abs(
            (v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1])
            - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1])
        )
        if area < 1e-5 * bbox_area:
            continue
        r = doubling_ratio(f, v, subdiv)
        done += 1
        if math.isinf(r):
            failures += 1
        if math.isnan(r):
            continue
        if r > best:
            best = r
            best_v = v.copy()
    return DoublingReport(max_ratio=best, trials=done, failures=failures, argmax_vertices=best_v)
