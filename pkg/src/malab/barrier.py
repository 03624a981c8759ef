"""Explicit barrier functions on the sheared strip D_h = {rho_t(y1) < y2 < h}.

The barrier is

    w(y) = 0.5 * y1**2 * y2**(q - 2/k) + Q * y2**q - M * y2,

with q slightly above 1.  With the parameter rules implemented by
:func:`default_parameters` the Hessian determinant dominates the admissible
right-hand-side bound f0 on D_h while w stays nonpositive on its boundary;
:func:`certify` checks both inequalities on a graded sample grid and reports
worst-case locations instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import BoundaryProfile

__all__ = [
    "BarrierSpec",
    "CertificationReport",
    "certify",
    "default_parameters",
    "evaluate",
    "export_certification_csv",
    "hessian_det",
]


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier parameters; ``exponent`` is the shared power q - 2/k."""

    k: int
    q: float
    Q: float
    M: float
    h: float
    f0: float

    def __post_init__(self):
        if self.k < 4 or self.k % 2 != 0:
            raise ValueError("barrier order k must be even and >= 4")
        hi = 1.25 if self.k == 4 else 1.0 + 1.0 / self.k
        if not (1.0 < self.q < hi):
            raise ValueError(f"q must lie in the open interval (1, {hi})")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.f0 < 0:
            raise ValueError("f0 must be nonnegative")

    @property
    def exponent(self) -> float:
        return self.q - 2.0 / self.k

    @property
    def degenerate_rhs(self) -> bool:
        return self.f0 == 0.0

    def with_m(self, m: float) -> "BarrierSpec":
        return BarrierSpec(self.k, self.q, self.Q, m, self.h, self.f0)

    def with_h(self, h: float) -> "BarrierSpec":
        return BarrierSpec(self.k, self.q, self.Q, self.M, h, self.f0)


def admissible_height(k: int, q: float, f0: float) -> float:
    """Largest h the determinant chain supports for the given (k, q, f0):
    (4 f0)**(2/(4q-5)) when k = 4, (k f0 / (2k-4))**(1/(2q - 2/k - 2))
    otherwise; infinite when f0 = 0 (the determinant condition is vacuous)."""
    if f0 == 0.0:
        return math.inf
    if k == 4:
        return (4.0 * f0) ** (2.0 / (4.0 * q - 5.0))
    return (k * f0 / (2.0 * k - 4.0)) ** (1.0 / (2.0 * q - 2.0 / k - 2.0))


def default_parameters(
    k: int,
    f0: float,
    sup_u: float = 0.0,
    q: Optional[float] = None,
    height_cap: float = 1.0,
) -> BarrierSpec:
    """Barrier parameters from the closed-form selection rules.

    q defaults to the midpoint of its open admissible interval.  For k = 4:
    Q = q/(q-1) and M = (1+Q) h**(q-1); for general k: Q = k(q+1-4/k)/(q-1)
    and M = (k+Q) h**(q-1).  h is the admissible height capped by
    ``height_cap`` (the strip height).  ``sup_u`` is accepted so callers can
    derive the normal-derivative bound M + C1 + sup_u/h next to the spec.
    """
    if k < 4 or k % 2 != 0:
        raise ValueError("k must be even and >= 4")
    if f0 < 0:
        raise ValueError("f0 must be nonnegative")
    hi = 1.25 if k == 4 else 1.0 + 1.0 / k
    if q is None:
        q = 0.5 * (1.0 + hi)
    if not (1.0 < q < hi):
        raise ValueError(f"q must lie strictly inside (1, {hi})")
    if height_cap <= 0:
        raise ValueError("height_cap must be positive")
    if k == 4:
        Q = q / (q - 1.0)
        m_base = 1.0 + Q
    else:
        Q = (k / (q - 1.0)) * (q + 1.0 - 4.0 / k)
        m_base = k + Q
    h = min(admissible_height(k, q, f0), height_cap)
    M = m_base * h ** (q - 1.0)
    return BarrierSpec(k=k, q=q, Q=Q, M=M, h=h, f0=f0)


def _split(y):
    arr = np.atleast_2d(np.asarray(y, dtype=float))
    return arr[:, 0], arr[:, 1], np.asarray(y).ndim > 1


def barrier_value(spec: BarrierSpec, y):
    """w(y); tolerates y2 = 0 where the value extends continuously by 0."""
    y1, y2, batched = _split(y)
    if np.any(y2 < 0):
        raise ValueError("barrier values need y2 >= 0")
    e = spec.exponent
    val = 0.5 * y1**2 * y2**e + spec.Q * y2**spec.q - spec.M * y2
    return val if batched else float(val[0])


def evaluate(spec: BarrierSpec, y):
    """Closed-form (value, gradient, Hessian) at y with y2 > 0."""
    y1, y2, batched = _split(y)
    if np.any(y2 <= 0):
        raise ValueError("gradient and Hessian need y2 > 0 (fractional powers)")
    e = spec.exponent
    q, Q, M = spec.q, spec.Q, spec.M
    val = 0.5 * y1**2 * y2**e + Q * y2**q - M * y2
    g1 = y1 * y2**e
    g2 = 0.5 * e * y1**2 * y2 ** (e - 1.0) + q * Q * y2 ** (q - 1.0) - M
    w11 = y2**e
    w12 = e * y1 * y2 ** (e - 1.0)
    w22 = 0.5 * e * (e - 1.0) * y1**2 * y2 ** (e - 2.0) + q * (q - 1.0) * Q * y2 ** (q - 2.0)
    grad = np.stack([g1, g2], axis=-1)
    hess = np.stack(
        [np.stack([w11, w12], axis=-1), np.stack([w12, w22], axis=-1)], axis=-2
    )
    if batched:
        return val, grad, hess
    return float(val[0]), grad[0], hess[0]


def hessian_det(spec: BarrierSpec, y):
    """det D2 w in closed form:
    q(q-1) Q y2**(q+e-2) - (e(e+1)/2) y1**2 y2**(2e-2) with e = q - 2/k."""
    y1, y2, batched = _split(y)
    if np.any(y2 <= 0):
        raise ValueError("hessian determinant needs y2 > 0")
    e = spec.exponent
    q, Q = spec.q, spec.Q
    det = q * (q - 1.0) * Q * y2 ** (q + e - 2.0) - 0.5 * e * (e + 1.0) * y1**2 * y2 ** (
        2.0 * e - 2.0
    )
    return det if batched else float(det[0])


@dataclass(frozen=True)
class CertificationReport:
    spec: BarrierSpec
    interior_min: float
    interior_argmin: tuple
    boundary_max: float
    boundary_argmax: tuple
    interior_samples: int
    boundary_samples: int
    interior_rows: np.ndarray

    @property
    def det_condition(self) -> bool:
        return self.interior_min >= 0.0

    @property
    def boundary_condition(self) -> bool:
        return self.boundary_max <= 0.0

    @property
    def passed(self) -> bool:
        return self.det_condition and self.boundary_condition


def _lateral_abscissa(rho_t: BoundaryProfile, level: float, side: float, w: float) -> float:
    lo, hi = 0.0, side * w
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if rho_t.value(mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def certify(
    spec: BarrierSpec, rho_tilde: BoundaryProfile, resolution: int = 200
) -> CertificationReport:
    """Sample D_h on a grid graded toward y2 = 0 and report
    min(det D2 w - f0) over the interior and max(w) over the boundary.

    Failures are data in the report, not exceptions; the grid floor
    y2 >= h/resolution**2 keeps the singular bottom row out.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    w_win = 0.995 * rho_tilde.half_width
    reach = min(rho_tilde.value(-w_win), rho_tilde.value(w_win))
    if spec.h > reach:
        raise ValueError(
            "barrier height h exceeds the boundary height inside the profile window"
        )
    levels = spec.h * (np.arange(1, resolution + 1) / resolution) ** 2
    int_pts = []
    for lv in levels:
        t_minus = _lateral_abscissa(rho_tilde, lv, -1.0, w_win)
        t_plus = _lateral_abscissa(rho_tilde, lv, +1.0, w_win)
        span = t_plus - t_minus
        xs = t_minus + span * (np.arange(1, resolution + 1) - 0.5) / resolution
        int_pts.append(np.stack([xs, np.full_like(xs, lv)], axis=1))
    interior = np.concatenate(int_pts)
    det_gap = hessian_det(spec, interior) - spec.f0
    i_min = int(np.argmin(det_gap))
    # boundary: lateral graph points at the graded levels plus the top edge
    lat = []
    for lv in levels:
        for side in (-1.0, 1.0):
            t = _lateral_abscissa(rho_tilde, lv, side, w_win)
            lat.append((t, rho_tilde.value(t)))
    t_minus_h = _lateral_abscissa(rho_tilde, spec.h, -1.0, w_win)
    t_plus_h = _lateral_abscissa(rho_tilde, spec.h, +1.0, w_win)
    top_x = np.linspace(t_minus_h, t_plus_h, 2 * resolution)
    boundary = np.concatenate(
        [
            np.array([[0.0, 0.0]]),
            np.asarray(lat),
            np.stack([top_x, np.full_like(top_x, spec.h)], axis=1),
        ]
    )
    bvals = barrier_value(spec, boundary)
    i_max = int(np.argmax(bvals))
    rows = np.column_stack([interior, det_gap])
    return CertificationReport(
        spec=spec,
        interior_min=float(det_gap[i_min]),
        interior_argmin=(float(interior[i_min, 0]), float(interior[i_min, 1])),
        boundary_max=float(bvals[i_max]),
        boundary_argmax=(float(boundary[i_max, 0]), float(boundary[i_max, 1])),
        interior_samples=len(interior),
        boundary_samples=len(boundary),
        interior_rows=rows,
    )


def export_certification_csv(report: CertificationReport, path) -> None:
    from .fileio import write_csv

    rows = [tuple(r) for r in report.interior_rows]
    summary = (
        f"# summary: interior_min={report.interior_min!r} at {report.interior_argmin}, "
        f"boundary_max={report.boundary_max!r} at {report.boundary_argmax}, "
        f"passed={report.passed}"
    )
    write_csv(path, ("y1", "y2", "det_gap"), rows, footer=summary)
