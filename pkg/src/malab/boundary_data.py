"""Boundary data along the lower boundary graph, viewed as a function of x1.

Data carries exact derivative queries on its polynomial part; the flat-point
degeneracy conditions (vanishing of selected derivatives at x1 = 0) are
checked pointwise, and the pullback under the boundary-flattening shear comes
with a sampled Taylor growth bound of the form
phi(y1) - phi(0) - phi'(0) y1 <= C * rho_t(y1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .geometry import AffineMap2D, BoundaryProfile, curvature

__all__ = [
    "BoundaryDatum",
    "ConditionNotMet",
    "ConditionReport",
    "ExtendedDatum",
    "GrowthBoundReport",
    "Obstacle2D",
    "check_condition",
    "pullback",
    "strict_floor",
    "subtract_affine",
    "taylor_growth_bound",
]

CONDITION_IDS = ("P1", "P1'", "P2", "P3")


class ConditionNotMet(ValueError):
    """Raised when an operation requires a degeneracy condition that fails."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"condition {report.condition} fails: residuals {report.residuals}")


@dataclass(frozen=True)
class BoundaryDatum:
    """phi(x1) = polynomial + optional extra part on [-half_width, half_width].

    ``extra`` is a callable (x, order) -> value for non-polynomial data;
    derivative queries on the polynomial part are exact.
    """

    poly_coeffs: tuple
    declared_k: int
    holder_order: float
    half_width: float = 1.0
    extra: Optional[Callable] = None
    extra_scale: float = 1.0

    def __post_init__(self):
        if self.declared_k < 2 or self.declared_k % 2 != 0:
            raise ValueError("declared_k must be even and >= 2")
        if self.holder_order <= 0:
            raise ValueError("holder_order must be positive")
        object.__setattr__(self, "poly_coeffs", tuple(float(c) for c in self.poly_coeffs) or (0.0,))

    @cached_property
    def poly(self) -> Polynomial:
        return Polynomial(np.asarray(self.poly_coeffs, dtype=float))

    @cached_property
    def _derivs(self) -> dict:
        return {}

    def _deriv_poly(self, order: int) -> Polynomial:
        cache = self._derivs
        if order not in cache:
            cache[order] = self.poly.deriv(order) if order else self.poly
        return cache[order]

    def value(self, x1, order: int = 0):
        x = np.asarray(x1, dtype=float)
        if np.any(np.abs(x) > self.half_width * (1 + 1e-12)):
            raise ValueError("query outside the datum validity window")
        out = self._deriv_poly(order)(x)
        if self.extra is not None:
            out = out + self.extra(x, order)
        return float(out) if np.isscalar(x1) else out

    def __call__(self, x1):
        return self.value(x1)

    @property
    def is_polynomial(self) -> bool:
        return self.extra is None

    @property
    def scale(self) -> float:
        return max(1.0, max(abs(c) for c in self.poly_coeffs), abs(self.extra_scale))

    def to_record(self) -> str:
        if not self.is_polynomial:
            raise ValueError("only polynomial data serializes to a flat record")
        parts = [f"{self.declared_k}", repr(self.holder_order), repr(self.half_width)]
        parts += [repr(c) for c in self.poly_coeffs]
        return ",".join(parts)

    @classmethod
    def from_record(cls, record: str) -> "BoundaryDatum":
        items = [s.strip() for s in record.split(",") if s.strip()]
        if len(items) < 3:
            raise ValueError("datum record needs k,beta,half_width[,coeffs...]")
        return cls(
            poly_coeffs=tuple(float(c) for c in items[3:]) or (0.0,),
            declared_k=int(items[0]),
            holder_order=float(items[1]),
            half_width=float(items[2]),
        )


@dataclass(frozen=True)
class Obstacle2D:
    """Two-variable polynomial obstacle with exact partial derivatives.

    ``coeffs`` maps (i, j) -> coefficient of x1**i * x2**j.
    """

    coeffs: dict
    declared_k: int = 4
    holder_order: float = 1.0

    def value(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts))
        for (i, j), c in self.coeffs.items():
            out += c * pts[:, 0] ** i * pts[:, 1] ** j
        return out if np.asarray(points).ndim > 1 else float(out[0])

    __call__ = value

    def partial_at_origin(self, i: int, j: int) -> float:
        c = self.coeffs.get((i, j), 0.0)
        return c * math.factorial(i) * math.factorial(j)

    def gradient(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        gx = np.zeros(len(pts))
        gy = np.zeros(len(pts))
        for (i, j), c in self.coeffs.items():
            if i > 0:
                gx += c * i * pts[:, 0] ** (i - 1) * pts[:, 1] ** j
            if j > 0:
                gy += c * j * pts[:, 0] ** i * pts[:, 1] ** (j - 1)
        g = np.stack([gx, gy], axis=1)
        return g if np.asarray(points).ndim > 1 else g[0]


def strict_floor(beta: float) -> int:
    """Largest integer strictly less than beta (so 1.0 -> 0, 2.0 -> 1)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    m = math.floor(beta)
    if m == beta:
        m -= 1
    return int(m)


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    orders: tuple
    residuals: tuple
    tol: float
    passed: bool

    def __bool__(self):
        return self.passed


def _condition_orders(which: str, k: int, beta: float) -> tuple:
    if which == "P1":
        return tuple(range(2, k - 1, 2))
    if which == "P1'":
        return tuple(range(2, k))
    if which == "P2":
        return tuple(range(k + 1, k + strict_floor(beta) + 1))
    raise ValueError(f"unknown condition id {which!r}")


def check_condition(target, which: str, tol: float = None) -> ConditionReport:
    """Check vanishing of flat-point derivatives.

    P1 checks even orders 2..k-2 of a boundary datum; P1' all orders 2..k-1;
    P2 orders k+1..k+m with m the strict floor of the Holder order; P3 all
    partials of total order 2..k+m of a two-variable obstacle.  The default
    tolerance is exact (0) for polynomial data and 1e-9 * scale otherwise.
    """
    if which not in CONDITION_IDS:
        raise ValueError(f"condition id must be one of {CONDITION_IDS}")
    if which == "P3":
        if not isinstance(target, Obstacle2D):
            raise TypeError("P3 applies to a two-variable Obstacle2D")
        k, beta = target.declared_k, target.holder_order
        orders = tuple(range(2, k + strict_floor(beta) + 1))
        residuals = tuple(
            max(abs(target.partial_at_origin(i, n - i)) for i in range(n + 1)) for n in orders
        )
        use_tol = 0.0 if tol is None else tol
    else:
        if not isinstance(target, BoundaryDatum):
            raise TypeError(f"{which} applies to a BoundaryDatum")
        k, beta = target.declared_k, target.holder_order
        orders = _condition_orders(which, k, beta)
        if orders and max(orders) > 0 and not target.is_polynomial:
            pass  # extra part supplies its own derivative queries
        residuals = tuple(abs(target.value(0.0, i)) for i in orders)
        if tol is None:
            use_tol = 0.0 if target.is_polynomial else 1e-9 * target.scale
        else:
            use_tol = tol
    passed = all(r <= use_tol for r in residuals)
    return ConditionReport(which, orders, residuals, use_tol, passed)


def subtract_affine(
    datum: BoundaryDatum, profile: BoundaryProfile, a0: float, a1: float, a2: float
) -> BoundaryDatum:
    """Trace of phi minus the affine function a0 + a1 x1 + a2 x2 along the
    boundary graph: x1 -> phi(x1) - a0 - a1 x1 - a2 rho(x1).

    Derivatives of orders 2..k-1 at the flat point are unchanged because the
    profile is k-flat there.
    """
    new_poly = datum.poly - Polynomial([a0, a1]) - a2 * profile.poly
    return BoundaryDatum(
        poly_coeffs=tuple(new_poly.coef),
        declared_k=datum.declared_k,
        holder_order=datum.holder_order,
        half_width=min(datum.half_width, profile.half_width),
        extra=datum.extra,
        extra_scale=datum.extra_scale,
    )


@dataclass(frozen=True)
class ExtendedDatum:
    """Datum pulled back to the sheared frame, extended constant in y2.

    ``datum_y`` is phi_t(y1) = phi(z1 + y1); evaluation at (y1, y2) ignores y2.
    """

    datum_y: BoundaryDatum
    rho_tilde: BoundaryProfile
    z1: float
    source: BoundaryDatum

    def value(self, y1, order: int = 0):
        return self.datum_y.value(y1, order)

    def __call__(self, y1, y2=None):
        return self.datum_y.value(y1)

    def on_boundary(self, y1):
        """Restriction to the transformed boundary graph (same values)."""
        return self.datum_y.value(y1)


def pullback(
    datum: BoundaryDatum, map_: AffineMap2D, rho_tilde: BoundaryProfile
) -> ExtendedDatum:
    """Pull boundary data back through a tangent shear and extend it into the
    cap region independently of y2."""
    lin = map_.linear
    if not (lin[0, 0] == 1.0 and lin[0, 1] == 0.0 and lin[1, 1] == 1.0):
        raise ValueError("map must be a tangent shear (unit diagonal, zero upper off-diagonal)")
    z1 = -float(map_.offset[0])
    window = min(datum.half_width - abs(z1), rho_tilde.half_width)
    if window <= 0:
        raise ValueError("pullback window exceeded: |z1| too large for the datum")
    shifted = datum.poly(Polynomial([z1, 1.0]))
    extra = None
    if datum.extra is not None:
        base = datum.extra
        extra = lambda y, order: base(np.asarray(y) + z1, order)
    datum_y = BoundaryDatum(
        poly_coeffs=tuple(shifted.coef),
        declared_k=datum.declared_k,
        holder_order=datum.holder_order,
        half_width=window,
        extra=extra,
        extra_scale=datum.extra_scale,
    )
    return ExtendedDatum(datum_y=datum_y, rho_tilde=rho_tilde, z1=z1, source=datum)


@dataclass(frozen=True)
class GrowthBoundReport:
    """Least sampled C with phi_t(y) - phi_t(0) - phi_t'(0) y <= C rho_t(y),
    plus the split into the k-th-derivative main term and the remainder."""

    c1: float
    e1_ratio: tuple
    e2_constant: float
    z1: float
    kappa: float
    sample_count: int
    window: float


def taylor_growth_bound(
    extended: ExtendedDatum, samples: int = 512, window: float = None
) -> GrowthBoundReport:
    """Fit the growth constant of the pulled-back datum against rho_t.

    Requires the source datum to satisfy P1 (otherwise no such bound need
    exist and a :class:`ConditionNotMet` is raised).  The main term uses
    E1(y) = ((y+z1)**k - z1**k - k z1**(k-1) y) / k!; the remainder is
    measured against (kappa**(beta/(k-2)) + rho_t**(beta/k)) * rho_t.
    """
    p1 = check_condition(extended.source, "P1")
    if not p1.passed:
        raise ConditionNotMet(p1)
    dat = extended.datum_y
    rt = extended.rho_tilde
    k = dat.declared_k
    beta = dat.holder_order
    w = window if window is not None else 0.9 * min(dat.half_width, rt.half_width)
    mags = np.geomspace(1e-6 * w, w, samples // 2)
    ys = np.concatenate([-mags[::-1], mags])
    # zeroing the low-order coefficients subtracts value and slope exactly,
    # avoiding cancellation at the smallest samples
    t_coef = np.array(dat.poly.coef, dtype=float)
    if len(t_coef) > 0:
        t_coef[0] = 0.0
    if len(t_coef) > 1:
        t_coef[1] = 0.0
    t_vals = Polynomial(t_coef)(ys)
    if dat.extra is not None:
        t_vals = t_vals + (dat.extra(ys, 0) - dat.extra(0.0, 0) - dat.extra(0.0, 1) * ys)
    rho_vals = rt.value(ys)
    c1 = float(np.max(t_vals / rho_vals))
    z1 = extended.z1
    kf = math.factorial(k)
    e1_coef = np.array(Polynomial([z1, 1.0]).__pow__(k).coef, dtype=float) / kf
    e1_coef[0] = 0.0
    e1_coef[1] = 0.0
    e1 = Polynomial(e1_coef)(ys)
    phik0 = dat.value(0.0, k)
    e2 = t_vals - phik0 * e1
    e1_ratio = (float(np.min(e1 / rho_vals)), float(np.max(e1 / rho_vals)))
    kappa = rt.value(0.0, 2)  # curvature at the tangency point in the sheared frame
    scale = (abs(kappa) ** (beta / (k - 2)) + rho_vals ** (beta / k)) * rho_vals
    e2_constant = float(np.max(np.abs(e2) / scale))
    return GrowthBoundReport(
        c1=c1,
        e1_ratio=e1_ratio,
        e2_constant=e2_constant,
        z1=z1,
        kappa=kappa,
        sample_count=len(ys),
        window=w,
    )
