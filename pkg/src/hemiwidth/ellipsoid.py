"""Quadric surfaces, elliptic-integral circumferences, metric calibration,
and a projection-stabilized geodesic flow integrator.

The surface is always {x : a1*x1^2 + a2*x2^2 + a3*x3^2 = 1}; the hemisphere
variant restricts to x3 >= 0, whose boundary (the z = 0 section) is a closed
geodesic by reflection symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "Ellipsoid",
    "HemiEllipsoid",
    "GeodesicState",
    "CalibrationResult",
    "CalibrationError",
    "GeodesicFlowError",
    "agm_elliptic_e",
    "ellipse_circumference",
    "principal_curve_lengths",
    "calibrate",
    "integrate_geodesic",
    "joachimsthal",
    "validate_state",
    "state_residuals",
]

# Default tolerances; two orders of margin between integration accuracy and
# the acceptance thresholds they feed.
TOL_CONSTRAINT = 1e-8
TOL_SPEED = 1e-8
TOL_CALIBRATION = 1e-8
MAX_JACOBIAN_CONDITION = 1e3


class CalibrationError(RuntimeError):
    """Newton calibration did not reach the target lengths."""

    def __init__(self, message, residuals=None, iterations=0):
        super().__init__(message)
        self.residuals = residuals
        self.iterations = iterations


class GeodesicFlowError(RuntimeError):
    """Geodesic integration failed or left the surface beyond tolerance."""


@dataclass(frozen=True)
class Ellipsoid:
    """Quadric coefficients (a1, a2, a3) of a1*x1^2 + a2*x2^2 + a3*x3^2 = 1."""

    a: tuple[float, float, float]

    def __post_init__(self):
        if len(self.a) != 3 or any(not (ai > 0 and math.isfinite(ai)) for ai in self.a):
            raise ValueError(f"quadric coefficients must be positive, got {self.a}")
        object.__setattr__(self, "a", tuple(float(ai) for ai in self.a))

    @classmethod
    def unit_sphere(cls) -> "Ellipsoid":
        return cls((1.0, 1.0, 1.0))

    @property
    def semi_axes(self) -> tuple[float, float, float]:
        """Semi-axes r_i = a_i^(-1/2)."""
        return tuple(ai ** -0.5 for ai in self.a)

    def quadric(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.dot(self.a, x * x)) if x.ndim == 1 else (np.asarray(self.a) * x * x).sum(axis=-1)

    def gradient(self, x):
        return 2.0 * np.asarray(self.a) * np.asarray(x, dtype=float)

    def project_point(self, x):
        """Radial projection onto the surface (exact for a quadric)."""
        x = np.asarray(x, dtype=float)
        return x / math.sqrt(self.quadric(x))

    def project_tangent(self, x, v):
        """Remove the normal component of v at x and renormalize to unit speed."""
        g = self.gradient(x)
        v = np.asarray(v, dtype=float)
        v = v - (np.dot(v, g) / np.dot(g, g)) * g
        return v / np.linalg.norm(v)


@dataclass(frozen=True)
class HemiEllipsoid:
    """The x3 >= 0 half of an Ellipsoid; its boundary is the z = 0 section."""

    ellipsoid: Ellipsoid

    @property
    def a(self):
        return self.ellipsoid.a

    def boundary_point(self, phi: float):
        r1, r2, _ = self.ellipsoid.semi_axes
        return np.array([r1 * math.cos(phi), r2 * math.sin(phi), 0.0])

    def boundary_tangent(self, phi: float):
        r1, r2, _ = self.ellipsoid.semi_axes
        t = np.array([-r1 * math.sin(phi), r2 * math.cos(phi), 0.0])
        return t / np.linalg.norm(t)

    def boundary_length(self) -> float:
        r1, r2, _ = self.ellipsoid.semi_axes
        return ellipse_circumference(r1, r2)


@dataclass
class GeodesicState:
    """Phase point of the geodesic flow: surface point x and tangent vector v."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)

    def copy(self) -> "GeodesicState":
        return GeodesicState(self.x.copy(), self.v.copy())


def state_residuals(e: Ellipsoid, s: GeodesicState) -> tuple[float, float, float]:
    """(constraint, tangency, speed) residuals of a phase point."""
    g = e.gradient(s.x)
    return (
        abs(e.quadric(s.x) - 1.0),
        abs(float(np.dot(g, s.v))) / float(np.linalg.norm(g)),
        abs(float(np.linalg.norm(s.v)) - 1.0),
    )


def validate_state(e: Ellipsoid, s: GeodesicState, tol: float = TOL_CONSTRAINT):
    """Raise if the state violates the surface/tangency/unit-speed invariants."""
    rc, rt, rs = state_residuals(e, s)
    if rc > tol or rt > tol or rs > tol:
        raise ValueError(
            f"invalid geodesic state: constraint {rc:.2e}, tangency {rt:.2e}, "
            f"speed {rs:.2e} exceed tolerance {tol:.1e}"
        )


def agm_elliptic_e(m: float) -> float:
    """Complete elliptic integral of the second kind E(m), parameter m = k^2,
    by the arithmetic-geometric-mean iteration (quadratically convergent)."""
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"parameter must lie in [0, 1], got {m}")
    if m == 1.0:
        return 1.0
    a, b = 1.0, math.sqrt(1.0 - m)
    c_sum = 0.5 * m  # 2^(n-1) * c_n^2 accumulated, starting at n = 0 with c_0^2 = m
    pow2 = 0.5
    for _ in range(64):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        pow2 *= 2.0
        c_sum += pow2 * c * c
        if c < 1e-17:
            break
    k_complete = math.pi / (2.0 * a)
    return k_complete * (1.0 - c_sum)


def ellipse_circumference(alpha: float, beta: float) -> float:
    """Perimeter of the ellipse with semi-axes alpha, beta (order-independent)."""
    if not (alpha > 0 and beta > 0) or not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ValueError(f"semi-axes must be positive, got ({alpha}, {beta})")
    big, small = (alpha, beta) if alpha >= beta else (beta, alpha)
    m = 1.0 - (small / big) ** 2
    return 4.0 * big * agm_elliptic_e(m)


def principal_curve_lengths(h: HemiEllipsoid) -> tuple[float, float, float]:
    """(l1, l2, l3): the two half-ellipses in {x1 = 0}, {x2 = 0} (free boundary
    geodesics) and the full boundary ellipse in {x3 = 0} (a closed geodesic)."""
    r1, r2, r3 = h.ellipsoid.semi_axes
    return (
        0.5 * ellipse_circumference(r2, r3),
        0.5 * ellipse_circumference(r1, r3),
        ellipse_circumference(r1, r2),
    )


@dataclass
class CalibrationResult:
    mu: float
    ellipsoid: Ellipsoid
    residuals: tuple[float, float, float]
    iterations: int

    @property
    def hemi(self) -> HemiEllipsoid:
        return HemiEllipsoid(self.ellipsoid)


def _lengths_from_semi_axes(r) -> np.ndarray:
    return np.array(
        [
            0.5 * ellipse_circumference(r[1], r[2]),
            0.5 * ellipse_circumference(r[0], r[2]),
            ellipse_circumference(r[0], r[1]),
        ]
    )


def calibrate(
    mu: float,
    tol: float = TOL_CALIBRATION,
    max_iterations: int = 30,
) -> CalibrationResult:
    """Find quadric coefficients realizing lengths (pi, pi + mu, 2*pi + mu).

    Newton iteration on the semi-axes with a central-difference Jacobian,
    started from the first-order perturbation of the round sphere. At mu = 0
    the round sphere is returned exactly, without iterating.
    """
    if not 0.0 <= mu < 0.5:
        raise ValueError(f"mu must lie in [0, 0.5), got {mu}")
    if mu == 0.0:
        return CalibrationResult(0.0, Ellipsoid.unit_sphere(), (0.0, 0.0, 0.0), 0)

    targets = np.array([math.pi, math.pi + mu, 2.0 * math.pi + mu])
    # First-order solution of the linearized length map at the round point.
    r = np.array(
        [
            1.0 + 3.0 * mu / (2.0 * math.pi),
            1.0 - mu / (2.0 * math.pi),
            1.0 + mu / (2.0 * math.pi),
        ]
    )
    residuals = _lengths_from_semi_axes(r) - targets
    fd = 1e-6
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        jac = np.empty((3, 3))
        for j in range(3):
            bump = np.zeros(3)
            bump[j] = fd
            jac[:, j] = (
                _lengths_from_semi_axes(r + bump) - _lengths_from_semi_axes(r - bump)
            ) / (2.0 * fd)
        condition = np.linalg.cond(jac)
        if condition > MAX_JACOBIAN_CONDITION:
            raise CalibrationError(
                f"calibration Jacobian ill-conditioned: cond = {condition:.3e}",
                residuals=tuple(residuals),
                iterations=iterations,
            )
        r = r + np.linalg.solve(jac, -residuals)
        residuals = _lengths_from_semi_axes(r) - targets
        if np.max(np.abs(residuals)) < 1e-12:
            break
    if np.max(np.abs(residuals)) > tol:
        raise CalibrationError(
            f"no convergence after {iterations} iterations; "
            f"residuals {tuple(residuals)}",
            residuals=tuple(residuals),
            iterations=iterations,
        )
    ellipsoid = Ellipsoid(tuple(1.0 / (ri * ri) for ri in r))
    return CalibrationResult(mu, ellipsoid, tuple(residuals), iterations)


def _flow_rhs(a1, a2, a3):
    """Right-hand side of the constrained flow x'' = -(v^T H v / |grad Q|^2) grad Q."""

    def rhs(t, y):
        x1, x2, x3, v1, v2, v3 = y
        g1, g2, g3 = 2.0 * a1 * x1, 2.0 * a2 * x2, 2.0 * a3 * x3
        lam = -2.0 * (a1 * v1 * v1 + a2 * v2 * v2 + a3 * v3 * v3) / (
            g1 * g1 + g2 * g2 + g3 * g3
        )
        return (v1, v2, v3, lam * g1, lam * g2, lam * g3)

    return rhs


def _ivp_tolerances(tol):
    rtol = max(min(1e-10, tol * 1e-2), 1e-13)
    return rtol, rtol * 1e-2


def integrate_geodesic(
    e: Ellipsoid,
    s0: GeodesicState,
    arc_length: float,
    tol: float = TOL_CONSTRAINT,
    chunk: float = 1.0,
):
    """Advance the geodesic flow by arc_length at unit speed.

    Adaptive high-order integration (DOP853) in chunks, re-projecting the
    point onto the surface and the velocity onto the unit tangent bundle
    after every chunk. Returns (end state, traversed length).
    """
    if arc_length <= 0:
        raise ValueError("arc_length must be positive")
    validate_state(e, s0, tol)
    rhs = _flow_rhs(*e.a)
    rtol, atol = _ivp_tolerances(tol)
    x = e.project_point(s0.x)
    v = e.project_tangent(x, s0.v)
    remaining = float(arc_length)
    while remaining > 0.0:
        step = min(chunk, remaining)
        sol = solve_ivp(
            rhs,
            (0.0, step),
            np.concatenate([x, v]),
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=False,
        )
        if not sol.success:
            raise GeodesicFlowError(f"integration failed: {sol.message}")
        y = sol.y[:, -1]
        x_raw, v_raw = y[:3], y[3:]
        drift = max(
            abs(e.quadric(x_raw) - 1.0), abs(float(np.linalg.norm(v_raw)) - 1.0)
        )
        if drift > 10.0 * tol:
            raise GeodesicFlowError(
                f"invariant violation {drift:.2e} exceeds 10 * tol = {10 * tol:.1e}"
            )
        x = e.project_point(x_raw)
        v = e.project_tangent(x, v_raw)
        remaining -= step
    return GeodesicState(x, v), float(arc_length)


def joachimsthal(e: Ellipsoid, s: GeodesicState) -> float:
    """First integral of ellipsoid geodesic flow: product of the support
    distance of the tangent plane and the conjugate semi-diameter,
    J = 1 / (|diag(a) x| * sqrt(v^T diag(a) v))."""
    a = np.asarray(e.a)
    return 1.0 / (
        float(np.linalg.norm(a * s.x)) * math.sqrt(float(np.dot(s.v, a * s.v)))
    )
