"""Crofton-formula mass estimates for zero sets of bivariate polynomials on
the hemisphere, with a direct curve-tracing oracle and the sup-mass search.

A polynomial f(x, y) (no z dependence) cuts the sphere in a curve symmetric
under z -> -z, so the hemisphere mass is half the full-sphere mass and the
doubling in the integral-geometry identity is implicit:

    mass = (1/8) * integral over unit normals xi of #({f = 0} on the circle
           normal to xi)

The per-circle count is bounded by 2*deg(f), which makes pi*d a hard upper
bound for every estimator here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .checks import CheckReport
from .widths import degree_index, hemisphere_width, triangular_dimension

__all__ = [
    "BivariatePolynomial",
    "GreatCircle",
    "TrigPolynomial",
    "MassEstimate",
    "MonteCarlo",
    "Quadrature",
    "SupSearchBudget",
    "SupMassResult",
    "IdenticallyZeroRestriction",
    "TraceError",
    "monomial_exponents",
    "restrict_to_circle",
    "count_circle_intersections",
    "crofton_mass",
    "trace_level_set_length",
    "sweepout_sup_mass",
    "verify_upper_bound_chain",
    "bezout_scan",
    "sample_circle_normals",
]

log = logging.getLogger("hemiwidth.crofton")

MODULUS_TOL = 1e-8  # keep companion roots with ||root| - 1| below this
CLUSTER_TOL = 1e-7  # roots closer than this in angle count as one point
ZERO_RESTRICTION_TOL = 1e-12  # relative: restriction considered identically zero
NEAR_SINGULAR_GRADIENT = 1e-6


class IdenticallyZeroRestriction(RuntimeError):
    """The great circle lies inside the zero set (measure-zero event)."""


class TraceError(RuntimeError):
    """Curve tracing failed to close or reach the boundary within budget."""


def monomial_exponents(d: int) -> list[tuple[int, int]]:
    """Monomials x^i y^j with i+j <= d, by total degree then x-power descending:
    1; x, y; x^2, xy, y^2; ..."""
    return [(i, t - i) for t in range(d + 1) for i in range(t, -1, -1)]


@dataclass
class BivariatePolynomial:
    """Dense triangular coefficients for f(x, y) = sum c_ij x^i y^j, i+j <= d."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        expected = triangular_dimension(self.degree)
        if self.coeffs.size != expected:
            raise ValueError(
                f"degree {self.degree} needs {expected} coefficients, "
                f"got {self.coeffs.size}"
            )
        self._terms = tuple(
            (float(c), i, j)
            for c, (i, j) in zip(self.coeffs, monomial_exponents(self.degree))
            if c != 0.0
        )

    @classmethod
    def from_terms(cls, degree: int, terms: dict[tuple[int, int], float]):
        coeffs = np.zeros(triangular_dimension(degree))
        index = {exp: k for k, exp in enumerate(monomial_exponents(degree))}
        for exp, value in terms.items():
            if exp not in index:
                raise ValueError(f"monomial {exp} exceeds degree {degree}")
            coeffs[index[exp]] = value
        return cls(degree, coeffs)

    @classmethod
    def random_unit(cls, degree: int, rng: np.random.Generator):
        v = rng.standard_normal(triangular_dimension(degree))
        return cls(degree, v / np.linalg.norm(v))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for c, (i, j) in zip(self.coeffs, monomial_exponents(self.degree)):
            if c != 0.0:
                out += c * x**i * y**j
        return out

    def gradient(self, x, y):
        """(df/dx, df/dy); the ambient z-derivative vanishes identically."""
        gx = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        gy = np.zeros_like(gx)
        for c, (i, j) in zip(self.coeffs, monomial_exponents(self.degree)):
            if c == 0.0:
                continue
            if i > 0:
                gx += c * i * np.asarray(x) ** (i - 1) * np.asarray(y) ** j
            if j > 0:
                gy += c * j * np.asarray(x) ** i * np.asarray(y) ** (j - 1)
        return gx, gy

    def rotated(self, angle: float) -> "BivariatePolynomial":
        """Coefficients of f(cos*x + sin*y, -sin*x + cos*y)."""
        c, s = math.cos(angle), math.sin(angle)
        d = self.degree
        grid = np.zeros((d + 1, d + 1))

        def mono_grid(i, j):
            gx = np.zeros((d + 1, d + 1))
            gx[0, 0] = 1.0
            for _ in range(i):
                gx = _shift_mul(gx, c, s)
            for _ in range(j):
                gx = _shift_mul(gx, -s, c)
            return gx

        for coeff, (i, j) in zip(self.coeffs, monomial_exponents(d)):
            if coeff != 0.0:
                grid += coeff * mono_grid(i, j)
        new = np.array(
            [grid[i, j] for (i, j) in monomial_exponents(d)]
        )
        return BivariatePolynomial(d, new)


def _shift_mul(grid, cx, cy):
    """Multiply a coefficient grid by (cx * x + cy * y)."""
    out = np.zeros_like(grid)
    out[1:, :] += cx * grid[:-1, :]
    out[:, 1:] += cy * grid[:, :-1]
    return out


@dataclass
class GreatCircle:
    """Great circle normal to the unit vector xi, parametrized by the
    orthonormal frame (u, w): p(t) = cos(t) u + sin(t) w."""

    xi: np.ndarray
    u: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float).reshape(3)
        self.u = np.asarray(self.u, dtype=float).reshape(3)
        self.w = np.asarray(self.w, dtype=float).reshape(3)
        gram = np.array([self.xi, self.u, self.w]) @ np.array([self.xi, self.u, self.w]).T
        if not np.allclose(gram, np.eye(3), atol=1e-10):
            raise ValueError("xi, u, w must be orthonormal")

    @classmethod
    def from_normal(cls, xi) -> "GreatCircle":
        xi = np.asarray(xi, dtype=float).reshape(3)
        xi = xi / np.linalg.norm(xi)
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(xi)))] = 1.0
        u = np.cross(axis, xi)
        u /= np.linalg.norm(u)
        w = np.cross(xi, u)
        return cls(xi, u, w)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.outer(np.cos(t), self.u) + np.outer(np.sin(t), self.w)


@dataclass
class TrigPolynomial:
    """Real trig polynomial of degree <= d as Laurent coefficients c[-d..d]
    of the unit-modulus variable zeta = e^(it); c[-n] = conj(c[n])."""

    half_degree: int
    laurent: np.ndarray  # complex, length 2*half_degree + 1, index n = j - d

    def __post_init__(self):
        self.laurent = np.asarray(self.laurent, dtype=complex).reshape(-1)
        if self.laurent.size != 2 * self.half_degree + 1:
            raise ValueError("coefficient array length must be 2d + 1")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        d = self.half_degree
        n = np.arange(-d, d + 1)
        return np.real(np.exp(1j * np.outer(t, n)) @ self.laurent)

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.laurent)))


def _frames_for(xis: np.ndarray):
    """Deterministic orthonormal frames (u, w) spanning each xi-perp."""
    xis = xis / np.linalg.norm(xis, axis=1)[:, None]
    n = xis.shape[0]
    axes = np.zeros((n, 3))
    axes[np.arange(n), np.argmin(np.abs(xis), axis=1)] = 1.0
    u = np.cross(axes, xis)
    u /= np.linalg.norm(u, axis=1)[:, None]
    w = np.cross(xis, u)
    return u, w


def _laurent_mul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise convolution of Laurent coefficient arrays (N, la), (N, lb)."""
    la, lb = A.shape[1], B.shape[1]
    out = np.zeros((A.shape[0], la + lb - 1), dtype=complex)
    for k in range(lb):
        out[:, k : k + la] += A * B[:, k : k + 1]
    return out


def _restriction_coefficients(f: BivariatePolynomial, u: np.ndarray, w: np.ndarray):
    """Laurent coefficients (N, 2d+1) of f restricted to each circle."""
    d = max(f.degree, 1)
    n = u.shape[0]
    alpha = 0.5 * (u[:, 0] - 1j * w[:, 0])
    beta = 0.5 * (u[:, 1] - 1j * w[:, 1])
    one = np.ones((n, 1), dtype=complex)
    x_pows = [one]
    y_pows = [one]
    x1 = np.column_stack([np.conj(alpha), np.zeros(n), alpha])
    y1 = np.column_stack([np.conj(beta), np.zeros(n), beta])
    for _ in range(d):
        x_pows.append(_laurent_mul(x_pows[-1], x1))
        y_pows.append(_laurent_mul(y_pows[-1], y1))
    out = np.zeros((n, 2 * d + 1), dtype=complex)
    for c, (i, j) in zip(f.coeffs, monomial_exponents(f.degree)):
        if c == 0.0:
            continue
        mono = _laurent_mul(x_pows[i], y_pows[j])
        k = i + j
        out[:, d - k : d + k + 1] += c * mono
    return out


def restrict_to_circle(f: BivariatePolynomial, circle: GreatCircle) -> TrigPolynomial:
    """Restriction g(t) = f(x(t), y(t)) along p(t) = cos(t) u + sin(t) w,
    expanded exactly as a Laurent polynomial of degree <= deg(f)."""
    coeffs = _restriction_coefficients(
        f, circle.u[None, :], circle.w[None, :]
    )[0]
    return TrigPolynomial(max(f.degree, 1), coeffs)


def _cluster_counts(angles: np.ndarray, cluster_tol: float) -> np.ndarray:
    """Distinct-point counts per row of sorted angle arrays (NaN = absent)."""
    order = np.sort(angles, axis=1)  # NaNs go last
    valid = np.isfinite(order)
    nv = valid.sum(axis=1)
    diffs = order[:, 1:] - order[:, :-1]
    merges = np.nansum((diffs < cluster_tol) & np.isfinite(diffs), axis=1)
    first = order[:, 0]
    rows = np.arange(order.shape[0])
    last = np.where(nv > 0, order[rows, np.maximum(nv - 1, 0)], np.nan)
    wrap = (nv >= 2) & ((first + 2.0 * math.pi - last) < cluster_tol)
    counts = nv - merges - wrap.astype(np.int64)
    return np.where(nv > 0, np.maximum(counts, 1), 0)


def _batched_counts(
    coeffs: np.ndarray,
    scale: float,
    modulus_tol: float = MODULUS_TOL,
    cluster_tol: float = CLUSTER_TOL,
):
    """Zeros on [0, 2pi) for each restriction, via companion eigenvalues of
    the algebraic polynomial zeta^d g(zeta) on the unit circle.

    Returns (counts, zero_mask); rows flagged in zero_mask are identically
    zero restrictions and carry count 0.
    """
    n, width = coeffs.shape
    d = (width - 1) // 2
    mags = np.abs(coeffs)
    row_max = mags.max(axis=1)
    zero_mask = row_max <= ZERO_RESTRICTION_TOL * max(scale, 1e-300)
    counts = np.zeros(n, dtype=np.int64)

    # conjugate symmetry makes |c_n| = |c_-n|: trim both ends together
    half = np.zeros(n, dtype=np.int64)
    for k in range(d, 0, -1):
        live = (half == 0) & ~zero_mask
        big = live & (mags[:, d + k] > 1e-12 * row_max)
        half[big] = k
    # half == 0 rows are (numerically) constants: no zeros unless flagged zero

    for e in range(1, d + 1):
        rows = np.flatnonzero((half == e) & ~zero_mask)
        if rows.size == 0:
            continue
        m = 2 * e
        h = coeffs[rows, d - e : d + e + 1]
        h = h / h[:, -1:]
        comp = np.zeros((rows.size, m, m), dtype=complex)
        idx = np.arange(m - 1)
        comp[:, idx + 1, idx] = 1.0
        comp[:, :, m - 1] = -h[:, :m]
        roots = np.linalg.eigvals(comp)
        on_circle = np.abs(np.abs(roots) - 1.0) <= modulus_tol
        angles = np.where(on_circle, np.angle(roots) % (2.0 * math.pi), np.nan)
        counts[rows] = _cluster_counts(angles, cluster_tol)
    return counts, zero_mask


def count_circle_intersections(
    f: BivariatePolynomial,
    circle: GreatCircle,
    modulus_tol: float = MODULUS_TOL,
    cluster_tol: float = CLUSTER_TOL,
) -> int:
    """Number of distinct zeros of f on the great circle; always <= 2 deg(f)."""
    coeffs = _restriction_coefficients(f, circle.u[None, :], circle.w[None, :])
    scale = float(np.max(np.abs(f.coeffs)))
    counts, zero_mask = _batched_counts(coeffs, scale, modulus_tol, cluster_tol)
    if zero_mask[0]:
        raise IdenticallyZeroRestriction(
            "the circle lies inside the zero set of f"
        )
    count = int(counts[0])
    assert count <= 2 * f.degree, "intersection count exceeds the degree bound"
    return count


@dataclass(frozen=True)
class MonteCarlo:
    """Uniform circle normals from normalized 3D standard normals drawn from
    a seeded PCG64 generator (numpy default_rng)."""

    n: int
    seed: int


@dataclass(frozen=True)
class Quadrature:
    """Symmetric product rule: `order` Gauss-Legendre nodes in the polar
    cosine (rounded up to even, so no node sits on the equator) times a
    uniform midpoint rule in azimuth (capped; the azimuth rule converges
    much faster for these piecewise-constant integrands)."""

    order: int

    def nodes(self):
        nz = self.order + (self.order % 2)
        if nz < 4:
            raise ValueError("quadrature order must be at least 4")
        naz = 2 * min(self.order, 64) + 1
        z, wz = np.polynomial.legendre.leggauss(nz)
        phi = (np.arange(naz) + 0.5) * (2.0 * math.pi / naz)
        rho = np.sqrt(1.0 - z * z)
        xis = np.concatenate(
            [
                np.column_stack(
                    [r * np.cos(phi), r * np.sin(phi), np.full(naz, zi)]
                )
                for zi, r in zip(z, rho)
            ]
        )
        weights = np.repeat(wz * (2.0 * math.pi / naz), naz)
        return xis, weights


@dataclass
class MassEstimate:
    value: float
    standard_error: float
    sample_count: int
    method: str
    degenerate_events: int = 0
    flags: tuple[str, ...] = ()


def sample_circle_normals(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


def _counts_for_normals(f, xis, chunk=65536):
    scale = float(np.max(np.abs(f.coeffs)))
    counts = np.empty(xis.shape[0], dtype=np.int64)
    zero = np.zeros(xis.shape[0], dtype=bool)
    for lo in range(0, xis.shape[0], chunk):
        sl = slice(lo, min(lo + chunk, xis.shape[0]))
        u, w = _frames_for(xis[sl])
        coeffs = _restriction_coefficients(f, u, w)
        counts[sl], zero[sl] = _batched_counts(coeffs, scale)
    bound = 2 * f.degree
    if np.any(counts > bound):
        raise AssertionError("intersection count exceeds the degree bound")
    return counts, zero


def crofton_mass(f: BivariatePolynomial, sampler) -> MassEstimate:
    """Mass of {f = 0} on the hemisphere as (1/8) of the integral of the
    circle intersection count over all unit normals.

    Monte Carlo mode resamples circles whose restriction is identically zero
    (they lie in the zero set, a measure-zero event) and reports how many;
    quadrature mode drops such nodes and renormalizes the weights.
    Accumulation is numpy's pairwise summation, fixed order, so results are
    reproducible bit-for-bit for a given sampler.
    """
    if not np.any(f.coeffs):
        raise ValueError("f must not be identically zero")
    if isinstance(sampler, MonteCarlo):
        rng = np.random.default_rng(sampler.seed)
        xis = sample_circle_normals(sampler.n, rng)
        counts, zero = _counts_for_normals(f, xis)
        events = 0
        for _ in range(64):
            bad = np.flatnonzero(zero)
            if bad.size == 0:
                break
            events += bad.size
            xis[bad] = sample_circle_normals(bad.size, rng)
            counts[bad], zero[bad] = _counts_for_normals(f, xis[bad])
        else:
            raise IdenticallyZeroRestriction(
                "persistent identically-zero restrictions while resampling"
            )
        mean = float(np.mean(counts))
        sd = float(np.std(counts, ddof=1)) if sampler.n > 1 else 0.0
        half_pi = 0.5 * math.pi
        return MassEstimate(
            value=half_pi * mean,
            standard_error=half_pi * sd / math.sqrt(sampler.n),
            sample_count=sampler.n,
            method="monte_carlo",
            degenerate_events=events,
        )
    if isinstance(sampler, Quadrature):
        xis, weights = sampler.nodes()
        counts, zero = _counts_for_normals(f, xis)
        keep = ~zero
        events = int(zero.sum())
        total_weight = float(np.sum(weights[keep]))
        integral = float(np.sum(weights[keep] * counts[keep]))
        value = 0.125 * integral * (4.0 * math.pi / total_weight)
        return MassEstimate(
            value=value,
            standard_error=0.0,
            sample_count=int(keep.sum()),
            method="quadrature",
            degenerate_events=events,
        )
    raise TypeError(f"unknown sampler {sampler!r}")


# ---------------------------------------------------------------------------
# Direct arclength tracing: predictor-corrector continuation on the sphere.
# ---------------------------------------------------------------------------


# The tracer's inner loop runs in plain float arithmetic; numpy's small-array
# overhead dominates otherwise (hundreds of thousands of corrector steps).


def _fval(terms, x, y):
    return sum(c * x**i * y**j for c, i, j in terms)


def _fgrad(terms, x, y):
    gx = gy = 0.0
    for c, i, j in terms:
        if i:
            gx += c * i * x ** (i - 1) * y**j
        if j:
            gy += c * j * x**i * y ** (j - 1)
    return gx, gy


def _newton_to_curve(f, p, iters=12, tol=1e-13):
    """Project p onto {f = 0} on the sphere by Newton on both constraints."""
    terms = f._terms
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    for _ in range(iters):
        r0 = _fval(terms, x, y)
        r1 = 0.5 * (x * x + y * y + z * z - 1.0)
        if abs(r0) < tol and abs(r1) < tol:
            return np.array([x, y, z]), True
        gx, gy = _fgrad(terms, x, y)
        # minimal-norm Newton step for the 2x3 system [grad f; p]
        a11 = gx * gx + gy * gy
        a12 = gx * x + gy * y
        a22 = x * x + y * y + z * z
        det = a11 * a22 - a12 * a12
        if det <= 0 or not math.isfinite(det):
            return np.array([x, y, z]), False
        l0 = (a22 * r0 - a12 * r1) / det
        l1 = (a11 * r1 - a12 * r0) / det
        x -= gx * l0 + x * l1
        y -= gy * l0 + y * l1
        z -= z * l1
    ok = (
        abs(_fval(terms, x, y)) < 1e-9
        and abs(x * x + y * y + z * z - 1.0) < 1e-9
    )
    return np.array([x, y, z]), ok


def _curve_tangent(f, p):
    gx, gy = _fgrad(f._terms, float(p[0]), float(p[1]))
    tx = p[1] * 0.0 - p[2] * gy
    ty = p[2] * gx - p[0] * 0.0
    tz = p[0] * gy - p[1] * gx
    norm = math.sqrt(tx * tx + ty * ty + tz * tz)
    if norm > 0:
        return np.array([tx / norm, ty / norm, tz / norm]), norm
    return np.array([tx, ty, tz]), norm


def _surface_gradient_norm(f, p):
    gx, gy = _fgrad(f._terms, float(p[0]), float(p[1]))
    dot = gx * p[0] + gy * p[1]
    sx, sy, sz = gx - dot * p[0], gy - dot * p[1], -dot * p[2]
    return math.sqrt(sx * sx + sy * sy + sz * sz)


def _ring_zeros(f, z, n_lon):
    """Azimuths where f changes sign on the latitude circle at height z."""
    rho = math.sqrt(max(1.0 - z * z, 0.0))
    phis = np.arange(n_lon + 1) * (2.0 * math.pi / n_lon)  # wrap included
    vals = f(rho * np.cos(phis), rho * np.sin(phis))
    hits = []
    for k in np.flatnonzero(vals[:-1] * vals[1:] < 0):
        lo, hi = phis[k], phis[k + 1]
        flo = vals[k]
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            fm = float(f(rho * math.cos(mid), rho * math.sin(mid)))
            if flo * fm <= 0:
                hi = mid
            else:
                lo, flo = mid, fm
        hits.append(0.5 * (lo + hi))
    return rho, hits


def _scan_seeds(f, step, n_lat=181, n_lon=360):
    """Seed points on {f = 0}: zero crossings along latitude rings, plus one
    seed just above every equator zero (the endpoints of every component
    that meets the boundary), so boundary arcs cannot be missed."""
    seeds = []
    _, equator_hits = _ring_zeros(f, 0.0, n_lon)
    for phi in equator_hits:
        p = np.array([math.cos(phi), math.sin(phi), 0.0])
        tau, norm = _curve_tangent(f, p)
        if norm < 1e-12 or abs(tau[2]) < 1e-6:
            continue  # tangential boundary contact; the ring scan must find it
        if tau[2] < 0:
            tau = -tau
        q, ok = _newton_to_curve(f, p + 2.0 * step * tau)
        if ok and q[2] > 0:
            seeds.append(q)
    thetas = (np.arange(1, n_lat + 1)) * (0.5 * math.pi / (n_lat + 1))
    for theta in thetas:
        z = math.cos(theta)
        rho, hits = _ring_zeros(f, z, n_lon)
        for phi in hits:
            seeds.append(np.array([rho * math.cos(phi), rho * math.sin(phi), z]))
    return seeds


def _trace_from(f, seed, step, max_steps):
    """Trace one component through `seed`; returns (points, closed, flags)."""
    flags = set()
    p0, ok = _newton_to_curve(f, seed)
    if not ok:
        raise TraceError("seed does not converge onto the curve")
    tau, _ = _curve_tangent(f, p0)

    def march(p_start, tau_start):
        pts = [p_start]
        p, tau = p_start, tau_start
        for it in range(max_steps):
            if _surface_gradient_norm(f, p) < NEAR_SINGULAR_GRADIENT:
                flags.add("near-singular-gradient")
            q, ok = _newton_to_curve(f, p + step * tau)
            if not ok:
                raise TraceError("corrector failed to converge")
            tau_new, _ = _curve_tangent(f, q)
            if np.dot(tau_new, tau) < 0:
                tau_new = -tau_new
            if q[2] < 0.0:  # crossed the equator: bisect back to z = 0
                lo, hi = 0.0, 1.0
                base = pts[-1]
                for _ in range(48):
                    mid = 0.5 * (lo + hi)
                    qm, okm = _newton_to_curve(f, base + mid * (q - base))
                    if not okm:
                        break
                    if qm[2] < 0:
                        hi = mid
                    else:
                        lo = mid
                qb, okb = _newton_to_curve(f, base + lo * (q - base))
                if okb:
                    qb[2] = max(qb[2], 0.0)
                    pts.append(qb)
                return pts, "boundary"
            if (
                it > 3
                and np.linalg.norm(q - p_start) < 0.75 * step
                and np.dot(tau_new, tau_start) > 0
            ):
                # close with a single chord from the previous point; keeping
                # q too would double-count the overlap past the start
                pts.append(p_start)
                return pts, "closed"
            pts.append(q)
            p, tau = q, tau_new
        raise TraceError("step budget exhausted before closing")

    forward, status = march(p0, tau)
    if status == "closed":
        return np.asarray(forward), True, flags
    backward, status_b = march(p0, -tau)
    if status_b != "boundary":
        # one way hit the boundary, the other closed: inconsistent
        raise TraceError("component neither closes nor spans the boundary")
    pts = list(reversed(backward))[:-1] + forward
    return np.asarray(pts), False, flags


def trace_level_set_length(
    f: BivariatePolynomial,
    step: float = 2e-3,
    n_lat: int = 181,
    n_lon: int = 360,
    max_steps: int | None = None,
) -> MassEstimate:
    """Arclength of {f = 0} on the upper hemisphere by predictor-corrector
    continuation along the curve, seeded from a latitude-longitude scan.

    The predictor walks the normalized cross product of the position and the
    gradient; the corrector is a two-constraint Newton projection back onto
    {f = 0} intersected with the sphere. Components meeting the equator are
    truncated there. Near-singular gradients and suspiciously short
    components are flagged, not fixed.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if max_steps is None:
        max_steps = int(40.0 / step) + 1000
    seeds = _scan_seeds(f, step, n_lat=n_lat, n_lon=n_lon)
    scale = float(np.max(np.abs(f.coeffs)))
    flags: set[str] = set()
    # degenerate convention guard: the equator inside the zero set
    eq = f(np.cos(np.linspace(0, 2 * math.pi, 64)), np.sin(np.linspace(0, 2 * math.pi, 64)))
    if np.max(np.abs(eq)) < 1e-9 * max(scale, 1e-300):
        flags.add("boundary-degenerate")
    total = 0.0
    components = 0
    polylines = []
    while seeds:
        seed = seeds.pop(0)
        pts, closed, comp_flags = _trace_from(f, seed, step, max_steps)
        flags |= comp_flags
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        length = float(np.sum(seg))
        if length < 20.0 * step:
            flags.add("short-component")
        total += length
        components += 1
        polylines.append(pts)
        # drop seeds already explained by this component
        remaining = []
        for s in seeds:
            d = np.min(np.linalg.norm(pts - s, axis=1))
            if d > max(4.0 * step, 1e-3):
                remaining.append(s)
        seeds = remaining
    est = MassEstimate(
        value=total,
        standard_error=0.0,
        sample_count=components,
        method="traced",
        flags=tuple(sorted(flags)),
    )
    est.polylines = polylines  # kept for plotting; not part of the estimate
    return est


# ---------------------------------------------------------------------------
# Sup-mass search over the projective space of coefficient vectors.
# ---------------------------------------------------------------------------


@dataclass
class SupSearchBudget:
    samples: int = 2000
    refine_steps: int = 60
    seed: int = 0
    top_k: int = 6
    proposals: int = 5
    search_order: int = 32  # cheap scoring; the pi*d bound holds at any order
    tail_steps: int = 12  # extra ascent steps on the winner at tail_order
    tail_order: int = 200
    final_order: int = 1200
    initial: np.ndarray | None = None


@dataclass
class SupMassResult:
    degree: int
    value: float
    coeffs: np.ndarray
    bound: float
    evaluations: int


def sweepout_sup_mass(d: int, budget: SupSearchBudget | None = None) -> SupMassResult:
    """Estimate sup over unit coefficient vectors of crofton_mass by random
    restarts plus local coordinate ascent on the coefficient sphere.

    The returned value is a certified lower bound for the sup (a mass that
    was actually achieved); the counting bound makes pi*d a hard upper bound
    for every evaluation, which is asserted.
    """
    if d < 1:
        raise ValueError("degree must be at least 1")
    budget = budget or SupSearchBudget()
    rng = np.random.default_rng(budget.seed)
    dim = triangular_dimension(d)
    evaluations = 0

    def mass_of(vec, order):
        nonlocal evaluations
        evaluations += 1
        return crofton_mass(BivariatePolynomial(d, vec), Quadrature(order)).value

    def ascend(value, vec, steps, order, eta):
        for _ in range(steps):
            improved = False
            for _ in range(budget.proposals):
                probe = vec + eta * rng.standard_normal(dim)
                probe /= np.linalg.norm(probe)
                pv = mass_of(probe, order)
                if pv > value:
                    value, vec, improved = pv, probe, True
            if not improved:
                eta *= 0.6
                if eta < 1e-4:
                    break
        return value, vec

    candidates = []
    if budget.initial is not None:
        v0 = np.asarray(budget.initial, dtype=float)
        v0 = v0 / np.linalg.norm(v0)
        candidates.append((mass_of(v0, budget.search_order), v0))
    for _ in range(budget.samples):
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        candidates.append((mass_of(v, budget.search_order), v))
    candidates.sort(key=lambda mv: -mv[0])

    refined = [
        ascend(value, vec, budget.refine_steps, budget.search_order, 0.25)
        for value, vec in candidates[: budget.top_k]
    ]
    refined.sort(key=lambda mv: -mv[0])
    # short high-fidelity tail on the winner; the cheap-order ascent can
    # plateau inside its own discretization bias
    best_value, best_vec = refined[0]
    best_value = mass_of(best_vec, budget.tail_order)
    best_value, best_vec = ascend(
        best_value, best_vec, budget.tail_steps, budget.tail_order, 0.03
    )
    final_value = crofton_mass(
        BivariatePolynomial(d, best_vec), Quadrature(budget.final_order)
    ).value
    bound = math.pi * d
    assert final_value <= bound + 1e-9, "mass estimate exceeds the pi*d bound"
    return SupMassResult(
        degree=d,
        value=final_value,
        coeffs=best_vec,
        bound=bound,
        evaluations=evaluations,
    )


def verify_upper_bound_chain(d: int, budget: SupSearchBudget | None = None) -> CheckReport:
    """Compose the sweepout mass bound with the exact width formulas.

    For every p with degree_index(p) = d, the degree-d sweepout family
    witnesses width <= pi*d, and the closed-form width equals pi*d exactly.
    """
    if d < 1:
        raise ValueError("degree must be at least 1")
    report = CheckReport(subject=f"upper-bound-chain d={d}")
    p_lo, p_hi = triangular_dimension(d - 1), triangular_dimension(d) - 1
    bad_p = [p for p in range(p_lo, p_hi + 1) if degree_index(p) != d]
    report.add(
        "chain-degree-window",
        not bad_p,
        bad_p or f"p in [{p_lo}, {p_hi}]",
        f"degree_index == {d}",
    )
    bad_w = [
        p for p in range(p_lo, p_hi + 1) if hemisphere_width(p).pi_coeff != d
    ]
    report.add(
        "chain-width-equals-pi-d",
        not bad_w,
        bad_w or f"width = {d}π",
        f"pi_coeff == {d}",
    )
    result = sweepout_sup_mass(d, budget)
    report.add(
        "chain-sup-below-bound",
        result.value <= result.bound + 1e-9,
        result.value,
        result.bound,
        f"sup-mass estimate from {result.evaluations} evaluations",
    )
    report.add(
        "chain-sup-attains-bound",
        result.value >= result.bound - 0.05,
        result.value,
        result.bound - 0.05,
        "empirical attainment of the analytic bound",
    )
    return report


def bezout_scan(
    degrees=(1, 2, 3, 4),
    polynomials_per_degree: int = 300,
    circles_per_polynomial: int = 900,
    seed: int = 0,
):
    """Sample (polynomial, circle) pairs and verify count <= 2d on each.

    Returns a dict with per-degree max counts, the number of pairs tested,
    violations (always 0 unless the counting core is broken), and how many
    identically-zero restrictions were skipped.
    """
    rng = np.random.default_rng(seed)
    stats = {"pairs": 0, "violations": 0, "degenerate": 0, "max_count": {}}
    for d in degrees:
        worst = 0
        for _ in range(polynomials_per_degree):
            f = BivariatePolynomial.random_unit(d, rng)
            xis = sample_circle_normals(circles_per_polynomial, rng)
            counts, zero = _counts_for_normals(f, xis)
            stats["pairs"] += circles_per_polynomial
            stats["degenerate"] += int(zero.sum())
            stats["violations"] += int(np.sum(counts > 2 * d))
            worst = max(worst, int(counts.max()))
        stats["max_count"][d] = worst
    return stats
