"""Billiard dynamics on the hemi-ellipsoid: boundary reflection, shooting,
closed-trajectory search, and classification against the principal curves.

Trajectories live on the x3 >= 0 half of the quadric; the boundary is the
z = 0 section, itself a closed geodesic. Reflection happens across the
boundary tangent line inside the surface tangent plane, which for this
family of surfaces is exactly the mirror z -> -z applied to the velocity.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .ellipsoid import (
    Ellipsoid,
    GeodesicState,
    GeodesicFlowError,
    HemiEllipsoid,
    _flow_rhs,
    _ivp_tolerances,
    principal_curve_lengths,
)

__all__ = [
    "Segment",
    "BilliardTrajectory",
    "TrajectoryClass",
    "ClassSummary",
    "SearchConfig",
    "GrazingIncidenceError",
    "BoundaryEventError",
    "boundary_conormal",
    "reflect_at_boundary",
    "shoot_billiard",
    "boundary_trajectory",
    "find_closed_trajectories",
    "summarize_classes",
    "double_trajectory",
    "DoubledCurve",
]

GRAZING_TOL = 1e-6
BOUNDARY_TOL = 1e-7


class GrazingIncidenceError(RuntimeError):
    """The trajectory meets the boundary tangentially; the billiard map is
    not smooth there and the shot is rejected."""


class BoundaryEventError(RuntimeError):
    """Boundary-crossing detection failed (no bracketing sign change)."""


@dataclass
class Segment:
    start: GeodesicState
    end: GeodesicState
    length: float
    points: np.ndarray | None = None  # optional dense samples for plotting


@dataclass
class BilliardTrajectory:
    segments: list[Segment]
    reflection_points: list[np.ndarray]
    total_length: float
    closed: bool
    closure_error: float
    kind: str = "billiard"  # billiard | free_boundary | boundary_geodesic


@dataclass
class TrajectoryClass:
    label: str  # gamma1 | gamma2 | gamma3 | other
    matched_length: float
    deviation: float
    cover: int = 1


@dataclass
class ClassSummary:
    label: str
    primitive_length: float
    count: int
    family: bool
    representative: BilliardTrajectory


@dataclass
class SearchConfig:
    """Resolution and tolerance knobs for the closed-trajectory search."""

    n_start: int = 200
    n_angle: int = 200
    max_bounces: int = 6
    coarse_step: float = 0.02
    seed_cap: int = 48
    workers: int = 1
    closure_tol: float = 1e-8
    class_tol: float = 1e-6
    dedup_tol: float = 1e-3
    grazing_tol: float = GRAZING_TOL
    family_min: int = 8


def boundary_conormal(e: Ellipsoid, x) -> np.ndarray:
    """Unit vector tangent to the surface, normal to the boundary curve,
    pointing into {x3 > 0}, at a boundary point x."""
    x = np.asarray(x, dtype=float)
    a1, a2, _ = e.a
    t = np.array([-a2 * x[1], a1 * x[0], 0.0])
    t /= np.linalg.norm(t)
    n = e.gradient(x)
    n /= np.linalg.norm(n)
    nu = np.cross(n, t)
    if nu[2] < 0:
        nu = -nu
    return nu / np.linalg.norm(nu)


def reflect_at_boundary(
    e: Ellipsoid,
    s: GeodesicState,
    grazing_tol: float = GRAZING_TOL,
    require_incoming: bool = True,
) -> GeodesicState:
    """Reflect the velocity across the boundary tangent line in the tangent
    plane: v' = v - 2 <v, nu> nu for the inward conormal nu."""
    if abs(s.x[2]) > BOUNDARY_TOL:
        raise ValueError(f"state is not on the boundary: x3 = {s.x[2]:.2e}")
    nu = boundary_conormal(e, s.x)
    normal_component = float(np.dot(s.v, nu))
    if abs(normal_component) < grazing_tol * float(np.linalg.norm(s.v)):
        raise GrazingIncidenceError(
            f"grazing incidence: <v, nu> = {normal_component:.2e}"
        )
    if require_incoming and normal_component > 0:
        raise ValueError("velocity does not point out of the domain")
    return GeodesicState(s.x.copy(), s.v - 2.0 * normal_component * nu)


def _snap_to_boundary(e: Ellipsoid, x, v):
    """Place x exactly on the boundary ellipse and retangentialize v."""
    a1, a2, _ = e.a
    x = np.asarray(x, dtype=float).copy()
    x[2] = 0.0
    x[:2] /= math.sqrt(a1 * x[0] ** 2 + a2 * x[1] ** 2)
    g = e.gradient(x)
    v = np.asarray(v, dtype=float)
    v = v - (np.dot(v, g) / np.dot(g, g)) * g
    return x, v / np.linalg.norm(v)


def _integrate_to_boundary(e, x, v, max_arc, tol=1e-10, dense=False):
    """Flow until x3 crosses zero from above, refining the crossing in arc
    length; returns (x_end, v_end, arc, hit_boundary, samples)."""
    rhs = _flow_rhs(*e.a)
    rtol, atol = _ivp_tolerances(tol)
    grace = 1e-3  # leave the boundary before arming the crossing event
    samples = [np.asarray(x, dtype=float).copy()] if dense else None

    def crossing(t, y):
        return y[2]

    crossing.terminal = True
    crossing.direction = -1.0

    y = np.concatenate([x, v])
    traversed = 0.0
    if max_arc > grace:
        sol = solve_ivp(rhs, (0.0, grace), y, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise GeodesicFlowError(sol.message)
        y = sol.y[:, -1]
        traversed = grace
        if y[2] < 0:
            raise BoundaryEventError(
                "trajectory left the domain during the launch step"
            )
    remaining = max_arc - traversed
    chunk = 2.0
    while remaining > 1e-14:
        step = min(chunk, remaining)
        t_eval = np.linspace(0.0, step, max(2, int(step / 0.05) + 1)) if dense else None
        sol = solve_ivp(
            rhs,
            (0.0, step),
            y,
            method="DOP853",
            rtol=rtol,
            atol=atol,
            events=crossing,
            t_eval=t_eval,
            dense_output=False,
        )
        if not sol.success:
            raise GeodesicFlowError(sol.message)
        if dense and sol.t.size:
            samples.extend(sol.y[:3].T)
        if sol.status == 1:  # boundary hit, event refined by bracketing root solve
            t_hit = float(sol.t_events[0][0])
            y_hit = sol.y_events[0][0]
            traversed += t_hit
            x_end, v_end = _snap_to_boundary(e, y_hit[:3], y_hit[3:])
            if dense:
                samples.append(x_end.copy())
                samples = np.asarray(samples)
            return x_end, v_end, traversed, True, samples
        y = sol.y[:, -1]
        # per-chunk projection keeps the invariants at integrator accuracy
        x_p = e.project_point(y[:3])
        v_p = e.project_tangent(x_p, y[3:])
        y = np.concatenate([x_p, v_p])
        traversed += step
        remaining -= step
    if dense:
        samples = np.asarray(samples)
    return y[:3], y[3:], traversed, False, samples


def launch_state(h: HemiEllipsoid, phi: float, angle: float) -> GeodesicState:
    """Boundary state at parameter phi shooting at `angle` from the tangent."""
    x = h.boundary_point(phi)
    t = h.boundary_tangent(phi)
    nu = boundary_conormal(h.ellipsoid, x)
    return GeodesicState(x, math.cos(angle) * t + math.sin(angle) * nu)


def shoot_billiard(
    h: HemiEllipsoid,
    start: float,
    angle: float,
    max_length: float,
    max_bounces: int,
    tol: float = 1e-10,
    closed_tol: float = 1e-8,
    grazing_tol: float = GRAZING_TOL,
    dense: bool = False,
) -> BilliardTrajectory:
    """Shoot from boundary parameter `start` at `angle` in (0, pi) measured
    from the boundary tangent, reflecting at each return to the boundary.

    Crossings of {x3 = 0} are located by a bracketing sign-change refinement
    accurate to better than 1e-10 in arc length. The angle -> 0 (or pi)
    grazing limit is handled as the boundary curve itself.
    """
    if not 0.0 <= angle <= math.pi:
        raise ValueError(f"angle must lie in [0, pi], got {angle}")
    if min(angle, math.pi - angle) < grazing_tol:
        return boundary_trajectory(h, phi0=start, dense=dense)
    e = h.ellipsoid
    s0 = launch_state(h, start, angle)
    x, v = s0.x.copy(), s0.v.copy()
    segments: list[Segment] = []
    reflections: list[np.ndarray] = []
    total = 0.0
    closure_error = math.inf
    for _ in range(max_bounces):
        x_end, v_end, arc, hit, samples = _integrate_to_boundary(
            e, x, v, max_length - total, tol=tol, dense=dense
        )
        seg = Segment(
            GeodesicState(x.copy(), v.copy()),
            GeodesicState(x_end.copy(), v_end.copy()),
            arc,
            samples,
        )
        segments.append(seg)
        total += arc
        if not hit:
            break
        reflections.append(x_end.copy())
        reflected = reflect_at_boundary(
            e, GeodesicState(x_end, v_end), grazing_tol=grazing_tol
        )
        x, v = reflected.x, reflected.v
        err = float(
            np.linalg.norm(x - s0.x) + (1.0 - np.dot(v, s0.v))
        )
        closure_error = min(closure_error, err)
        if err <= closed_tol:
            break
    return BilliardTrajectory(
        segments=segments,
        reflection_points=reflections,
        total_length=total,
        closed=closure_error <= closed_tol,
        closure_error=closure_error,
        kind="billiard",
    )


def boundary_trajectory(
    h: HemiEllipsoid, phi0: float = 0.0, tol: float = 1e-10, dense: bool = False
) -> BilliardTrajectory:
    """The boundary ellipse as a closed geodesic trajectory, validated by
    integrating the flow once around and measuring the return error."""
    e = h.ellipsoid
    length = h.boundary_length()
    x0 = h.boundary_point(phi0)
    v0 = h.boundary_tangent(phi0)
    rhs = _flow_rhs(*e.a)
    rtol, atol = _ivp_tolerances(tol)
    t_eval = np.linspace(0.0, length, 257) if dense else None
    sol = solve_ivp(
        rhs,
        (0.0, length),
        np.concatenate([x0, v0]),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
    )
    if not sol.success:
        raise GeodesicFlowError(sol.message)
    y = sol.y[:, -1]
    err = float(np.linalg.norm(y[:3] - x0) + (1.0 - np.dot(y[3:], v0)))
    seg = Segment(
        GeodesicState(x0, v0),
        GeodesicState(y[:3], y[3:]),
        length,
        sol.y[:3].T.copy() if dense else None,
    )
    return BilliardTrajectory(
        segments=[seg],
        reflection_points=[],
        total_length=length,
        closed=True,
        closure_error=err,
        kind="boundary_geodesic",
    )


# ---------------------------------------------------------------------------
# Coarse grid stage: fixed-step RK4 on the whole (start, angle) grid at once.
# Scores only steer seed selection; all precision comes from the polish stage.
# ---------------------------------------------------------------------------


def _batch_rhs(a, Y):
    X, V = Y[:, :3], Y[:, 3:]
    G = 2.0 * a * X
    lam = -2.0 * (V * V * a).sum(axis=1) / (G * G).sum(axis=1)
    return np.concatenate([V, lam[:, None] * G], axis=1)


def _batch_rk4_step(a, Y, hs):
    h = hs if np.ndim(hs) == 0 else hs[:, None]
    k1 = _batch_rhs(a, Y)
    k2 = _batch_rhs(a, Y + 0.5 * h * k1)
    k3 = _batch_rhs(a, Y + 0.5 * h * k2)
    k4 = _batch_rhs(a, Y + h * k3)
    return Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _batch_project(a, Y):
    X, V = Y[:, :3], Y[:, 3:]
    X = X / np.sqrt((a * X * X).sum(axis=1))[:, None]
    G = 2.0 * a * X
    V = V - ((V * G).sum(axis=1) / (G * G).sum(axis=1))[:, None] * G
    V = V / np.linalg.norm(V, axis=1)[:, None]
    return np.concatenate([X, V], axis=1)


def _coarse_scores(h: HemiEllipsoid, cfg: SearchConfig, max_length: float):
    """Integrate every grid shot, recording closure scores after each bounce
    and the incidence defect at the first bounce (free-boundary functional).

    Returns (phi, theta, closure_score, closure_k, fbg_score) with the score
    arrays shaped (n_angle, n_start).
    """
    e = h.ellipsoid
    a = np.asarray(e.a)
    phis = np.arange(cfg.n_start) * (2.0 * math.pi / cfg.n_start)
    thetas = (np.arange(cfg.n_angle) + 0.5) * (math.pi / cfg.n_angle)
    P, T = np.meshgrid(phis, thetas)
    pf, tf = P.ravel(), T.ravel()
    n = pf.size

    r1, r2, _ = e.semi_axes
    X0 = np.column_stack([r1 * np.cos(pf), r2 * np.sin(pf), np.zeros(n)])
    tang = np.column_stack([-r1 * np.sin(pf), r2 * np.cos(pf), np.zeros(n)])
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    V0 = np.cos(tf)[:, None] * tang
    V0[:, 2] += np.sin(tf)
    Y = np.concatenate([X0, V0], axis=1)

    active = np.ones(n, dtype=bool)
    length = np.zeros(n)
    bounces = np.zeros(n, dtype=np.int64)
    closure = np.full(n, np.inf)
    closure_k = np.zeros(n, dtype=np.int64)
    fbg_end = np.full(n, np.inf)

    hstep = cfg.coarse_step
    max_steps = int(max_length / hstep) + 4
    for step_idx in range(max_steps):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Ya = Y[idx]
        Yn = _batch_rk4_step(a, Ya, hstep)
        # newly launched shots sit at z = 0 moving upward; skip their start
        crossed = (Yn[:, 2] < 0.0) & (Ya[:, 2] > 1e-12)
        if crossed.any():
            ci = np.flatnonzero(crossed)
            lo = np.zeros(ci.size)
            hi = np.full(ci.size, hstep)
            for _ in range(42):
                mid = 0.5 * (lo + hi)
                Ym = _batch_rk4_step(a, Ya[ci], mid)
                below = Ym[:, 2] < 0.0
                hi = np.where(below, mid, hi)
                lo = np.where(below, lo, mid)
            t_hit = 0.5 * (lo + hi)
            Yh = _batch_rk4_step(a, Ya[ci], t_hit)
            Yh = _batch_project(a, Yh)
            g_idx = idx[ci]
            length[g_idx] += t_hit
            # incidence angle cosine against the boundary tangent
            bt = np.column_stack(
                [-a[1] * Yh[:, 1], a[0] * Yh[:, 0], np.zeros(ci.size)]
            )
            bt /= np.linalg.norm(bt, axis=1)[:, None]
            cos_inc = (Yh[:, 3:] * bt).sum(axis=1)
            vz = Yh[:, 5]
            grazing = np.abs(vz) < cfg.grazing_tol
            # reflect: mirror the z-component of the velocity
            Yh[:, 5] = -vz
            bc = bounces[g_idx] + 1
            bounces[g_idx] = bc
            first = bc == 1
            fbg_end[g_idx[first]] = np.abs(cos_inc[first])
            score = ((Yh[:, :3] - X0[g_idx]) ** 2).sum(axis=1) + (
                (Yh[:, 3:] - V0[g_idx]) ** 2
            ).sum(axis=1)
            better = score < closure[g_idx]
            closure[g_idx[better]] = score[better]
            closure_k[g_idx[better]] = bc[better]
            Y[g_idx] = Yh
            done = grazing | (bc >= cfg.max_bounces) | (length[g_idx] >= max_length)
            active[g_idx[done]] = False
            keep = ~crossed
        else:
            keep = np.ones(idx.size, dtype=bool)
        ki = idx[keep]
        Y[ki] = Yn[keep]
        length[ki] += hstep
        active[ki[length[ki] >= max_length]] = False
        if step_idx % 25 == 24:
            live = np.flatnonzero(active)
            if live.size:
                Y[live] = _batch_project(a, Y[live])

    shape = (cfg.n_angle, cfg.n_start)
    fbg = np.cos(tf) ** 2 + np.where(np.isfinite(fbg_end), fbg_end, np.inf) ** 2
    return (
        phis,
        thetas,
        closure.reshape(shape),
        closure_k.reshape(shape),
        fbg.reshape(shape),
    )


def _local_minima(score: np.ndarray) -> list[tuple[int, int]]:
    """Strictly-local minima of a (theta, phi) score grid, phi periodic."""
    s = np.where(np.isfinite(score), score, np.inf)
    padded = np.full((s.shape[0] + 2, s.shape[1]), np.inf)
    padded[1:-1] = s
    best = np.ones_like(s, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbor = np.roll(padded, dj, axis=1)[1 + di : s.shape[0] + 1 + di]
            best &= s <= neighbor
    best &= np.isfinite(s)
    return [tuple(ij) for ij in np.argwhere(best)]


# ---------------------------------------------------------------------------
# Polish stage: Gauss-Newton on (phi, theta) driving the period-k closure
# residual (6 components) or the free-boundary orthogonality residual (2).
# ---------------------------------------------------------------------------


def _closure_residual(h, phi, theta, k, max_length, tol=1e-10):
    e = h.ellipsoid
    s0 = launch_state(h, phi, theta)
    x, v = s0.x.copy(), s0.v.copy()
    total = 0.0
    for _ in range(k):
        x_end, v_end, arc, hit, _ = _integrate_to_boundary(
            e, x, v, max_length - total, tol=tol
        )
        total += arc
        if not hit:
            return np.full(6, 1e3), total
        reflected = reflect_at_boundary(
            e, GeodesicState(x_end, v_end), require_incoming=False
        )
        x, v = reflected.x, reflected.v
    return np.concatenate([x - s0.x, v - s0.v]), total


def _fbg_residual(h, phi, theta, max_length, tol=1e-10):
    e = h.ellipsoid
    s0 = launch_state(h, phi, theta)
    x_end, v_end, arc, hit, _ = _integrate_to_boundary(
        e, s0.x, s0.v, max_length, tol=tol
    )
    if not hit:
        return np.full(2, 1e3), arc
    bt = np.array([-e.a[1] * x_end[1], e.a[0] * x_end[0], 0.0])
    bt /= np.linalg.norm(bt)
    return np.array([math.cos(theta), float(np.dot(v_end, bt))]), arc


def _gauss_newton(residual_fn, phi, theta, max_iters=14, fd=1e-7, target=1e-10):
    """Minimize |r(phi, theta)|; returns (phi, theta, |r|_inf, converged)."""
    u = np.array([phi, theta])
    r, _ = residual_fn(u[0], u[1])
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iters):
        if norm <= target:
            break
        jac = np.empty((r.size, 2))
        for j in range(2):
            bump = np.zeros(2)
            bump[j] = fd
            rp, _ = residual_fn(*(u + bump))
            jac[:, j] = (rp - r) / fd
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        scale = 1.0
        for _ in range(6):
            cand = u + scale * step
            rc, _ = residual_fn(cand[0], cand[1])
            cn = float(np.max(np.abs(rc)))
            if cn < norm:
                u, r, norm = cand, rc, cn
                break
            scale *= 0.5
        else:
            break
    return u[0], u[1], norm, norm <= target


def _polish_seed(args):
    """Worker for one seed; returns (kind, phi, theta, k, ok) or None."""
    h, seed_kind, phi, theta, k, max_length = args
    try:
        if seed_kind == "fbg":
            fn = lambda p, t: _fbg_residual(h, p, t, max_length)
        else:
            fn = lambda p, t: _closure_residual(h, p, t, k, max_length)
        phi, theta, norm, ok = _gauss_newton(fn, phi, theta)
    except (GrazingIncidenceError, BoundaryEventError, GeodesicFlowError):
        return None
    if not ok or not GRAZING_TOL < theta < math.pi - GRAZING_TOL:
        return None
    return (seed_kind, phi % (2.0 * math.pi), theta, k, norm)


def _trajectory_signature(traj: BilliardTrajectory) -> np.ndarray:
    pts = [seg.start.x for seg in traj.segments] + [traj.segments[-1].end.x]
    return np.asarray(pts)


def _same_trajectory(t1, t2, tol) -> bool:
    if abs(t1.total_length - t2.total_length) > max(10 * tol, 1e-6):
        return False
    s1, s2 = _trajectory_signature(t1), _trajectory_signature(t2)
    # same point sets up to ordering: match each endpoint to its nearest
    d12 = max(float(np.min(np.linalg.norm(s2 - p, axis=1))) for p in s1)
    d21 = max(float(np.min(np.linalg.norm(s1 - p, axis=1))) for p in s2)
    return max(d12, d21) < tol


def _primitive_reduce(traj: BilliardTrajectory, e: Ellipsoid):
    """(primitive length, cover, kind) of a closed trajectory.

    A trajectory whose every boundary incidence is orthogonal is a free
    boundary geodesic traversed back and forth; otherwise look for a cyclic
    repetition of the reflection pattern.
    """
    if traj.kind == "boundary_geodesic":
        return traj.total_length, 1, "boundary_geodesic"
    if traj.kind == "free_boundary":
        return traj.total_length, 1, "free_boundary"
    segs = traj.segments
    orthogonal = True
    for seg in segs:
        x = seg.end.x
        bt = np.array([-e.a[1] * x[1], e.a[0] * x[0], 0.0])
        bt /= np.linalg.norm(bt)
        if abs(float(np.dot(seg.end.v, bt))) > 1e-6:
            orthogonal = False
            break
    if orthogonal and segs:
        return segs[0].length, len(segs), "free_boundary"
    n = len(segs)
    starts = np.asarray([seg.start.x for seg in segs])
    for q in range(1, n):
        if n % q:
            continue
        if all(
            np.linalg.norm(starts[(i + q) % n] - starts[i]) < 1e-6 for i in range(n)
        ):
            return sum(s.length for s in segs[:q]), n // q, "billiard"
    return traj.total_length, 1, "billiard"


def classify_trajectory(
    h: HemiEllipsoid, traj: BilliardTrajectory, tol: float = 1e-6
) -> TrajectoryClass:
    """Match the primitive length against the three principal curves."""
    lengths = principal_curve_lengths(h)
    prim, cover, kind = _primitive_reduce(traj, h.ellipsoid)
    labels = ("gamma1", "gamma2", "gamma3")
    best_label, best_dev, matched = "other", math.inf, prim
    for label, ell in zip(labels, lengths):
        dev = abs(prim - ell)
        if dev < best_dev:
            best_label, best_dev, matched = label, dev, ell
    if best_dev > tol:
        return TrajectoryClass("other", prim, best_dev, cover)
    if best_label != "gamma3" and kind == "boundary_geodesic":
        best_label = "gamma3"
    return TrajectoryClass(best_label, matched, best_dev, cover)


def find_closed_trajectories(
    h: HemiEllipsoid,
    length_cap: float,
    config: SearchConfig | None = None,
) -> list[tuple[BilliardTrajectory, TrajectoryClass]]:
    """Search for closed billiard trajectories of total length <= length_cap.

    Two-stage search: a coarse (start, angle) grid scores period-1..k closure
    and free-boundary orthogonality; local minima are polished by
    Gauss-Newton to closure error <= config.closure_tol, then deduplicated by
    trajectory distance and classified against the three principal curves.
    Degenerate continua (the round case) come back as many distinct
    trajectories of identical length; see summarize_classes.
    """
    cfg = config or SearchConfig()
    e = h.ellipsoid
    results: list[tuple[BilliardTrajectory, TrajectoryClass]] = []

    boundary = boundary_trajectory(h)
    if boundary.total_length <= length_cap:
        results.append((boundary, classify_trajectory(h, boundary, cfg.class_tol)))

    max_len = length_cap + 0.5
    phis, thetas, closure, closure_k, fbg = _coarse_scores(h, cfg, max_len)

    seeds = []
    for i, j in _local_minima(fbg):
        seeds.append(("fbg", phis[j], thetas[i], 0, fbg[i, j]))
    for i, j in _local_minima(closure):
        seeds.append(("closure", phis[j], thetas[i], int(closure_k[i, j]), closure[i, j]))
    seeds.sort(key=lambda s: s[4])
    seeds = seeds[: cfg.seed_cap]

    tasks = [(h, kind, phi, theta, k, max_len) for kind, phi, theta, k, _ in seeds]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            polished = list(pool.map(_polish_seed, tasks, chunksize=1))
    else:
        polished = [_polish_seed(t) for t in tasks]

    for item in polished:
        if item is None:
            continue
        kind, phi, theta, k, _ = item
        if kind == "fbg":
            traj = shoot_billiard(
                h, phi, theta, max_length=max_len, max_bounces=1,
                closed_tol=cfg.closure_tol, grazing_tol=cfg.grazing_tol,
            )
            if not traj.segments or len(traj.reflection_points) == 0:
                continue
            seg = traj.segments[0]
            bt = np.array([-e.a[1] * seg.end.x[1], e.a[0] * seg.end.x[0], 0.0])
            bt /= np.linalg.norm(bt)
            err = abs(math.cos(theta)) + abs(float(np.dot(seg.end.v, bt)))
            if err > cfg.closure_tol:
                continue
            traj = BilliardTrajectory(
                segments=[seg],
                reflection_points=[seg.start.x.copy(), seg.end.x.copy()],
                total_length=seg.length,
                closed=True,
                closure_error=err,
                kind="free_boundary",
            )
        else:
            traj = shoot_billiard(
                h, phi, theta, max_length=max_len, max_bounces=k,
                closed_tol=cfg.closure_tol, grazing_tol=cfg.grazing_tol,
            )
            if not traj.closed or traj.closure_error > cfg.closure_tol:
                continue
        if traj.total_length > length_cap + 1e-9:
            # keep the primitive if only the cover exceeds the cap
            prim, cover, kind2 = _primitive_reduce(traj, e)
            if not (kind2 == "free_boundary" and prim <= length_cap + 1e-9):
                continue
        results.append((traj, classify_trajectory(h, traj, cfg.class_tol)))

    return _dedup(results, h, cfg)


def _dedup(results, h, cfg):
    """Collapse duplicates, preferring primitive (fewer-segment) variants."""
    kept: list[tuple[BilliardTrajectory, TrajectoryClass]] = []
    order = sorted(
        results,
        key=lambda rc: (rc[1].label, len(rc[0].segments), rc[0].closure_error),
    )
    for traj, cls in order:
        duplicate = False
        for ktraj, kcls in kept:
            if cls.label == kcls.label and _is_cover_or_same(traj, ktraj, cfg):
                duplicate = True
                break
        if not duplicate:
            kept.append((traj, cls))
    return kept


def _is_cover_or_same(t1, t2, cfg):
    """True when the two trajectories trace the same primitive curve."""
    s1, s2 = _trajectory_signature(t1), _trajectory_signature(t2)
    d12 = max(float(np.min(np.linalg.norm(s2 - p, axis=1))) for p in s1)
    d21 = max(float(np.min(np.linalg.norm(s1 - p, axis=1))) for p in s2)
    return max(d12, d21) < cfg.dedup_tol


def summarize_classes(
    results, h: HemiEllipsoid, family_min: int = 8
) -> list[ClassSummary]:
    """Group search results into classes; a class with at least family_min
    geometrically distinct members of equal length is a degenerate family."""
    groups: dict[str, list[tuple[BilliardTrajectory, TrajectoryClass]]] = {}
    for traj, cls in results:
        prim, cover, _ = _primitive_reduce(traj, h.ellipsoid)
        key = cls.label if cls.label != "other" else f"other:{round(prim, 4)}"
        groups.setdefault(key, []).append((traj, cls, prim))
    summaries = []
    for key, members in sorted(groups.items()):
        members.sort(key=lambda m: m[0].closure_error)
        traj, cls, prim = members[0]
        summaries.append(
            ClassSummary(
                label=cls.label,
                primitive_length=prim,
                count=len(members),
                family=len(members) >= family_min,
                representative=traj,
            )
        )
    return summaries


# ---------------------------------------------------------------------------
# Doubling: unfold a billiard trajectory to the full quadric.
# ---------------------------------------------------------------------------


@dataclass
class DoubledCurve:
    """A billiard trajectory unfolded across {x3 = 0} to the full surface."""

    segments: list[Segment]
    total_length: float
    seam_mismatch: float  # max |sigma(v_out) - v_in| over former reflections
    multiplicity: int
    closed: bool


_MIRROR = np.array([1.0, 1.0, -1.0])


def double_trajectory(h: HemiEllipsoid, traj: BilliardTrajectory) -> DoubledCurve:
    """Unfold a closed trajectory across the boundary plane.

    Trajectories with reflections double to a single closed curve of twice
    the length whose direction is continuous at former reflection points
    (the mirror of the outgoing velocity equals the incoming one). The
    boundary geodesic is fixed by the reflection, so its preimage is two
    coincident copies, reported with multiplicity 2.
    """
    if not traj.closed:
        raise ValueError("only closed trajectories can be doubled")
    if traj.kind == "boundary_geodesic":
        return DoubledCurve(
            segments=list(traj.segments),
            total_length=2.0 * traj.total_length,
            seam_mismatch=0.0,
            multiplicity=2,
            closed=True,
        )
    mirrored = [
        Segment(
            GeodesicState(seg.start.x * _MIRROR, seg.start.v * _MIRROR),
            GeodesicState(seg.end.x * _MIRROR, seg.end.v * _MIRROR),
            seg.length,
            None if seg.points is None else seg.points * _MIRROR,
        )
        for seg in traj.segments
    ]
    seam = 0.0
    segs = traj.segments
    for i, seg in enumerate(segs):
        v_in = seg.end.v
        if i + 1 < len(segs):
            v_out = segs[i + 1].start.v
        elif traj.kind == "free_boundary":
            v_out = v_in - 2.0 * v_in[2] * np.array([0.0, 0.0, 1.0])
        else:
            v_out = segs[0].start.v
        seam = max(seam, float(np.linalg.norm(v_out * _MIRROR - v_in)))
    return DoubledCurve(
        segments=list(traj.segments) + mirrored,
        total_length=2.0 * traj.total_length,
        seam_mismatch=seam,
        multiplicity=1,
        closed=True,
    )
