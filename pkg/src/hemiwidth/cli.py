"""Command-line surface: computation commands, verification suites,
machine-readable reports, and figure emission.

Exit status: 0 when every check passes, 1 when any check fails, 2 for usage
errors (bad arguments, unknown tolerance names, violated preconditions).
Relative output paths resolve against $HEMIWIDTH_OUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import billiards as bl
from . import crofton as cr
from . import ellipsoid as el
from . import widths as wd
from .checks import Check, CheckReport
from .reporting import (
    DEFAULT_SEED,
    DEFAULT_TOLERANCES,
    Report,
    RunConfig,
    UnknownToleranceError,
)

USAGE_ERROR = 2


def _parse_tolerances(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UnknownToleranceError(f"tolerance override must be NAME=VALUE, got {pair!r}")
        name, _, value = pair.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UnknownToleranceError(f"tolerance value {value!r} is not a number")
    return out


def parse_poly_spec(text: str) -> cr.BivariatePolynomial:
    """Parse the compact form "c:i,j=value;c:i,j=value;..."."""
    terms = {}
    degree = 0
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if not chunk.startswith("c:"):
            raise ValueError(f"bad polynomial term {chunk!r}; expected c:i,j=value")
        body = chunk[2:]
        exps, _, value = body.partition("=")
        i_str, _, j_str = exps.partition(",")
        try:
            i, j, v = int(i_str), int(j_str), float(value)
        except ValueError:
            raise ValueError(f"bad polynomial term {chunk!r}; expected c:i,j=value")
        terms[(i, j)] = v
        degree = max(degree, i + j)
    if not terms:
        raise ValueError("empty polynomial specification")
    return cr.BivariatePolynomial.from_terms(degree, terms)


def load_poly_file(path: str) -> cr.BivariatePolynomial:
    """JSON schema: {"degree": d, "coefficients": [...]} with the triangular
    coefficient list ordered by total degree, then x-power descending."""
    with open(path) as fh:
        data = json.load(fh)
    return cr.BivariatePolynomial(int(data["degree"]), np.asarray(data["coefficients"]))


def _resolve_out(path_str):
    if path_str is None:
        return None
    path = Path(path_str)
    base = os.environ.get("HEMIWIDTH_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _plot_path(out_path, command, suffix):
    if out_path is not None:
        return out_path.with_name(f"{out_path.stem}_{suffix}.svg")
    base = Path(os.environ.get("HEMIWIDTH_OUT_DIR", "."))
    base.mkdir(parents=True, exist_ok=True)
    return base / f"{command}_{suffix}.svg"


# ---------------------------------------------------------------------------
# Subcommand implementations. Each returns a Report.
# ---------------------------------------------------------------------------

_WIDTH_FUNCS = {
    "hemisphere": wd.hemisphere_width,
    "sphere": wd.sphere_width,
    "rp2": wd.rp2_width,
}

_PAPER_VALUE_CHECKS = {
    "hemisphere": ("hemisphere-width-values", [1, 1, 2, 2, 2, 3, 3, 3, 3]),
    "sphere": ("sphere-width-values", [2, 2, 2, 4]),
    "rp2": ("rp2-width-values", [2, 2, 4]),
}


def cmd_spectrum(args, config: RunConfig) -> Report:
    if args.p_max < 1:
        raise ValueError("p-max must be at least 1")
    width_fn = _WIDTH_FUNCS[args.surface]
    values = [width_fn(p) for p in range(1, args.p_max + 1)]
    per_p = [
        (p, w.pi_coeff, w.mu_coeff, str(w), w.value())
        for p, w in zip(range(1, args.p_max + 1), values)
    ]
    report = Report(
        command="spectrum",
        inputs={"surface": args.surface, "p_max": args.p_max},
        results={"per_p": per_p},
        seed=config.seed,
        tolerances=config.tolerances,
    )
    check_name, expected = _PAPER_VALUE_CHECKS[args.surface]
    upto = min(args.p_max, len(expected))
    got = [w.pi_coeff for w in values[:upto]]
    report.checks.append(
        Check(check_name, got == expected[:upto], got, expected[:upto])
    )
    if args.surface == "hemisphere":
        bad = [
            p
            for p, w in zip(range(1, args.p_max + 1), values)
            if w.pi_coeff != wd.degree_index(p)
        ]
        report.checks.append(
            Check(
                "width-matches-degree-index",
                not bad,
                bad[:5] or "all p",
                "pi_coeff == degree_index(p)",
            )
        )
    if config.plot:
        from . import plots

        out = _plot_path(_resolve_out(config.output_path), "spectrum", "staircase")
        plots.plot_width_staircase(list(range(1, args.p_max + 1)), values, args.surface, out)
        report.results["figure"] = str(out)
    return report


def cmd_counting(args, config: RunConfig) -> Report:
    inner = wd.verify_counting_identity(args.d)
    table = wd.enumerate_length_spectrum(args.d)
    report = Report(
        command="counting",
        inputs={"d": args.d},
        results={
            "count": table.total_count,
            "values": [str(v) for v in table.values] if args.d <= 6 else
            f"{table.total_count} values (suppressed; d > 6)",
        },
        checks=list(inner.checks),
        notes=inner.notes,
        seed=config.seed,
        tolerances=config.tolerances,
    )
    return report


def cmd_calibrate(args, config: RunConfig) -> Report:
    tol = config.tol("calibration")
    result = el.calibrate(args.mu, tol=tol)
    lengths = el.principal_curve_lengths(result.hemi)
    report = Report(
        command="calibrate",
        inputs={"mu": args.mu},
        results={
            "quadric_coefficients": list(result.ellipsoid.a),
            "semi_axes": list(result.ellipsoid.semi_axes),
            "achieved_lengths": list(lengths),
            "target_lengths": [math.pi, math.pi + args.mu, 2 * math.pi + args.mu],
            "iterations": result.iterations,
        },
        seed=config.seed,
        tolerances=config.tolerances,
    )
    worst = max(abs(r) for r in result.residuals)
    report.checks.append(Check("calibration-residuals", worst <= tol, worst, tol))
    if args.mu == 0.0:
        report.checks.append(
            Check(
                "calibration-round-exact",
                result.ellipsoid.a == (1.0, 1.0, 1.0),
                list(result.ellipsoid.a),
                [1.0, 1.0, 1.0],
            )
        )
    else:
        r1, r2, r3 = result.ellipsoid.semi_axes
        report.checks.append(
            Check("calibration-axis-order", r1 > r3 > r2, [r1, r3, r2], "r1 > r3 > r2")
        )
    return report


def cmd_geodesics(args, config: RunConfig) -> Report:
    if args.mu is not None:
        surface = el.calibrate(args.mu, tol=config.tol("calibration")).ellipsoid
        surface_desc = {"mu": args.mu, "a": list(surface.a)}
    else:
        surface = el.Ellipsoid(tuple(args.a))
        surface_desc = {"a": list(surface.a)}
    tol = config.tol("constraint")
    endpoint_tol = config.tol("endpoint")
    report = Report(
        command="geodesics",
        inputs={**surface_desc, "arc": args.arc},
        results={},
        seed=config.seed,
        tolerances=config.tolerances,
    )

    sphere = el.Ellipsoid.unit_sphere()
    s0 = el.GeodesicState([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    closed, _ = el.integrate_geodesic(sphere, s0, 2.0 * math.pi, tol=tol)
    closure = float(np.linalg.norm(closed.x - s0.x) + np.linalg.norm(closed.v - s0.v))
    report.checks.append(Check("geodesic-closure", closure <= endpoint_tol, closure, endpoint_tol))

    x = surface.project_point([0.31, -0.52, 0.83])
    v = surface.project_tangent(x, [0.7, 0.2, -0.1])
    state = el.GeodesicState(x, v)
    j0 = el.joachimsthal(surface, state)
    worst_j = 0.0
    worst_drift = 0.0
    current = state
    pieces = max(int(args.arc / 0.5), 1)
    for _ in range(pieces):
        current, _ = el.integrate_geodesic(surface, current, args.arc / pieces, tol=tol)
        worst_j = max(worst_j, abs(el.joachimsthal(surface, current) - j0))
        rc, _, rs = el.state_residuals(surface, current)
        worst_drift = max(worst_drift, rc, rs)
    report.checks.append(Check("geodesic-joachimsthal", worst_j <= 1e-7, worst_j, 1e-7))
    report.checks.append(Check("geodesic-drift", worst_drift <= tol, worst_drift, tol))

    back, _ = el.integrate_geodesic(
        surface, el.GeodesicState(current.x, -current.v), args.arc, tol=tol
    )
    rev = float(np.linalg.norm(back.x - state.x))
    report.checks.append(Check("geodesic-reversibility", rev <= endpoint_tol, rev, endpoint_tol))
    report.results["joachimsthal_drift"] = worst_j
    report.results["closure_error"] = closure
    report.results["reversibility_error"] = rev

    if config.plot:
        from . import plots

        pts = [state.x.copy()]
        walker = state
        for _ in range(200):
            walker, _ = el.integrate_geodesic(surface, walker, args.arc / 200, tol=tol)
            pts.append(walker.x.copy())
        out = _plot_path(_resolve_out(config.output_path), "geodesics", "track")
        plots.plot_geodesic_track(np.asarray(pts), out)
        report.results["figure"] = str(out)
    return report


def cmd_billiards(args, config: RunConfig) -> Report:
    cal = el.calibrate(args.mu, tol=config.tol("calibration"))
    h = cal.hemi
    n_start, n_angle = args.grid
    cfg = bl.SearchConfig(
        n_start=n_start,
        n_angle=n_angle,
        max_bounces=args.max_bounces,
        workers=config.threads,
        closure_tol=config.tol("closure"),
        class_tol=config.tol("classification"),
        dedup_tol=config.tol("dedup"),
        grazing_tol=config.tol("grazing"),
    )
    results = bl.find_closed_trajectories(h, args.length_cap, cfg)
    summaries = bl.summarize_classes(results, h)
    lengths = el.principal_curve_lengths(h)
    targets = {"gamma1": lengths[0], "gamma2": lengths[1], "gamma3": lengths[2]}
    expected_labels = sorted(
        label for label, t in targets.items() if t <= args.length_cap
    )
    report = Report(
        command="billiards",
        inputs={
            "mu": args.mu,
            "length_cap": args.length_cap,
            "grid": list(args.grid),
            "max_bounces": args.max_bounces,
        },
        results={
            "classes": [
                {
                    "label": s.label,
                    "primitive_length": s.primitive_length,
                    "count": s.count,
                    "family": s.family,
                }
                for s in summaries
            ],
            "principal_lengths": list(lengths),
        },
        seed=config.seed,
        tolerances=config.tolerances,
    )
    found_labels = sorted({s.label for s in summaries})
    report.checks.append(
        Check("billiard-class-count", found_labels == expected_labels, found_labels, expected_labels)
    )
    class_tol = config.tol("class_match")
    deviations = {
        s.label: abs(s.primitive_length - targets.get(s.label, math.nan))
        for s in summaries
        if s.label in targets
    }
    worst = max(deviations.values(), default=0.0)
    report.checks.append(Check("billiard-class-lengths", worst <= class_tol, worst, class_tol))
    spurious = [s.label for s in summaries if s.label == "other"]
    report.checks.append(Check("billiard-no-spurious", not spurious, spurious or "none", "no 'other' class"))
    if args.mu > 0:
        families = [s.label for s in summaries if s.family]
        report.checks.append(
            Check("billiard-isolated", not families, families or "all isolated", "no families for mu > 0")
        )
    if config.plot:
        from . import plots

        dense = []
        for traj, cls in results[:12]:
            redo = traj
            if traj.kind != "boundary_geodesic" and traj.segments:
                # re-shoot densely for a smooth figure
                theta0 = math.asin(max(min(traj.segments[0].start.v[2], 1.0), -1.0))
                phi0 = math.atan2(
                    traj.segments[0].start.x[1] / h.ellipsoid.semi_axes[1],
                    traj.segments[0].start.x[0] / h.ellipsoid.semi_axes[0],
                )
                redo = bl.shoot_billiard(
                    h, phi0, theta0, max_length=traj.total_length + 0.1,
                    max_bounces=max(len(traj.segments), 1), dense=True,
                )
            else:
                redo = bl.boundary_trajectory(h, dense=True)
            dense.append((redo, cls))
        out = _plot_path(_resolve_out(config.output_path), "billiards", "classes")
        plots.plot_billiard_classes(h, dense, out)
        report.results["figure"] = str(out)
    return report


def _poly_from_args(args, config):
    if args.poly:
        return parse_poly_spec(args.poly), {"poly": args.poly}
    if args.poly_file:
        return load_poly_file(args.poly_file), {"poly_file": args.poly_file}
    rng = np.random.default_rng(config.seed)
    f = cr.BivariatePolynomial.random_unit(args.random, rng)
    return f, {"random_degree": args.random, "seed": config.seed}


def cmd_crofton(args, config: RunConfig) -> Report:
    f, poly_desc = _poly_from_args(args, config)
    report = Report(
        command="crofton",
        inputs={**poly_desc, "method": args.method, "order": args.order,
                "samples": args.samples, "step": args.step},
        results={"degree": f.degree, "coefficients": f.coeffs},
        seed=config.seed,
        tolerances=config.tolerances,
    )
    estimates = {}
    if args.method in ("quadrature", "both"):
        q = cr.crofton_mass(f, cr.Quadrature(args.order))
        estimates["quadrature"] = q
        report.results["quadrature_mass"] = q.value
        report.results["quadrature_degenerate_events"] = q.degenerate_events
    if args.method in ("mc", "both"):
        m = cr.crofton_mass(f, cr.MonteCarlo(args.samples, config.seed))
        estimates["monte_carlo"] = m
        report.results["monte_carlo_mass"] = m.value
        report.results["monte_carlo_standard_error"] = m.standard_error
    traced = cr.trace_level_set_length(f, step=args.step)
    report.results["traced_mass"] = traced.value
    report.results["traced_components"] = traced.sample_count
    report.results["traced_flags"] = list(traced.flags)

    reference = estimates.get("quadrature") or estimates.get("monte_carlo")
    agreement_tol = config.tol("oracle_agreement")
    if traced.flags:
        report.notes = report.notes + (
            f"tracing flagged {sorted(traced.flags)}; agreement check skipped",
        )
    else:
        denom = max(reference.value, traced.value, 1e-12)
        rel = abs(reference.value - traced.value) / denom
        slack = max(agreement_tol, 3.0 * reference.standard_error / denom)
        report.checks.append(
            Check(
                "crofton-oracle-agreement",
                rel <= slack,
                rel,
                slack,
                f"{reference.method} vs traced",
            )
        )
    known = _known_mass(f)
    if known is not None and reference is not None:
        tol = max(config.tol("quadrature_mass"), 3.0 * reference.standard_error)
        err = abs(reference.value - known)
        report.checks.append(Check("crofton-mass-value", err <= tol, err, tol))
    if config.plot:
        from . import plots

        out = _plot_path(_resolve_out(config.output_path), "crofton", "levelsets")
        plots.plot_level_sets(
            getattr(traced, "polylines", []), f"level set, degree {f.degree}", out
        )
        report.results["figure"] = str(out)
    return report


def _known_mass(f: cr.BivariatePolynomial):
    """Closed-form masses for the reference polynomials, when recognizable."""
    terms = {
        (i, j): c
        for c, (i, j) in zip(f.coeffs, cr.monomial_exponents(f.degree))
        if c != 0.0
    }
    if terms == {(1, 0): 1.0}:
        return math.pi
    if terms == {(1, 1): 1.0}:
        return 2.0 * math.pi
    if terms == {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -0.5}:
        return math.pi * math.sqrt(2.0)
    return None


def cmd_sweepout_sup(args, config: RunConfig) -> Report:
    budget = cr.SupSearchBudget(
        samples=args.samples, refine_steps=args.refine_steps, seed=config.seed
    )
    result = cr.sweepout_sup_mass(args.d, budget)
    report = Report(
        command="sweepout-sup",
        inputs={"d": args.d, "samples": args.samples, "refine_steps": args.refine_steps},
        results={
            "sup_estimate": result.value,
            "bound": result.bound,
            "argmax_coefficients": result.coeffs,
            "evaluations": result.evaluations,
        },
        seed=config.seed,
        tolerances=config.tolerances,
    )
    over = config.tol("sup_overshoot")
    att = config.tol("sup_attainment")
    report.checks.append(
        Check("chain-sup-below-bound", result.value <= result.bound + over, result.value, result.bound + over)
    )
    report.checks.append(
        Check("chain-sup-attains-bound", result.value >= result.bound - att, result.value, result.bound - att)
    )
    return report


def cmd_verify_all(args, config: RunConfig) -> Report:
    """Composite verification across every module, sized by d_max."""
    report = Report(
        command="verify-all",
        inputs={"d_max": args.d_max},
        results={},
        seed=config.seed,
        tolerances=config.tolerances,
    )

    # exact widths: reference values plus the floor-vs-bracket identity
    hemi9 = [wd.hemisphere_width(p).pi_coeff for p in range(1, 10)]
    report.checks.append(
        Check("hemisphere-width-values", hemi9 == [1, 1, 2, 2, 2, 3, 3, 3, 3], hemi9, [1, 1, 2, 2, 2, 3, 3, 3, 3])
    )
    sph4 = [wd.sphere_width(p).pi_coeff for p in range(1, 5)]
    report.checks.append(Check("sphere-width-values", sph4 == [2, 2, 2, 4], sph4, [2, 2, 2, 4]))
    bad = [p for p in range(1, 5001) if wd.hemisphere_width(p).pi_coeff != wd.degree_index(p)]
    report.checks.append(
        Check("width-matches-degree-index", not bad, bad[:5] or "p <= 5000", "pi_coeff == degree_index(p)")
    )

    counting = wd.verify_counting_identity(max(args.d_max, 3))
    report.extend(counting.checks)
    report.notes = report.notes + counting.notes

    if args.d_max >= 1:
        tol = config.tol("calibration")
        worst = 0.0
        for mu in (0.01, 0.05, 0.1, 0.2):
            worst = max(worst, max(abs(r) for r in el.calibrate(mu, tol=tol).residuals))
        report.checks.append(Check("calibration-residuals", worst <= tol, worst, tol))
        round_cal = el.calibrate(0.0)
        report.checks.append(
            Check("calibration-round-exact", round_cal.ellipsoid.a == (1.0, 1.0, 1.0),
                  list(round_cal.ellipsoid.a), [1.0, 1.0, 1.0])
        )

        sphere = el.Ellipsoid.unit_sphere()
        s0 = el.GeodesicState([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        closed, _ = el.integrate_geodesic(sphere, s0, 2.0 * math.pi)
        closure = float(np.linalg.norm(closed.x - s0.x) + np.linalg.norm(closed.v - s0.v))
        report.checks.append(Check("geodesic-closure", closure <= 1e-6, closure, 1e-6))
        tri = el.Ellipsoid((1.0, 1.1, 1.2))
        x = tri.project_point([0.31, -0.52, 0.83])
        state = el.GeodesicState(x, tri.project_tangent(x, [0.7, 0.2, -0.1]))
        j0 = el.joachimsthal(tri, state)
        cur, worst_j = state, 0.0
        for _ in range(20):
            cur, _ = el.integrate_geodesic(tri, cur, 0.5)
            worst_j = max(worst_j, abs(el.joachimsthal(tri, cur) - j0))
        report.checks.append(Check("geodesic-joachimsthal", worst_j <= 1e-7, worst_j, 1e-7))

        # Crofton closed forms under deterministic quadrature
        tol_mass = config.tol("quadrature_mass")
        hard_order = 3000
        f_lat = cr.BivariatePolynomial.from_terms(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -0.5})
        cases = [
            (cr.BivariatePolynomial.from_terms(1, {(1, 0): 1.0}), math.pi, 200),
            (f_lat, math.pi * math.sqrt(2.0), hard_order),
            (cr.BivariatePolynomial.from_terms(2, {(1, 1): 1.0}), 2.0 * math.pi, 200),
        ]
        worst_mass = max(
            abs(cr.crofton_mass(f, cr.Quadrature(order)).value - truth)
            for f, truth, order in cases
        )
        report.checks.append(Check("crofton-mass-value", worst_mass <= tol_mass, worst_mass, tol_mass))

        traced = cr.trace_level_set_length(cases[0][0], step=1e-3)
        rel = abs(traced.value - math.pi) / math.pi
        report.checks.append(
            Check("crofton-oracle-agreement", rel <= config.tol("oracle_agreement"), rel, config.tol("oracle_agreement"))
        )

        scan = cr.bezout_scan(degrees=(1, 2, 3, 4), polynomials_per_degree=4,
                              circles_per_polynomial=1500, seed=config.seed)
        report.checks.append(
            Check("bezout-bound", scan["violations"] == 0, scan["violations"], 0,
                  f"{scan['pairs']} pairs, max counts {scan['max_count']}")
        )
        report.results["bezout_pairs"] = scan["pairs"]

        for d in range(1, args.d_max + 1):
            chain = cr.verify_upper_bound_chain(
                d,
                cr.SupSearchBudget(samples=250, refine_steps=30, seed=config.seed),
            )
            for c in chain.checks:
                report.checks.append(
                    Check(c.name, c.passed, c.measured, c.threshold, f"d={d}; {c.detail}")
                )

    if args.d_max >= 2:
        cal = el.calibrate(0.05)
        cfg = bl.SearchConfig(n_start=48, n_angle=48, workers=config.threads)
        results = bl.find_closed_trajectories(cal.hemi, 7.0, cfg)
        summaries = bl.summarize_classes(results, cal.hemi)
        labels = sorted({s.label for s in summaries})
        report.checks.append(
            Check("billiard-class-count", labels == ["gamma1", "gamma2", "gamma3"],
                  labels, ["gamma1", "gamma2", "gamma3"])
        )
        lengths = el.principal_curve_lengths(cal.hemi)
        targets = dict(zip(("gamma1", "gamma2", "gamma3"), lengths))
        worst_len = max(
            (abs(s.primitive_length - targets[s.label]) for s in summaries if s.label in targets),
            default=math.inf,
        )
        report.checks.append(
            Check("billiard-class-lengths", worst_len <= config.tol("class_match"),
                  worst_len, config.tol("class_match"))
        )
        spurious = [s.label for s in summaries if s.label == "other"]
        report.checks.append(
            Check("billiard-no-spurious", not spurious, spurious or "none", "no 'other' class")
        )

    report.results["checks_total"] = len(report.checks)
    report.results["checks_failed"] = len([c for c in report.checks if not c.passed])
    return report


# ---------------------------------------------------------------------------
# Argument parsing and dispatch.
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hemiwidth",
        description="Width spectra, hemi-ellipsoid billiards, and Crofton mass "
        "estimates for polynomial sweepouts on the hemisphere.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--format", choices=("json", "csv", "text"), default="text",
                        dest="output_format", help="report format")
    common.add_argument("--out", default=None, help="write the report to this path")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes for grid/search commands")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="override a named tolerance (repeatable)")
    common.add_argument("--plot", action="store_true",
                        help="emit vector-graphics figures next to the report")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="exact width spectra")
    p.add_argument("--p-max", type=int, required=True)
    p.add_argument("--surface", choices=tuple(_WIDTH_FUNCS), default="hemisphere")
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("counting", parents=[common], help="length-spectrum counting identity")
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(fn=cmd_counting)

    p = sub.add_parser("calibrate", parents=[common], help="calibrate the perturbed metric")
    p.add_argument("--mu", type=float, required=True)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("geodesics", parents=[common], help="geodesic flow validation")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--a", type=float, nargs=3, default=(1.0, 1.1, 1.2),
                   metavar=("A1", "A2", "A3"))
    p.add_argument("--arc", type=float, default=10.0)
    p.set_defaults(fn=cmd_geodesics)

    p = sub.add_parser("billiards", parents=[common], help="closed billiard trajectory search")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--length-cap", type=float, default=7.0)
    p.add_argument("--grid", type=int, nargs=2, default=(200, 200),
                   metavar=("N_START", "N_ANGLE"))
    p.add_argument("--max-bounces", type=int, default=6)
    p.set_defaults(fn=cmd_billiards)

    p = sub.add_parser("crofton", parents=[common], help="Crofton mass vs traced arclength")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--poly", help='compact form "c:i,j=value;..."')
    g.add_argument("--poly-file", help="JSON file {degree, coefficients}")
    g.add_argument("--random", type=int, metavar="D",
                   help="random unit-coefficient polynomial of degree D")
    p.add_argument("--method", choices=("quadrature", "mc", "both"), default="quadrature")
    p.add_argument("--order", type=int, default=600)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--step", type=float, default=2e-3)
    p.set_defaults(fn=cmd_crofton)

    p = sub.add_parser("sweepout-sup", parents=[common], help="sup-mass search over sweepout families")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--refine-steps", type=int, default=60)
    p.set_defaults(fn=cmd_sweepout_sup)

    p = sub.add_parser("verify-all", parents=[common], help="run the composite verification suite")
    p.add_argument("--d-max", type=int, default=2)
    p.set_defaults(fn=cmd_verify_all)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(
            seed=args.seed,
            tolerances=_parse_tolerances(args.tol),
            output_format=args.output_format,
            output_path=args.out,
            plot=args.plot,
            threads=args.threads,
        )
    except (UnknownToleranceError, ValueError) as exc:
        parser.error(str(exc))  # exits with status 2
    t0 = time.perf_counter()
    try:
        report: Report = args.fn(args, config)
    except (ValueError, el.CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    report.timing = time.perf_counter() - t0
    rendered = report.render(config.output_format)
    out_path = _resolve_out(config.output_path)
    if out_path is not None:
        out_path.write_text(rendered)
        print(f"wrote {out_path}")
    else:
        sys.stdout.write(rendered)
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
