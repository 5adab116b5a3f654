"""Run configuration, report assembly, and serialization for the CLI.

JSON reports (schema "hemiwidth/1") are byte-identical across runs for a
fixed configuration: key order is explicit, floats use repr round-tripping,
and wall-clock timing is deliberately left out of the JSON payload (it lives
in the text rendering only).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .checks import Check

SCHEMA = "hemiwidth/1"

#: Fixed default seed so CI runs are reproducible without flags.
DEFAULT_SEED = 1729

#: Tolerances a user may override with --tol NAME=VALUE; anything else is a
#: usage error.
DEFAULT_TOLERANCES = {
    "calibration": 1e-8,
    "constraint": 1e-8,
    "speed": 1e-8,
    "endpoint": 1e-6,
    "closure": 1e-8,
    "classification": 1e-6,
    "class_match": 1e-5,
    "dedup": 1e-3,
    "grazing": 1e-6,
    "quadrature_mass": 1e-3 * math.pi,
    "oracle_agreement": 5e-3,
    "sup_attainment": 0.05,
    "sup_overshoot": 0.02,
}

#: One provenance string per check name: the mathematical identity or bound
#: each check verifies. Reports refuse to serialize checks that are missing
#: from this registry, so the mapping stays exactly one-to-one.
PROVENANCE = {
    "hemisphere-width-values": "hemisphere width pi*floor((-1+sqrt(1+8p))/2)",
    "sphere-width-values": "sphere width 2*pi*floor(sqrt(p))",
    "rp2-width-values": "projective-plane width 2*pi*floor((1+sqrt(1+8p))/4)",
    "width-matches-degree-index": "floor formula equals the triangular-number bracket D(d-1) <= p <= D(d)-1",
    "spectrum-count": "candidate length count (d+1)(d+4)/2 = D(d+1)-1",
    "spectrum-multiplicities": "j+1 values with pi coefficient j among n1*pi + n2*(pi+mu) + n3*(2pi+mu)",
    "spectrum-strictly-increasing": "strict monotonicity of widths in p",
    "spectrum-collapse": "mu -> 0 collapse onto the multiset {pi * f(p)}",
    "calibration-residuals": "principal curve lengths (pi, pi+mu, 2pi+mu)",
    "calibration-round-exact": "round sphere at mu = 0",
    "calibration-axis-order": "semi-axis ordering r1 > r3 > r2 forced by the length targets",
    "geodesic-closure": "great circles close after arc 2pi on the round sphere",
    "geodesic-joachimsthal": "Joachimsthal first integral of ellipsoid geodesic flow",
    "geodesic-reversibility": "geodesic flow is reversible",
    "geodesic-drift": "surface and unit-speed constraints along the flow",
    "billiard-class-count": "closed trajectories below the cap are the three principal curves",
    "billiard-class-lengths": "principal curve lengths (pi, pi+mu, 2pi+mu)",
    "billiard-no-spurious": "no closed trajectory classes besides the principal curves below the cap",
    "billiard-isolated": "principal trajectories are isolated for mu > 0",
    "crofton-mass-value": "mass = (1/8) integral of circle intersection counts",
    "crofton-oracle-agreement": "Crofton quadrature against direct arclength tracing",
    "bezout-bound": "at most 2d intersections of a degree-d curve with a great circle",
    "chain-degree-window": "f(p) = d exactly for p in [D(d-1), D(d)-1]",
    "chain-width-equals-pi-d": "hemisphere width pi*floor((-1+sqrt(1+8p))/2) equals pi*d on the window",
    "chain-sup-below-bound": "sweepout sup mass bounded by pi*d",
    "chain-sup-attains-bound": "sweepout sup mass attains pi*d empirically",
    "determinism-byte-identical": "fixed seed implies byte-identical reports",
}


class UnknownToleranceError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    tolerances: dict[str, float] = field(default_factory=dict)
    output_format: str = "text"
    output_path: str | None = None
    plot: bool = False
    threads: int = 1

    def __post_init__(self):
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise UnknownToleranceError(
                f"unknown tolerance name(s): {sorted(unknown)}; "
                f"known: {sorted(DEFAULT_TOLERANCES)}"
            )
        if self.output_format not in ("json", "csv", "text"):
            raise ValueError(f"unknown output format {self.output_format!r}")

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))


def _plain(value):
    """Down-convert numpy scalars/arrays and exotic types for serialization."""
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


@dataclass
class Report:
    command: str
    inputs: dict
    results: dict
    checks: list[Check] = field(default_factory=list)
    notes: tuple[str, ...] = ()
    timing: float | None = None
    seed: int = DEFAULT_SEED
    tolerances: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, checks):
        self.checks.extend(checks)

    def provenance(self) -> dict[str, str]:
        out = {}
        for c in self.checks:
            if c.name not in PROVENANCE:
                raise KeyError(f"check {c.name!r} has no provenance entry")
            out[c.name] = PROVENANCE[c.name]
        return out

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "command": self.command,
            "seed": self.seed,
            "tolerances": _plain(self.tolerances),
            "inputs": _plain(self.inputs),
            "results": _plain(self.results),
            "checks": [
                {
                    "name": c.name,
                    "passed": bool(c.passed),
                    "measured": _plain(c.measured),
                    "threshold": _plain(c.threshold),
                    "detail": c.detail,
                }
                for c in self.checks
            ],
            "provenance": self.provenance(),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if "per_p" in self.results:
            writer.writerow(["p", "pi_coeff", "mu_coeff", "symbolic", "value"])
            for row in self.results["per_p"]:
                writer.writerow(row)
        else:
            writer.writerow(["command", "check", "passed", "measured", "threshold"])
            for c in self.checks:
                writer.writerow(
                    [self.command, c.name, c.passed, _plain(c.measured), _plain(c.threshold)]
                )
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"== {self.command} =="]
        for key, value in self.inputs.items():
            lines.append(f"  input {key} = {_plain(value)}")
        for key, value in self.results.items():
            if key == "per_p":
                for p, k, m, sym, _ in value:
                    lines.append(f"  omega_{p} = {sym}")
            else:
                lines.append(f"  {key}: {_plain(value)}")
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(
                f"  [{status}] {c.name}: measured={_plain(c.measured)} "
                f"threshold={_plain(c.threshold)}"
                + (f" ({c.detail})" if c.detail else "")
            )
        for note in self.notes:
            lines.append(f"  note: {note}")
        if self.timing is not None:
            lines.append(f"  elapsed: {self.timing:.3f}s")
        lines.append("  overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        return self.to_text()
