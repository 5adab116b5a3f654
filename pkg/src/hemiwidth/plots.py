"""Static vector-graphics figures for the CLI report path.

Everything renders through the Agg backend straight to files (SVG by
default); there is no interactive mode.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_width_staircase",
    "plot_billiard_classes",
    "plot_level_sets",
    "plot_geodesic_track",
]


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_width_staircase(p_values, widths, surface, path):
    """Step plot of the width spectrum in units of pi."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.step(p_values, [w.pi_coeff for w in widths], where="post", lw=1.5)
    ax.set_xlabel("p")
    ax.set_ylabel(r"$\omega_p / \pi$")
    ax.set_title(f"width staircase: {surface}")
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def _boundary_xy(h, n=256):
    phi = np.linspace(0.0, 2.0 * math.pi, n)
    r1, r2, _ = h.ellipsoid.semi_axes
    return r1 * np.cos(phi), r2 * np.sin(phi)


def plot_billiard_classes(h, results, path):
    """Orthographic (x, y) projection of found trajectories over the boundary."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    bx, by = _boundary_xy(h)
    ax.plot(bx, by, "k-", lw=1.0, label="boundary")
    colors = {"gamma1": "C0", "gamma2": "C1", "gamma3": "C2", "other": "C3"}
    seen = set()
    for traj, cls in results:
        color = colors.get(cls.label, "C4")
        label = None if cls.label in seen else cls.label
        seen.add(cls.label)
        for seg in traj.segments:
            if seg.points is not None and len(seg.points) > 1:
                pts = np.asarray(seg.points)
                ax.plot(pts[:, 0], pts[:, 1], color=color, lw=1.2, label=label)
                label = None
            else:
                ax.plot(
                    [seg.start.x[0], seg.end.x[0]],
                    [seg.start.x[1], seg.end.x[1]],
                    color=color,
                    lw=0.8,
                    ls="--",
                    label=label,
                )
                label = None
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("closed billiard trajectories")
    return _finish(fig, path)


def plot_level_sets(polylines, title, path):
    """Orthographic projection of traced level-set components."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    eq = np.linspace(0.0, 2.0 * math.pi, 256)
    ax.plot(np.cos(eq), np.sin(eq), "k-", lw=1.0)
    for pts in polylines:
        pts = np.asarray(pts)
        ax.plot(pts[:, 0], pts[:, 1], lw=1.2)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    return _finish(fig, path)


def plot_geodesic_track(points, path):
    """Orthographic projection of one integrated geodesic."""
    pts = np.asarray(points)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    eq = np.linspace(0.0, 2.0 * math.pi, 256)
    ax.plot(np.cos(eq), np.sin(eq), "k--", lw=0.8, alpha=0.6)
    ax.plot(pts[:, 0], pts[:, 1], lw=1.2)
    ax.plot(pts[0, 0], pts[0, 1], "o", ms=4)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("geodesic track")
    return _finish(fig, path)
