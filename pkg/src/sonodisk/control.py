"""Focus scheduling laws and virtual-surface reconstruction.

Two laws map the finger coordinate x_fin to a focus offset x_fo on the
driving disk:

* curved: x_fo = -alpha * (r_fo / r_fin) * x_fin, clamped to [-r_fo, r_fo]
* edge:   x_fo = r_fo for x_fin <= 0, else -r_fo

Integrating tan(tilt-along-stroke) over the finger coordinate reconstructs
the equivalent virtual surface the device renders (local surface orientation
is what curvature perception keys on).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAWS = ("curved", "edge")


@dataclass(frozen=True)
class ControlParams:
    r_fo: float            # max focus offset on the disk, m
    r_fin: float           # half of max finger travel, m
    alpha: float = 1.0     # focus/finger speed ratio, (0, 1]
    law: str = "curved"

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"law must be one of {LAWS}, got {self.law!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must satisfy 0 < alpha <= 1")
        if not self.r_fo > 0.0:
            raise ValueError("r_fo must be positive")
        if not self.r_fin > 0.0:
            raise ValueError("r_fin must be positive")


@dataclass(frozen=True)
class FingerState:
    x_fin: float           # signed coordinate along the stroke axis, m
    velocity: float = 0.0  # informational, m/s

    def __post_init__(self):
        if not (np.isfinite(self.x_fin) and np.isfinite(self.velocity)):
            raise ValueError("finger state must be finite")


def curved_surface_law(params: ControlParams, finger: FingerState) -> float:
    """Focus offset for curved-surface rendering; out-of-range fingers clamp."""
    raw = -params.alpha * (params.r_fo / params.r_fin) * finger.x_fin
    return float(min(max(raw, -params.r_fo), params.r_fo))


def edge_law(params: ControlParams, finger: FingerState) -> float:
    """Two-step focus offset for edge rendering; x_fin = 0 takes the +r_fo branch."""
    return params.r_fo if finger.x_fin <= 0.0 else -params.r_fo


def apply_law(params: ControlParams, finger: FingerState):
    """Dispatch on the configured law; returns (x_fo, clamped)."""
    if params.law == "edge":
        return edge_law(params, finger), False
    raw = -params.alpha * (params.r_fo / params.r_fin) * finger.x_fin
    x_fo = float(min(max(raw, -params.r_fo), params.r_fo))
    return x_fo, x_fo != raw


@dataclass(frozen=True)
class SurfaceProfile:
    x: np.ndarray        # finger coordinates, m
    height: np.ndarray   # integrated surface height, m (0 at x[0])
    slope: np.ndarray    # tilt along the stroke axis, rad


def reconstruct_surface(x_fin, tilt_along_stroke) -> SurfaceProfile:
    """Integrate slopes into the equivalent virtual surface profile.

    Heights are the cumulative trapezoidal integral of tan(tilt) over x_fin,
    anchored at zero at the first sample. x_fin must be strictly increasing.
    """
    x = np.asarray(x_fin, dtype=float).reshape(-1)
    theta = np.asarray(tilt_along_stroke, dtype=float).reshape(-1)
    if x.shape[0] != theta.shape[0]:
        raise ValueError("x_fin and tilt sequences must match in length")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    dx = np.diff(x)
    if np.any(dx <= 0.0):
        bad = int(np.argmax(dx <= 0.0))
        raise ValueError(f"x_fin must be strictly increasing (violated at index {bad + 1})")
    slopes = np.tan(theta)
    height = np.concatenate([[0.0], np.cumsum(0.5 * (slopes[1:] + slopes[:-1]) * dx)])
    return SurfaceProfile(x=x, height=height, slope=theta)


def emergent_curvature_radius(profile: SurfaceProfile) -> float:
    """Least-squares estimate of dx/d(theta) over the profile.

    For the curved law with a linear tilt response this is the radius of the
    rendered circular arc; near-discontinuous slopes (edge law) give ~0.
    Returns inf for a flat profile.
    """
    x = profile.x - profile.x.mean()
    dth = profile.slope - profile.slope.mean()
    dtheta_dx = float(np.dot(x, dth)) / float(np.dot(x, x))
    if dtheta_dx == 0.0:
        return float("inf")
    return 1.0 / dtheta_dx
