"""Radiation pressure on the driving disk and its net force/torque.

Time-averaged radiation pressure on a reflecting surface:
P = (1 + R) * |p|^2 / (2 * rho * c^2), acting along the disk normal.
The surface integral uses a polar midpoint rule over the 40 mm driving disk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array import MediumConfig, PhasePattern, TransducerArray, pressure_sums_at
from .geometry import Pose


@dataclass(frozen=True)
class ReflectionModel:
    """Acoustic reflectivity of the disk surface; 1.0 = rigid reflector."""

    reflection_coefficient: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.reflection_coefficient <= 1.0:
            raise ValueError("reflection_coefficient must lie in [0, 1]")


def radiation_pressure(p: complex, medium: MediumConfig,
                       reflection: ReflectionModel) -> float:
    """Radiation pressure (Pa) for a complex pressure amplitude `p`."""
    mag2 = p.real * p.real + p.imag * p.imag
    c = medium.speed_of_sound
    return (1.0 + reflection.reflection_coefficient) * mag2 / (2.0 * medium.air_density * c * c)


@dataclass(frozen=True)
class QuadratureRule:
    """Integration points over the disk, offsets in the disk frame (m, m^2)."""

    offsets: np.ndarray   # (M, 2)
    weights: np.ndarray   # (M,)
    total_area: float

    def __post_init__(self):
        off = np.ascontiguousarray(self.offsets, dtype=float).reshape(-1, 2)
        w = np.ascontiguousarray(self.weights, dtype=float).reshape(-1)
        if off.shape[0] != w.shape[0]:
            raise ValueError("offsets and weights must match in length")
        if abs(w.sum() - self.total_area) > 1e-9 * self.total_area:
            raise ValueError("weights do not sum to the declared area")
        off.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.shape[0]


def disk_quadrature(radius: float, n_r: int = 24, n_phi: int = 48) -> QuadratureRule:
    """Polar midpoint rule over a disk of `radius`; weights close to pi*r^2 exactly."""
    if not radius > 0.0:
        raise ValueError("radius must be positive")
    if n_r < 1 or n_phi < 3:
        raise ValueError("need n_r >= 1 and n_phi >= 3")
    dr = radius / n_r
    dphi = 2.0 * np.pi / n_phi
    r = (np.arange(n_r) + 0.5) * dr
    phi = (np.arange(n_phi) + 0.5) * dphi
    R, PHI = np.meshgrid(r, phi, indexing="ij")
    offsets = np.column_stack([(R * np.cos(PHI)).ravel(),
                               (R * np.sin(PHI)).ravel()])
    weights = (R * dr * dphi).ravel()
    return QuadratureRule(offsets=offsets, weights=weights,
                          total_area=np.pi * radius * radius)


def integrate_on_disk(rule: QuadratureRule, values: np.ndarray) -> float:
    """Weighted sum of per-point `values` over the rule."""
    return float(np.dot(rule.weights, np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class ForceTorque:
    force: np.ndarray               # (3,) N, world frame
    torque_about_hinge: np.ndarray  # (3,) N*m, world frame


def force_torque_on_disk(array: TransducerArray, phases: PhasePattern,
                         device_pose: Pose, quadrature: QuadratureRule,
                         reflection: ReflectionModel,
                         hinge_offset=(0.0, 0.0)) -> ForceTorque:
    """Net radiation force and torque about the hinge on the driving disk.

    `device_pose` is the rigid transform of the driving disk (including any
    tilt); pressure acts along the disk normal only. The hinge sits at
    `hinge_offset` (disk frame, m) from the disk center.

    Summation order over quadrature points is fixed, so results are
    deterministic regardless of internal parallelism.
    """
    off3 = np.column_stack([quadrature.offsets,
                            np.zeros(len(quadrature))])
    pts_world = device_pose.transform_points(off3)
    re, im, valid = pressure_sums_at(array, phases, pts_world)
    if not np.all(valid):
        raise ValueError("a quadrature point lies within 1e-6 m of a transducer")
    mag2 = re * re + im * im
    c = array.medium.speed_of_sound
    pressures = ((1.0 + reflection.reflection_coefficient)
                 * mag2 / (2.0 * array.medium.air_density * c * c))
    pw = pressures * quadrature.weights
    normal_world = device_pose.rotation[:, 2]
    force = pw.sum() * normal_world
    # torque = sum_q (q - hinge) x (P*w*n) = [sum_q P*w*(q - hinge)] x n
    hinge_world = device_pose.transform_points(
        np.array([[hinge_offset[0], hinge_offset[1], 0.0]]))[0]
    first_moment = (pw[:, None] * (pts_world - hinge_world[None, :])).sum(axis=0)
    torque = np.cross(first_moment, normal_world)
    return ForceTorque(force=force, torque_about_hinge=torque)
