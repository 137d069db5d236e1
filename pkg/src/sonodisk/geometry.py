"""Rigid transforms and small rotation helpers shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError(f"{name}: zero-length vector")
    return v / n


def rotation_about_axis(axis, angle_rad: float) -> np.ndarray:
    """Rotation matrix for a right-handed rotation of `angle_rad` about `axis`."""
    u = _as_unit(axis, "axis")
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    ux, uy, uz = u
    cross = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    return c * np.eye(3) + s * cross + (1.0 - c) * np.outer(u, u)


def frame_from_normal(normal, x_hint=None) -> np.ndarray:
    """Orthonormal frame (columns x, y, z) with +z along `normal`.

    The in-plane x axis follows `x_hint` projected onto the plane; without a
    hint, world +x is used (world +y when the normal is nearly parallel to x).
    """
    z = _as_unit(normal, "normal")
    if x_hint is None:
        x_hint = np.array([1.0, 0.0, 0.0])
        if abs(np.dot(z, x_hint)) > 0.9:
            x_hint = np.array([0.0, 1.0, 0.0])
    x = np.asarray(x_hint, dtype=float)
    x = x - np.dot(x, z) * z
    n = np.linalg.norm(x)
    if n < 1e-9:
        raise ValueError("x_hint is parallel to the normal")
    x = x / n
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


@dataclass(frozen=True)
class Pose:
    """Rigid transform mapping local coordinates into the world frame."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9):
            raise ValueError("rotation is not orthonormal")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    def transform_points(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts @ self.rotation.T + self.translation

    def transform_vectors(self, vecs: np.ndarray) -> np.ndarray:
        return np.asarray(vecs, dtype=float) @ self.rotation.T

    def inverse_transform_points(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return (pts - self.translation) @ self.rotation

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply `other` first, then `self`."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def translated(self, offset) -> "Pose":
        return Pose(self.rotation, self.translation + np.asarray(offset, dtype=float))
