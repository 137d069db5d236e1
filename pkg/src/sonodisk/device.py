"""Finger-mounted disk device: geometry, hinge spring, tilt equilibrium, contact.

Tilt convention
---------------
The tilt state is a 2-vector (tilt_x, tilt_y) of inclinations of the disk
surface along the device x and y axes. Positive tilt_x dips the +x edge of
the disk toward the array (the insonified side): in the untilted mount frame
the disk surface is z(u, v) = -tan(tilt_x)*u - tan(tilt_y)*v. Radiation
pressure concentrated at +x therefore produces a negative generalized torque,
a negative equilibrium tilt_x (+x edge pushed away from the array), and a
contact offset skin_gain * tilt with negative x.

The hinge is a lumped 2-axis linear rotational spring: at equilibrium
hinge_stiffness * tilt = torque(tilt) componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Pose

GRAVITY = 9.80665


@dataclass(frozen=True)
class DeviceSpec:
    """Disk device constants. Defaults follow the physical build: 15 mm
    stimulating disk, 40 mm driving disk, 1.85 g total mass.

    material_modulus (the mounting-part resin, 2.77 GPa) is provenance
    metadata only; the membrane compliance is lumped into hinge_stiffness.
    """

    r_stim: float = 0.0075
    r_drive: float = 0.020
    mass: float = 0.00185
    hinge_stiffness: float = 2.0e-3   # N*m/rad per tilt axis
    max_tilt: float = 0.35
    material_modulus: float = 2.77e9
    gravity_enabled: bool = False
    hinge_offset: tuple = (0.0, 0.0)  # disk frame, m

    def __post_init__(self):
        for name in ("r_stim", "r_drive", "mass", "hinge_stiffness"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.max_tilt < np.pi / 2:
            raise ValueError("max_tilt must lie in (0, pi/2)")
        hx, hy = self.hinge_offset
        if np.hypot(hx, hy) > self.r_drive:
            raise ValueError("hinge_offset lies outside the driving disk")


@dataclass(frozen=True)
class DeviceState:
    mount_pose: Pose
    tilt: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        t = np.asarray(self.tilt, dtype=float).reshape(2)
        t.flags.writeable = False
        object.__setattr__(self, "tilt", t)


@dataclass(frozen=True)
class ContactPoint:
    offset: np.ndarray   # (2,) m, finger-pad frame
    in_contact: bool = True
    clamped: bool = False


def tilt_rotation(tilt) -> np.ndarray:
    """Rotation of the disk body for a tilt 2-vector, about the hinge point.

    Composed as Ry(tilt_x) @ Rx(-tilt_y) so that each positive component dips
    the corresponding +axis edge toward the array.
    """
    tx, ty = float(tilt[0]), float(tilt[1])
    cx, sx = np.cos(tx), np.sin(tx)
    cy, sy = np.cos(ty), np.sin(ty)
    ry = np.array([[cx, 0.0, sx], [0.0, 1.0, 0.0], [-sx, 0.0, cx]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cy, sy], [0.0, -sy, cy]])
    return ry @ rx


def generalized_hinge_torque(torque_mount_frame) -> np.ndarray:
    """Map a 3-D torque (mount frame, about the hinge) to tilt coordinates.

    The components conjugate to (tilt_x, tilt_y) are (tau_y, -tau_x).
    """
    t = np.asarray(torque_mount_frame, dtype=float).reshape(3)
    return np.array([t[1], -t[0]])


def gravity_hinge_torque(spec: DeviceSpec, mount_rotation: np.ndarray,
                         tilt) -> np.ndarray:
    """Generalized gravity torque about the hinge (zero for a centered hinge)."""
    hx, hy = spec.hinge_offset
    com_from_hinge = tilt_rotation(tilt) @ np.array([-hx, -hy, 0.0])
    weight_mount = mount_rotation.T @ np.array([0.0, 0.0, -spec.mass * GRAVITY])
    return generalized_hinge_torque(np.cross(com_from_hinge, weight_mount))


class EquilibriumError(RuntimeError):
    """Tilt solve failed to converge; carries the last iterate."""

    def __init__(self, message, last_tilt, residual):
        super().__init__(message)
        self.last_tilt = np.asarray(last_tilt, dtype=float)
        self.residual = np.asarray(residual, dtype=float)


@dataclass(frozen=True)
class TiltSolution:
    tilt: np.ndarray
    clamped: bool
    iterations: int
    residual: np.ndarray


def equilibrium_tilt(spec: DeviceSpec,
                     torque_fn: Callable[[np.ndarray], np.ndarray],
                     tol: float = 1e-10,
                     max_iter: int = 200,
                     initial=(0.0, 0.0)) -> TiltSolution:
    """Solve hinge_stiffness * tilt = torque_fn(tilt) componentwise.

    Damped fixed-point iteration with per-component adaptive relaxation
    (Aitken estimate of the local contraction from consecutive increments).
    Iterates are clamped to the [-max_tilt, max_tilt] box; a component pinned
    at the bound with the unconstrained target outside counts as converged
    and sets the clamp flag. Raises EquilibriumError after `max_iter`
    torque evaluations without convergence.

    `tol` is the residual bound in N*m; the default is well below the 1e-8
    contract so downstream traces vary smoothly tick to tick.
    """
    k = spec.hinge_stiffness
    lo, hi = -spec.max_tilt, spec.max_tilt
    theta = np.clip(np.asarray(initial, dtype=float).reshape(2), lo, hi)
    tau = np.asarray(torque_fn(theta), dtype=float).reshape(2)
    evals = 1
    prev_step = None
    while True:
        resid = k * theta - tau
        target = tau / k
        converged = np.abs(resid) < tol
        pinned = ((theta <= lo) & (target < theta)) | ((theta >= hi) & (target > theta))
        if np.all(converged | pinned):
            return TiltSolution(tilt=theta.copy(), clamped=bool(pinned.any()),
                                iterations=evals, residual=resid.copy())
        if evals >= max_iter:
            raise EquilibriumError(
                f"tilt equilibrium did not converge after {evals} torque "
                f"evaluations (residual {np.abs(resid).max():.3e} N*m)",
                theta, resid)
        step = target - theta
        eta = np.ones(2)
        if prev_step is not None:
            for c in range(2):
                if abs(prev_step[c]) > 1e-15 and abs(step[c]) > 1e-18:
                    lam = step[c] / prev_step[c]
                    if -8.0 < lam < 0.95:
                        eta[c] = min(max(1.0 / (1.0 - lam), 0.05), 20.0)
        theta_new = np.clip(theta + eta * step, lo, hi)
        tau_new = np.asarray(torque_fn(theta_new), dtype=float).reshape(2)
        evals += 1
        resid_new = k * theta_new - tau_new
        if (np.abs(resid_new).max() > np.abs(resid).max()
                and np.any(eta != 1.0) and evals < max_iter):
            # extrapolation overshoot: fall back to the plain step
            theta_plain = np.clip(theta + step, lo, hi)
            tau_plain = np.asarray(torque_fn(theta_plain), dtype=float).reshape(2)
            evals += 1
            if np.abs(k * theta_plain - tau_plain).max() < np.abs(resid_new).max():
                theta_new, tau_new = theta_plain, tau_plain
        prev_step = step
        theta, tau = theta_new, tau_new


def contact_point(spec: DeviceSpec, tilt, skin_gain: float = 0.05) -> ContactPoint:
    """Skin contact offset for a tilt: skin_gain * tilt, clamped to r_stim."""
    offset = skin_gain * np.asarray(tilt, dtype=float).reshape(2)
    norm = np.linalg.norm(offset)
    if norm > spec.r_stim:
        return ContactPoint(offset=offset * (spec.r_stim / norm), clamped=True)
    return ContactPoint(offset=offset)


def focus_world_position(spec: DeviceSpec, state: DeviceState, x_fo: float,
                         stroke_axis=(1.0, 0.0)) -> np.ndarray:
    """World position of the focus offset x_fo along the stroke axis.

    Targets the untilted driving-disk plane (tilt moves the plane by less
    than the focal-spot scale and would make the control loop circular).
    """
    if abs(x_fo) > spec.r_drive:
        raise ValueError(f"|x_fo| = {abs(x_fo):.4g} exceeds r_drive = {spec.r_drive}")
    ax = np.asarray(stroke_axis, dtype=float).reshape(2)
    ax = ax / np.linalg.norm(ax)
    return state.mount_pose.transform_points(
        np.array([[x_fo * ax[0], x_fo * ax[1], 0.0]]))[0]
