"""Time-stepped scenario engine.

Each tick runs the full chain: finger sample -> (optional synthetic-camera
tracking) -> focus law -> focus placement -> phase solve -> radiation
force/torque -> tilt equilibrium -> contact point. Ticks carry no state
between them (the device pose is derived from the finger position), so any
tick can be recomputed in isolation and a re-run reproduces the trace
byte for byte regardless of internal parallelism.

The device is mounted on the finger: its center translates along the stroke
axis by x_fin each tick, and the focus is placed at x_fo relative to the
disk center. In synthetic-camera mode the marker is rendered at the true
device center, tracked, and the recovered coordinate drives the control law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .array import solve_focus_phases
from .control import FingerState, SurfaceProfile, apply_law, \
    emergent_curvature_radius, reconstruct_surface
from .device import (DeviceState, EquilibriumError, contact_point,
                     equilibrium_tilt, focus_world_position,
                     generalized_hinge_torque, gravity_hinge_torque,
                     tilt_rotation)
from .geometry import Pose
from .radiation import force_torque_on_disk
from .scenario import LinearSweep, SampledTrajectory, Scenario
from .tracking import render_synthetic_frame, track

TRACE_HEADER = ("t_s,x_fin_m,x_fin_tracked_m,x_fo_m,"
                "focus_x_m,focus_y_m,focus_z_m,"
                "force_x_n,force_y_n,force_z_n,"
                "torque_x_nm,torque_y_nm,tilt_x_rad,tilt_y_rad,"
                "contact_x_m,contact_y_m,clamped")


class SimulationError(RuntimeError):
    """A tick failed; carries the tick index and any partial trace."""

    def __init__(self, message, tick=None, partial_trace=None):
        super().__init__(message)
        self.tick = tick
        self.partial_trace = partial_trace or []


@dataclass(frozen=True)
class TraceRecord:
    t: float
    x_fin: float
    x_fin_tracked: float
    x_fo: float
    focus_world: np.ndarray      # (3,)
    force: np.ndarray            # (3,) N, world frame
    torque: np.ndarray           # (2,) N*m, generalized hinge torque
    tilt: np.ndarray             # (2,) rad
    contact_offset: np.ndarray   # (2,) m
    x_fo_clamped: bool
    tilt_clamped: bool
    contact_clamped: bool

    @property
    def clamp_flags(self) -> str:
        parts = []
        if self.x_fo_clamped:
            parts.append("x_fo")
        if self.tilt_clamped:
            parts.append("tilt")
        if self.contact_clamped:
            parts.append("contact")
        return "+".join(parts)


@dataclass(frozen=True)
class Summary:
    ticks: int
    duration: float
    control_rate: float
    law: str
    alpha: float
    max_abs_tilt: float
    contact_x_min: float
    contact_x_max: float
    x_fo_min: float
    x_fo_max: float
    clamp_counts: dict
    profile: Optional[SurfaceProfile]
    emergent_radius: Optional[float]
    profile_note: str = ""


@dataclass(frozen=True)
class Trace:
    records: List[TraceRecord]
    summary: Summary


def sample_finger(trajectory, t: float) -> FingerState:
    """Finger state at time t; linear or piecewise-linear interpolation."""
    if isinstance(trajectory, LinearSweep):
        if not 0.0 <= t <= trajectory.duration:
            raise ValueError(f"t = {t} outside [0, {trajectory.duration}]")
        frac = t / trajectory.duration
        x = trajectory.start + (trajectory.end - trajectory.start) * frac
        v = (trajectory.end - trajectory.start) / trajectory.duration
        return FingerState(x_fin=float(x), velocity=float(v))
    if isinstance(trajectory, SampledTrajectory):
        times, values = trajectory.times, trajectory.values
        if not times[0] <= t <= times[-1]:
            raise ValueError(f"t = {t} outside [{times[0]}, {times[-1]}]")
        x = float(np.interp(t, times, values))
        seg = min(max(int(np.searchsorted(times, t, side="right")) - 1, 0),
                  len(times) - 2)
        v = (values[seg + 1] - values[seg]) / (times[seg + 1] - times[seg])
        return FingerState(x_fin=x, velocity=float(v))
    raise TypeError(f"unknown trajectory type: {type(trajectory).__name__}")


def _stroke_axis_world(scenario: Scenario) -> np.ndarray:
    ax = scenario.stroke_axis
    return scenario.mount_pose.rotation @ np.array([ax[0], ax[1], 0.0])


def _tracked_x_fin(scenario: Scenario, device_center: np.ndarray,
                   stroke_world: np.ndarray) -> float:
    cam = scenario.camera
    pc = cam.pose.inverse_transform_points(device_center[None, :])[0]
    if pc[2] <= 1e-6:
        raise ValueError("device is behind the synthetic camera")
    intr = cam.intrinsics
    u = intr.cx + intr.fx * pc[0] / pc[2]
    v = intr.cy + intr.fy * pc[1] / pc[2]
    frame = render_synthetic_frame((u, v), cam.marker_radius_px,
                                   cam.marker_color, cam.background_color,
                                   pc[2], intr)
    found = track(frame, cam.thresholds, intr)
    if found is None:
        raise ValueError("marker tracking lost the device")
    world = cam.pose.transform_points(found[None, :])[0]
    return float(np.dot(world - scenario.mount_pose.translation, stroke_world))


def _disk_pose(scenario: Scenario, device_center: np.ndarray,
               tilt: np.ndarray) -> Pose:
    """Pose of the driving disk: mount rotation composed with the tilt
    rotation about the hinge point."""
    rm = scenario.mount_pose.rotation
    rt = tilt_rotation(tilt)
    hx, hy = scenario.device.hinge_offset
    hinge = np.array([hx, hy, 0.0])
    translation = rm @ (hinge - rt @ hinge) + device_center
    return Pose(rm @ rt, translation)


def _tick(scenario: Scenario, i: int) -> TraceRecord:
    t = i / scenario.control_rate
    fin = sample_finger(scenario.trajectory, min(t, scenario.duration))
    stroke_world = _stroke_axis_world(scenario)
    device_center = (scenario.mount_pose.translation
                     + fin.x_fin * stroke_world)
    if scenario.tracking_mode == "synthetic-camera":
        x_used = _tracked_x_fin(scenario, device_center, stroke_world)
    else:
        x_used = fin.x_fin
    x_fo, fo_clamped = apply_law(scenario.control,
                                 FingerState(x_used, fin.velocity))
    pose_t = Pose(scenario.mount_pose.rotation, device_center)
    focus_world = focus_world_position(scenario.device,
                                       DeviceState(pose_t), x_fo,
                                       scenario.stroke_axis)
    phases = solve_focus_phases(scenario.array, focus_world)
    rm = scenario.mount_pose.rotation
    evaluated = {}

    def torque_fn(tilt):
        ft = force_torque_on_disk(scenario.array, phases,
                                  _disk_pose(scenario, device_center, tilt),
                                  scenario.quadrature, scenario.reflection,
                                  hinge_offset=scenario.device.hinge_offset)
        q = generalized_hinge_torque(rm.T @ ft.torque_about_hinge)
        if scenario.device.gravity_enabled:
            q = q + gravity_hinge_torque(scenario.device, rm, tilt)
        evaluated[np.asarray(tilt, dtype=float).tobytes()] = (q, ft)
        return q

    try:
        sol = equilibrium_tilt(scenario.device, torque_fn,
                               tol=scenario.equilibrium_tol,
                               max_iter=scenario.equilibrium_max_iter)
    except EquilibriumError as err:
        raise SimulationError(f"tick {i} (t = {t}): {err}", tick=i) from err
    torque, ft = evaluated[sol.tilt.tobytes()]
    contact = contact_point(scenario.device, sol.tilt, scenario.skin_gain)
    return TraceRecord(t=t, x_fin=fin.x_fin, x_fin_tracked=x_used, x_fo=x_fo,
                       focus_world=focus_world, force=ft.force, torque=torque,
                       tilt=sol.tilt, contact_offset=contact.offset,
                       x_fo_clamped=fo_clamped, tilt_clamped=sol.clamped,
                       contact_clamped=contact.clamped)


def focus_at(scenario: Scenario, t: float = 0.0) -> np.ndarray:
    """World focus position the control law commands at time t (ideal mode)."""
    fin = sample_finger(scenario.trajectory, min(t, scenario.duration))
    stroke_world = _stroke_axis_world(scenario)
    device_center = (scenario.mount_pose.translation
                     + fin.x_fin * stroke_world)
    x_fo, _ = apply_law(scenario.control, fin)
    pose_t = Pose(scenario.mount_pose.rotation, device_center)
    return focus_world_position(scenario.device, DeviceState(pose_t), x_fo,
                                scenario.stroke_axis)


def step(scenario: Scenario, t: float) -> TraceRecord:
    """One control tick at time t, which must lie on the tick grid."""
    i = round(t * scenario.control_rate)
    if abs(t * scenario.control_rate - i) > 1e-9:
        raise ValueError(f"t = {t} is not a multiple of 1/control_rate")
    if i < 0 or i > tick_count(scenario) - 1:
        raise ValueError(f"t = {t} outside the scenario span")
    return _tick(scenario, int(i))


def tick_count(scenario: Scenario) -> int:
    """ceil(duration * control_rate) + 1 records, robust to float dust."""
    product = scenario.duration * scenario.control_rate
    nearest = round(product)
    steps = nearest if abs(product - nearest) < 1e-6 else math.ceil(product)
    return int(steps) + 1


def run(scenario: Scenario) -> Trace:
    """Run every tick; a failing tick aborts with the partial trace attached."""
    records: List[TraceRecord] = []
    n = tick_count(scenario)
    for i in range(n):
        try:
            records.append(_tick(scenario, i))
        except SimulationError as err:
            raise SimulationError(str(err), tick=i, partial_trace=records) from err
        except Exception as err:
            raise SimulationError(f"tick {i}: {err}", tick=i,
                                  partial_trace=records) from err
    return Trace(records=records, summary=summarize(scenario, records))


def summarize(scenario: Scenario, records: List[TraceRecord]) -> Summary:
    ax = scenario.stroke_axis
    tilts = np.array([r.tilt for r in records])
    contacts = np.array([r.contact_offset for r in records])
    x_fos = np.array([r.x_fo for r in records])
    x_fins = np.array([r.x_fin for r in records])
    clamp_counts = {
        "x_fo": sum(r.x_fo_clamped for r in records),
        "tilt": sum(r.tilt_clamped for r in records),
        "contact": sum(r.contact_clamped for r in records),
    }
    profile = None
    radius = None
    note = ""
    slope_along = tilts @ ax
    dx = np.diff(x_fins)
    if np.all(dx > 0):
        profile = reconstruct_surface(x_fins, slope_along)
    elif np.all(dx < 0):
        profile = reconstruct_surface(x_fins[::-1], slope_along[::-1])
    else:
        note = "finger trajectory is not monotone; no profile reconstructed"
    if profile is not None:
        radius = emergent_curvature_radius(profile)
    return Summary(ticks=len(records), duration=scenario.duration,
                   control_rate=scenario.control_rate,
                   law=scenario.control.law, alpha=scenario.control.alpha,
                   max_abs_tilt=float(np.abs(tilts).max()) if len(records) else 0.0,
                   contact_x_min=float(contacts[:, 0].min()),
                   contact_x_max=float(contacts[:, 0].max()),
                   x_fo_min=float(x_fos.min()), x_fo_max=float(x_fos.max()),
                   clamp_counts=clamp_counts, profile=profile,
                   emergent_radius=radius, profile_note=note)


def _fmt(x) -> str:
    return repr(float(x))


def write_trace_csv(records, fileobj) -> None:
    """Trace CSV; float fields use shortest round-trip formatting so equal
    runs produce byte-identical files."""
    fileobj.write(TRACE_HEADER + "\n")
    for r in records:
        fields = [r.t, r.x_fin, r.x_fin_tracked, r.x_fo,
                  r.focus_world[0], r.focus_world[1], r.focus_world[2],
                  r.force[0], r.force[1], r.force[2],
                  r.torque[0], r.torque[1], r.tilt[0], r.tilt[1],
                  r.contact_offset[0], r.contact_offset[1]]
        fileobj.write(",".join(_fmt(f) for f in fields)
                      + "," + r.clamp_flags + "\n")


def write_profile_csv(profile: SurfaceProfile, fileobj) -> None:
    fileobj.write("x_m,height_m,slope_rad\n")
    for x, h, s in zip(profile.x, profile.height, profile.slope):
        fileobj.write(f"{_fmt(x)},{_fmt(h)},{_fmt(s)}\n")


def format_summary(summary: Summary) -> str:
    lines = [
        f"ticks: {summary.ticks}",
        f"duration_s: {_fmt(summary.duration)}",
        f"control_rate_hz: {_fmt(summary.control_rate)}",
        f"law: {summary.law}",
        f"alpha: {_fmt(summary.alpha)}",
        f"max_abs_tilt_rad: {_fmt(summary.max_abs_tilt)}",
        f"contact_x_min_m: {_fmt(summary.contact_x_min)}",
        f"contact_x_max_m: {_fmt(summary.contact_x_max)}",
        f"contact_sweep_extent_m: {_fmt(summary.contact_x_max - summary.contact_x_min)}",
        f"x_fo_min_m: {_fmt(summary.x_fo_min)}",
        f"x_fo_max_m: {_fmt(summary.x_fo_max)}",
        f"clamped_ticks_x_fo: {summary.clamp_counts['x_fo']}",
        f"clamped_ticks_tilt: {summary.clamp_counts['tilt']}",
        f"clamped_ticks_contact: {summary.clamp_counts['contact']}",
    ]
    if summary.profile is not None:
        lines.append(f"profile_height_min_m: {_fmt(summary.profile.height.min())}")
        lines.append(f"profile_height_max_m: {_fmt(summary.profile.height.max())}")
        lines.append(f"emergent_curvature_radius_m: {_fmt(summary.emergent_radius)}")
    if summary.profile_note:
        lines.append(f"profile_note: {summary.profile_note}")
    return "\n".join(lines) + "\n"
