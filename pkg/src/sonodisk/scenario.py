"""Scenario configuration: schema, defaults, validation, file loading.

A scenario file is YAML; every key is optional and falls back to the
defaults below (the physical build constants: 996 elements at 40 kHz,
15/40 mm disks, 1.85 g). The full schema with units is documented in
docs/scenario_schema.md. Unknown keys are rejected, as are semantic
violations (each error names the offending dotted key).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from .array import (DEFAULT_AMPLITUDE, DEFAULT_PISTON_RADIUS, Directivity,
                    GridLayout, MediumConfig, TransducerArray, build_array)
from .control import ControlParams
from .device import DeviceSpec
from .geometry import Pose, rotation_about_axis
from .radiation import QuadratureRule, ReflectionModel, disk_quadrature
from .tracking import CameraIntrinsics, ColorThresholds


class ConfigError(ValueError):
    """Scenario configuration problem; the message names the offending key."""


# Leaves are None; every key a scenario file may contain appears here.
_SCHEMA_TREE = {
    "array": {
        "nx": None, "ny": None, "pitch_m": None, "center_m": None,
        "normal": None, "x_axis": None, "amplitude_pa_m": None,
        "directivity": {"mode": None, "aperture_radius_m": None},
    },
    "medium": {
        "speed_of_sound_m_s": None, "air_density_kg_m3": None,
        "frequency_hz": None,
    },
    "device": {
        "r_stim_m": None, "r_drive_m": None, "mass_kg": None,
        "hinge_stiffness_nm_per_rad": None, "max_tilt_rad": None,
        "material_modulus_pa": None, "gravity_enabled": None,
        "hinge_offset_m": None, "skin_gain_m_per_rad": None,
        "mount": {"position_m": None,
                  "rotation": {"axis": None, "angle_rad": None}},
    },
    "control": {
        "law": None, "alpha": None, "r_fo_m": None, "r_fin_m": None,
        "stroke_axis": None,
    },
    "trajectory": {
        "kind": None, "from_m": None, "to_m": None, "duration_s": None,
        "samples": None,
    },
    "simulation": {
        "control_rate_hz": None, "tracking_mode": None,
        "quadrature": {"n_r": None, "n_phi": None},
        "reflection_coefficient": None,
        "equilibrium_tol_nm": None, "equilibrium_max_iter": None,
    },
    "camera": {
        "fx_px": None, "fy_px": None, "cx_px": None, "cy_px": None,
        "width_px": None, "height_px": None,
        "position_m": None, "rotation": {"axis": None, "angle_rad": None},
        "marker_radius_px": None, "marker_color": None,
        "background_color": None,
        "thresholds": {"r_min": None, "g_max": None, "b_max": None},
    },
    "field_map": {
        "plane": None, "center": None, "extent_m": None, "resolution": None,
    },
    "output": {
        "trace_csv": None, "profile_csv": None, "summary_txt": None,
        "field_map_csv": None, "phases_csv": None,
    },
}


def _check_unknown_keys(cfg, tree, path=""):
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path or 'scenario'}: expected a mapping")
    for key, value in cfg.items():
        here = f"{path}.{key}" if path else str(key)
        if key not in tree:
            raise ConfigError(f"unknown key: {here}")
        subtree = tree[key]
        if isinstance(subtree, dict) and value is not None:
            _check_unknown_keys(value, subtree, here)


def _section(cfg: dict, name: str) -> dict:
    value = cfg.get(name) or {}
    return value


def _num(section: dict, key: str, default, path: str, *, positive=False,
         nonneg=False) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    value = float(value)
    if positive and not value > 0.0:
        raise ConfigError(f"{path}.{key}: must be strictly positive")
    if nonneg and value < 0.0:
        raise ConfigError(f"{path}.{key}: must be non-negative")
    return value


def _int(section: dict, key: str, default, path: str, *, minimum=None) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    return value


def _vector(section: dict, key: str, default, path: str, length: int):
    value = section.get(key, default)
    if value is None:
        return None
    try:
        vec = np.asarray(value, dtype=float).reshape(length)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: expected a {length}-vector") from None
    return vec


def _rotation(section: dict, path: str) -> np.ndarray:
    rot = section.get("rotation")
    if rot is None:
        return np.eye(3)
    if not isinstance(rot, dict):
        raise ConfigError(f"{path}.rotation: expected a mapping with axis/angle_rad")
    axis = _vector(rot, "axis", None, f"{path}.rotation", 3)
    if axis is None:
        raise ConfigError(f"{path}.rotation.axis: required when rotation is given")
    angle = _num(rot, "angle_rad", None, f"{path}.rotation")
    try:
        return rotation_about_axis(axis, angle)
    except ValueError as err:
        raise ConfigError(f"{path}.rotation: {err}") from None


@dataclass(frozen=True)
class LinearSweep:
    start: float
    end: float
    duration: float


@dataclass(frozen=True)
class SampledTrajectory:
    times: np.ndarray
    values: np.ndarray

    @property
    def duration(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class CameraConfig:
    intrinsics: CameraIntrinsics
    pose: Pose
    marker_radius_px: float
    marker_color: tuple
    background_color: tuple
    thresholds: ColorThresholds


@dataclass(frozen=True)
class FieldMapSpec:
    plane: str
    center: object      # "focus" or (3,) array
    extent: tuple
    resolution: tuple


@dataclass(frozen=True)
class OutputNames:
    trace_csv: str = "trace.csv"
    profile_csv: str = "profile.csv"
    summary_txt: str = "summary.txt"
    field_map_csv: str = "field_map.csv"
    phases_csv: str = "phases.csv"


@dataclass(frozen=True)
class Scenario:
    array: TransducerArray
    device: DeviceSpec
    mount_pose: Pose
    skin_gain: float
    control: ControlParams
    stroke_axis: np.ndarray
    trajectory: object
    control_rate: float
    tracking_mode: str
    quadrature: QuadratureRule
    reflection: ReflectionModel
    equilibrium_tol: float
    equilibrium_max_iter: int
    camera: Optional[CameraConfig]
    field_map_spec: FieldMapSpec
    output_names: OutputNames

    @property
    def duration(self) -> float:
        if isinstance(self.trajectory, LinearSweep):
            return self.trajectory.duration
        return self.trajectory.duration


def _parse_medium(cfg: dict) -> MediumConfig:
    sec = _section(cfg, "medium")
    try:
        return MediumConfig(
            speed_of_sound=_num(sec, "speed_of_sound_m_s", 346.0, "medium", positive=True),
            air_density=_num(sec, "air_density_kg_m3", 1.20, "medium", positive=True),
            frequency=_num(sec, "frequency_hz", 40000.0, "medium", positive=True))
    except ValueError as err:
        raise ConfigError(f"medium: {err}") from None


def _parse_array(cfg: dict, medium: MediumConfig) -> TransducerArray:
    sec = _section(cfg, "array")
    dsec = sec.get("directivity") or {}
    mode = dsec.get("mode", "omnidirectional")
    if mode not in ("omnidirectional", "piston"):
        raise ConfigError("array.directivity.mode: expected omnidirectional or piston")
    aperture = _num(dsec, "aperture_radius_m", DEFAULT_PISTON_RADIUS,
                    "array.directivity", positive=True)
    directivity_mode = (Directivity.piston(aperture) if mode == "piston"
                        else Directivity.omni())
    try:
        layout = GridLayout(
            nx=_int(sec, "nx", 83, "array", minimum=1),
            ny=_int(sec, "ny", 12, "array", minimum=1),
            pitch=_num(sec, "pitch_m", 0.01016, "array", positive=True),
            origin=_vector(sec, "center_m", (0.0, 0.0, 0.0), "array", 3),
            normal=_vector(sec, "normal", (0.0, 0.0, 1.0), "array", 3),
            x_axis=_vector(sec, "x_axis", None, "array", 3))
        return build_array(layout, medium=medium,
                           directivity_mode=directivity_mode,
                           amplitude=_num(sec, "amplitude_pa_m",
                                          DEFAULT_AMPLITUDE, "array", nonneg=True))
    except ValueError as err:
        raise ConfigError(f"array: {err}") from None


def _parse_device(cfg: dict):
    sec = _section(cfg, "device")
    hinge = _vector(sec, "hinge_offset_m", (0.0, 0.0), "device", 2)
    try:
        spec = DeviceSpec(
            r_stim=_num(sec, "r_stim_m", 0.0075, "device", positive=True),
            r_drive=_num(sec, "r_drive_m", 0.020, "device", positive=True),
            mass=_num(sec, "mass_kg", 0.00185, "device", positive=True),
            hinge_stiffness=_num(sec, "hinge_stiffness_nm_per_rad", 2.0e-3,
                                 "device", positive=True),
            max_tilt=_num(sec, "max_tilt_rad", 0.35, "device", positive=True),
            material_modulus=_num(sec, "material_modulus_pa", 2.77e9,
                                  "device", positive=True),
            gravity_enabled=bool(sec.get("gravity_enabled", False)),
            hinge_offset=(float(hinge[0]), float(hinge[1])))
    except ValueError as err:
        raise ConfigError(f"device: {err}") from None
    mount = sec.get("mount") or {}
    pose = Pose(_rotation(mount, "device.mount"),
                _vector(mount, "position_m", (0.0, 0.0, 0.20), "device.mount", 3))
    skin_gain = _num(sec, "skin_gain_m_per_rad", 0.05, "device", nonneg=True)
    return spec, pose, skin_gain


def _parse_control(cfg: dict, device: DeviceSpec):
    sec = _section(cfg, "control")
    law = sec.get("law", "curved")
    if law not in ("curved", "edge"):
        raise ConfigError("control.law: expected curved or edge")
    if law == "edge" and "alpha" in sec:
        raise ConfigError("control.alpha: only valid for law curved")
    alpha = _num(sec, "alpha", 1.0, "control")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError("control.alpha: must lie in (0, 1]")
    r_fo = _num(sec, "r_fo_m", 0.015, "control", positive=True)
    r_fin = _num(sec, "r_fin_m", 0.030, "control", positive=True)
    if r_fo > device.r_drive:
        raise ConfigError(f"control.r_fo_m: {r_fo} exceeds device r_drive_m "
                          f"{device.r_drive}")
    axis = _vector(sec, "stroke_axis", (1.0, 0.0), "control", 2)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        raise ConfigError("control.stroke_axis: zero vector")
    try:
        params = ControlParams(r_fo=r_fo, r_fin=r_fin, alpha=alpha, law=law)
    except ValueError as err:
        raise ConfigError(f"control: {err}") from None
    return params, axis / norm


def _parse_trajectory(cfg: dict):
    sec = _section(cfg, "trajectory")
    kind = sec.get("kind", "linear-sweep")
    if kind == "linear-sweep":
        duration = _num(sec, "duration_s", 1.0, "trajectory", positive=True)
        return LinearSweep(start=_num(sec, "from_m", -0.030, "trajectory"),
                           end=_num(sec, "to_m", 0.030, "trajectory"),
                           duration=duration)
    if kind == "samples":
        samples = sec.get("samples")
        if not isinstance(samples, (list, tuple)) or len(samples) < 2:
            raise ConfigError("trajectory.samples: need a list of at least "
                              "2 [t_s, x_m] pairs")
        try:
            arr = np.asarray(samples, dtype=float).reshape(-1, 2)
        except (TypeError, ValueError):
            raise ConfigError("trajectory.samples: entries must be "
                              "[t_s, x_m] pairs") from None
        times, values = arr[:, 0], arr[:, 1]
        if times[0] != 0.0:
            raise ConfigError("trajectory.samples: first sample must be at t = 0")
        if np.any(np.diff(times) <= 0.0):
            raise ConfigError("trajectory.samples: times must be strictly increasing")
        return SampledTrajectory(times=times, values=values)
    raise ConfigError("trajectory.kind: expected linear-sweep or samples")


def _parse_simulation(cfg: dict):
    sec = _section(cfg, "simulation")
    rate = _num(sec, "control_rate_hz", 1000.0, "simulation", positive=True)
    mode = sec.get("tracking_mode", "ideal")
    if mode not in ("ideal", "synthetic-camera"):
        raise ConfigError("simulation.tracking_mode: expected ideal or "
                          "synthetic-camera")
    qsec = sec.get("quadrature") or {}
    n_r = _int(qsec, "n_r", 24, "simulation.quadrature", minimum=1)
    n_phi = _int(qsec, "n_phi", 48, "simulation.quadrature", minimum=3)
    refl = _num(sec, "reflection_coefficient", 1.0, "simulation", nonneg=True)
    if refl > 1.0:
        raise ConfigError("simulation.reflection_coefficient: must lie in [0, 1]")
    tol = _num(sec, "equilibrium_tol_nm", 1e-10, "simulation", positive=True)
    max_iter = _int(sec, "equilibrium_max_iter", 200, "simulation", minimum=1)
    return rate, mode, (n_r, n_phi), ReflectionModel(refl), tol, max_iter


def _parse_camera(cfg: dict) -> CameraConfig:
    sec = _section(cfg, "camera")
    try:
        intr = CameraIntrinsics(
            fx=_num(sec, "fx_px", 600.0, "camera", positive=True),
            fy=_num(sec, "fy_px", 600.0, "camera", positive=True),
            cx=_num(sec, "cx_px", 320.0, "camera"),
            cy=_num(sec, "cy_px", 240.0, "camera"),
            width=_int(sec, "width_px", 640, "camera", minimum=1),
            height=_int(sec, "height_px", 480, "camera", minimum=1))
    except ValueError as err:
        raise ConfigError(f"camera: {err}") from None
    pose = Pose(_rotation(sec, "camera"),
                _vector(sec, "position_m", (0.0, 0.0, 0.0), "camera", 3))
    tsec = sec.get("thresholds") or {}
    try:
        thresholds = ColorThresholds(
            r_min=_int(tsec, "r_min", 200, "camera.thresholds"),
            g_max=_int(tsec, "g_max", 80, "camera.thresholds"),
            b_max=_int(tsec, "b_max", 80, "camera.thresholds"))
    except ValueError as err:
        raise ConfigError(f"camera.thresholds: {err}") from None
    color = _vector(sec, "marker_color", (255, 0, 0), "camera", 3)
    bg = _vector(sec, "background_color", (40, 40, 40), "camera", 3)
    return CameraConfig(
        intrinsics=intr, pose=pose,
        marker_radius_px=_num(sec, "marker_radius_px", 8.0, "camera", positive=True),
        marker_color=tuple(int(c) for c in color),
        background_color=tuple(int(c) for c in bg),
        thresholds=thresholds)


def _parse_field_map(cfg: dict) -> FieldMapSpec:
    sec = _section(cfg, "field_map")
    plane = sec.get("plane", "xy")
    if plane not in ("xy", "xz", "yz"):
        raise ConfigError("field_map.plane: expected xy, xz or yz")
    center = sec.get("center", "focus")
    if center != "focus":
        center = _vector({"center": center}, "center", None, "field_map", 3)
    extent = _vector(sec, "extent_m", (0.06, 0.06), "field_map", 2)
    if np.any(extent <= 0):
        raise ConfigError("field_map.extent_m: must be positive")
    res = sec.get("resolution", [101, 101])
    try:
        nu, nv = int(res[0]), int(res[1])
    except (TypeError, ValueError, IndexError):
        raise ConfigError("field_map.resolution: expected [nu, nv]") from None
    if nu < 2 or nv < 2:
        raise ConfigError("field_map.resolution: must be at least 2x2")
    return FieldMapSpec(plane=plane, center=center,
                        extent=(float(extent[0]), float(extent[1])),
                        resolution=(nu, nv))


def _parse_output(cfg: dict) -> OutputNames:
    sec = _section(cfg, "output")
    defaults = OutputNames()
    names = {}
    for key in ("trace_csv", "profile_csv", "summary_txt", "field_map_csv",
                "phases_csv"):
        value = sec.get(key, getattr(defaults, key))
        if not isinstance(value, str) or not value:
            raise ConfigError(f"output.{key}: expected a file name")
        names[key] = value
    return OutputNames(**names)


def build_scenario(cfg: dict | None) -> Scenario:
    """Assemble and validate a Scenario from a (possibly empty) config dict."""
    cfg = cfg or {}
    _check_unknown_keys(cfg, _SCHEMA_TREE)
    medium = _parse_medium(cfg)
    array = _parse_array(cfg, medium)
    device, mount_pose, skin_gain = _parse_device(cfg)
    control, stroke_axis = _parse_control(cfg, device)
    trajectory = _parse_trajectory(cfg)
    rate, mode, (n_r, n_phi), reflection, tol, max_iter = _parse_simulation(cfg)
    camera = _parse_camera(cfg)
    quadrature = disk_quadrature(device.r_drive, n_r=n_r, n_phi=n_phi)
    return Scenario(array=array, device=device, mount_pose=mount_pose,
                    skin_gain=skin_gain, control=control,
                    stroke_axis=stroke_axis, trajectory=trajectory,
                    control_rate=rate, tracking_mode=mode,
                    quadrature=quadrature, reflection=reflection,
                    equilibrium_tol=tol, equilibrium_max_iter=max_iter,
                    camera=camera, field_map_spec=_parse_field_map(cfg),
                    output_names=_parse_output(cfg))


def load_config_dict(path) -> dict:
    """Read a scenario file into a raw config dict (before validation)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise FileNotFoundError(f"cannot read scenario file {path}: {err}") from None
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError(f"{path}: YAML parse error{where}: {err}") from None
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return cfg


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file; errors carry line/key diagnostics."""
    return build_scenario(load_config_dict(path))


def set_override(cfg: dict, dotted_key: str, value_text: str) -> None:
    """Apply one --set key=value override onto a raw config dict.

    The key must exist in the schema; the value is parsed as YAML, so
    `--set control.alpha=0.5` and `--set array.center_m=[0,0,0.1]` both work.
    The result is identical to editing the file before loading.
    """
    parts = dotted_key.split(".")
    tree = _SCHEMA_TREE
    for i, part in enumerate(parts):
        if not isinstance(tree, dict) or part not in tree:
            raise ConfigError(f"unknown key: {dotted_key}")
        tree = tree[part]
    if isinstance(tree, dict) and tree:
        raise ConfigError(f"{dotted_key}: is a section, not a settable key")
    try:
        value = yaml.safe_load(value_text)
    except yaml.YAMLError:
        raise ConfigError(f"{dotted_key}: cannot parse value {value_text!r}") from None
    node = cfg
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        elif not isinstance(child, dict):
            raise ConfigError(f"{dotted_key}: {part} is not a mapping in the scenario")
        node = child
    node[parts[-1]] = value
