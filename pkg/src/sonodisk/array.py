"""Phased transducer array: geometry, focusing phases, and field evaluation.

The propagation model is a spherical-spreading monopole per element with an
optional far-field piston directivity. Field values are coherent sums
p(q) = sum_i (A_i * D(theta_i) / d_i) * exp(j*(k*d_i + phi_i)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import _field_kernel
from .geometry import frame_from_normal

TWO_PI = 2.0 * math.pi

# Far-field pressure * distance per element at full drive; a placeholder
# constant (no measured value exists), overridable per scenario.
DEFAULT_AMPLITUDE = 2.5
DEFAULT_PISTON_RADIUS = 0.0045
MIN_ELEMENT_DISTANCE = 1e-6


@dataclass(frozen=True)
class MediumConfig:
    """Acoustic medium constants (defaults: air near 25 degC, 40 kHz drive)."""

    speed_of_sound: float = 346.0
    air_density: float = 1.20
    frequency: float = 40000.0

    def __post_init__(self):
        for name in ("speed_of_sound", "air_density", "frequency"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def wavenumber(self) -> float:
        return TWO_PI * self.frequency / self.speed_of_sound

    @property
    def wavelength(self) -> float:
        return self.speed_of_sound / self.frequency


@dataclass(frozen=True)
class Directivity:
    """Element directivity mode: omnidirectional or baffled piston."""

    kind: str = "omnidirectional"
    aperture_radius: float = DEFAULT_PISTON_RADIUS

    def __post_init__(self):
        if self.kind not in ("omnidirectional", "piston"):
            raise ValueError(f"unknown directivity kind: {self.kind!r}")
        if self.kind == "piston" and not self.aperture_radius > 0.0:
            raise ValueError("piston aperture_radius must be positive")

    @classmethod
    def omni(cls) -> "Directivity":
        return cls("omnidirectional")

    @classmethod
    def piston(cls, aperture_radius: float = DEFAULT_PISTON_RADIUS) -> "Directivity":
        return cls("piston", aperture_radius)


def directivity(theta: float, mode: Directivity, wavenumber: float) -> float:
    """Directional gain at polar angle `theta` off the element normal.

    Omnidirectional mode returns 1; piston mode returns
    2*J1(k*a*sin(theta)) / (k*a*sin(theta)) with the analytic on-axis limit 1.
    """
    if mode.kind == "omnidirectional":
        return 1.0
    return float(_field_kernel.piston_gain(abs(math.sin(theta)),
                                           wavenumber * mode.aperture_radius))


@dataclass(frozen=True)
class Element:
    position: np.ndarray
    normal: np.ndarray
    amplitude: float


@dataclass(frozen=True)
class GridLayout:
    """Planar rectangular grid of elements, centered on `origin`.

    `normal` orients the element normals; `x_axis` optionally pins the
    in-plane direction of the nx-axis (defaults to world x projected onto
    the plane).
    """

    nx: int
    ny: int
    pitch: float
    origin: Sequence[float] = (0.0, 0.0, 0.0)
    normal: Sequence[float] = (0.0, 0.0, 1.0)
    x_axis: Sequence[float] | None = None

    def __post_init__(self):
        if self.nx * self.ny < 1 or self.nx < 1 or self.ny < 1:
            raise ValueError("grid must contain at least one element")
        if not self.pitch > 0.0:
            raise ValueError("pitch must be positive")


@dataclass(frozen=True)
class TransducerArray:
    """Immutable element geometry and drive amplitudes plus the medium."""

    positions: np.ndarray
    normals: np.ndarray
    amplitudes: np.ndarray
    medium: MediumConfig = field(default_factory=MediumConfig)
    directivity_mode: Directivity = field(default_factory=Directivity.omni)

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=float).reshape(-1, 3)
        nrm = np.ascontiguousarray(self.normals, dtype=float).reshape(-1, 3)
        amp = np.ascontiguousarray(self.amplitudes, dtype=float).reshape(-1)
        if pos.shape[0] < 1:
            raise ValueError("array needs at least one element")
        if nrm.shape != pos.shape or amp.shape[0] != pos.shape[0]:
            raise ValueError("positions, normals and amplitudes must match in length")
        lengths = np.linalg.norm(nrm, axis=1)
        if np.any(np.abs(lengths - 1.0) > 1e-9):
            raise ValueError("normals must be unit length (within 1e-9)")
        if np.any(amp < 0.0):
            raise ValueError("amplitudes must be non-negative")
        if np.unique(pos, axis=0).shape[0] != pos.shape[0]:
            raise ValueError("two elements share a position")
        for a in (pos, nrm, amp):
            a.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "amplitudes", amp)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def wavenumber(self) -> float:
        return self.medium.wavenumber

    def scaled_amplitudes(self, factor: float) -> "TransducerArray":
        return TransducerArray(self.positions, self.normals,
                               self.amplitudes * factor, self.medium,
                               self.directivity_mode)


@dataclass(frozen=True)
class PhasePattern:
    """Per-element phase offsets in radians, canonicalized to [0, 2*pi)."""

    phases: np.ndarray

    def __post_init__(self):
        ph = np.ascontiguousarray(self.phases, dtype=float).reshape(-1)
        if np.any(ph < 0.0) or np.any(ph >= TWO_PI):
            raise ValueError("phases must lie in [0, 2*pi)")
        ph.flags.writeable = False
        object.__setattr__(self, "phases", ph)

    def __len__(self) -> int:
        return self.phases.shape[0]


def build_array(layout: Union[GridLayout, Iterable[Element]],
                medium: MediumConfig | None = None,
                directivity_mode: Directivity | None = None,
                amplitude: float = DEFAULT_AMPLITUDE) -> TransducerArray:
    """Build a TransducerArray from a grid layout or an explicit element list.

    Parameters
    ----------
    layout : GridLayout or iterable of Element
        Grid elements are laid out centered on the grid origin, row-major in
        (nx, ny), all normals along the grid normal.
    medium : MediumConfig, optional
    directivity_mode : Directivity, optional
    amplitude : float
        Drive amplitude (Pa*m) applied to every grid element; ignored for
        explicit element lists, which carry their own.
    """
    medium = medium or MediumConfig()
    directivity_mode = directivity_mode or Directivity.omni()
    if isinstance(layout, GridLayout):
        frame = frame_from_normal(layout.normal, layout.x_axis)
        ex, ey, ez = frame[:, 0], frame[:, 1], frame[:, 2]
        xs = (np.arange(layout.nx) - (layout.nx - 1) / 2.0) * layout.pitch
        ys = (np.arange(layout.ny) - (layout.ny - 1) / 2.0) * layout.pitch
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        origin = np.asarray(layout.origin, dtype=float)
        positions = (origin[None, :]
                     + X.reshape(-1, 1) * ex[None, :]
                     + Y.reshape(-1, 1) * ey[None, :])
        normals = np.tile(ez, (positions.shape[0], 1))
        amplitudes = np.full(positions.shape[0], float(amplitude))
        return TransducerArray(positions, normals, amplitudes, medium,
                               directivity_mode)
    elements = list(layout)
    if not elements:
        raise ValueError("element list is empty")
    positions = np.array([np.asarray(e.position, dtype=float) for e in elements])
    normals = np.array([np.asarray(e.normal, dtype=float) for e in elements])
    amplitudes = np.array([float(e.amplitude) for e in elements])
    return TransducerArray(positions, normals, amplitudes, medium,
                           directivity_mode)


def paper_array(medium: MediumConfig | None = None,
                directivity_mode: Directivity | None = None,
                amplitude: float = DEFAULT_AMPLITUDE,
                origin: Sequence[float] = (0.0, 0.0, 0.0)) -> TransducerArray:
    """Default 996-element array: an 83 x 12 grid at 0.01016 m pitch."""
    return build_array(GridLayout(nx=83, ny=12, pitch=0.01016, origin=origin),
                       medium=medium, directivity_mode=directivity_mode,
                       amplitude=amplitude)


def solve_focus_phases(array: TransducerArray, focus) -> PhasePattern:
    """Phases that make every element's contribution arrive in phase at `focus`.

    phase_i = (-k * |focus - position_i|) mod 2*pi, so the arrival phase
    k*d_i + phase_i is congruent to 0 for each element.
    """
    focus = np.asarray(focus, dtype=float).reshape(3)
    d = np.linalg.norm(focus[None, :] - array.positions, axis=1)
    if np.any(d <= MIN_ELEMENT_DISTANCE):
        raise ValueError("focus is within 1e-6 m of an element")
    phases = np.mod(-array.wavenumber * d, TWO_PI)
    phases[phases >= TWO_PI] = 0.0  # mod can round up to 2*pi
    return PhasePattern(phases)


def _dir_args(array: TransducerArray):
    if array.directivity_mode.kind == "piston":
        return 1, array.wavenumber * array.directivity_mode.aperture_radius
    return 0, 0.0


def pressure_sums_at(array: TransducerArray, phases: PhasePattern,
                     points: np.ndarray):
    """Raw kernel dispatch: complex sums plus validity per point."""
    if len(phases) != len(array):
        raise ValueError("phase pattern length does not match element count")
    pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 3)
    dir_kind, ka = _dir_args(array)
    re, im, valid = _field_kernel.pressure_sums(
        pts, array.positions, array.normals, array.amplitudes, phases.phases,
        array.wavenumber, dir_kind, ka, MIN_ELEMENT_DISTANCE)
    return re, im, valid


def pressure_at(array: TransducerArray, phases: PhasePattern, point) -> complex:
    """Complex acoustic pressure at one point (Pa)."""
    re, im, valid = pressure_sums_at(array, phases, np.asarray(point, dtype=float))
    if not valid[0]:
        raise ValueError("evaluation point is within 1e-6 m of an element")
    return complex(re[0], im[0])


@dataclass(frozen=True)
class PlaneSpec:
    """Sampling plane: center, two in-plane unit axes, full extents, cells."""

    center: Sequence[float]
    axis_u: Sequence[float]
    axis_v: Sequence[float]
    extent: Sequence[float]
    resolution: Sequence[int]

    def __post_init__(self):
        nu, nv = self.resolution
        if nu < 2 or nv < 2:
            raise ValueError("resolution must be at least 2x2")
        eu, ev = self.extent
        if not (eu > 0 and ev > 0):
            raise ValueError("extent must be positive")

    @classmethod
    def named(cls, plane: str, center, extent, resolution) -> "PlaneSpec":
        axes = {"xy": ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
                "xz": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
                "yz": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0))}
        if plane not in axes:
            raise ValueError(f"unknown plane {plane!r}; expected xy, xz or yz")
        u, v = axes[plane]
        return cls(center, u, v, extent, resolution)


@dataclass(frozen=True)
class FieldGrid:
    """|p| and field phase sampled on a plane; invalid cells are NaN."""

    points: np.ndarray      # (nu, nv, 3) cell centers
    abs_pressure: np.ndarray  # (nu, nv) Pa
    phase: np.ndarray       # (nu, nv) rad, arg of the complex field
    valid: np.ndarray       # (nu, nv) bool
    plane: PlaneSpec


def field_map(array: TransducerArray, phases: PhasePattern,
              plane: PlaneSpec) -> FieldGrid:
    """Evaluate |p| over a plane, cell-centered.

    Every cell equals a pressure_at evaluation at its center; cells that fall
    within 1e-6 m of an element are flagged invalid (NaN) instead of failing
    the whole map.
    """
    nu, nv = plane.resolution
    eu, ev = plane.extent
    center = np.asarray(plane.center, dtype=float)
    au = np.asarray(plane.axis_u, dtype=float)
    av = np.asarray(plane.axis_v, dtype=float)
    au = au / np.linalg.norm(au)
    av = av / np.linalg.norm(av)
    us = ((np.arange(nu) + 0.5) / nu - 0.5) * eu
    vs = ((np.arange(nv) + 0.5) / nv - 0.5) * ev
    U, V = np.meshgrid(us, vs, indexing="ij")
    pts = (center[None, :] + U.reshape(-1, 1) * au[None, :]
           + V.reshape(-1, 1) * av[None, :])
    re, im, valid = pressure_sums_at(array, phases, pts)
    absp = np.hypot(re, im).reshape(nu, nv)
    ph = np.arctan2(im, re).reshape(nu, nv)
    return FieldGrid(points=pts.reshape(nu, nv, 3), abs_pressure=absp,
                     phase=ph, valid=valid.reshape(nu, nv), plane=plane)


def field_grid_rows(grid: FieldGrid):
    """Yield (x, y, z, abs_p, phase) per cell, row-major over (u, v)."""
    nu, nv = grid.plane.resolution
    for i in range(nu):
        for j in range(nv):
            x, y, z = grid.points[i, j]
            yield x, y, z, grid.abs_pressure[i, j], grid.phase[i, j]


def export_field_csv(grid: FieldGrid, fileobj) -> None:
    """Write a FieldGrid as CSV with header x_m,y_m,z_m,abs_p_pa,phase_rad."""
    fileobj.write("x_m,y_m,z_m,abs_p_pa,phase_rad\n")
    for x, y, z, a, p in field_grid_rows(grid):
        fileobj.write(",".join(repr(float(c)) for c in (x, y, z, a, p)) + "\n")
