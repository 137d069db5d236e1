"""Marker tracking on synthetic camera frames.

Pipeline: binary color filter -> centroid -> depth lookup -> pinhole
back-projection. Frames are synthetic (solid marker disk over a uniform
background) so tests can compare against exact ground truth.

File formats: RGB frames are binary PPM (P6, maxval 255); depth images are
raw row-major little-endian float32 meters with no header (0 = invalid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the frame")


@dataclass(frozen=True)
class ColorThresholds:
    """Binary filter: keep pixels with R >= r_min, G <= g_max, B <= b_max."""

    r_min: int = 200
    g_max: int = 80
    b_max: int = 80

    def __post_init__(self):
        for name in ("r_min", "g_max", "b_max"):
            v = getattr(self, name)
            if not 0 <= v <= 255:
                raise ValueError(f"{name} must be an 8-bit value")


@dataclass(frozen=True)
class Frame:
    """RGB uint8 (height, width, 3) plus float32 depth (height, width), meters."""

    rgb: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        rgb = np.ascontiguousarray(self.rgb, dtype=np.uint8)
        depth = np.ascontiguousarray(self.depth, dtype=np.float32)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError("rgb must have shape (height, width, 3)")
        if depth.shape != rgb.shape[:2]:
            raise ValueError("depth dimensions must match rgb")
        rgb.flags.writeable = False
        depth.flags.writeable = False
        object.__setattr__(self, "rgb", rgb)
        object.__setattr__(self, "depth", depth)


def render_synthetic_frame(center_px, radius_px: float, color,
                           background_color, depth_value: float,
                           intrinsics: CameraIntrinsics) -> Frame:
    """Render a solid marker disk over a uniform background.

    Pixels with (u - u0)^2 + (v - v0)^2 <= radius_px^2 take the marker color
    and depth `depth_value`; everything else is background with depth 0.
    Raises if no pixel falls inside the marker (marker fully outside frame).
    """
    if radius_px < 1:
        raise ValueError("radius_px must be at least 1")
    w, h = intrinsics.width, intrinsics.height
    u0, v0 = float(center_px[0]), float(center_px[1])
    uu = np.arange(w, dtype=float)[None, :] - u0
    vv = np.arange(h, dtype=float)[:, None] - v0
    inside = uu * uu + vv * vv <= radius_px * radius_px
    if not inside.any():
        raise ValueError("marker lies fully outside the frame")
    rgb = np.empty((h, w, 3), dtype=np.uint8)
    rgb[:, :] = np.asarray(background_color, dtype=np.uint8)
    rgb[inside] = np.asarray(color, dtype=np.uint8)
    depth = np.zeros((h, w), dtype=np.float32)
    depth[inside] = np.float32(depth_value)
    return Frame(rgb=rgb, depth=depth)


def binary_color_filter(frame: Frame, thresholds: ColorThresholds) -> np.ndarray:
    """Boolean mask (height, width) of pixels passing the color thresholds."""
    r = frame.rgb[:, :, 0]
    g = frame.rgb[:, :, 1]
    b = frame.rgb[:, :, 2]
    return (r >= thresholds.r_min) & (g <= thresholds.g_max) & (b <= thresholds.b_max)


def centroid(mask: np.ndarray):
    """Mean (u, v) of true pixels, or None for an empty mask."""
    vs, us = np.nonzero(mask)
    if us.size == 0:
        return None
    return float(us.mean()), float(vs.mean())


def backproject(pixel, depth: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Pinhole back-projection of a pixel at a given depth (camera frame, m)."""
    if not depth > 0.0:
        raise ValueError("depth must be positive")
    u, v = pixel
    x = (u - intrinsics.cx) * depth / intrinsics.fx
    y = (v - intrinsics.cy) * depth / intrinsics.fy
    return np.array([x, y, depth])


def track(frame: Frame, thresholds: ColorThresholds,
          intrinsics: CameraIntrinsics):
    """Marker 3-D position in the camera frame, or None.

    None when the filter finds no marker pixels or the depth at the centroid
    (nearest-pixel lookup) is invalid (<= 0).
    """
    c = centroid(binary_color_filter(frame, thresholds))
    if c is None:
        return None
    u, v = c
    ui = min(max(int(round(u)), 0), intrinsics.width - 1)
    vi = min(max(int(round(v)), 0), intrinsics.height - 1)
    depth = float(frame.depth[vi, ui])
    if depth <= 0.0:
        return None
    return backproject((u, v), depth, intrinsics)


def write_ppm(rgb: np.ndarray, path) -> None:
    """Binary PPM (P6): header 'P6\\n{w} {h}\\n255\\n' then RGB bytes row-major."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w = rgb.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P6":
            raise ValueError("not a binary PPM (P6) file")
        dims = f.readline().split()
        maxval = f.readline().strip()
        if len(dims) != 2 or maxval != b"255":
            raise ValueError("unsupported PPM header")
        w, h = int(dims[0]), int(dims[1])
        data = f.read(w * h * 3)
    if len(data) != w * h * 3:
        raise ValueError("truncated PPM payload")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)


def write_depth(depth: np.ndarray, path) -> None:
    """Raw row-major little-endian float32 meters, no header."""
    np.ascontiguousarray(depth, dtype="<f4").tofile(path)


def read_depth(path, width: int, height: int) -> np.ndarray:
    data = np.fromfile(path, dtype="<f4")
    if data.size != width * height:
        raise ValueError(f"depth file holds {data.size} values, "
                         f"expected {width * height}")
    return data.reshape(height, width)
