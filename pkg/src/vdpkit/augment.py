"""Training-time image augmentation: flips, right-angle rotations, and
LAB-space brightness edits.

Geometric operations are exact pixel permutations. Photometric operations
work on the L channel of CIE L*a*b* only, so hue and chroma never drift; the
pipeline deliberately has no hue jitter, crop, or warp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import VdpError

# sRGB (IEC 61966-2-1) to CIE XYZ under D65. The reference white is taken as
# the exact row sums so that (255,255,255) maps to L=100, a=0, b=0 with no
# residual from rounded matrix entries.
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE = _RGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0

GBT_LIMIT = 20.0
BG_LIMIT = 30.0


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c):
    return np.where(c <= 0.0031308, 12.92 * c,
                    1.055 * np.maximum(c, 0.0) ** (1.0 / 2.4) - 0.055)


def _f(t):
    return np.where(t > _DELTA ** 3, np.cbrt(t),
                    t / (3 * _DELTA ** 2) + 4.0 / 29.0)


def _f_inv(t):
    return np.where(t > _DELTA, t ** 3, 3 * _DELTA ** 2 * (t - 4.0 / 29.0))


def rgb_to_lab(image: np.ndarray) -> np.ndarray:
    """8-bit sRGB (H,W,3) to float64 LAB (H,W,3); L in [0,100]."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise VdpError(f"expected (H,W,3) image, got {image.shape}")
    srgb = image.astype(np.float64) / 255.0
    xyz = _srgb_to_linear(srgb) @ _RGB_TO_XYZ.T
    fxyz = _f(xyz / _WHITE)
    lab = np.empty_like(fxyz)
    lab[..., 0] = 116.0 * fxyz[..., 1] - 16.0
    lab[..., 1] = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    lab[..., 2] = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return lab


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_lab, rounded back to 8-bit sRGB."""
    if lab.ndim != 3 or lab.shape[2] != 3:
        raise VdpError(f"expected (H,W,3) LAB image, got {lab.shape}")
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_f_inv(fx), _f_inv(fy), _f_inv(fz)], axis=-1) * _WHITE
    linear = np.clip(xyz @ _XYZ_TO_RGB.T, 0.0, 1.0)
    srgb = np.clip(_linear_to_srgb(linear), 0.0, 1.0)
    return np.round(srgb * 255.0).astype(np.uint8)


def global_brightness_tweak(lab: np.ndarray, delta: float) -> np.ndarray:
    """Shift every pixel's L by delta; a and b pass through bit-identical."""
    out = lab.copy()
    out[..., 0] = np.clip(lab[..., 0] + delta, 0.0, 100.0)
    return out


def brightness_gradient(lab: np.ndarray, axis_angle: float,
                        strength: float) -> np.ndarray:
    """Linear dark-to-light ramp along an arbitrary axis, zero-mean in L.

    The ramp coordinate is each pixel center's projection on the axis
    direction, normalized to [0,1] over the image, so mean L is unchanged
    up to clamping.
    """
    h, w = lab.shape[:2]
    ux, uy = math.cos(axis_angle), math.sin(axis_angle)
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    proj = xs[None, :] * ux + ys[:, None] * uy
    lo, hi = proj.min(), proj.max()
    t = (proj - lo) / (hi - lo) if hi > lo else np.full_like(proj, 0.5)
    out = lab.copy()
    out[..., 0] = np.clip(lab[..., 0] + strength * (t - 0.5), 0.0, 100.0)
    return out


def flip(image: np.ndarray, axis: str) -> np.ndarray:
    """Mirror: axis 'x' reverses columns, axis 'y' reverses rows."""
    if axis == "x":
        return np.ascontiguousarray(image[:, ::-1])
    if axis == "y":
        return np.ascontiguousarray(image[::-1, :])
    raise VdpError(f"flip axis must be 'x' or 'y', got {axis!r}")


def rotate(image: np.ndarray, angle: int) -> np.ndarray:
    """Counter-clockwise rotation by 90 or 270 degrees, exact."""
    if angle == 90:
        return np.ascontiguousarray(np.rot90(image, 1))
    if angle == 270:
        return np.ascontiguousarray(np.rot90(image, 3))
    raise VdpError(f"rotation must be 90 or 270, got {angle!r}")


def normalize(image: np.ndarray) -> np.ndarray:
    """8-bit (H,W,3) to float32 (3,H,W) standardized with ImageNet stats."""
    mean = np.array([0.485, 0.456, 0.406], dtype=np.float32)
    std = np.array([0.229, 0.224, 0.225], dtype=np.float32)
    x = image.astype(np.float32) / 255.0
    x = (x - mean) / std
    return np.ascontiguousarray(x.transpose(2, 0, 1))


@dataclass(frozen=True)
class BgGradient:
    axis_angle: float
    strength: float


@dataclass(frozen=True)
class AugmentationPlan:
    """One sampled augmentation. Applying the same plan twice to the same
    image gives identical bytes."""
    flip_x: bool = False
    flip_y: bool = False
    rotate: int = 0
    gbt_delta: float = 0.0
    bg: BgGradient | None = None
    seed: int = 0

    def __post_init__(self):
        if self.rotate not in (0, 90, 270):
            raise VdpError(f"rotate must be 0, 90 or 270, got {self.rotate!r}")
        if abs(self.gbt_delta) > GBT_LIMIT:
            raise VdpError(f"|gbt_delta| must be <= {GBT_LIMIT}")
        if self.bg is not None and abs(self.bg.strength) > BG_LIMIT:
            raise VdpError(f"|bg.strength| must be <= {BG_LIMIT}")


def sample_plan(rng: np.random.Generator, gbt_limit: float = GBT_LIMIT,
                bg_limit: float = BG_LIMIT) -> AugmentationPlan:
    """Draw one plan; every sub-augmentation is an independent coin flip."""
    flip_x = bool(rng.random() < 0.5)
    flip_y = bool(rng.random() < 0.5)
    rot = (0, 90, 270)[int(rng.integers(3))]
    gbt = float(rng.uniform(-gbt_limit, gbt_limit)) if rng.random() < 0.5 else 0.0
    bg = None
    if rng.random() < 0.5:
        bg = BgGradient(axis_angle=float(rng.uniform(0, 2 * math.pi)),
                        strength=float(rng.uniform(-bg_limit, bg_limit)))
    seed = int(rng.integers(0, 2 ** 63 - 1))
    return AugmentationPlan(flip_x=flip_x, flip_y=flip_y, rotate=rot,
                            gbt_delta=gbt, bg=bg, seed=seed)


def apply_plan(image: np.ndarray, plan: AugmentationPlan) -> np.ndarray:
    """Geometric ops first (kept bit-exact), then LAB brightness edits.

    The LAB round trip is skipped entirely when the plan has no photometric
    component, so pure flips and rotations stay lossless.
    """
    out = image
    if plan.flip_x:
        out = flip(out, "x")
    if plan.flip_y:
        out = flip(out, "y")
    if plan.rotate:
        out = rotate(out, plan.rotate)
    if plan.gbt_delta == 0.0 and plan.bg is None:
        return np.ascontiguousarray(out)
    lab = rgb_to_lab(out)
    if plan.gbt_delta != 0.0:
        lab = global_brightness_tweak(lab, plan.gbt_delta)
    if plan.bg is not None:
        lab = brightness_gradient(lab, plan.bg.axis_angle, plan.bg.strength)
    return lab_to_rgb(lab)
