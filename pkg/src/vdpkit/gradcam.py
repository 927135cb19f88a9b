"""Class-activation heatmaps over the desk CNN.

The map is built the usual way: take the gradient of one class logit at
the last conv block's relu output, average it spatially into per-channel
weights, relu the weighted channel sum, then upsample to image size and
scale the peak to 1.  Overlays use the "inferno" colormap, chosen for
perceptual uniformity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .augment import normalize
from .errors import InvalidLabel, ShapeMismatch
from .nn import CnnModel

COLORMAP = "inferno"


@dataclass(frozen=True)
class Heatmap:
    """Non-negative activation grid matching the input image size.

    The peak value is 1 unless the map is identically zero; ``flat``
    flags that case, which usually means an untrained model or a class
    the model sees no evidence for.
    """

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ShapeMismatch(f"heatmap must be (H, W), got {self.values.shape}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def flat(self) -> bool:
        return float(self.values.max()) == 0.0


def _bilinear_resize(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    """Upsample by sampling at output pixel centers, edges clamped."""
    src_h, src_w = grid.shape
    ys = (np.arange(height) + 0.5) * (src_h / height) - 0.5
    xs = (np.arange(width) + 0.5) * (src_w / width) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, src_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    x1 = np.minimum(x0 + 1, src_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - wx) + grid[np.ix_(y0, x1)] * wx
    bot = grid[np.ix_(y1, x0)] * (1 - wx) + grid[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def gradcam(model: CnnModel, image: np.ndarray, target_class: int) -> Heatmap:
    """Heatmap of the last conv block's evidence for ``target_class``.

    Accepts a raw (H, W, 3) uint8 image or an already normalized
    (3, H, W) float array.
    """
    if not 0 <= target_class < model.num_classes:
        raise InvalidLabel(f"class {target_class} outside [0, {model.num_classes})")
    if image.ndim == 3 and image.dtype == np.uint8 and image.shape[2] == 3:
        height, width = image.shape[:2]
        x = normalize(image)[None]
    elif image.ndim == 3:
        height, width = image.shape[1:]
        x = np.asarray(image, dtype=model.dtype)[None]
    else:
        raise ShapeMismatch(f"expected one image, got shape {image.shape}")
    cache: dict = {}
    model.forward(x, cache)
    dlogits = np.zeros((1, model.num_classes), dtype=model.dtype)
    dlogits[0, target_class] = 1.0
    last = len(model.channels)
    _, d_act = model.backward(cache, dlogits, want_activation=last)
    act = cache[f"act{last}"][0].astype(np.float64)
    weights = d_act[0].astype(np.float64).mean(axis=(1, 2))
    cam = np.maximum(np.tensordot(weights, act, axes=(0, 0)), 0.0)
    cam = _bilinear_resize(cam, height, width)
    peak = cam.max()
    if peak > 0:
        cam = cam / peak
    return Heatmap(values=cam)


def overlay(image: np.ndarray, heatmap: Heatmap, alpha: float) -> np.ndarray:
    """Blend a colormapped heatmap over an RGB image."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeMismatch(f"expected (H, W, 3) image, got {image.shape}")
    if image.shape[:2] != heatmap.values.shape:
        raise ShapeMismatch(
            f"image {image.shape[:2]} vs heatmap {heatmap.values.shape}"
        )
    from matplotlib import colormaps

    colored = colormaps[COLORMAP](heatmap.values)[:, :, :3] * 255.0
    blended = (1.0 - alpha) * image.astype(np.float64) + alpha * colored
    return np.clip(np.round(blended), 0, 255).astype(np.uint8)


def heatmap_entropy(heatmap: Heatmap) -> float:
    """Shannon entropy (nats) of the map as a mass distribution.

    Zero for an empty map; higher values mean more spread-out evidence.
    """
    total = float(heatmap.values.sum())
    if total == 0.0:
        return 0.0
    p = heatmap.values.ravel() / total
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def save_heatmap(heatmap: Heatmap, path: str | Path) -> None:
    """Portable layout: a plain .npy float32 grid of shape (H, W)."""
    np.save(Path(path), heatmap.values.astype(np.float32))


def load_heatmap(path: str | Path) -> Heatmap:
    values = np.load(Path(path)).astype(np.float64)
    return Heatmap(values=values)


def density_split(
    heatmap: Heatmap, box: tuple[float, float, float, float], dilate: float = 0.10
) -> tuple[float, float]:
    """Mean heatmap value inside a canvas-fraction box vs outside.

    ``box`` is (x0, y0, x1, y1) in [0, 1] canvas units; ``dilate`` grows
    it on every side by that fraction of the canvas before splitting.
    """
    x0, y0, x1, y1 = box
    x0, y0 = max(0.0, x0 - dilate), max(0.0, y0 - dilate)
    x1, y1 = min(1.0, x1 + dilate), min(1.0, y1 + dilate)
    h, w = heatmap.values.shape
    cols = (np.arange(w) + 0.5) / w
    rows = (np.arange(h) + 0.5) / h
    inside = ((rows >= y0) & (rows < y1))[:, None] & (
        (cols >= x0) & (cols < x1)
    )[None, :]
    n_in = int(inside.sum())
    if n_in == 0 or n_in == h * w:
        raise ValueError("box must split the canvas into two non-empty parts")
    v = heatmap.values
    return float(v[inside].mean()), float(v[~inside].mean())
