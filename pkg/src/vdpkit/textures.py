"""Grayscale texture patterns for the textured composition style.

The default registry is procedural so datasets stay reproducible with zero
bundled assets; ``from_dir`` swaps in photographs when available. Textures
are single-channel uint8 arrays; the rasterizer multiplies them by each
element's tint color.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import TextureMissing

_SIZE = 128

# Keep procedural patterns inside this luma band so tint hues survive the
# multiply and no element ever goes fully black or blows out to white.
_LO, _HI = 84, 232


def _rescale(f: np.ndarray) -> np.ndarray:
    f = f.astype(np.float64)
    lo, hi = f.min(), f.max()
    if hi - lo < 1e-12:
        return np.full(f.shape, (_LO + _HI) // 2, dtype=np.uint8)
    g = (f - lo) / (hi - lo)
    return np.round(_LO + g * (_HI - _LO)).astype(np.uint8)


def _value_noise(rng: np.random.Generator, cells: int) -> np.ndarray:
    coarse = rng.random((cells + 1, cells + 1))
    t = np.linspace(0.0, cells, _SIZE, endpoint=False)
    i0 = np.floor(t).astype(int)
    fr = t - i0
    fr = fr * fr * (3.0 - 2.0 * fr)
    a = coarse[np.ix_(i0, i0)]
    b = coarse[np.ix_(i0, i0 + 1)]
    c = coarse[np.ix_(i0 + 1, i0)]
    d = coarse[np.ix_(i0 + 1, i0 + 1)]
    top = a + (b - a) * fr[None, :]
    bot = c + (d - c) * fr[None, :]
    return top + (bot - top) * fr[:, None]


def _stripes(angle: float, period: float) -> np.ndarray:
    y, x = np.mgrid[0:_SIZE, 0:_SIZE].astype(np.float64)
    s = x * np.cos(angle) + y * np.sin(angle)
    return np.sin(2.0 * np.pi * s / period)


def _checker(cell: int) -> np.ndarray:
    y, x = np.mgrid[0:_SIZE, 0:_SIZE]
    return ((x // cell + y // cell) % 2).astype(np.float64)


def _dots(rng: np.random.Generator, step: int, r: float) -> np.ndarray:
    y, x = np.mgrid[0:_SIZE, 0:_SIZE].astype(np.float64)
    jx = rng.uniform(-2, 2, (_SIZE // step + 1, _SIZE // step + 1))
    jy = rng.uniform(-2, 2, (_SIZE // step + 1, _SIZE // step + 1))
    cx = (x // step) * step + step / 2 + jx[(y // step).astype(int), (x // step).astype(int)]
    cy = (y // step) * step + step / 2 + jy[(y // step).astype(int), (x // step).astype(int)]
    d = np.hypot(x - cx, y - cy)
    return (d > r).astype(np.float64)


class TextureRegistry:
    """Named grayscale textures resolvable at raster time."""

    def __init__(self, textures: dict[str, np.ndarray]):
        self._textures: dict[str, np.ndarray] = {}
        for name, arr in textures.items():
            arr = np.asarray(arr)
            if arr.ndim != 2 or arr.dtype != np.uint8:
                raise ValueError(f"texture {name!r} must be 2-D uint8")
            self._textures[name] = arr

    @classmethod
    def default(cls, seed: int = 7) -> "TextureRegistry":
        """Deterministic procedural set used when no texture dir is given."""
        rng = np.random.default_rng(np.random.SeedSequence([0x7e87, seed]))
        tex = {
            "noise-coarse": _rescale(_value_noise(rng, 6)),
            "noise-fine": _rescale(_value_noise(rng, 16)),
            "blotch": _rescale(np.where(_value_noise(rng, 5) > 0.5, 1.0, 0.35)
                               + 0.08 * _value_noise(rng, 20)),
            "stripes-h": _rescale(_stripes(0.0, 14.0)),
            "stripes-d": _rescale(_stripes(np.pi / 4.0, 18.0)),
            "checker": _rescale(_checker(16)),
            "dots": _rescale(_dots(rng, 18, 5.5) + 0.1 * _value_noise(rng, 12)),
            "grain": _rescale(0.55 + 0.45 * _value_noise(rng, 32)),
        }
        return cls(tex)

    @classmethod
    def from_dir(cls, path: str | Path) -> "TextureRegistry":
        """Load every image file in a directory as a grayscale texture."""
        from PIL import Image

        path = Path(path)
        tex = {}
        for p in sorted(path.iterdir()):
            if p.suffix.lower() not in {".png", ".jpg", ".jpeg", ".bmp", ".gif"}:
                continue
            with Image.open(p) as im:
                tex[p.stem] = np.asarray(im.convert("L"), dtype=np.uint8)
        if not tex:
            raise TextureMissing(f"no usable texture images in {path}", path=str(path))
        return cls(tex)

    def names(self) -> list[str]:
        return sorted(self._textures)

    def get(self, name: str) -> np.ndarray:
        try:
            return self._textures[name]
        except KeyError:
            raise TextureMissing(f"texture {name!r} is not in the registry",
                                 texture_id=name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._textures

    def __len__(self) -> int:
        return len(self._textures)
