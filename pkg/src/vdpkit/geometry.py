"""Analytic shape primitives on the unit canvas.

Everything here is resolution-independent: shapes stay parametric (center,
radius, rotation, ...) until the rasterizer samples them. The canvas is the
unit square [0,1] x [0,1] with x growing right and y growing down.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

TWO_PI = 2.0 * math.pi

# Kinds a Shape can take. Wavy bands are sinusoidal ribbons used by the
# flowing-rhythm rules.
POLYGON = "polygon"
ELLIPSE = "ellipse"
WAVY_BAND = "wavy-band"
SHAPE_KINDS = (POLYGON, ELLIPSE, WAVY_BAND)

RGB = tuple[int, int, int]


class Point(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Point(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point(self.x - other[0], self.y - other[1])

    def scaled(self, k: float) -> "Point":
        return Point(self.x * k, self.y * k)

    def dot(self, other) -> float:
        return self.x * other[0] + self.y * other[1]

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class FillStyle:
    """Solid color, or a grayscale texture multiplied by a tint color.

    ``uv`` is a row-major 2x3 affine (a, b, tx, c, d, ty) mapping canvas
    coordinates to texture coordinates; texture lookups wrap. For textured
    fills ``tint`` is the nominal color of the element and is what the rule
    predicates inspect, so color constraints mean the same thing in both
    styles.
    """

    color: RGB | None = None
    texture_id: str | None = None
    uv: tuple[float, float, float, float, float, float] | None = None
    tint: RGB | None = None

    @staticmethod
    def solid(color: RGB) -> "FillStyle":
        return FillStyle(color=(int(color[0]), int(color[1]), int(color[2])))

    @staticmethod
    def textured(texture_id: str,
                 uv: tuple[float, float, float, float, float, float],
                 tint: RGB) -> "FillStyle":
        return FillStyle(texture_id=texture_id, uv=tuple(float(v) for v in uv),
                         tint=(int(tint[0]), int(tint[1]), int(tint[2])))

    @property
    def is_texture(self) -> bool:
        return self.texture_id is not None

    def nominal_color(self) -> RGB:
        """The color predicates should reason about (tint for textures)."""
        if self.is_texture:
            assert self.tint is not None
            return self.tint
        assert self.color is not None
        return self.color


@dataclass(frozen=True)
class Shape:
    """One drawable element.

    kind == "polygon": regular n-gon, ``sides`` set, ``radius`` is the
        circumradius, vertex k sits at angle rotation + k*2pi/sides.
    kind == "ellipse": ``radius`` is (rx, ry); rotation orients the rx axis.
        Circles are ellipses with rx == ry.
    kind == "wavy-band": a ribbon of length ``wave.length`` along the
        rotation direction, ``radius`` is half the band width, and the
        centerline oscillates sinusoidally around the spine.
    """

    kind: str
    center: Point
    radius: float | tuple[float, float]
    rotation: float
    fill: FillStyle
    z: int = 0
    sides: int | None = None
    wave: "WaveParams | None" = None

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.kind == POLYGON and (self.sides is None or self.sides < 3):
            raise ValueError("polygon needs sides >= 3")
        if self.kind == WAVY_BAND and self.wave is None:
            raise ValueError("wavy-band needs wave parameters")

    @property
    def rx(self) -> float:
        return self.radius[0] if isinstance(self.radius, tuple) else self.radius

    @property
    def ry(self) -> float:
        return self.radius[1] if isinstance(self.radius, tuple) else self.radius


class WaveParams(NamedTuple):
    amplitude: float
    cycles: float    # full sine periods over the band length
    phase: float
    length: float


@dataclass(frozen=True)
class Axis:
    """Mirror line through ``anchor`` along unit vector ``direction``."""

    anchor: Point
    direction: Point

    def __post_init__(self):
        n = math.hypot(self.direction[0], self.direction[1])
        if abs(n - 1.0) > 1e-9:
            raise ValueError("axis direction must be unit length")

    @staticmethod
    def vertical(x: float = 0.5) -> "Axis":
        return Axis(Point(x, 0.5), Point(0.0, 1.0))

    @staticmethod
    def horizontal(y: float = 0.5) -> "Axis":
        return Axis(Point(0.5, y), Point(1.0, 0.0))

    @staticmethod
    def through_center(angle: float) -> "Axis":
        return Axis(Point(0.5, 0.5), Point(math.cos(angle), math.sin(angle)))

    @property
    def is_vertical(self) -> bool:
        return self.direction[0] == 0.0 and abs(self.direction[1]) == 1.0

    @property
    def is_horizontal(self) -> bool:
        return self.direction[1] == 0.0 and abs(self.direction[0]) == 1.0


def regular_polygon(sides: int, center: Point, radius: float,
                    rotation: float = 0.0, fill: FillStyle | None = None,
                    z: int = 0) -> Shape:
    """Regular polygon with vertices equidistant from ``center``."""
    if sides < 3:
        raise ValueError("polygon needs sides >= 3")
    if radius <= 0:
        raise ValueError("radius must be positive")
    return Shape(kind=POLYGON, center=Point(*center), radius=float(radius),
                 rotation=float(rotation),
                 fill=fill if fill is not None else FillStyle.solid((0, 0, 0)),
                 z=z, sides=int(sides))


def polygon_vertices(shape: Shape) -> list[Point]:
    """Vertex list of a polygon shape, counterclockwise from ``rotation``."""
    if shape.kind != POLYGON:
        raise ValueError("not a polygon")
    n = shape.sides
    cx, cy = shape.center
    r = shape.rx
    out = []
    for k in range(n):
        a = shape.rotation + TWO_PI * k / n
        out.append(Point(cx + r * math.cos(a), cy + r * math.sin(a)))
    return out


def transform(shape: Shape, rotation: float = 0.0,
              translation: tuple[float, float] = (0.0, 0.0)) -> Shape:
    """Rigid transform: rotate about the shape's own center, then translate."""
    c = Point(shape.center[0] + translation[0], shape.center[1] + translation[1])
    return replace(shape, center=c, rotation=shape.rotation + rotation)


def mirror(points: list[Point], axis: Axis) -> list[Point]:
    """Reflect points across the axis. mirror(mirror(p)) == p."""
    ax, ay = axis.anchor
    dx, dy = axis.direction
    out = []
    for p in points:
        vx, vy = p[0] - ax, p[1] - ay
        t = vx * dx + vy * dy
        out.append(Point(ax + 2.0 * t * dx - vx, ay + 2.0 * t * dy - vy))
    return out


def mirror_point(p: Point, axis: Axis) -> Point:
    return mirror([p], axis)[0]


def _mirror_uv(uv, axis: Axis):
    """Compose a texture affine with the reflection so the mirrored element
    samples exactly mirrored texels. The affine acts on canvas-centered
    coordinates; R = 2dd^T - I is the reflection's linear part."""
    dx, dy = axis.direction
    rxx, rxy, ryy = 2 * dx * dx - 1.0, 2 * dx * dy, 2 * dy * dy - 1.0
    qx, qy = axis.anchor[0] - 0.5, axis.anchor[1] - 0.5
    a, b, tx, c, d, ty = uv
    rqx = rxx * qx + rxy * qy
    rqy = rxy * qx + ryy * qy
    return (a * rxx + b * rxy, a * rxy + b * ryy,
            tx + a * (qx - rqx) + b * (qy - rqy),
            c * rxx + d * rxy, c * rxy + d * ryy,
            ty + c * (qx - rqx) + d * (qy - rqy))


def mirror_shape(shape: Shape, axis: Axis) -> Shape:
    """The mirror image of a shape as a new analytic shape.

    Axis-aligned axes are special-cased so the reflected rotation comes out
    as an exact negation (the rasterizer relies on that for bit-exact
    symmetric renders); for oblique axes the generic 2*alpha - theta form is
    used. Textured fills get their uv affine composed with the reflection.
    """
    c = mirror_point(shape.center, axis)
    if axis.is_vertical:
        # Direction angles map phi -> pi - phi. Ellipse axes are lines
        # (mod pi), so -theta names the same ellipse with exact trig.
        rot = -shape.rotation if shape.kind == ELLIPSE else math.pi - shape.rotation
    elif axis.is_horizontal:
        rot = -shape.rotation
    else:
        alpha = math.atan2(axis.direction[1], axis.direction[0])
        rot = 2.0 * alpha - shape.rotation
    w = shape.wave
    if w is not None:
        # Reflection flips the spine direction's handedness; negating the
        # phase keeps the reflected centerline on the mirrored sinusoid.
        w = WaveParams(w.amplitude, w.cycles, -w.phase, w.length)
    fill = shape.fill
    if fill.is_texture:
        fill = replace(fill, uv=_mirror_uv(fill.uv, axis))
    return replace(shape, center=c, rotation=rot, fill=fill, wave=w)


def shape_area(shape: Shape) -> float:
    """Analytic area, used by the balance-rule torque computations."""
    if shape.kind == POLYGON:
        n = shape.sides
        return 0.5 * n * shape.rx ** 2 * math.sin(TWO_PI / n)
    if shape.kind == ELLIPSE:
        return math.pi * shape.rx * shape.ry
    # A band between two parallel sinusoids keeps the rectangle's area.
    return shape.wave.length * 2.0 * shape.rx


def circumradius(shape: Shape) -> float:
    """Radius of the smallest origin-centered disc containing the shape."""
    if shape.kind == POLYGON:
        return shape.rx
    if shape.kind == ELLIPSE:
        return max(shape.rx, shape.ry)
    w = shape.wave
    half_diag = math.hypot(w.length / 2.0, w.amplitude + shape.rx)
    return half_diag


def shape_bounds(shape: Shape) -> tuple[Point, Point]:
    """Conservative axis-aligned bounding box (min corner, max corner)."""
    if shape.kind == POLYGON:
        vs = polygon_vertices(shape)
        xs = [v[0] for v in vs]
        ys = [v[1] for v in vs]
        return Point(min(xs), min(ys)), Point(max(xs), max(ys))
    cx, cy = shape.center
    if shape.kind == ELLIPSE:
        # Tight box of a rotated ellipse.
        ct, st = math.cos(shape.rotation), math.sin(shape.rotation)
        hx = math.hypot(shape.rx * ct, shape.ry * st)
        hy = math.hypot(shape.rx * st, shape.ry * ct)
        return Point(cx - hx, cy - hy), Point(cx + hx, cy + hy)
    # Wavy band: box of the oriented rectangle that envelopes the sinusoid.
    w = shape.wave
    ct, st = math.cos(shape.rotation), math.sin(shape.rotation)
    hl = w.length / 2.0
    hn = w.amplitude + shape.rx
    hx = abs(hl * ct) + abs(hn * st)
    hy = abs(hl * st) + abs(hn * ct)
    return Point(cx - hx, cy - hy), Point(cx + hx, cy + hy)


def in_canvas(shape: Shape, margin: float = 0.0) -> bool:
    lo, hi = shape_bounds(shape)
    return (lo[0] >= margin and lo[1] >= margin
            and hi[0] <= 1.0 - margin and hi[1] <= 1.0 - margin)


def overlaps(a: Shape, b: Shape, gap: float = 0.0) -> bool:
    """Conservative disc-based overlap test between two shapes."""
    return distance(a.center, b.center) < circumradius(a) + circumradius(b) + gap


def grid_points(rows: int, cols: int, origin: Point, row_gap: float,
                col_gap: float, angle: float = 0.0) -> list[Point]:
    """Lattice of rows*cols points, row-major, optionally rotated about origin."""
    if rows < 1 or cols < 1:
        raise ValueError("grid needs rows >= 1 and cols >= 1")
    # A gap only participates once its dimension repeats; single-row or
    # single-column lattices carry a meaningless 0.0 for the unused gap.
    if (rows > 1 and row_gap <= 0) or (cols > 1 and col_gap <= 0):
        raise ValueError("grid gaps must be positive")
    ca, sa = math.cos(angle), math.sin(angle)
    pts = []
    for i in range(rows):
        for j in range(cols):
            u, v = j * col_gap, i * row_gap
            pts.append(Point(origin[0] + u * ca - v * sa,
                             origin[1] + u * sa + v * ca))
    return pts


def snap(value: float, step: float = 1.0 / 512.0) -> float:
    """Snap a coordinate to a dyadic grid (keeps mirror arithmetic exact)."""
    return round(value / step) * step


def snap_point(p: Point, step: float = 1.0 / 512.0) -> Point:
    return Point(snap(p[0], step), snap(p[1], step))
