"""Seeded generators and checkable predicates for 32 composition rules.

Each rule produces abstract arrangements that exemplify one of nine design
sub-principles, grouped under emphasis, balance, and rhythm. A composition
is fully analytic (shapes plus ground-truth annotations); `verify` re-derives
every rule's defining property from the geometry and reports violations, and
`generate` only returns compositions that pass their own predicate.

The two visual styles share all layout logic: "sdv1" paints solid colors,
"sdv2" paints tinted procedural textures. Rule predicates always read the
nominal (tint) color, so constraints mean the same thing in both styles.
"""
from __future__ import annotations

import colorsys
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import median

import numpy as np

from .dataset import ManifestEntry, write_manifest
from .errors import GenerationFailed, InvalidRule, VdpError
from .geometry import (ELLIPSE, POLYGON, WAVY_BAND, Axis, FillStyle, Point,
                       Shape, WaveParams, circumradius, distance, grid_points,
                       in_canvas, mirror_shape, regular_polygon, shape_area,
                       snap_point)
from .textures import TextureRegistry

STYLES = ("sdv1", "sdv2")

PRINCIPLES = ("emphasis", "balance", "rhythm")

# Taxonomy order fixes class indices everywhere (training labels, keyboard
# shortcuts in the annotation UI, report axes).
CLASS_LABELS = ("color", "isolation", "shape",
                "symmetric", "asymmetric", "crystallographic",
                "regular", "progressive", "flowing")

CLASS_TO_PRINCIPLE = {
    "color": "emphasis", "isolation": "emphasis", "shape": "emphasis",
    "symmetric": "balance", "asymmetric": "balance",
    "crystallographic": "balance",
    "regular": "rhythm", "progressive": "rhythm", "flowing": "rhythm",
}


@dataclass(frozen=True)
class SubVdp:
    principle: str
    label: str

    def __post_init__(self):
        if self.principle != CLASS_TO_PRINCIPLE.get(self.label):
            raise VdpError(f"label {self.label!r} does not belong to "
                           f"principle {self.principle!r}")


SUB_VDPS = tuple(SubVdp(CLASS_TO_PRINCIPLE[c], c) for c in CLASS_LABELS)

RULE_CLASS: dict[int, str] = {}
for _rid in (1, 2):
    RULE_CLASS[_rid] = "color"
for _rid in (3, 4, 5, 6):
    RULE_CLASS[_rid] = "isolation"
for _rid in (7, 8, 9, 10):
    RULE_CLASS[_rid] = "shape"
for _rid in (11, 12):
    RULE_CLASS[_rid] = "symmetric"
for _rid in (13, 14, 15, 16, 17, 18):
    RULE_CLASS[_rid] = "asymmetric"
for _rid in (19, 20, 21, 22):
    RULE_CLASS[_rid] = "crystallographic"
for _rid in (23, 24, 25, 26):
    RULE_CLASS[_rid] = "regular"
for _rid in (27, 28, 29, 30):
    RULE_CLASS[_rid] = "progressive"
for _rid in (31, 32):
    RULE_CLASS[_rid] = "flowing"

RULES_BY_CLASS = {c: tuple(r for r in sorted(RULE_CLASS) if RULE_CLASS[r] == c)
                  for c in CLASS_LABELS}

RULE_NAMES = {
    1: "single figure against a contrasting ground",
    2: "hue outlier inside a uniform group",
    3: "element placed off a point grid",
    4: "grid with a vacancy and a castaway",
    5: "lone element versus a swarm",
    6: "element beyond a dividing bar",
    7: "side-count outlier in a group",
    8: "scale outlier in a group",
    9: "scale plus hue outlier in a layout",
    10: "shape-kind plus hue outlier in a layout",
    11: "mirror symmetry about a canvas axis",
    12: "mirror symmetry about an oblique axis",
    13: "one large form balanced by many small",
    14: "large near center, small far out",
    15: "dark group balanced by a light group",
    16: "groups split along a diagonal",
    17: "dense cluster balanced against a void",
    18: "two interlocking forms",
    19: "even scatter across quadrants",
    20: "jittered grid with varied colors",
    21: "jittered grid with varied shapes",
    22: "packed patchwork field",
    23: "strict square grid",
    24: "strict rotated grid",
    25: "single repeated row or column",
    26: "rings repeated at a fixed interval",
    27: "size ramp along a sweep",
    28: "spacing ramp along a sweep",
    29: "side-count ramp along a sweep",
    30: "tone ramp along a sweep",
    31: "parallel wavy bands",
    32: "elements strung on a sinuous path",
}


def rule_ids() -> tuple[int, ...]:
    return tuple(sorted(RULE_CLASS))


@dataclass
class Composition:
    background: FillStyle
    elements: list[Shape]
    label: str
    rule_id: int
    seed: int
    style: str
    annotations: dict

    @property
    def principle(self) -> str:
        return CLASS_TO_PRINCIPLE[self.label]


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


@dataclass(frozen=True)
class GenerationConfig:
    count: int
    style: str = "sdv1"
    rules: tuple[int, ...] | None = None
    base_seed: int = 0
    size: int = 300
    workers: int = 1
    texture_dir: str | None = None


# ---------------------------------------------------------------------------
# Color helpers

def hsl_to_rgb8(h: float, s: float, lightness: float) -> tuple[int, int, int]:
    r, g, b = colorsys.hls_to_rgb((h % 360.0) / 360.0, lightness, s)
    return (round(r * 255), round(g * 255), round(b * 255))


def rgb8_to_hsl(rgb) -> tuple[float, float, float]:
    h, lightness, s = colorsys.rgb_to_hls(rgb[0] / 255.0, rgb[1] / 255.0,
                                          rgb[2] / 255.0)
    return (h * 360.0, s, lightness)


def hue_distance(h1: float, h2: float) -> float:
    d = abs(h1 - h2) % 360.0
    return min(d, 360.0 - d)


def rgb_lightness(rgb) -> float:
    return (max(rgb) + min(rgb)) / (2.0 * 255.0)


def _hue(rgb) -> float:
    return rgb8_to_hsl(rgb)[0]


# ---------------------------------------------------------------------------
# Shared generator machinery

_M = 0.035          # canvas margin for element bounding boxes
_TOL = 1e-6         # analytic position tolerance in verify
_EXACT = 1e-9       # "identical parameter" tolerance
_HUE_OUT = 55.0     # minimum hue distance for an outlier cue
_HUE_SAME = 12.0    # maximum hue distance inside a uniform group
_SEED_NS = 0x5D7A   # namespace for per-composition seed sequences

_KINDS = ("circle", "ellipse", "poly3", "poly4", "poly5", "poly6")
_ELLIPSE_ASPECT = 0.62


def make_shape(kind: str, center: Point, radius: float, rotation: float,
               fill: FillStyle, z: int = 0) -> Shape:
    """Build a shape from a kind token; radius is always the circumradius."""
    if kind == "circle":
        return Shape(ELLIPSE, center, (radius, radius), 0.0, fill, z)
    if kind == "ellipse":
        return Shape(ELLIPSE, center, (radius, radius * _ELLIPSE_ASPECT),
                     rotation, fill, z)
    if kind.startswith("poly"):
        return regular_polygon(int(kind[4:]), center, radius, rotation, fill, z)
    raise VdpError(f"unknown kind token {kind!r}")


def kind_token(shape: Shape) -> str:
    if shape.kind == POLYGON:
        return f"poly{shape.sides}"
    if shape.kind == ELLIPSE:
        return "circle" if shape.rx == shape.ry else "ellipse"
    return "band" if shape.wave.amplitude == 0.0 else "wave"


def _nominal(shape: Shape) -> tuple[int, int, int]:
    return shape.fill.nominal_color()


class _Styler:
    """Turns nominal colors into style-appropriate fills."""

    def __init__(self, rng: np.random.Generator, style: str,
                 textures: TextureRegistry | None):
        self.rng = rng
        self.style = style
        self.names = textures.names() if style == "sdv2" else None

    def _textured(self, color, scale_range) -> FillStyle:
        name = self.names[int(self.rng.integers(len(self.names)))]
        s = float(self.rng.uniform(*scale_range))
        psi = float(self.rng.uniform(0.0, 2.0 * math.pi))
        tx, ty = (float(v) for v in self.rng.uniform(0.0, 1.0, 2))
        uv = (s * math.cos(psi), -s * math.sin(psi), tx,
              s * math.sin(psi), s * math.cos(psi), ty)
        return FillStyle.textured(name, uv, color)

    # Scale floors keep several texture repeats inside even the smallest
    # element, so an element's mean luma stays near the texture mean and its
    # tint hue survives rasterization; color predicates depend on that.
    def fill(self, color) -> FillStyle:
        if self.style == "sdv1":
            return FillStyle.solid(color)
        return self._textured(color, (5.0, 10.0))

    def bg(self, color) -> FillStyle:
        if self.style == "sdv1":
            return FillStyle.solid(color)
        return self._textured(color, (3.5, 7.0))


@dataclass
class _Ctx:
    seed: int
    style: str
    styler: _Styler


def _palette(rng, n: int, bg_sat=(0.08, 0.5), sep: float = 0.16):
    """Background plus n element colors with guaranteed tone separation.

    Returns (bg, colors, lightness_range); the range is what any further
    element colors must stay inside to keep the separation.
    """
    if rng.random() < 0.5:
        bg_l = float(rng.uniform(0.07, 0.30))
        lo, hi = max(0.25, bg_l + sep), 0.80
    else:
        bg_l = float(rng.uniform(0.72, 0.93))
        lo, hi = 0.25, min(0.80, bg_l - sep)
    bg = hsl_to_rgb8(float(rng.uniform(0, 360)), float(rng.uniform(*bg_sat)), bg_l)
    cols = [hsl_to_rgb8(float(rng.uniform(0, 360)), float(rng.uniform(0.4, 0.9)),
                        float(rng.uniform(lo, hi)))
            for _ in range(n)]
    return bg, cols, (lo, hi)


def _contrast_color(rng, base_rgb, l_range=(0.3, 0.75)):
    h, _, _ = rgb8_to_hsl(base_rgb)
    h2 = (h + float(rng.uniform(64, 296))) % 360.0
    return hsl_to_rgb8(h2, float(rng.uniform(0.55, 0.9)),
                       float(rng.uniform(*l_range)))


def _rand_kind(rng, kinds=_KINDS) -> str:
    return kinds[int(rng.integers(len(kinds)))]


def _scatter(rng, radii, region, occupied=(), gap=0.016, tries=300,
             accept=None):
    """Non-overlapping disc packing by rejection; None when it fails."""
    x0, y0, x1, y1 = region
    placed: list[tuple[float, float, float]] = list(occupied)
    out: list[Point] = []
    for r in radii:
        if x1 - x0 < 2 * r or y1 - y0 < 2 * r:
            return None
        for _ in range(tries):
            cx = float(rng.uniform(x0 + r, x1 - r))
            cy = float(rng.uniform(y0 + r, y1 - r))
            if accept is not None and not accept(cx, cy, r):
                continue
            if all(math.hypot(cx - px, cy - py) >= r + pr + gap
                   for px, py, pr in placed):
                placed.append((cx, cy, r))
                out.append(Point(cx, cy))
                break
        else:
            return None
    return out


def _lattice(rows: int, cols: int, span_x: float, span_y: float,
             angle: float = 0.0):
    """Centered lattice positions plus the parameters verify needs."""
    cg = span_x / (cols - 1) if cols > 1 else 0.0
    rg = span_y / (rows - 1) if rows > 1 else 0.0
    ca, sa = math.cos(angle), math.sin(angle)
    hx, hy = (cols - 1) * cg / 2.0, (rows - 1) * rg / 2.0
    origin = Point(0.5 - (hx * ca - hy * sa), 0.5 - (hx * sa + hy * ca))
    pts = grid_points(rows, cols, origin, rg, cg, angle)
    ann = {"origin": [origin.x, origin.y], "row_gap": rg, "col_gap": cg,
           "rows": rows, "cols": cols, "angle": angle}
    return pts, ann


def _torque_ratio(elements) -> float:
    """Weighted centroid displacement from canvas center (area weights)."""
    w = tx = ty = 0.0
    for e in elements:
        a = shape_area(e)
        w += a
        tx += a * (e.center[0] - 0.5)
        ty += a * (e.center[1] - 0.5)
    return math.hypot(tx, ty) / w if w > 0 else 0.0


def _quadrant_dev(elements) -> float:
    w = [0.0, 0.0, 0.0, 0.0]
    for e in elements:
        qi = (1 if e.center[0] >= 0.5 else 0) + (2 if e.center[1] >= 0.5 else 0)
        w[qi] += shape_area(e)
    mean = sum(w) / 4.0
    if mean <= 0:
        return 1.0
    return max(abs(v - mean) for v in w) / mean


def _band_clearance(band: Shape, other: Shape) -> float:
    """Distance from another shape to a band's envelope, conservatively."""
    d = (math.cos(band.rotation), math.sin(band.rotation))
    rel = (other.center[0] - band.center[0], other.center[1] - band.center[1])
    s = max(-band.wave.length / 2.0,
            min(band.wave.length / 2.0, rel[0] * d[0] + rel[1] * d[1]))
    dist = math.hypot(rel[0] - s * d[0], rel[1] - s * d[1])
    return dist - (band.rx + band.wave.amplitude + circumradius(other))


# ---------------------------------------------------------------------------
# Verification

def verify(comp: Composition) -> list[Violation]:
    """All detected violations of the composition's rule; empty means valid."""
    out: list[Violation] = []
    if comp.rule_id not in RULE_CLASS:
        return [Violation("unknown-rule", f"rule {comp.rule_id}")]
    if comp.style not in STYLES:
        out.append(Violation("unknown-style", comp.style))
    _check_generic(comp, out)
    try:
        _FAMILY_CHECKS[RULE_CLASS[comp.rule_id]](comp, out)
    except IndexError:
        # annotations referencing elements that are not there (e.g. a pair
        # index past the end) are a structural defect, not a checker crash
        _v(out, "structure", "annotation index out of range")
    return out


def _v(out, code, detail=""):
    out.append(Violation(code, detail))


def _check_generic(comp, out):
    a = comp.annotations
    els = comp.elements
    if comp.label != RULE_CLASS[comp.rule_id]:
        _v(out, "label-mismatch",
           f"{comp.label} != {RULE_CLASS[comp.rule_id]}")
    if len(els) != a.get("count"):
        _v(out, "count-mismatch", f"{len(els)} != {a.get('count')}")
    bg = comp.background.nominal_color()
    if list(bg) != list(a.get("background", [])):
        _v(out, "background-mismatch", str(bg))
    palette = {tuple(c) for c in a.get("palette", [])}
    for i, e in enumerate(els):
        if tuple(_nominal(e)) not in palette:
            _v(out, "off-palette", f"element {i}")
        if not in_canvas(e, 0.0):
            _v(out, "out-of-canvas", f"element {i}")
    if comp.rule_id in (18, 22):
        return
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            ei, ej = els[i], els[j]
            wi, wj = ei.kind == WAVY_BAND, ej.kind == WAVY_BAND
            if wi and wj:
                continue  # parallel-band spacing is checked per rule
            if wi or wj:
                band, other = (ei, ej) if wi else (ej, ei)
                if _band_clearance(band, other) < -1e-9:
                    _v(out, "overlap", f"elements {i},{j}")
            elif (distance(ei.center, ej.center)
                  < circumradius(ei) + circumradius(ej) - 1e-9):
                _v(out, "overlap", f"elements {i},{j}")


def _radii_uniform(els, idxs, tol=0.15):
    rs = [circumradius(els[i]) for i in idxs]
    med = median(rs)
    return all(abs(r / med - 1.0) <= tol for r in rs), med


def _kinds_uniform(els, idxs):
    toks = {kind_token(els[i]) for i in idxs}
    return len(toks) == 1


def _colors_uniform(els, idxs):
    cols = {tuple(_nominal(els[i])) for i in idxs}
    return len(cols) == 1


def _check_color(comp, out):
    a, els = comp.annotations, comp.elements
    bg = comp.background.nominal_color()
    if comp.rule_id == 1:
        if len(els) != 1:
            _v(out, "structure", "expected a single element")
            return
        e = els[0]
        if hue_distance(_hue(_nominal(e)), _hue(bg)) < _HUE_OUT:
            _v(out, "weak-hue-contrast")
        if abs(rgb_lightness(_nominal(e)) - rgb_lightness(bg)) < 0.12:
            _v(out, "weak-tone-contrast")
        return
    focal = a.get("focal")
    group = tuple(a.get("group_color", ()))
    if focal is None or not group or focal >= len(els):
        _v(out, "structure", "missing focal annotation")
        return
    rest = [i for i in range(len(els)) if i != focal]
    if hue_distance(_hue(_nominal(els[focal])), _hue(group)) < _HUE_OUT:
        _v(out, "weak-outlier")
    for i in rest:
        if hue_distance(_hue(_nominal(els[i])), _hue(group)) > _HUE_SAME:
            _v(out, "group-not-uniform", f"element {i}")
            break
    if not _kinds_uniform(els, list(range(len(els)))):
        _v(out, "kind-cue-leak")
    ok, _ = _radii_uniform(els, list(range(len(els))), tol=0.02)
    if not ok:
        _v(out, "size-cue-leak")


def _check_isolation(comp, out):
    a, els = comp.annotations, comp.elements
    focal = a.get("focal")
    cluster = list(a.get("cluster", []))
    if focal is None or len(cluster) < 3:
        _v(out, "structure", "missing cluster annotation")
        return
    pts = [els[i].center for i in cluster]
    nn = []
    for i, p in enumerate(pts):
        nn.append(min(distance(p, q) for j, q in enumerate(pts) if j != i))
    iso = min(distance(els[focal].center, p) for p in pts)
    if iso < 3.0 * max(nn) - 1e-9:
        _v(out, "not-isolated", f"{iso:.3f} < 3x {max(nn):.3f}")
    members = cluster + [focal]
    if not _colors_uniform(els, members):
        _v(out, "color-cue-leak")
    if not _kinds_uniform(els, members):
        _v(out, "kind-cue-leak")
    ok, _ = _radii_uniform(els, members, tol=0.02)
    if not ok:
        _v(out, "size-cue-leak")


def _check_shape(comp, out):
    a, els = comp.annotations, comp.elements
    focal = a.get("focal")
    if focal is None or focal >= len(els):
        _v(out, "structure", "missing focal annotation")
        return
    rest = [i for i in range(len(els)) if i != focal]
    if not _kinds_uniform(els, rest) or not _colors_uniform(els, rest):
        _v(out, "group-not-uniform")
        return
    ok, med = _radii_uniform(els, rest)
    if not ok:
        _v(out, "group-size-spread")
    fe = els[focal]
    base = els[rest[0]]
    fr = circumradius(fe)
    kind_differs = kind_token(fe) != kind_token(base)
    if fe.kind == POLYGON and base.kind == POLYGON:
        kind_differs = abs(fe.sides - base.sides) >= 2
    hue_gap = hue_distance(_hue(_nominal(fe)), _hue(_nominal(base)))
    rid = comp.rule_id
    if rid == 7:
        if not kind_differs:
            _v(out, "no-kind-outlier")
        if abs(fr / med - 1.0) > 0.15:
            _v(out, "size-cue-leak")
        if tuple(_nominal(fe)) != tuple(_nominal(base)):
            _v(out, "color-cue-leak")
    elif rid == 8:
        if fr < 1.8 * med:
            _v(out, "no-scale-outlier")
        if kind_token(fe) != kind_token(base):
            _v(out, "kind-cue-leak")
        if tuple(_nominal(fe)) != tuple(_nominal(base)):
            _v(out, "color-cue-leak")
    elif rid == 9:
        if fr < 1.8 * med:
            _v(out, "no-scale-outlier")
        if hue_gap < _HUE_OUT:
            _v(out, "weak-hue-contrast")
        if kind_token(fe) != kind_token(base):
            _v(out, "kind-cue-leak")
    else:  # rule 10
        if not kind_differs:
            _v(out, "no-kind-outlier")
        if hue_gap < _HUE_OUT:
            _v(out, "weak-hue-contrast")
        if abs(fr / med - 1.0) > 0.15:
            _v(out, "size-cue-leak")


def _angle_gap(a: float, b: float, period: float) -> float:
    d = (a - b) % period
    return min(d, period - d)


def _orientation_gap(m: Shape, e: Shape) -> float:
    """Orientation difference between two same-kind shapes, honoring each
    kind's rotational symmetry."""
    if m.kind == POLYGON:
        return _angle_gap(m.rotation, e.rotation, 2.0 * math.pi / m.sides)
    if m.kind == ELLIPSE:
        if m.rx == m.ry:
            return 0.0
        return _angle_gap(m.rotation, e.rotation, math.pi)
    if _angle_gap(m.rotation, e.rotation, 2.0 * math.pi) > _TOL:
        return 1.0
    w1, w2 = m.wave, e.wave
    return max(abs(w1.amplitude - w2.amplitude), abs(w1.cycles - w2.cycles),
               _angle_gap(w1.phase, w2.phase, 2.0 * math.pi))


def _check_symmetric(comp, out):
    a, els = comp.annotations, comp.elements
    ax = a.get("axis")
    if not ax:
        _v(out, "structure", "missing axis")
        return
    axis = Axis(Point(*ax["anchor"]), Point(*ax["direction"]))
    pairs = [tuple(p) for p in a.get("pairs", [])]
    selfs = list(a.get("selfs", []))
    used = sorted([i for p in pairs for i in p] + selfs)
    if used != list(range(len(els))):
        _v(out, "unpaired-elements")
        return
    if len(pairs) < 2:
        _v(out, "too-few-pairs")
    for i, j in pairs:
        m = mirror_shape(els[i], axis)
        e = els[j]
        if distance(m.center, e.center) > _TOL:
            _v(out, "broken-mirror-pair", f"{i}->{j}")
            continue
        if kind_token(els[i]) != kind_token(e):
            _v(out, "pair-kind-mismatch", f"{i}->{j}")
        elif _orientation_gap(m, e) > _TOL:
            _v(out, "pair-orientation-mismatch", f"{i}->{j}")
        if (abs(els[i].rx - e.rx) > _EXACT or abs(els[i].ry - e.ry) > _EXACT):
            _v(out, "pair-size-mismatch", f"{i}->{j}")
        if tuple(_nominal(els[i])) != tuple(_nominal(e)):
            _v(out, "pair-color-mismatch", f"{i}->{j}")
    for k in selfs:
        m = mirror_shape(els[k], axis)
        if distance(m.center, els[k].center) > _TOL:
            _v(out, "self-not-on-axis", f"element {k}")
        elif _orientation_gap(m, els[k]) > _TOL:
            _v(out, "self-not-symmetric", f"element {k}")


def _check_asymmetric(comp, out):
    a, els = comp.annotations, comp.elements
    tq = _torque_ratio(els)
    if tq > 0.10:
        _v(out, "unbalanced", f"torque ratio {tq:.3f}")
    rid = comp.rule_id
    roles = a.get("roles", {})
    if rid == 13:
        big = roles.get("big")
        smalls = roles.get("smalls", [])
        if big is None or len(smalls) < 4:
            _v(out, "structure")
            return
        amax = max(shape_area(els[i]) for i in smalls)
        if shape_area(els[big]) < 2.5 * amax:
            _v(out, "no-dominant-form")
    elif rid == 14:
        if len(els) != 2:
            _v(out, "structure")
            return
        areas = sorted((shape_area(e), i) for i, e in enumerate(els))
        small, big = els[areas[0][1]], els[areas[1][1]]
        if areas[1][0] < 2.5 * areas[0][0]:
            _v(out, "no-dominant-form")
        d_big = distance(big.center, Point(0.5, 0.5))
        d_small = distance(small.center, Point(0.5, 0.5))
        if d_small < 1.4 * d_big:
            _v(out, "no-lever-arm")
    elif rid == 15:
        ga, gb = roles.get("a", []), roles.get("b", [])
        if not ga or not gb:
            _v(out, "structure")
            return
        la = sum(rgb_lightness(_nominal(els[i])) for i in ga) / len(ga)
        lb = sum(rgb_lightness(_nominal(els[i])) for i in gb) / len(gb)
        if abs(la - lb) < 0.12:
            _v(out, "no-tone-contrast")
        u = a.get("split_dir")
        if u:
            sa = [(els[i].center[0] - 0.5) * u[0] + (els[i].center[1] - 0.5) * u[1]
                  for i in ga]
            sb = [(els[i].center[0] - 0.5) * u[0] + (els[i].center[1] - 0.5) * u[1]
                  for i in gb]
            if min(sa) < 0.005 or max(sb) > -0.005:
                _v(out, "groups-not-separated")
    elif rid == 16:
        ga, gb = roles.get("a", []), roles.get("b", [])
        diag = a.get("diagonal")
        if not ga or not gb or diag not in ("main", "anti"):
            _v(out, "structure")
            return
        def signed(p):
            if diag == "main":
                return (p[1] - p[0]) / math.sqrt(2.0)
            return (p[0] + p[1] - 1.0) / math.sqrt(2.0)
        if (min(signed(els[i].center) for i in ga) < 0.005
                or max(signed(els[i].center) for i in gb) > -0.005):
            _v(out, "groups-not-separated")
        if len(ga) == len(gb):
            _v(out, "not-asymmetric", "equal group sizes")
    elif rid == 17:
        cluster = roles.get("cluster", [])
        counter = roles.get("counter")
        if len(cluster) < 5 or counter is None:
            _v(out, "structure")
            return
        cc = Point(sum(els[i].center[0] for i in cluster) / len(cluster),
                   sum(els[i].center[1] for i in cluster) / len(cluster))
        if max(distance(els[i].center, cc) for i in cluster) > 0.25:
            _v(out, "cluster-too-loose")
        if distance(els[counter].center, cc) < 0.40:
            _v(out, "no-void")
    elif rid == 18:
        if len(els) != 2:
            _v(out, "structure")
            return
        e1, e2 = els
        if (distance(e1.center, e2.center)
                >= circumradius(e1) + circumradius(e2)):
            _v(out, "not-interlocked")
        if tuple(_nominal(e1)) == tuple(_nominal(e2)):
            _v(out, "forms-not-distinct")


def _check_crystallographic(comp, out):
    a, els = comp.annotations, comp.elements
    dev = _quadrant_dev(els)
    if dev > 0.25:
        _v(out, "quadrant-imbalance", f"{dev:.3f}")
    rid = comp.rule_id
    if rid == 19:
        k = a.get("per_quadrant")
        counts = [0, 0, 0, 0]
        for e in els:
            qi = (1 if e.center[0] >= 0.5 else 0) + (2 if e.center[1] >= 0.5 else 0)
            counts[qi] += 1
        if any(c != k for c in counts):
            _v(out, "uneven-scatter", str(counts))
        if not _kinds_uniform(els, list(range(len(els)))):
            _v(out, "kinds-not-uniform")
    elif rid in (20, 21):
        g = a.get("grid")
        if not g:
            _v(out, "structure")
            return
        pts = grid_points(g["rows"], g["cols"], Point(*g["origin"]),
                          g["row_gap"], g["col_gap"], g["angle"])
        max_off = a.get("max_offset", 0.0)
        for i, e in enumerate(els):
            if distance(e.center, pts[i]) > max_off + _TOL:
                _v(out, "off-lattice", f"element {i}")
                break
        if rid == 20:
            if len({tuple(_nominal(e)) for e in els}) < 3:
                _v(out, "too-few-colors")
            if not _kinds_uniform(els, list(range(len(els)))):
                _v(out, "kinds-not-uniform")
        else:
            if len({kind_token(e) for e in els}) < 3:
                _v(out, "too-few-kinds")
    elif rid == 22:
        if len(els) < 20:
            _v(out, "too-sparse")
        if sum(shape_area(e) for e in els) < 0.40:
            _v(out, "low-coverage")


def _check_regular(comp, out):
    a, els = comp.annotations, comp.elements
    rid = comp.rule_id
    if rid in (23, 24, 25):
        g = a.get("grid")
        if not g:
            _v(out, "structure")
            return
        pts = grid_points(g["rows"], g["cols"], Point(*g["origin"]),
                          g["row_gap"], g["col_gap"], g["angle"])
        if len(pts) != len(els):
            _v(out, "count-mismatch", "lattice size")
            return
        for i, e in enumerate(els):
            if distance(e.center, pts[i]) > _TOL:
                _v(out, "off-lattice", f"element {i}")
                break
        base = els[0]
        for i, e in enumerate(els):
            if (kind_token(e) != kind_token(base)
                    or tuple(_nominal(e)) != tuple(_nominal(base))
                    or abs(e.rx - base.rx) > _EXACT
                    or abs(e.ry - base.ry) > _EXACT
                    or abs(e.rotation - base.rotation) > _EXACT):
                _v(out, "elements-not-identical", f"element {i}")
                break
    else:  # rule 26
        rings = a.get("rings")
        if not rings:
            _v(out, "structure")
            return
        center = Point(*rings["center"])
        radii = rings["radii"]
        if len(radii) < 3:
            _v(out, "too-few-rings")
        diffs = [radii[i + 1] - radii[i] for i in range(len(radii) - 1)]
        if any(abs(d - diffs[0]) > _EXACT for d in diffs):
            _v(out, "uneven-ring-interval")
        base = els[0]
        for members, r in zip(rings["members"], radii):
            angs = []
            for i in members:
                e = els[i]
                if abs(distance(e.center, center) - r) > _TOL:
                    _v(out, "off-ring", f"element {i}")
                    return
                angs.append(math.atan2(e.center[1] - center[1],
                                       e.center[0] - center[0]))
                if (kind_token(e) != kind_token(base)
                        or tuple(_nominal(e)) != tuple(_nominal(base))
                        or abs(circumradius(e) - circumradius(base)) > _EXACT):
                    _v(out, "elements-not-identical", f"element {i}")
                    return
            angs.sort()
            step = 2.0 * math.pi / len(members)
            gaps = [angs[i + 1] - angs[i] for i in range(len(angs) - 1)]
            gaps.append(2.0 * math.pi + angs[0] - angs[-1])
            if any(abs(gp - step) > _TOL for gp in gaps):
                _v(out, "uneven-ring-spacing")
                return


def _check_progressive(comp, out):
    a, els = comp.annotations, comp.elements
    st = a.get("steps")
    if not st:
        _v(out, "structure")
        return
    groups = st["groups"]
    attr = st["attribute"]
    axis = st["axis"]
    if len(groups) < 4:
        _v(out, "too-few-steps")
        return
    if attr == "spacing":
        coords = []
        for g in groups:
            cs = [els[i].center[0] * axis[0] + els[i].center[1] * axis[1]
                  for i in g]
            if max(cs) - min(cs) > _EXACT:
                _v(out, "step-not-aligned")
                return
            coords.append(cs[0])
        gaps = [coords[i + 1] - coords[i] for i in range(len(coords) - 1)]
        if not (all(g > 0 for g in gaps) or all(g < 0 for g in gaps)):
            _v(out, "sweep-reverses")
            return
        mags = [abs(g) for g in gaps]
        ratios = [mags[i + 1] / mags[i] for i in range(len(mags) - 1)]
        inc = all(r >= 1.04 for r in ratios)
        dec = all(r <= 1.0 / 1.04 for r in ratios)
        if not (inc or dec):
            _v(out, "not-monotone", "spacing")
        if not _colors_uniform(els, list(range(len(els)))):
            _v(out, "color-cue-leak")
        return
    values = []
    for g in groups:
        if attr == "size":
            vs = [circumradius(els[i]) for i in g]
            uniform = max(vs) - min(vs) <= _EXACT
        elif attr == "sides":
            vs = [els[i].sides if els[i].kind == POLYGON else -1 for i in g]
            uniform = len(set(vs)) == 1 and vs[0] > 0
        else:  # lightness
            vs = [rgb_lightness(_nominal(els[i])) for i in g]
            uniform = max(vs) - min(vs) <= 1e-9
        if not uniform:
            _v(out, "step-not-uniform")
            return
        values.append(vs[0])
    steps_fwd = [values[i + 1] - values[i] for i in range(len(values) - 1)]
    min_step = {"size": 0.0, "sides": 1.0, "lightness": 0.015}[attr]
    inc = all(s > min_step - 1e-12 and s > 0 for s in steps_fwd)
    dec = all(-s > min_step - 1e-12 and s < 0 for s in steps_fwd)
    if attr == "size":
        ratios = [values[i + 1] / values[i] for i in range(len(values) - 1)]
        inc = all(r >= 1.04 for r in ratios)
        dec = all(r <= 1.0 / 1.04 for r in ratios)
    if not (inc or dec):
        _v(out, "not-monotone", attr)
    if attr in ("size", "spacing", "lightness"):
        if not _kinds_uniform(els, list(range(len(els)))):
            _v(out, "kind-cue-leak")
    if attr in ("size", "sides"):
        if not _colors_uniform(els, list(range(len(els)))):
            _v(out, "color-cue-leak")


def _check_flowing(comp, out):
    a, els = comp.annotations, comp.elements
    rid = comp.rule_id
    if rid == 31:
        if len(els) < 3:
            _v(out, "too-few-bands")
            return
        if any(e.kind != WAVY_BAND for e in els):
            _v(out, "not-bands")
            return
        base = els[0]
        for e in els[1:]:
            if (abs(e.rotation - base.rotation) > _EXACT
                    or abs(e.wave.amplitude - base.wave.amplitude) > _EXACT
                    or abs(e.wave.cycles - base.wave.cycles) > _EXACT
                    or abs(e.wave.phase - base.wave.phase) > _EXACT
                    or abs(e.rx - base.rx) > _EXACT):
                _v(out, "bands-not-parallel")
                return
        if base.wave.amplitude < 0.02:
            _v(out, "not-wavy")
        nx, ny = -math.sin(base.rotation), math.cos(base.rotation)
        dx, dy = math.cos(base.rotation), math.sin(base.rotation)
        offs = sorted(e.center[0] * nx + e.center[1] * ny for e in els)
        alongs = [e.center[0] * dx + e.center[1] * dy for e in els]
        if max(alongs) - min(alongs) > _TOL:
            _v(out, "bands-not-aligned")
        gaps = [offs[i + 1] - offs[i] for i in range(len(offs) - 1)]
        if any(abs(g - gaps[0]) > _TOL for g in gaps):
            _v(out, "uneven-band-spacing")
        if min(gaps) < 2 * base.rx + 0.008:
            _v(out, "bands-too-close")
    else:  # rule 32
        p = a.get("path")
        if not p or len(els) < 6:
            _v(out, "structure")
            return
        if p["amplitude"] < 0.04:
            _v(out, "not-wavy")
        sx, sy = p["start"]
        dx, dy = p["dir"]
        nx, ny = -dy, dx
        for i, (e, t) in enumerate(zip(els, p["ts"])):
            wob = p["amplitude"] * math.sin(
                2.0 * math.pi * p["cycles"] * t + p["phase"])
            ex = sx + p["length"] * t * dx + wob * nx
            ey = sy + p["length"] * t * dy + wob * ny
            if distance(e.center, Point(ex, ey)) > _TOL:
                _v(out, "off-path", f"element {i}")
                return
        ok, _ = _radii_uniform(els, list(range(len(els))), tol=1e-9)
        if (not _kinds_uniform(els, list(range(len(els))))
                or not _colors_uniform(els, list(range(len(els)))) or not ok):
            _v(out, "elements-not-identical")


_FAMILY_CHECKS = {
    "color": _check_color,
    "isolation": _check_isolation,
    "shape": _check_shape,
    "symmetric": _check_symmetric,
    "asymmetric": _check_asymmetric,
    "crystallographic": _check_crystallographic,
    "regular": _check_regular,
    "progressive": _check_progressive,
    "flowing": _check_flowing,
}


# ---------------------------------------------------------------------------
# Rule generators. Every generator may return None when a stochastic layout
# misses its margins; generate() then redraws with a fresh substream.

def _comp(ctx, bg_fill, elements, rule_id, ann) -> Composition:
    return Composition(bg_fill, elements, RULE_CLASS[rule_id], rule_id,
                       ctx.seed, ctx.style, ann)


def _flipper(rng):
    """Random corner reflection so canonical layouts don't bias a corner."""
    fx = rng.random() < 0.5
    fy = rng.random() < 0.5
    def f(p: Point) -> Point:
        return Point(1.0 - p.x if fx else p.x, 1.0 - p.y if fy else p.y)
    return f


def _gen_1(rng, ctx):
    if rng.random() < 0.5:
        bg_l = float(rng.uniform(0.72, 0.92))
        l_range = (0.25, bg_l - 0.16)
    else:
        bg_l = float(rng.uniform(0.08, 0.30))
        l_range = (max(0.25, bg_l + 0.16), 0.80)
    bg_h = float(rng.uniform(0, 360))
    bg = hsl_to_rgb8(bg_h, float(rng.uniform(0.30, 0.70)), bg_l)
    color = hsl_to_rgb8((bg_h + float(rng.uniform(64, 296))) % 360.0,
                        float(rng.uniform(0.55, 0.90)),
                        float(rng.uniform(*l_range)))
    r = float(rng.uniform(0.10, 0.19))
    c = Point(float(rng.uniform(_M + r, 1 - _M - r)),
              float(rng.uniform(_M + r, 1 - _M - r)))
    e = make_shape(_rand_kind(rng), c, r, float(rng.uniform(0, 2 * math.pi)),
                   ctx.styler.fill(color))
    ann = {"count": 1, "background": list(bg), "palette": [list(color)],
           "focal": 0}
    return _comp(ctx, ctx.styler.bg(bg), [e], 1, ann)


def _jittered_grid_layout(rng, rows, cols, pad_frac):
    """Centered lattice whose cells can hold pad_frac*cell of content."""
    span_x = 0.93 / (1.0 + 2.0 * pad_frac / (cols - 1)) * float(rng.uniform(0.9, 1.0))
    span_y = 0.93 / (1.0 + 2.0 * pad_frac / (rows - 1)) * float(rng.uniform(0.9, 1.0))
    pts, g = _lattice(rows, cols, span_x, span_y)
    cell = min(g["col_gap"], g["row_gap"])
    return pts, g, cell


def _gen_2(rng, ctx):
    bg, group_cols, l_range = _palette(rng, 1)
    group_color = group_cols[0]
    outlier = _contrast_color(rng, group_color, l_range)
    rows, cols = int(rng.integers(3, 6)), int(rng.integers(3, 7))
    pts, _, cell = _jittered_grid_layout(rng, rows, cols, 0.46)
    jit = 0.16 * cell
    r = float(rng.uniform(0.24, 0.30)) * cell
    focal = int(rng.integers(rows * cols))
    kind = _rand_kind(rng)
    rot = float(rng.uniform(0, 2 * math.pi))
    els = []
    for i, p in enumerate(pts):
        c = Point(p.x + float(rng.uniform(-jit, jit)),
                  p.y + float(rng.uniform(-jit, jit)))
        color = outlier if i == focal else group_color
        els.append(make_shape(kind, c, r, rot, ctx.styler.fill(color)))
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(group_color), list(outlier)],
           "focal": focal, "group_color": list(group_color)}
    return _comp(ctx, ctx.styler.bg(bg), els, 2, ann)


def _isolation_comp(rng, ctx, rule_id, cluster_pts, iso_box, r, color, bg,
                    extra_shapes=(), extra_colors=(), spacing_hint=None):
    """Shared tail for the isolation rules: far placement plus assembly."""
    nn = []
    for i, p in enumerate(cluster_pts):
        nn.append(min(distance(p, q) for j, q in enumerate(cluster_pts) if j != i))
    max_nn = max(nn)
    if spacing_hint is not None and max_nn > spacing_hint:
        return None
    need = 3.0 * max_nn + 0.02
    iso = None
    for _ in range(200):
        cand = Point(float(rng.uniform(iso_box[0] + r, iso_box[2] - r)),
                     float(rng.uniform(iso_box[1] + r, iso_box[3] - r)))
        if min(distance(cand, p) for p in cluster_pts) >= need:
            iso = cand
            break
    if iso is None:
        return None
    kind = _rand_kind(rng, ("circle", "poly3", "poly4", "poly5", "poly6"))
    rot = float(rng.uniform(0, 2 * math.pi))
    flip = _flipper(rng)
    fill = ctx.styler.fill(color)
    els = [make_shape(kind, flip(p), r, rot, fill) for p in cluster_pts]
    els.append(make_shape(kind, flip(iso), r, rot, fill))
    cluster_idx = list(range(len(cluster_pts)))
    focal = len(els) - 1
    extras = []
    for sh in extra_shapes:
        c = flip(sh.center)
        els.append(Shape(sh.kind, c, sh.radius, sh.rotation, sh.fill, sh.z,
                         sh.sides, sh.wave))
        extras.append(len(els) - 1)
    palette = [list(color)] + [list(c) for c in extra_colors]
    ann = {"count": len(els), "background": list(bg), "palette": palette,
           "focal": focal, "cluster": cluster_idx, "extras": extras}
    return _comp(ctx, ctx.styler.bg(bg), els, rule_id, ann)


def _gen_3(rng, ctx):
    bg, (color,), _ = _palette(rng, 1)
    rows, cols = int(rng.integers(4, 6)), int(rng.integers(4, 6))
    spacing = float(rng.uniform(0.105, 0.130))
    ox = float(rng.uniform(0.06, 0.09))
    oy = float(rng.uniform(0.06, 0.09))
    pts = grid_points(rows, cols, Point(ox, oy), spacing, spacing)
    r = spacing * float(rng.uniform(0.26, 0.36))
    iso_box = (0.78, 0.78, 1 - _M, 1 - _M)
    return _isolation_comp(rng, ctx, 3, pts, iso_box, r, color, bg)


def _gen_4(rng, ctx):
    bg, (color,), _ = _palette(rng, 1)
    rows, cols = int(rng.integers(4, 6)), int(rng.integers(4, 6))
    spacing = float(rng.uniform(0.105, 0.130))
    ox = float(rng.uniform(0.06, 0.09))
    oy = float(rng.uniform(0.06, 0.09))
    pts = grid_points(rows, cols, Point(ox, oy), spacing, spacing)
    hole_r = int(rng.integers(1, rows - 1))
    hole_c = int(rng.integers(1, cols - 1))
    del pts[hole_r * cols + hole_c]
    r = spacing * float(rng.uniform(0.26, 0.36))
    iso_box = (0.78, 0.78, 1 - _M, 1 - _M)
    return _isolation_comp(rng, ctx, 4, pts, iso_box, r, color, bg)


def _gen_5(rng, ctx):
    bg, (color,), _ = _palette(rng, 1)
    n = int(rng.integers(9, 15))
    r = float(rng.uniform(0.022, 0.032))
    cx = float(rng.uniform(0.26, 0.36))
    cy = float(rng.uniform(0.26, 0.36))
    half = 0.17
    pts = _scatter(rng, [r] * n, (cx - half, cy - half, cx + half, cy + half),
                   gap=0.014)
    if pts is None:
        return None
    iso_box = (0.74, 0.74, 1 - _M, 1 - _M)
    return _isolation_comp(rng, ctx, 5, pts, iso_box, r, color, bg,
                           spacing_hint=0.12)


def _gen_6(rng, ctx):
    bg, cols3, _ = _palette(rng, 2)
    color, bar_color = cols3
    bar_x = float(rng.uniform(0.56, 0.64))
    hw = float(rng.uniform(0.005, 0.009))
    bar = Shape(WAVY_BAND, Point(bar_x, 0.5), hw, math.pi / 2.0,
                ctx.styler.fill(bar_color),
                wave=WaveParams(0.0, 1.0, 0.0, float(rng.uniform(0.80, 0.90))))
    n = int(rng.integers(6, 9))
    r = float(rng.uniform(0.028, 0.040))
    side = min(0.36, max(2.6 * (r + 0.008) * math.sqrt(n), 0.26))
    pts = _scatter(rng, [r] * n, (0.08, 0.08, 0.08 + side, 0.08 + side),
                   gap=0.014)
    if pts is None:
        return None
    iso_box = (bar_x + 0.10, 0.60, 1 - _M, 0.93)
    return _isolation_comp(rng, ctx, 6, pts, iso_box, r, color, bg,
                           extra_shapes=(bar,), extra_colors=(bar_color,),
                           spacing_hint=0.12)


def _gen_7(rng, ctx):
    bg, (color,), _ = _palette(rng, 1)
    n = int(rng.integers(6, 10))
    base_sides = int(rng.integers(3, 7))
    delta = int(rng.integers(2, 4))
    if base_sides - delta >= 3 and rng.random() < 0.5:
        focal_sides = base_sides - delta
    else:
        focal_sides = base_sides + delta
    r = float(rng.uniform(0.045, 0.060))
    pts = _scatter(rng, [r] * n, (_M, _M, 1 - _M, 1 - _M), gap=0.028)
    if pts is None:
        return None
    focal = int(rng.integers(n))
    fill = ctx.styler.fill(color)
    els = [make_shape(f"poly{focal_sides if i == focal else base_sides}",
                      p, r, float(rng.uniform(0, 2 * math.pi)), fill)
           for i, p in enumerate(pts)]
    ann = {"count": n, "background": list(bg), "palette": [list(color)],
           "focal": focal}
    return _comp(ctx, ctx.styler.bg(bg), els, 7, ann)


def _gen_8(rng, ctx):
    bg, (color,), _ = _palette(rng, 1)
    n = int(rng.integers(6, 10))
    base = float(rng.uniform(0.034, 0.046))
    radii = [base * float(rng.uniform(2.1, 2.5))]
    radii += [base * float(rng.uniform(0.92, 1.08)) for _ in range(n - 1)]
    pts = _scatter(rng, radii, (_M, _M, 1 - _M, 1 - _M), gap=0.022)
    if pts is None:
        return None
    perm = [int(v) for v in rng.permutation(n)]
    kind = _rand_kind(rng)
    fill = ctx.styler.fill(color)
    els = [None] * n
    focal = None
    for slot, src in enumerate(perm):
        if src == 0:
            focal = slot
        els[slot] = make_shape(kind, pts[src], radii[src],
                               float(rng.uniform(0, 2 * math.pi)), fill)
    ann = {"count": n, "background": list(bg), "palette": [list(color)],
           "focal": focal}
    return _comp(ctx, ctx.styler.bg(bg), els, 8, ann)


def _outlier_grid(rng, ctx, rule_id):
    """Rules 9/10: a calm layout whose outlier carries two cues at once."""
    bg, group_cols, l_range = _palette(rng, 1)
    group_color = group_cols[0]
    outlier_color = _contrast_color(rng, group_color, l_range)
    rows, cols = int(rng.integers(3, 5)), int(rng.integers(3, 6))
    scale_cue = rule_id == 9
    pad = 0.56 if scale_cue else 0.40
    pts, _, cell = _jittered_grid_layout(rng, rows, cols, pad)
    jit = 0.06 * cell if scale_cue else 0.10 * cell
    base_r = (0.22 if scale_cue else 0.27) * cell
    focal = int(rng.integers(rows * cols))
    base_kind = _rand_kind(rng)
    if scale_cue:
        focal_kind = base_kind
        focal_r = base_r * float(rng.uniform(2.0, 2.25))
    else:
        others = [k for k in _KINDS
                  if k != base_kind and (not (k.startswith("poly")
                                              and base_kind.startswith("poly"))
                                         or abs(int(k[4:]) - int(base_kind[4:])) >= 2)]
        focal_kind = others[int(rng.integers(len(others)))]
        focal_r = base_r
    rot = float(rng.uniform(0, 2 * math.pi))
    els = []
    for i, p in enumerate(pts):
        c = Point(p.x + float(rng.uniform(-jit, jit)),
                  p.y + float(rng.uniform(-jit, jit)))
        if i == focal:
            els.append(make_shape(focal_kind, c, focal_r, rot,
                                  ctx.styler.fill(outlier_color)))
        else:
            els.append(make_shape(base_kind, c, base_r, rot,
                                  ctx.styler.fill(group_color)))
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(group_color), list(outlier_color)],
           "focal": focal}
    return _comp(ctx, ctx.styler.bg(bg), els, rule_id, ann)


def _gen_9(rng, ctx):
    return _outlier_grid(rng, ctx, 9)


def _gen_10(rng, ctx):
    return _outlier_grid(rng, ctx, 10)


_MIRROR_KINDS = ("circle", "ellipse", "poly3", "poly4", "poly5", "poly6")


def _gen_symmetric(rng, ctx, rule_id):
    bg, pal, _ = _palette(rng, 4)
    if rule_id == 11:
        axis = Axis.vertical(0.5) if rng.random() < 0.5 else Axis.horizontal(0.5)
    else:
        alpha = float(rng.uniform(0.30, math.pi - 0.30))
        if abs(alpha - math.pi / 2.0) < 0.28:
            return None
        axis = Axis.through_center(alpha)
    nx, ny = -axis.direction[1], axis.direction[0]

    def side_of(p: Point) -> float:
        return (p.x - axis.anchor[0]) * nx + (p.y - axis.anchor[1]) * ny

    n_pairs = int(rng.integers(2, 5))
    occupied: list[tuple[float, float, float]] = []
    els: list[Shape] = []
    pairs = []
    selfs = []
    for pi in range(n_pairs):
        r = float(rng.uniform(0.05, 0.10))
        fill = ctx.styler.fill(pal[pi % len(pal)])
        kind = _rand_kind(rng, _MIRROR_KINDS)
        rot = float(rng.uniform(0, 2 * math.pi))
        placed = False
        for _ in range(150):
            c = snap_point(Point(float(rng.uniform(_M + r, 1 - _M - r)),
                                 float(rng.uniform(_M + r, 1 - _M - r))))
            if side_of(c) < r + 0.012:
                continue
            src = make_shape(kind, c, r, rot, fill)
            mir = mirror_shape(src, axis)
            if not (in_canvas(src, _M * 0.6) and in_canvas(mir, _M * 0.6)):
                continue
            mc = mir.center
            if all(math.hypot(px - q[0], py - q[1]) >= r + q[2] + 0.014
                   for q in occupied for px, py in (c, mc)):
                els.extend((src, mir))
                pairs.append([len(els) - 2, len(els) - 1])
                occupied.extend([(c.x, c.y, r), (mc.x, mc.y, r)])
                placed = True
                break
        if not placed and pi < 2:
            return None
    if len(pairs) < 2:
        return None
    if rng.random() < 0.45:
        r = float(rng.uniform(0.05, 0.09))
        fill = ctx.styler.fill(pal[3])
        for _ in range(80):
            t = float(rng.uniform(-0.32, 0.32))
            c = Point(axis.anchor[0] + t * axis.direction[0],
                      axis.anchor[1] + t * axis.direction[1])
            if rule_id == 11:
                c = snap_point(c)
                kind = "circle" if rng.random() < 0.5 else "ellipse"
                sh = make_shape(kind, c, r, 0.0, fill)
            else:
                sh = make_shape("circle", c, r, 0.0, fill)
            if not in_canvas(sh, _M * 0.6):
                continue
            if all(math.hypot(c.x - q[0], c.y - q[1]) >= r + q[2] + 0.014
                   for q in occupied):
                els.append(sh)
                selfs.append(len(els) - 1)
                occupied.append((c.x, c.y, r))
                break
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(c) for c in pal],
           "axis": {"anchor": [axis.anchor[0], axis.anchor[1]],
                    "direction": [axis.direction[0], axis.direction[1]]},
           "pairs": pairs, "selfs": selfs}
    return _comp(ctx, ctx.styler.bg(bg), els, rule_id, ann)


def _gen_11(rng, ctx):
    return _gen_symmetric(rng, ctx, 11)


def _gen_12(rng, ctx):
    return _gen_symmetric(rng, ctx, 12)


def _weighted_centroid(shapes):
    w = xs = ys = 0.0
    for s in shapes:
        a = shape_area(s)
        w += a
        xs += a * s.center[0]
        ys += a * s.center[1]
    return Point(xs / w, ys / w), w


def _shift_shapes(shapes, dx, dy):
    return [Shape(s.kind, Point(s.center[0] + dx, s.center[1] + dy), s.radius,
                  s.rotation, s.fill, s.z, s.sides, s.wave) for s in shapes]


def _gen_13(rng, ctx):
    bg, pal, _ = _palette(rng, 2)
    big_r = float(rng.uniform(0.13, 0.17))
    phi = float(rng.uniform(0, 2 * math.pi))
    m1 = float(rng.uniform(0.09, 0.13))
    big_c = Point(0.5 + m1 * math.cos(phi), 0.5 + m1 * math.sin(phi))
    big = make_shape(_rand_kind(rng, ("circle", "poly5", "poly6", "ellipse")),
                     big_c, big_r, float(rng.uniform(0, 2 * math.pi)),
                     ctx.styler.fill(pal[0]))
    n = int(rng.integers(4, 8))
    small_kind = _rand_kind(rng, ("circle", "poly3", "poly4"))
    radii = [float(rng.uniform(0.9, 1.1)) for _ in range(n)]
    wa = shape_area(big)
    wb0 = sum(shape_area(make_shape(small_kind, Point(0.5, 0.5), r, 0.0,
                                    big.fill)) for r in radii)
    # Solve the small-group size from the lever rule instead of hoping.
    m2 = float(rng.uniform(0.18, 0.30))
    scale = math.sqrt(wa * m1 / m2 / wb0)
    radii = [r * scale for r in radii]
    if not all(0.026 <= r <= 0.062 for r in radii):
        return None
    amax = max(shape_area(make_shape(small_kind, Point(0.5, 0.5), r, 0.0,
                                     big.fill)) for r in radii)
    if wa < 2.75 * amax:
        return None
    target = Point(0.5 - m2 * math.cos(phi), 0.5 - m2 * math.sin(phi))
    spread = max(0.13, 1.5 * (max(radii) + 0.007) * math.sqrt(n))
    pts = _scatter(rng, radii,
                   (target.x - spread, target.y - spread,
                    target.x + spread, target.y + spread),
                   occupied=[(big_c.x, big_c.y, big_r)], gap=0.014)
    if pts is None:
        return None
    rot = float(rng.uniform(0, 2 * math.pi))
    fill = ctx.styler.fill(pal[1])
    smalls = [make_shape(small_kind, p, r, rot, fill)
              for p, r in zip(pts, radii)]
    cen, _ = _weighted_centroid(smalls)
    smalls = _shift_shapes(smalls, target.x - cen.x, target.y - cen.y)
    els = [big] + smalls
    for e in els:
        if not in_canvas(e, 0.01):
            return None
    for s in smalls:
        if distance(s.center, big_c) < circumradius(s) + big_r + 0.012:
            return None
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0]), list(pal[1])],
           "roles": {"big": 0, "smalls": list(range(1, len(els)))}}
    return _comp(ctx, ctx.styler.bg(bg), els, 13, ann)


def _gen_14(rng, ctx):
    bg, pal, _ = _palette(rng, 2)
    kind = _rand_kind(rng, ("circle", "poly4", "poly5", "poly6"))
    big_r = float(rng.uniform(0.12, 0.16))
    small_r = big_r * float(rng.uniform(0.42, 0.55))
    phi = float(rng.uniform(0, 2 * math.pi))
    m1 = float(rng.uniform(0.06, 0.11))
    big_c = Point(0.5 + m1 * math.cos(phi), 0.5 + m1 * math.sin(phi))
    rot = float(rng.uniform(0, 2 * math.pi))
    big = make_shape(kind, big_c, big_r, rot, ctx.styler.fill(pal[0]))
    small_probe = make_shape(kind, Point(0.5, 0.5), small_r, rot,
                             ctx.styler.fill(pal[1]))
    m2 = m1 * shape_area(big) / shape_area(small_probe)
    small_c = Point(0.5 - m2 * math.cos(phi), 0.5 - m2 * math.sin(phi))
    small = make_shape(kind, small_c, small_r, rot, small_probe.fill)
    if not (in_canvas(big, _M) and in_canvas(small, _M)):
        return None
    if m1 + m2 < big_r + small_r + 0.015 or m2 < 1.5 * m1:
        return None
    ann = {"count": 2, "background": list(bg),
           "palette": [list(pal[0]), list(pal[1])],
           "roles": {"big": 0, "small": 1}}
    return _comp(ctx, ctx.styler.bg(bg), [big, small], 14, ann)


def _balanced_sides(rng, ctx, u, spec_a, spec_b):
    """Two groups straddling the line through center normal to u, with the
    lever rule solved before placement so the run rarely backtracks.

    Each spec is (kind, radii, color, rot). The groups' weighted centroids end
    exactly on the u line at distances chosen so torques cancel; each member
    stays a clear margin onto its own side.
    """
    weights = []
    for kind, radii, color, rot in (spec_a, spec_b):
        shapes = [make_shape(kind, Point(0.5, 0.5), r, rot,
                             FillStyle.solid(color)) for r in radii]
        weights.append(sum(shape_area(s) for s in shapes))
    wa, wb = weights
    # Rescale group B so the weight ratio is near one; the lever rule then
    # keeps both groups comfortably inside the canvas.
    rho = float(rng.uniform(0.78, 1.28))
    scale = math.sqrt(rho * wa / wb)
    radii_b = [r * scale for r in spec_b[1]]
    if not all(0.028 <= r <= 0.115 for r in radii_b):
        return None
    spec_b = (spec_b[0], radii_b, spec_b[2], spec_b[3])
    wb = rho * wa
    # m_a = rho * m_b; both arms must clear their group's fattest member.
    lo = max(max(radii_b) + 0.048, (max(spec_a[1]) + 0.048) / rho, 0.13)
    hi = min(0.23, 0.27 / rho)
    if lo >= hi:
        return None
    m_b = float(rng.uniform(lo, hi))
    m_a = rho * m_b
    groups = []
    placed_discs: list[tuple[float, float, float]] = []
    for sign, m, (kind, radii, color, rot) in ((1.0, m_a, spec_a),
                                               (-1.0, m_b, spec_b)):
        c = Point(0.5 + sign * m * u[0], 0.5 + sign * m * u[1])
        half = 0.15 + 0.013 * len(radii)

        def on_side(cx, cy, r, _s=sign):
            s = ((cx - 0.5) * u[0] + (cy - 0.5) * u[1]) * _s
            return s >= r + 0.022 and _M + r < cx < 1 - _M - r \
                and _M + r < cy < 1 - _M - r
        pts = _scatter(rng, radii,
                       (c.x - half, c.y - half, c.x + half, c.y + half),
                       occupied=placed_discs, gap=0.012, accept=on_side)
        if pts is None:
            return None
        fill = ctx.styler.fill(color)
        shapes = [make_shape(kind, p, r, rot, fill)
                  for p, r in zip(pts, radii)]
        cen, _ = _weighted_centroid(shapes)
        shapes = _shift_shapes(shapes, c.x - cen.x, c.y - cen.y)
        for s in shapes:
            proj = ((s.center[0] - 0.5) * u[0] + (s.center[1] - 0.5) * u[1]) * sign
            if proj < circumradius(s) * 0.1 + 0.012 or not in_canvas(s, 0.008):
                return None
        placed_discs.extend((s.center[0], s.center[1],
                             circumradius(s) + 0.03) for s in shapes)
        groups.append(shapes)
    shapes_a, shapes_b = groups
    for sa in shapes_a:
        for sb in shapes_b:
            if (distance(sa.center, sb.center)
                    < circumradius(sa) + circumradius(sb) + 0.008):
                return None
    return shapes_a, shapes_b


def _gen_15(rng, ctx):
    bg_l_dark = rng.random() < 0.5
    bg_l = float(rng.uniform(0.44, 0.58))
    bg = hsl_to_rgb8(float(rng.uniform(0, 360)), float(rng.uniform(0.06, 0.25)), bg_l)
    h_a, h_b = float(rng.uniform(0, 360)), float(rng.uniform(0, 360))
    dark = hsl_to_rgb8(h_a, float(rng.uniform(0.5, 0.85)), float(rng.uniform(0.16, 0.26)))
    light = hsl_to_rgb8(h_b, float(rng.uniform(0.5, 0.85)), float(rng.uniform(0.78, 0.90)))
    col_a, col_b = (dark, light) if bg_l_dark else (light, dark)
    phi = float(rng.uniform(0, 2 * math.pi))
    u = (math.cos(phi), math.sin(phi))
    n_a, n_b = int(rng.integers(2, 4)), int(rng.integers(3, 6))
    rot = float(rng.uniform(0, 2 * math.pi))
    ra_hi = 0.095 if n_a == 2 else 0.078
    rb_hi = {3: 0.072, 4: 0.060, 5: 0.053}[n_b]
    spec_a = (_rand_kind(rng, ("circle", "poly4", "poly6")),
              [float(rng.uniform(0.060, ra_hi)) for _ in range(n_a)],
              col_a, rot)
    spec_b = (_rand_kind(rng, ("circle", "poly3", "poly5")),
              [float(rng.uniform(0.75, 1.0) * rb_hi) for _ in range(n_b)],
              col_b, rot)
    built = _balanced_sides(rng, ctx, u, spec_a, spec_b)
    if built is None:
        return None
    shapes_a, shapes_b = built
    els = shapes_a + shapes_b
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(col_a), list(col_b)],
           "split_dir": [u[0], u[1]],
           "roles": {"a": list(range(len(shapes_a))),
                     "b": list(range(len(shapes_a), len(els)))}}
    return _comp(ctx, ctx.styler.bg(bg), els, 15, ann)


def _gen_16(rng, ctx):
    bg, pal, _ = _palette(rng, 2)
    diag = "main" if rng.random() < 0.5 else "anti"
    if diag == "main":
        u = (-1.0 / math.sqrt(2), 1.0 / math.sqrt(2))
    else:
        u = (1.0 / math.sqrt(2), 1.0 / math.sqrt(2))
    n_a = int(rng.integers(2, 4))
    n_b = n_a + int(rng.integers(1, 3))
    rot = float(rng.uniform(0, 2 * math.pi))
    ra_hi = 0.090 if n_a == 2 else 0.075
    rb_hi = {3: 0.072, 4: 0.060, 5: 0.053}[n_b]
    spec_a = (_rand_kind(rng, ("poly4", "poly6", "circle")),
              [float(rng.uniform(0.058, ra_hi)) for _ in range(n_a)],
              pal[0], rot)
    spec_b = (_rand_kind(rng, ("poly3", "circle", "poly5")),
              [float(rng.uniform(0.75, 1.0) * rb_hi) for _ in range(n_b)],
              pal[1], rot)
    built = _balanced_sides(rng, ctx, u, spec_a, spec_b)
    if built is None:
        return None
    shapes_a, shapes_b = built
    els = shapes_a + shapes_b
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0]), list(pal[1])],
           "diagonal": diag,
           "roles": {"a": list(range(len(shapes_a))),
                     "b": list(range(len(shapes_a), len(els)))}}
    return _comp(ctx, ctx.styler.bg(bg), els, 16, ann)


def _gen_17(rng, ctx):
    bg, pal, _ = _palette(rng, 2)
    n = int(rng.integers(5, 10))
    r_small = float(rng.uniform(0.023, 0.032))
    phi = float(rng.uniform(0, 2 * math.pi))
    m = float(rng.uniform(0.20, 0.25))
    cc = Point(0.5 + m * math.cos(phi), 0.5 + m * math.sin(phi))
    half = 1.5 * (r_small + 0.007) * math.sqrt(n)
    pts = _scatter(rng, [r_small] * n,
                   (cc.x - half, cc.y - half, cc.x + half, cc.y + half),
                   gap=0.012)
    if pts is None:
        return None
    kind = _rand_kind(rng, ("circle", "poly3", "poly4"))
    rot = float(rng.uniform(0, 2 * math.pi))
    fill = ctx.styler.fill(pal[0])
    cluster = [make_shape(kind, p, r_small, rot, fill) for p in pts]
    ca, wa = _weighted_centroid(cluster)
    m_a = distance(ca, Point(0.5, 0.5))
    # Pick where the counterweight sits, then solve its size from the lever
    # rule: w_c * m2 = wa * m_a.
    counter_kind = _rand_kind(rng, ("circle", "poly5", "poly6"))
    unit = shape_area(make_shape(counter_kind, Point(0.5, 0.5), 1.0, rot,
                                 FillStyle.solid(pal[1])))
    m2 = float(rng.uniform(0.26, 0.36))
    counter_r = math.sqrt(wa * m_a / m2 / unit)
    if not 0.040 <= counter_r <= 0.135:
        return None
    ux, uy = (ca.x - 0.5) / m_a, (ca.y - 0.5) / m_a
    counter_c = Point(0.5 - m2 * ux, 0.5 - m2 * uy)
    counter = make_shape(counter_kind, counter_c, counter_r, rot,
                         ctx.styler.fill(pal[1]))
    els = cluster + [counter]
    for e in els:
        if not in_canvas(e, 0.01):
            return None
    if distance(counter_c, ca) < 0.44:
        return None
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0]), list(pal[1])],
           "roles": {"cluster": list(range(n)), "counter": n}}
    return _comp(ctx, ctx.styler.bg(bg), els, 17, ann)


def _gen_18(rng, ctx):
    bg, pal, l_range = _palette(rng, 1)
    c1 = pal[0]
    c2 = _contrast_color(rng, c1, l_range)
    kind = _rand_kind(rng, ("ellipse", "poly4", "poly5", "circle"))
    r = float(rng.uniform(0.17, 0.22))
    phi = float(rng.uniform(0, 2 * math.pi))
    d = r * float(rng.uniform(0.55, 0.75))
    rot = float(rng.uniform(0, 2 * math.pi))
    e1 = make_shape(kind, Point(0.5 + d / 2 * math.cos(phi),
                                0.5 + d / 2 * math.sin(phi)),
                    r, rot, ctx.styler.fill(c1), z=0)
    e2 = make_shape(kind, Point(0.5 - d / 2 * math.cos(phi),
                                0.5 - d / 2 * math.sin(phi)),
                    r, rot + math.pi, ctx.styler.fill(c2), z=1)
    if not (in_canvas(e1, _M) and in_canvas(e2, _M)):
        return None
    ann = {"count": 2, "background": list(bg),
           "palette": [list(c1), list(c2)], "roles": {"pair": [0, 1]}}
    return _comp(ctx, ctx.styler.bg(bg), [e1, e2], 18, ann)


def _gen_19(rng, ctx):
    bg, pal, _ = _palette(rng, int(rng.integers(2, 5)))
    k = int(rng.integers(4, 7))
    kind = _rand_kind(rng)
    quads = ((0.045, 0.045, 0.48, 0.48), (0.52, 0.045, 0.955, 0.48),
             (0.045, 0.52, 0.48, 0.955), (0.52, 0.52, 0.955, 0.955))
    all_pts: list[list[Point]] = []
    all_radii: list[list[float]] = []
    occupied: list[tuple[float, float, float]] = []
    for q in quads:
        radii = [float(rng.uniform(0.030, 0.045)) for _ in range(k)]
        pts = _scatter(rng, radii, q, occupied=occupied, gap=0.022)
        if pts is None:
            return None
        occupied.extend((p.x, p.y, r) for p, r in zip(pts, radii))
        all_pts.append(pts)
        all_radii.append(radii)
    # Equalize per-quadrant ink exactly by rescaling each quadrant's radii.
    areas = []
    probe_fill = FillStyle.solid(pal[0])
    for pts, radii in zip(all_pts, all_radii):
        areas.append(sum(shape_area(make_shape(kind, p, r, 0.0, probe_fill))
                         for p, r in zip(pts, radii)))
    target = sum(areas) / 4.0
    els = []
    rot = float(rng.uniform(0, 2 * math.pi))
    for qi, (pts, radii) in enumerate(zip(all_pts, all_radii)):
        s = math.sqrt(target / areas[qi])
        if not 0.75 <= s <= 1.30:
            return None
        for p, r in zip(pts, radii):
            color = pal[int(rng.integers(len(pal)))]
            els.append(make_shape(kind, p, r * s, rot, ctx.styler.fill(color)))
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(c) for c in pal], "per_quadrant": k}
    return _comp(ctx, ctx.styler.bg(bg), els, 19, ann)


def _varied_grid(rng, ctx, rule_id):
    """Rules 20/21: an even allover field with per-cell variation."""
    n_colors = int(rng.integers(3, 6)) if rule_id == 20 else int(rng.integers(2, 4))
    bg, pal, _ = _palette(rng, n_colors)
    rows = 4 if rng.random() < 0.5 else 6
    cols = 4 if rng.random() < 0.5 else 6
    pts, g, cell = _jittered_grid_layout(rng, rows, cols, 0.46)
    jit = 0.17 * cell
    r = float(rng.uniform(0.23, 0.28)) * cell
    n = rows * cols
    if rule_id == 20:
        kinds = [_rand_kind(rng)] * n
        for _ in range(40):
            assign = [int(v) for v in rng.integers(0, len(pal), n)]
            if len(set(assign)) >= 3:
                break
        colors = [pal[i] for i in assign]
    else:
        nk = int(rng.integers(3, 5))
        pool = list(_KINDS)
        picked = []
        for _ in range(nk):
            picked.append(pool.pop(int(rng.integers(len(pool)))))
        kinds = [picked[(i // cols + i % cols) % nk] for i in range(n)]
        colors = [pal[int(rng.integers(len(pal)))] for _ in range(n)]
    rot = float(rng.uniform(0, 2 * math.pi))
    els = []
    for i, p in enumerate(pts):
        c = Point(p.x + float(rng.uniform(-jit, jit)),
                  p.y + float(rng.uniform(-jit, jit)))
        els.append(make_shape(kinds[i], c, r, rot, ctx.styler.fill(colors[i])))
    g = dict(g)
    ann = {"count": n, "background": list(bg),
           "palette": [list(c) for c in pal], "grid": g,
           "max_offset": jit * 1.4143}
    return _comp(ctx, ctx.styler.bg(bg), els, rule_id, ann)


def _gen_20(rng, ctx):
    return _varied_grid(rng, ctx, 20)


def _gen_21(rng, ctx):
    return _varied_grid(rng, ctx, 21)


def _gen_22(rng, ctx):
    bg, pal, _ = _palette(rng, int(rng.integers(3, 6)))
    rows = cols = int(rng.integers(5, 8))
    cell = (1.0 - 2 * _M) / (cols - 1 + 1.8)
    r = 0.65 * cell * float(rng.uniform(0.95, 1.10))
    jit = 0.15 * cell
    pts, g = _lattice(rows, cols, (cols - 1) * cell, (rows - 1) * cell)
    els = []
    z_order = [int(v) for v in rng.permutation(rows * cols)]
    for i, p in enumerate(pts):
        c = Point(p.x + float(rng.uniform(-jit, jit)),
                  p.y + float(rng.uniform(-jit, jit)))
        rot = math.pi / 4.0 + float(rng.uniform(-0.18, 0.18))
        color = pal[int(rng.integers(len(pal)))]
        els.append(make_shape("poly4", c, r, rot, ctx.styler.fill(color),
                              z=z_order[i]))
    for e in els:
        if not in_canvas(e, 0.005):
            return None
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(c) for c in pal], "grid": g}
    return _comp(ctx, ctx.styler.bg(bg), els, 22, ann)


def _strict_grid(rng, ctx, rule_id):
    if rule_id == 25:
        if rng.random() < 0.5:
            rows, cols = 1, int(rng.integers(5, 9))
        else:
            rows, cols = int(rng.integers(5, 9)), 1
    else:
        rows, cols = int(rng.integers(3, 6)), int(rng.integers(3, 6))
    r = float(rng.uniform(0.04, 0.065) if rule_id != 25 else rng.uniform(0.04, 0.07))
    angle = float(rng.uniform(0.25, 1.32)) if rule_id == 24 else 0.0
    dim = max(rows, cols)
    g_min = 2 * r + 0.018
    g_max = (1.0 - 2 * (_M + r)) / max(dim - 1, 1)
    if rule_id == 24:
        g_max *= 0.82
    if g_max < g_min:
        return None
    gap = float(rng.uniform(g_min + 0.25 * (g_max - g_min), g_max))
    pts, g = _lattice(rows, cols, (cols - 1) * gap, (rows - 1) * gap, angle)
    bg, pal, _ = _palette(rng, 1)
    kind = _rand_kind(rng)
    rot = float(rng.uniform(0, 2 * math.pi))
    fill = ctx.styler.fill(pal[0])
    els = [make_shape(kind, p, r, rot, fill) for p in pts]
    for e in els:
        if not in_canvas(e, 0.01):
            return None
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0])], "grid": g}
    return _comp(ctx, ctx.styler.bg(bg), els, rule_id, ann)


def _gen_23(rng, ctx):
    return _strict_grid(rng, ctx, 23)


def _gen_24(rng, ctx):
    return _strict_grid(rng, ctx, 24)


def _gen_25(rng, ctx):
    return _strict_grid(rng, ctx, 25)


def _gen_26(rng, ctx):
    bg, pal, _ = _palette(rng, 1)
    center = Point(0.5 + float(rng.uniform(-0.03, 0.03)),
                   0.5 + float(rng.uniform(-0.03, 0.03)))
    n_rings = int(rng.integers(3, 5))
    r_e = float(rng.uniform(0.020, 0.030))
    r0 = float(rng.uniform(0.09, 0.13))
    budget = 0.5 - _M - r_e - 0.012 - 0.031
    delta_max = (budget - r0) / (n_rings - 1)
    if delta_max < 0.07:
        return None
    delta = float(rng.uniform(0.07, min(delta_max, 0.13)))
    kind = _rand_kind(rng, ("circle", "poly3", "poly4", "poly5"))
    fill = ctx.styler.fill(pal[0])
    spacing_target = float(rng.uniform(0.105, 0.135))
    els = []
    members = []
    radii = []
    for k in range(n_rings):
        rk = r0 + k * delta
        max_count = int(math.pi / math.asin(min(0.99, (2 * r_e + 0.014) / (2 * rk))))
        count = max(5, min(max_count, round(2 * math.pi * rk / spacing_target)))
        phase = float(rng.uniform(0, 2 * math.pi))
        ring_idx = []
        for i in range(count):
            a = phase + 2 * math.pi * i / count
            c = Point(center.x + rk * math.cos(a), center.y + rk * math.sin(a))
            els.append(make_shape(kind, c, r_e, a, fill))
            ring_idx.append(len(els) - 1)
        members.append(ring_idx)
        radii.append(rk)
    for e in els:
        if not in_canvas(e, 0.005):
            return None
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0])],
           "rings": {"center": [center.x, center.y], "radii": radii,
                     "members": members}}
    return _comp(ctx, ctx.styler.bg(bg), els, 26, ann)


def _sweep_frame(rng):
    """Random sweep direction (axis-aligned) plus the perpendicular."""
    if rng.random() < 0.5:
        return (1.0, 0.0), (0.0, 1.0)
    return (0.0, 1.0), (1.0, 0.0)


def _ramp_positions(n, gap, lo_margin):
    start = 0.5 - (n - 1) * gap / 2.0
    return [start + k * gap for k in range(n)]


def _gen_27(rng, ctx):
    bg, pal, _ = _palette(rng, 1)
    axis, perp = _sweep_frame(rng)
    n = int(rng.integers(5, 8))
    lanes = int(rng.integers(1, 4))
    f = float(rng.uniform(1.16, 1.30))
    r0 = float(rng.uniform(0.016, 0.022))
    radii = [r0 * f ** k for k in range(n)]
    rmax = radii[-1]
    gap = (radii[-1] + radii[-2] + 0.014) * float(rng.uniform(1.0, 1.12))
    if (n - 1) * gap + 2 * rmax > 1.0 - 2 * _M:
        return None
    lane_gap = 2 * rmax + float(rng.uniform(0.016, 0.05))
    if (lanes - 1) * lane_gap + 2 * rmax > 1.0 - 2 * _M:
        return None
    if rng.random() < 0.5:
        radii = radii[::-1]
    xs = _ramp_positions(n, gap, _M)
    ys = _ramp_positions(lanes, lane_gap, _M)
    kind = _rand_kind(rng)
    rot = float(rng.uniform(0, 2 * math.pi))
    fill = ctx.styler.fill(pal[0])
    els = []
    groups = []
    for k in range(n):
        idxs = []
        for lane in range(lanes):
            c = Point(xs[k] * axis[0] + ys[lane] * perp[0],
                      xs[k] * axis[1] + ys[lane] * perp[1])
            els.append(make_shape(kind, c, radii[k], rot, fill))
            idxs.append(len(els) - 1)
        groups.append(idxs)
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0])],
           "steps": {"axis": [axis[0], axis[1]], "groups": groups,
                     "values": radii, "attribute": "size"}}
    return _comp(ctx, ctx.styler.bg(bg), els, 27, ann)


def _gen_28(rng, ctx):
    bg, pal, _ = _palette(rng, 1)
    axis, perp = _sweep_frame(rng)
    lanes = int(rng.integers(2, 5))
    n = int(rng.integers(6, 10))
    f = float(rng.uniform(1.22, 1.42))
    raw = [f ** k for k in range(n - 1)]
    span = float(rng.uniform(0.80, 0.88))
    scale = span / sum(raw)
    gaps = [scale * v for v in raw]
    r = min(0.042, (gaps[0] - 0.012) / 2.0)
    if r < 0.015:
        return None
    if rng.random() < 0.5:
        gaps = gaps[::-1]
    coords = [(1.0 - span) / 2.0 + r * 0.0]
    for gp in gaps:
        coords.append(coords[-1] + gp)
    lane_gap = 2 * r + float(rng.uniform(0.02, 0.06))
    ys = _ramp_positions(lanes, lane_gap, _M)
    kind = _rand_kind(rng)
    rot = float(rng.uniform(0, 2 * math.pi))
    fill = ctx.styler.fill(pal[0])
    els = []
    groups = []
    for k in range(n):
        idxs = []
        for lane in range(lanes):
            c = Point(coords[k] * axis[0] + ys[lane] * perp[0],
                      coords[k] * axis[1] + ys[lane] * perp[1])
            els.append(make_shape(kind, c, r, rot, fill))
            idxs.append(len(els) - 1)
        groups.append(idxs)
    for e in els:
        if not in_canvas(e, 0.01):
            return None
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0])],
           "steps": {"axis": [axis[0], axis[1]], "groups": groups,
                     "values": gaps, "attribute": "spacing"}}
    return _comp(ctx, ctx.styler.bg(bg), els, 28, ann)


def _gen_29(rng, ctx):
    bg, pal, _ = _palette(rng, 1)
    axis, perp = _sweep_frame(rng)
    n = int(rng.integers(5, 7))
    lanes = int(rng.integers(1, 3))
    sides = [int(rng.integers(3, 5))]
    for _ in range(n - 1):
        sides.append(sides[-1] + int(rng.integers(1, 3)))
    if rng.random() < 0.5:
        sides = sides[::-1]
    r = float(rng.uniform(0.05, 0.07))
    gap = 2 * r + float(rng.uniform(0.02, 0.05))
    if (n - 1) * gap + 2 * r > 1.0 - 2 * _M:
        return None
    lane_gap = 2 * r + float(rng.uniform(0.02, 0.05))
    xs = _ramp_positions(n, gap, _M)
    ys = _ramp_positions(lanes, lane_gap, _M)
    rot = float(rng.uniform(0, 2 * math.pi))
    fill = ctx.styler.fill(pal[0])
    els = []
    groups = []
    for k in range(n):
        idxs = []
        for lane in range(lanes):
            c = Point(xs[k] * axis[0] + ys[lane] * perp[0],
                      xs[k] * axis[1] + ys[lane] * perp[1])
            els.append(make_shape(f"poly{sides[k]}", c, r, rot, fill))
            idxs.append(len(els) - 1)
        groups.append(idxs)
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(pal[0])],
           "steps": {"axis": [axis[0], axis[1]], "groups": groups,
                     "values": [float(s) for s in sides],
                     "attribute": "sides"}}
    return _comp(ctx, ctx.styler.bg(bg), els, 29, ann)


def _gen_30(rng, ctx):
    axis, perp = _sweep_frame(rng)
    n = int(rng.integers(5, 9))
    lanes = int(rng.integers(1, 4))
    lo = float(rng.uniform(0.25, 0.40))
    hi = float(rng.uniform(lo + 0.32, min(0.80, lo + 0.50)))
    h = float(rng.uniform(0, 360))
    s = float(rng.uniform(0.50, 0.85))
    lights = [lo + (hi - lo) * k / (n - 1) for k in range(n)]
    if rng.random() < 0.5:
        lights = lights[::-1]
    colors = [hsl_to_rgb8(h, s, lv) for lv in lights]
    bg = hsl_to_rgb8(float(rng.uniform(0, 360)), float(rng.uniform(0.06, 0.3)),
                     float(rng.uniform(0.04, lo - 0.16)))
    r = float(rng.uniform(0.035, 0.055))
    gap = 2 * r + float(rng.uniform(0.02, 0.06))
    if (n - 1) * gap + 2 * r > 1.0 - 2 * _M:
        return None
    lane_gap = 2 * r + float(rng.uniform(0.02, 0.06))
    xs = _ramp_positions(n, gap, _M)
    ys = _ramp_positions(lanes, lane_gap, _M)
    kind = _rand_kind(rng)
    rot = float(rng.uniform(0, 2 * math.pi))
    els = []
    groups = []
    for k in range(n):
        fill = ctx.styler.fill(colors[k])
        idxs = []
        for lane in range(lanes):
            c = Point(xs[k] * axis[0] + ys[lane] * perp[0],
                      xs[k] * axis[1] + ys[lane] * perp[1])
            els.append(make_shape(kind, c, r, rot, fill))
            idxs.append(len(els) - 1)
        groups.append(idxs)
    ann = {"count": len(els), "background": list(bg),
           "palette": [list(c) for c in colors],
           "steps": {"axis": [axis[0], axis[1]], "groups": groups,
                     "values": lights, "attribute": "lightness"}}
    return _comp(ctx, ctx.styler.bg(bg), els, 30, ann)


def _gen_31(rng, ctx):
    bg, pal, _ = _palette(rng, int(rng.integers(2, 4)))
    k = int(rng.integers(3, 6))
    horizontal = rng.random() < 0.5
    rot = float(rng.uniform(-0.20, 0.20)) + (0.0 if horizontal else math.pi / 2)
    hw = float(rng.uniform(0.022, 0.038))
    amp = float(rng.uniform(0.025, 0.060))
    cycles = float(rng.uniform(1.2, 2.6))
    phase = float(rng.uniform(0, 2 * math.pi))
    length = float(rng.uniform(0.72, 0.82))
    total_margin = 0.93 - 2 * (amp + hw)
    s_max = total_margin / (k - 1)
    s_min = 2 * hw + 0.02
    if s_max < s_min + 0.02:
        return None
    spacing = float(rng.uniform(s_min + 0.4 * (s_max - s_min), s_max))
    nxv, nyv = -math.sin(rot), math.cos(rot)
    wave = WaveParams(amp, cycles, phase, length)
    els = []
    for i in range(k):
        off = (i - (k - 1) / 2.0) * spacing
        c = Point(0.5 + off * nxv, 0.5 + off * nyv)
        color = pal[i % len(pal)]
        els.append(Shape(WAVY_BAND, c, hw, rot, ctx.styler.fill(color),
                         wave=wave))
    for e in els:
        if not in_canvas(e, 0.005):
            return None
    ann = {"count": k, "background": list(bg),
           "palette": [list(c) for c in pal], "bands": {"spacing": spacing}}
    return _comp(ctx, ctx.styler.bg(bg), els, 31, ann)


def _gen_32(rng, ctx):
    bg, pal, _ = _palette(rng, 1)
    n = int(rng.integers(7, 11))
    horizontal = rng.random() < 0.5
    theta = float(rng.uniform(-0.22, 0.22)) + (0.0 if horizontal else math.pi / 2)
    d = (math.cos(theta), math.sin(theta))
    nv = (-d[1], d[0])
    length = float(rng.uniform(0.72, 0.84))
    amp = float(rng.uniform(0.06, 0.12))
    cycles = float(rng.uniform(1.0, 2.0))
    phase = float(rng.uniform(0, 2 * math.pi))
    start = Point(0.5 - d[0] * length / 2.0, 0.5 - d[1] * length / 2.0)
    r = float(rng.uniform(0.022, 0.032))
    kind = _rand_kind(rng, ("circle", "poly4", "poly5"))
    rot = float(rng.uniform(0, 2 * math.pi))
    fill = ctx.styler.fill(pal[0])
    ts = [k / (n - 1) for k in range(n)]
    els = []
    for t in ts:
        wob = amp * math.sin(2 * math.pi * cycles * t + phase)
        c = Point(start.x + length * t * d[0] + wob * nv[0],
                  start.y + length * t * d[1] + wob * nv[1])
        els.append(make_shape(kind, c, r, rot, fill))
    for e in els:
        if not in_canvas(e, 0.01):
            return None
    for i in range(n):
        for j in range(i + 1, n):
            if distance(els[i].center, els[j].center) < 2 * r + 0.008:
                return None
    ann = {"count": n, "background": list(bg), "palette": [list(pal[0])],
           "path": {"start": [start.x, start.y], "dir": [d[0], d[1]],
                    "length": length, "amplitude": amp, "cycles": cycles,
                    "phase": phase, "ts": ts}}
    return _comp(ctx, ctx.styler.bg(bg), els, 32, ann)


_GENERATORS = {
    1: _gen_1, 2: _gen_2, 3: _gen_3, 4: _gen_4, 5: _gen_5, 6: _gen_6,
    7: _gen_7, 8: _gen_8, 9: _gen_9, 10: _gen_10, 11: _gen_11, 12: _gen_12,
    13: _gen_13, 14: _gen_14, 15: _gen_15, 16: _gen_16, 17: _gen_17,
    18: _gen_18, 19: _gen_19, 20: _gen_20, 21: _gen_21, 22: _gen_22,
    23: _gen_23, 24: _gen_24, 25: _gen_25, 26: _gen_26, 27: _gen_27,
    28: _gen_28, 29: _gen_29, 30: _gen_30, 31: _gen_31, 32: _gen_32,
}

_DEFAULT_TEXTURES: TextureRegistry | None = None


def default_textures() -> TextureRegistry:
    global _DEFAULT_TEXTURES
    if _DEFAULT_TEXTURES is None:
        _DEFAULT_TEXTURES = TextureRegistry.default()
    return _DEFAULT_TEXTURES


def generate(rule_id: int, seed: int, style: str = "sdv1",
             textures: TextureRegistry | None = None) -> Composition:
    """Deterministic composition for (rule, seed, style); always verifies."""
    if rule_id not in RULE_CLASS:
        raise InvalidRule(f"rule id {rule_id} is not in 1..32", rule_id=rule_id)
    if style not in STYLES:
        raise VdpError(f"unknown style {style!r}")
    if style == "sdv2" and textures is None:
        textures = default_textures()
    gen = _GENERATORS[rule_id]
    for attempt in range(64):
        rng = np.random.default_rng(
            np.random.SeedSequence([_SEED_NS, rule_id, seed, attempt]))
        ctx = _Ctx(seed=seed, style=style, styler=_Styler(rng, style, textures))
        comp = gen(rng, ctx)
        if comp is None:
            continue
        if not verify(comp):
            return comp
    raise GenerationFailed(
        f"rule {rule_id} seed {seed} style {style}: no valid draft in 64 tries",
        rule_id=rule_id, seed=seed, style=style)


# ---------------------------------------------------------------------------
# Dataset generation

def _allocate(count: int, rules: tuple[int, ...]) -> list[tuple[int, int]]:
    """Split count over classes first (uniform +-1), then over each class's
    rules (uniform +-1). Order follows the taxonomy."""
    classes = [c for c in CLASS_LABELS if any(RULE_CLASS[r] == c for r in rules)]
    out: list[tuple[int, int]] = []
    k = len(classes)
    for ci, cls in enumerate(classes):
        share = count // k + (1 if ci < count % k else 0)
        cls_rules = sorted(r for r in rules if RULE_CLASS[r] == cls)
        m = len(cls_rules)
        for ri, rid in enumerate(cls_rules):
            n = share // m + (1 if ri < share % m else 0)
            if n > 0:
                out.append((rid, n))
    return out


def sample_seed(base_seed: int, index: int) -> int:
    """Per-sample seed, independent of worker scheduling."""
    ss = np.random.SeedSequence([base_seed, index])
    return int(ss.generate_state(1, np.uint64)[0])


_JOB_REGISTRY: dict[str, TextureRegistry] = {}


def _render_job(args) -> int:
    (index, rule_id, seed, style, size, out_path, texture_dir) = args
    from .raster import render, save_png

    registry = None
    if style == "sdv2":
        key = texture_dir or ""
        registry = _JOB_REGISTRY.get(key)
        if registry is None:
            registry = (TextureRegistry.from_dir(texture_dir) if texture_dir
                        else TextureRegistry.default())
            _JOB_REGISTRY[key] = registry
    comp = generate(rule_id, seed, style=style, textures=registry)
    img = render(comp, size, size, registry)
    save_png(img, out_path)
    return index


def generate_dataset(config: GenerationConfig,
                     out_dir: str | Path) -> list[ManifestEntry]:
    """Render a balanced labeled corpus; returns the manifest entries.

    Output bytes depend only on the config, never on worker count: sample i
    always uses seed sample_seed(base_seed, i).
    """
    if config.count < 1:
        raise VdpError("count must be >= 1")
    if config.style not in STYLES:
        raise VdpError(f"unknown style {config.style!r}")
    rules = tuple(sorted(config.rules)) if config.rules else rule_ids()
    for r in rules:
        if r not in RULE_CLASS:
            raise InvalidRule(f"rule id {r} is not in 1..32", rule_id=r)
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    jobs = []
    entries = []
    index = 0
    for rule_id, n in _allocate(config.count, rules):
        for _ in range(n):
            seed = sample_seed(config.base_seed, index)
            name = f"images/{index:06d}_r{rule_id:02d}.png"
            jobs.append((index, rule_id, seed, config.style, config.size,
                         str(out_dir / name), config.texture_dir))
            entries.append(ManifestEntry(
                path=name, label=RULE_CLASS[rule_id], rule_id=rule_id,
                domain=config.style.upper(), split="train", seed=seed))
            index += 1

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for _ in pool.map(_render_job, jobs, chunksize=8):
                pass
    else:
        for job in jobs:
            _render_job(job)
    write_manifest(entries, out_dir / "manifest.jsonl")
    return entries
