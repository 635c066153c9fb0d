"""Procedural garment templates and reproducible pattern corpora.

All geometry is laid out in a front-view body plane (cm, x to the wearer's left
as seen from the front, y up, body center line at x = 0).  Back panels use the same
front-view coordinates, so a back panel sits directly behind its front partner.

Random numbers come from numpy's PCG64 bit generator, whose output stream is fixed
by its published algorithm for a given 64-bit seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .pattern import PatternError, SewingPattern, _num, pattern_from_dict, serialize_pattern

MANIFEST_MAGIC = "GICORPUS1"
MANIFEST_NAME = "manifest.txt"


class Template(str, Enum):
    ONE_PANEL_DRESS = "ONE_PANEL_DRESS"
    JUMPSUIT = "JUMPSUIT"
    TOP_PANTS = "TOP_PANTS"
    TOP_SKIRT = "TOP_SKIRT"
    SHIRT_DARTS = "SHIRT_DARTS"


class GenerationError(ValueError):
    pass


_TOP = {
    "shoulder_y": (100.0, 108.0),
    "torso_width": (48.0, 56.0),
    "neck_width": (18.0, 22.0),
    "front_neck_depth": (6.0, 12.0),
    "back_neck_depth": (3.0, 5.0),
    "shoulder_drop": (2.0, 5.0),
    "shoulder_inset": (3.0, 4.0),
    "armhole_depth": (16.0, 20.0),
}

# Integer-valued parameters are marked by integer bounds.
RANGES: dict[Template, dict[str, tuple[float, float]]] = {
    Template.ONE_PANEL_DRESS: {
        "shoulder_y": (100.0, 108.0),
        "torso_width": (44.0, 56.0),
        "neck_width": (16.0, 22.0),
        "front_neck_depth": (6.0, 14.0),
        "back_neck_depth": (2.0, 6.0),
        "dress_length": (72.0, 100.0),
        "has_hole": (0, 1),
        "hole_width": (20.0, 24.0),
        "hole_height": (20.0, 28.0),
        "hole_drop": (28.0, 34.0),
    },
    Template.JUMPSUIT: {
        **_TOP,
        "ankle_y": (2.0, 8.0),
        "crotch_y": (40.0, 50.0),
        "leg_taper": (0.0, 2.0),
        "ankle_gap": (14.0, 18.0),
    },
    Template.TOP_PANTS: {
        **_TOP,
        "torso_length": (38.0, 44.0),
        "rise": (20.0, 26.0),
        "ankle_y": (0.0, 4.0),
        "leg_taper": (0.0, 2.0),
        "ankle_gap": (14.0, 18.0),
    },
    Template.TOP_SKIRT: {
        **_TOP,
        "torso_length": (38.0, 44.0),
        "band_height": (10.0, 14.0),
        "band_inset": (2.0, 6.0),
        "skirt_ease": (3.0, 6.0),
        "skirt_length": (36.0, 44.0),
        "skirt_flare": (4.0, 16.0),
    },
    Template.SHIRT_DARTS: {
        **_TOP,
        "torso_length": (50.0, 56.0),
        "dart_count": (0, 2),
        "dart_depth": (16.0, 20.0),
        "dart_width": (4.0, 6.0),
        "dart_offset": (8.0, 12.0),
        "dart_side": (0, 1),
    },
}


@dataclass(frozen=True)
class TemplateParams:
    template: Template
    values: dict[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "template", Template(self.template))
        ranges = RANGES[self.template]
        missing = sorted(set(ranges) - set(self.values))
        extra = sorted(set(self.values) - set(ranges))
        if missing or extra:
            raise GenerationError(f"{self.template.value}: missing {missing} / unknown {extra} parameters")
        for k, v in self.values.items():
            lo, hi = ranges[k]
            if not lo <= v <= hi:
                raise GenerationError(f"{self.template.value}: parameter {k}={v} outside [{lo}, {hi}]")
            if isinstance(lo, int) and v != int(v):
                raise GenerationError(f"{self.template.value}: parameter {k} must be an integer")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise GenerationError("seed must be a 64-bit unsigned integer")


def sample_params(template: Template | str, seed: int) -> TemplateParams:
    """Draw every parameter uniformly from its range (integers inclusive) with PCG64(seed)."""
    template = Template(template)
    rng = np.random.Generator(np.random.PCG64(seed))
    values: dict[str, float] = {}
    for name, (lo, hi) in RANGES[template].items():
        if isinstance(lo, int):
            values[name] = int(rng.integers(lo, hi + 1))
        else:
            values[name] = _num(rng.uniform(lo, hi))
    return TemplateParams(template, values, seed)


def midpoint_params(template: Template | str, seed: int = 0) -> TemplateParams:
    template = Template(template)
    values = {}
    for name, (lo, hi) in RANGES[template].items():
        values[name] = (lo + hi) // 2 if isinstance(lo, int) else (lo + hi) / 2
    return TemplateParams(template, values, seed)


# -- geometry helpers --------------------------------------------------------------


def _curve(p0, p1, c) -> list[float]:
    """Edge-local control coordinates for an absolute control point ``c``."""
    p0, p1, c = (np.asarray(v, dtype=float) for v in (p0, p1, c))
    d = p1 - p0
    n = np.array([-d[1], d[0]])
    L2 = float(d @ d)
    return [float((c - p0) @ d / L2), float((c - p0) @ n / L2)]


class _Ring:
    """Accumulates a closed CCW ring of (vertex, optional absolute control point, tag)."""

    def __init__(self):
        self.pts: list[tuple[float, float]] = []
        self.ctrl: list[Any] = []
        self.tags: list[str | None] = []

    def add(self, p, tag: str | None = None, control=None) -> "_Ring":
        """Append vertex ``p``; the edge *leaving* it carries ``tag`` and ``control``."""
        self.pts.append((float(p[0]), float(p[1])))
        self.ctrl.append(control)
        self.tags.append(tag)
        return self


class _Builder:
    def __init__(self):
        self.panels: list[dict] = []
        self.tags: dict[tuple[str, str], int] = {}
        self.stitches: list[tuple[tuple[str, str], tuple[str, str]]] = []

    def panel(self, name: str, side: str, outer: _Ring, holes: Sequence[_Ring] = ()) -> None:
        rings = [outer, *holes]
        allpts = np.array([p for r in rings for p in r.pts])
        origin = allpts.min(axis=0)
        verts, loops, idx = [], [], 0
        for ring in rings:
            n = len(ring.pts)
            base = len(verts)
            loop = []
            for k in range(n):
                a, b = ring.pts[k], ring.pts[(k + 1) % n]
                ed: dict[str, Any] = {"v": [base + k, base + (k + 1) % n]}
                if ring.ctrl[k] is not None:
                    ed["curve"] = [_num(c) for c in _curve(a, b, ring.ctrl[k])]
                loop.append(ed)
                if ring.tags[k] is not None:
                    self.tags[(name, ring.tags[k])] = idx
                idx += 1
            verts.extend([_num(x - origin[0]), _num(y - origin[1])] for x, y in ring.pts)
            loops.append(loop)
        self.panels.append({"name": name, "side": side,
                            "placement": [_num(origin[0]), _num(origin[1])],
                            "vertices": verts, "loops": loops})

    def stitch(self, a: tuple[str, str], b: tuple[str, str]) -> None:
        self.stitches.append((a, b))

    def build(self) -> SewingPattern:
        def ref(t):
            i = self.tags[t]
            return {"panel": t[0], "edges": [i, i]}
        doc = {"units_per_cm": 1.0, "panels": self.panels,
               "stitches": [{"a": ref(a), "b": ref(b)} for a, b in self.stitches]}
        return pattern_from_dict(doc)


def _mirror(ring: _Ring) -> _Ring:
    """Reflect about x = 0, reversing order so the ring stays CCW; tags stay with their edges."""
    out = _Ring()
    n = len(ring.pts)
    for k in range(n):
        # edge k runs pts[k] -> pts[k+1]; reversed it runs from mirrored pts[k+1] to pts[k]
        j = (n - 1 - k)
        a = ring.pts[(j + 1) % n]
        ctrl = ring.ctrl[j]
        out.add((-a[0], a[1]), ring.tags[j], None if ctrl is None else (-ctrl[0], ctrl[1]))
    return out


def _top_ring(v: dict[str, float], hem_y: float, neck_depth: float, split_hem: bool,
              hem_darts: Sequence[tuple[float, float, float, int]] = ()) -> _Ring:
    """Bodice outline from hem to shoulders; darts are (x, width, depth, id) notches in the hem."""
    w = v["torso_width"] / 2
    n = v["neck_width"] / 2
    yt = v["shoulder_y"]
    ws = w - v["shoulder_inset"]
    ys = yt - v["shoulder_drop"]
    ya = ys - v["armhole_depth"]
    r = _Ring()
    r.add((-w, hem_y), "hem_l" if split_hem else "hem")
    for x, dw, depth, k in sorted(hem_darts):
        r.add((x - dw / 2, hem_y), f"dart{k}_a")
        r.add((x, hem_y + depth), f"dart{k}_b")
        r.add((x + dw / 2, hem_y), f"hem_{k}")
    if split_hem:
        r.add((0.0, hem_y), "hem_r")
    r.add((w, hem_y), "side_r")
    r.add((w, ya), "arm_r")
    r.add((ws, ys), "shoulder_r")
    r.add((n, yt), "neck", control=(0.0, yt - 2 * neck_depth))
    r.add((-n, yt), "shoulder_l")
    r.add((-ws, ys), "arm_l")
    r.add((-w, ya), "side_l")
    return r


def _top_stitches(b: _Builder, front: str, back: str) -> None:
    for t in ("shoulder_r", "shoulder_l", "side_r", "side_l"):
        b.stitch((front, t), (back, t))


def _leg_ring_left(w: float, waist_y: float, crotch_y: float, v: dict[str, float]) -> _Ring:
    wa = w - v["leg_taper"]
    g = v["ankle_gap"] / 2
    y0 = v["ankle_y"]
    r = _Ring()
    r.add((-wa, y0), "hem")
    r.add((-g, y0), "inseam")
    r.add((0.0, crotch_y), "center")
    r.add((0.0, waist_y), "waist")
    r.add((-w, waist_y), "side")
    return r


def _dress(v: dict[str, float]) -> SewingPattern:
    W = v["torso_width"]
    half = W / 2
    n = v["neck_width"] / 2
    yt = v["shoulder_y"]
    yb = yt - v["dress_length"]
    r = _Ring()
    r.add((-half, yb), "hem").add((W + half, yb), "side_b")
    r.add((W + half, yt), "top_b")
    r.add((W + n, yt), "neck_b", control=(W, yt - 2 * v["back_neck_depth"]))
    r.add((W - n, yt), "top_mid")
    r.add((n, yt), "neck_f", control=(0.0, yt - 2 * v["front_neck_depth"]))
    r.add((-n, yt), "top_f")
    r.add((-half, yt), "side_f")
    holes = []
    if v["has_hole"]:
        hw, hh = v["hole_width"] / 2, v["hole_height"] / 2
        cy = yt - v["hole_drop"] - hh
        c = min(hw, hh) * 0.4
        h = _Ring()
        for x, y in ((-hw + c, cy - hh), (hw - c, cy - hh), (hw, cy - hh + c), (hw, cy + hh - c),
                     (hw - c, cy + hh), (-hw + c, cy + hh), (-hw, cy + hh - c), (-hw, cy - hh + c)):
            h.add((x, y))
        if hw > half - 8.0:
            raise GenerationError("ONE_PANEL_DRESS: hole_width too large for torso_width")
        holes.append(h)
    b = _Builder()
    b.panel("dress", "wrap", r, holes)
    return b.build()


def _jumpsuit(v: dict[str, float]) -> SewingPattern:
    w = v["torso_width"] / 2
    n = v["neck_width"] / 2
    yt = v["shoulder_y"]
    ws = w - v["shoulder_inset"]
    ys = yt - v["shoulder_drop"]
    ya = ys - v["armhole_depth"]
    yc = v["crotch_y"]
    b = _Builder()
    for side, depth in (("front", v["front_neck_depth"]), ("back", v["back_neck_depth"])):
        wa = w - v["leg_taper"]
        g = v["ankle_gap"] / 2
        y0 = v["ankle_y"]
        left = _Ring()
        left.add((-wa, y0), "hem").add((-g, y0), "inseam").add((0.0, yc), "center")
        left.add((0.0, yt - depth), "neck", control=(-n, yt - depth))
        left.add((-n, yt), "shoulder").add((-ws, ys), "arm").add((-w, ya), "side")
        b.panel(f"{side}_l", side, left)
        b.panel(f"{side}_r", side, _mirror(left))
        b.stitch((f"{side}_l", "center"), (f"{side}_r", "center"))
    for half in ("l", "r"):
        for t in ("shoulder", "side", "inseam"):
            b.stitch((f"front_{half}", t), (f"back_{half}", t))
    return b.build()


def _top_pants(v: dict[str, float]) -> SewingPattern:
    w = v["torso_width"] / 2
    yw = v["shoulder_y"] - v["torso_length"]
    yc = yw - v["rise"]
    if yc - v["ankle_y"] < 24.0:
        raise GenerationError("TOP_PANTS: torso_length + rise leave legs shorter than 24 cm")
    b = _Builder()
    for side, depth in (("front", v["front_neck_depth"]), ("back", v["back_neck_depth"])):
        b.panel(f"top_{side}", side, _top_ring(v, yw, depth, split_hem=True))
        left = _leg_ring_left(w, yw, yc, v)
        b.panel(f"{side}_l", side, left)
        b.panel(f"{side}_r", side, _mirror(left))
        b.stitch((f"{side}_l", "center"), (f"{side}_r", "center"))
        b.stitch((f"top_{side}", "hem_l"), (f"{side}_l", "waist"))
        b.stitch((f"top_{side}", "hem_r"), (f"{side}_r", "waist"))
    _top_stitches(b, "top_front", "top_back")
    for half in ("l", "r"):
        for t in ("side", "inseam"):
            b.stitch((f"front_{half}", t), (f"back_{half}", t))
    return b.build()


def _top_skirt(v: dict[str, float]) -> SewingPattern:
    w = v["torso_width"] / 2
    yw = v["shoulder_y"] - v["torso_length"]
    bw = w - v["band_inset"]
    yb = yw - v["band_height"]
    k = bw + v["skirt_ease"]
    yh = yb - v["skirt_length"]
    h = k + v["skirt_flare"]
    if yh < -4.0:
        raise GenerationError("TOP_SKIRT: torso_length + band_height + skirt_length exceed the canvas")
    b = _Builder()
    for side, depth in (("front", v["front_neck_depth"]), ("back", v["back_neck_depth"])):
        b.panel(f"top_{side}", side, _top_ring(v, yw, depth, split_hem=False))
        band = _Ring().add((-bw, yb), "bottom").add((bw, yb), "side_r").add((bw, yw), "top").add((-bw, yw), "side_l")
        b.panel(f"band_{side}", side, band)
        skirt = _Ring().add((-h, yh), "hem").add((h, yh), "side_r").add((k, yb), "waist").add((-k, yb), "side_l")
        b.panel(f"skirt_{side}", side, skirt)
        b.stitch((f"top_{side}", "hem"), (f"band_{side}", "top"))
        b.stitch((f"band_{side}", "bottom"), (f"skirt_{side}", "waist"))
    _top_stitches(b, "top_front", "top_back")
    for p in ("band", "skirt"):
        for t in ("side_r", "side_l"):
            b.stitch((f"{p}_front", t), (f"{p}_back", t))
    return b.build()


def _shirt_darts(v: dict[str, float]) -> SewingPattern:
    w = v["torso_width"] / 2
    yw = v["shoulder_y"] - v["torso_length"]
    d = int(v["dart_count"])
    off = v["dart_offset"]
    xs = [] if d == 0 else ([off if v["dart_side"] else -off] if d == 1 else [-off, off])
    darts = [(x, v["dart_width"], v["dart_depth"], k) for k, x in enumerate(xs)]
    armhole_bottom = v["shoulder_y"] - v["shoulder_drop"] - v["armhole_depth"]
    if yw + v["dart_depth"] > armhole_bottom - 4.0:
        raise GenerationError("SHIRT_DARTS: dart_depth reaches the armhole for this torso_length")
    b = _Builder()
    b.panel("top_front", "front", _top_ring(v, yw, v["front_neck_depth"], False, darts))
    b.panel("top_back", "back", _top_ring(v, yw, v["back_neck_depth"], False))
    for k in range(d):
        b.stitch(("top_front", f"dart{k}_a"), ("top_front", f"dart{k}_b"))
    _top_stitches(b, "top_front", "top_back")
    return b.build()


_BUILDERS = {
    Template.ONE_PANEL_DRESS: _dress,
    Template.JUMPSUIT: _jumpsuit,
    Template.TOP_PANTS: _top_pants,
    Template.TOP_SKIRT: _top_skirt,
    Template.SHIRT_DARTS: _shirt_darts,
}


def gen_pattern(params: TemplateParams) -> SewingPattern:
    try:
        return _BUILDERS[params.template](dict(params.values))
    except PatternError as exc:
        names = ", ".join(sorted(params.values))
        raise GenerationError(f"{params.template.value} parameters ({names}) give invalid geometry: {exc}") from exc


# -- corpora -------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusEntry:
    file: str
    template: Template
    seed: int


def corpus_seeds(seed: int, count: int) -> list[int]:
    rng = np.random.Generator(np.random.PCG64(seed))
    return [int(s) for s in rng.integers(0, 2 ** 63, size=count, dtype=np.int64)]


def plan_corpus(spec: Iterable[tuple[Template | str, int]], seed: int) -> list[CorpusEntry]:
    spec = [(Template(t), int(c)) for t, c in spec]
    if any(c < 1 for _, c in spec):
        raise GenerationError("corpus counts must be at least 1")
    seeds = corpus_seeds(seed, sum(c for _, c in spec))
    out, i = [], 0
    for t, c in spec:
        for j in range(c):
            out.append(CorpusEntry(f"{t.value.lower()}_{j:04d}.json", t, seeds[i]))
            i += 1
    return out


def gen_corpus(spec: Iterable[tuple[Template | str, int]], seed: int, out_dir: str | Path) -> list[CorpusEntry]:
    """Write one interchange document per entry plus ``manifest.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = plan_corpus(spec, seed)
    for e in entries:
        pattern = gen_pattern(sample_params(e.template, e.seed))
        (out / e.file).write_text(serialize_pattern(pattern))
    lines = [MANIFEST_MAGIC] + [f"{e.file},{e.template.value},{e.seed}" for e in entries]
    (out / MANIFEST_NAME).write_text("\n".join(lines) + "\n")
    return entries


def read_manifest(path: str | Path) -> list[CorpusEntry]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != MANIFEST_MAGIC:
        raise GenerationError(f"{path}: missing {MANIFEST_MAGIC} header")
    out = []
    for ln in lines[1:]:
        if ln.strip():
            f, t, s = ln.split(",")
            out.append(CorpusEntry(f, Template(t), int(s)))
    return out
