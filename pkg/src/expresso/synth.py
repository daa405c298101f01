"""Seeded generator of synthetic line drawings.

Each drawing is a handful of pen strokes built from straight runs, corner
kinks and circular arcs, plus short crossing strokes and one small detail
stroke. The generator records what it built so the geometry module can be
checked against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .drawing import Annotations, Content, Drawing, Polyline
from .expressiveness import hand_aspects
from .features import analyze
from .geometry import GeometryConfig, find_intersections_brute

Range = tuple[float, float]


class InfeasibleSpec(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    count: int = 30
    polylines: tuple[int, int] = (2, 4)
    bends_per_polyline: tuple[int, int] = (1, 5)
    size_mm: Range = (60.0, 200.0)
    segment_frac: Range = (0.08, 0.25)  # straight run length as a fraction of drawing size
    soft_fraction: float = 0.4  # chance that a bend is a soft arc rather than a corner
    corner_deg: Range = (60.0, 135.0)
    arc_turn_deg: Range = (10.0, 25.0)  # turning per resample step along an arc
    arc_sweep_deg: Range = (50.0, 160.0)
    aspect_ratio: Range = (0.5, 2.0)
    ldiv: Range = (1.0, 10.0)
    crossings: tuple[int, int] = (0, 2)  # extra strokes forced across existing lines
    detail_mm: Range = (1.2, 12.0)
    trend_mode: bool = False
    step_mm: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise InfeasibleSpec("count must be at least 1")
        for name in ("polylines", "bends_per_polyline", "size_mm", "segment_frac", "corner_deg",
                     "arc_turn_deg", "arc_sweep_deg", "aspect_ratio", "ldiv", "crossings", "detail_mm"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InfeasibleSpec(f"{name}: empty range {lo}..{hi}")
            if lo < 0 or (lo == 0 and name not in ("crossings", "bends_per_polyline")):
                raise InfeasibleSpec(f"{name}: range must be positive, got {lo}..{hi}")
        if self.polylines[0] < 1:
            raise InfeasibleSpec("need at least one polyline per drawing")
        if self.crossings[0] > 0 and self.polylines[1] < 2:
            raise InfeasibleSpec("forced crossings need room for at least 2 polylines")
        if not 0 <= self.soft_fraction <= 1:
            raise InfeasibleSpec("soft_fraction must lie in [0, 1]")
        if self.corner_deg[0] < 45 or self.corner_deg[1] >= 170:
            raise InfeasibleSpec("corner angles must lie in [45, 170) degrees")
        if self.step_mm <= 0:
            raise InfeasibleSpec("step must be positive")


@dataclass(frozen=True)
class DrawingMeta:
    id: str
    role: str  # base, extreme-a, extreme-b
    polylines: int
    corners: int
    soft: int
    intersections: int
    scale: float  # trend coupling variable in [0, 1]


@dataclass
class Corpus:
    drawings: list[Drawing] = field(default_factory=list)
    meta: list[DrawingMeta] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.drawings)

    def sorted(self) -> "Corpus":
        order = sorted(range(len(self.drawings)), key=lambda i: self.drawings[i].id)
        return Corpus([self.drawings[i] for i in order], [self.meta[i] for i in order])


def _uniform(rng: np.random.Generator, r: Range) -> float:
    return float(rng.uniform(r[0], r[1])) if r[1] > r[0] else float(r[0])


def _integer(rng: np.random.Generator, r: tuple[int, int]) -> int:
    return int(rng.integers(r[0], r[1] + 1))


class _Pen:
    """Turtle that records vertices; arcs are sampled finely enough to look smooth."""

    def __init__(self, x: float, y: float, heading: float):
        self.pts = [(x, y)]
        self.heading = heading

    @property
    def pos(self) -> tuple[float, float]:
        return self.pts[-1]

    def forward(self, length: float) -> None:
        x, y = self.pos
        self.pts.append((x + length * math.cos(self.heading), y + length * math.sin(self.heading)))

    def turn(self, angle: float) -> None:
        self.heading += angle

    def arc(self, radius: float, sweep: float, sign: int, chord_target: float) -> None:
        n = max(2, math.ceil(radius * sweep / chord_target))
        dphi = sweep / n
        chord = 2 * radius * math.sin(dphi / 2)
        self.heading += sign * dphi / 2
        for _ in range(n):
            self.forward(chord)
            self.heading += sign * dphi
        self.heading -= sign * dphi / 2


def _toward(center, pos, heading) -> int:
    """Turn direction (+1 left, -1 right) that points the pen more toward ``center``."""
    want = math.atan2(center[1] - pos[1], center[0] - pos[0])
    diff = (want - heading + math.pi) % (2 * math.pi) - math.pi
    return 1 if diff >= 0 else -1


def _stroke(rng, spec: GenSpec, size: float, canvas, n_bends: int, soft_p: float):
    w, h = canvas
    pen = _Pen(_uniform(rng, (0, w)), _uniform(rng, (0, h)), _uniform(rng, (0, 2 * math.pi)))
    center = (w / 2, h / 2)
    corners = soft = 0
    pen.forward(size * _uniform(rng, spec.segment_frac))
    for _ in range(n_bends):
        sign = _toward(center, pen.pos, pen.heading) if rng.random() < 0.7 else int(rng.choice([-1, 1]))
        if rng.random() < soft_p:
            turn = math.radians(_uniform(rng, spec.arc_turn_deg))
            radius = spec.step_mm / turn
            pen.arc(radius, math.radians(_uniform(rng, spec.arc_sweep_deg)), sign, spec.step_mm / 8)
            soft += 1
        else:
            pen.turn(sign * math.radians(_uniform(rng, spec.corner_deg)))
            corners += 1
        pen.forward(size * _uniform(rng, spec.segment_frac))
    return pen.pts, corners, soft


def _crossing(rng, polys: Sequence[list[tuple[float, float]]], size: float):
    """A straight stroke through a random point of an existing stroke."""
    src = polys[int(rng.integers(len(polys)))]
    k = int(rng.integers(len(src) - 1))
    t = _uniform(rng, (0.2, 0.8))
    (x0, y0), (x1, y1) = src[k], src[k + 1]
    cx, cy = x0 + t * (x1 - x0), y0 + t * (y1 - y0)
    seg_heading = math.atan2(y1 - y0, x1 - x0)
    ang = seg_heading + math.radians(_uniform(rng, (35.0, 145.0)))
    half = size * _uniform(rng, (0.05, 0.15))
    dx, dy = half * math.cos(ang), half * math.sin(ang)
    return [(cx - dx, cy - dy), (cx + dx, cy + dy)]


def _ldiv(rng, spec: GenSpec, n_types: int) -> float:
    lo, hi = spec.ldiv
    # one band per primitive-type count, small jitter inside the band
    return lo + (hi - lo) * (n_types - 1 + 0.5 * float(rng.random())) / 2.5


def _one(rng: np.random.Generator, spec: GenSpec, idx: int) -> tuple[Drawing, DrawingMeta]:
    z = float(rng.random())
    if spec.trend_mode:
        # bigger drawings get more strokes and a finer detail stroke
        size = spec.size_mm[0] + z * (spec.size_mm[1] - spec.size_mm[0])
        n_poly = spec.polylines[0] + round(z * (spec.polylines[1] - spec.polylines[0]))
        b_lo, b_hi = spec.bends_per_polyline
        bend_range = (b_lo + round(z * (b_hi - b_lo)), b_hi)
        detail = spec.detail_mm[1] - z * (spec.detail_mm[1] - spec.detail_mm[0])
    else:
        size = _uniform(rng, spec.size_mm)
        n_poly = _integer(rng, spec.polylines)
        bend_range = spec.bends_per_polyline
        detail = _uniform(rng, spec.detail_mm)

    aspect = math.exp(_uniform(rng, (math.log(spec.aspect_ratio[0]), math.log(spec.aspect_ratio[1]))))
    canvas = (size * math.sqrt(aspect), size / math.sqrt(aspect))
    did = f"d{idx:03d}"

    best = None
    for _ in range(_TREND_ATTEMPTS if spec.trend_mode else 1):
        d, corners, soft = _layout(rng, spec, did, size, canvas, n_poly, bend_range, detail)
        if not spec.trend_mode:
            best = (d, corners, soft)
            break
        # keep the layout whose detail stroke sets the smallest distance
        gap = _smallest(d, spec.step_mm)
        if best is None or gap > best[3]:
            best = (d, corners, soft, gap)
        if gap >= detail - 1e-9:
            break
    d, corners, soft = best[:3]
    meta = DrawingMeta(did, "base", len(d.polylines), corners, soft, len(find_intersections_brute(d)), z)
    return d, meta


_TREND_ATTEMPTS = 200


def _smallest(d: Drawing, step: float) -> float:
    try:
        return analyze(d, GeometryConfig(resample_step_mm=step)).aspects.smallest
    except ValueError:
        return 0.0


def _layout(rng, spec: GenSpec, did: str, size: float, canvas, n_poly: int, bend_range, detail: float):
    n_cross = min(_integer(rng, spec.crossings), max(0, spec.polylines[1] - 1))
    n_main = max(1, n_poly - n_cross) if n_cross else n_poly
    polys, corners, soft = [], 0, 0
    for _ in range(n_main):
        pts, c, s = _stroke(rng, spec, size, canvas, _integer(rng, bend_range), spec.soft_fraction)
        polys.append(pts)
        corners += c
        soft += s
    for _ in range(n_cross):
        polys.append(_crossing(rng, polys, size))

    # baseline under the whole drawing, like the table line of a set-up sketch
    y0 = -0.05 * canvas[1]
    polys.append([(0.0, y0), (canvas[0], y0)])

    # detail stroke: a short tick somewhere on the canvas
    ang = _uniform(rng, (0, math.pi))
    x, y = _uniform(rng, (0, canvas[0])), _uniform(rng, (0, canvas[1]))
    polys.append([(x, y), (x + detail * math.cos(ang), y + detail * math.sin(ang))])

    n_types = 1 + (soft > 0) + (corners > 0)
    d = Drawing(
        did,
        tuple(Polyline.from_xy(p) for p in polys),
        Annotations(_ldiv(rng, spec, n_types), list(Content)[int(rng.integers(3))]),
    )
    return d, corners, soft


def generate(spec: GenSpec = GenSpec()) -> Corpus:
    """Generate ``spec.count`` drawings; identical specs give identical corpora."""
    rng = np.random.default_rng(spec.seed)
    corpus = Corpus()
    for i in range(spec.count):
        d, meta = _one(rng, spec, i)
        corpus.drawings.append(d)
        corpus.meta.append(meta)
    return corpus


# -- extreme drawings ---------------------------------------------------------


def _staircase(n_corners: int, run: float) -> list[tuple[float, float]]:
    pts = [(0.0, 0.0)]
    x = y = 0.0
    for i in range(n_corners + 1):
        if i % 2 == 0:
            x += run
        else:
            y += run
        pts.append((x, y))
    return pts


def extreme_injection(
    corpus: Corpus,
    k: int,
    cfg: Optional[GeometryConfig] = None,
    ldiv_range: Range = (1.0, 10.0),
) -> Corpus:
    """Add ``k`` drawings with extreme (a) and ``k`` with extreme (b).

    The extreme-(a) drawings are single short strokes with high line
    diversity; the extreme-(b) drawings are long staircases with more ends
    and bends than any base drawing. Both land above every value of their
    aspect in the base corpus.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(corpus) < 10:
        raise ValueError("base corpus too small for extreme injection (need at least 10 drawings)")
    cfg = cfg or GeometryConfig()
    base = [analyze(d, cfg) for d in corpus.drawings]
    vals = [hand_aspects(an) for an in base]
    max_a = max(v.a for v in vals)
    max_b = max(v.b for v in vals)
    max_e = max(an.aspects.n_ends_bends for an in base)
    step = cfg.resample_step_mm

    out = Corpus(list(corpus.drawings), list(corpus.meta))
    b_drawings = []
    for i in range(k):
        n = 2 * max_e + 4 * i
        run = 20.0 * step
        while True:
            d = Drawing(
                f"inj-b-{i:02d}",
                (Polyline.from_xy(_staircase(n, run)),),
                Annotations(ldiv_range[0], Content.SETUP),
            )
            bv = hand_aspects(analyze(d, cfg)).b
            if bv > 1.5 * max_b * (1 + 0.2 * i):
                break
            n *= 2
        b_drawings.append(d)
        out.drawings.append(d)
        out.meta.append(DrawingMeta(d.id, "extreme-b", 1, n, 0, 0, 1.0))

    ceiling_a = max([max_a] + [hand_aspects(analyze(d, cfg)).a for d in b_drawings])
    length = 3.0 * step
    for i in range(k):
        ldiv = (2.0 + i) * ceiling_a * length
        d = Drawing(
            f"inj-a-{i:02d}",
            (Polyline.from_xy([(0.0, 0.0), (length, 0.0)]),),
            Annotations(ldiv, Content.THEORY),
        )
        out.drawings.append(d)
        out.meta.append(DrawingMeta(d.id, "extreme-a", 1, 0, 0, 0, 0.0))
    return out


def manifest_rows(corpus: Corpus) -> list[dict]:
    return [
        {
            "id": m.id,
            "role": m.role,
            "polylines": m.polylines,
            "corners": m.corners,
            "soft": m.soft,
            "intersections": m.intersections,
            "scale": f"{m.scale:.9g}",
        }
        for m in corpus.meta
    ]
