"""Elementary geometric aspects of a line drawing.

Feature points are polyline ends, bends (soft or corner, classified by the
turning angle of the resampled line) and crossings between line segments.
Everything else (#p, #e, %s, %c, L, S, M, l-segm) is computed from that
point configuration.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .drawing import Drawing, Polyline

DEDUP_TOL = 1e-6
JOIN_TOL = 1e-6


class GeometryError(ValueError):
    """The drawing is too degenerate to measure."""


class Kind(str, Enum):
    END = "end"
    SOFT_BEND = "soft"
    CORNER_BEND = "corner"
    INTERSECTION = "intersection"


@dataclass(frozen=True)
class FeaturePoint:
    x: float
    y: float
    kind: Kind
    polyline_index: int
    # for intersections: indices of the two crossing polylines (may be equal)
    partners: tuple[int, int] = (-1, -1)


@dataclass(frozen=True)
class GeometryConfig:
    resample_step_mm: float = 1.0
    theta_soft_deg: float = 5.0
    theta_corner_deg: float = 40.0

    def __post_init__(self):
        if not self.resample_step_mm > 0:
            raise ValueError("resample step must be positive")
        if not 0 < self.theta_soft_deg < self.theta_corner_deg < 180:
            raise ValueError("need 0 < theta_soft < theta_corner < 180 degrees")

    def scaled(self, k: float) -> "GeometryConfig":
        return GeometryConfig(self.resample_step_mm * k, self.theta_soft_deg, self.theta_corner_deg)


@dataclass(frozen=True)
class ElementaryAspects:
    n_points: int
    n_ends_bends: int
    pct_soft: float
    pct_corner: float
    largest: float
    smallest: float
    main_form: float
    lseg: float

    def as_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "n_ends_bends": self.n_ends_bends,
            "pct_soft": self.pct_soft,
            "pct_corner": self.pct_corner,
            "L": self.largest,
            "S": self.smallest,
            "M": self.main_form,
            "lseg": self.lseg,
        }


# -- resampling and bend classification --------------------------------------


def resample(p: Polyline, step: float, keep_angle: float = 0.0) -> Polyline:
    """Resample ``p`` at uniform arc-length spacing of at most ``step``.

    Original vertices turning by at least ``keep_angle`` degrees (all of them
    by default) are kept exactly; the line between two kept vertices is cut
    into equal pieces. With the default every original vertex survives, so
    the arc length is unchanged. A positive ``keep_angle`` keeps corners as
    exact kinks while smoothing over the sampling of curves.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    xy = p.as_array()
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xy, axis=0).T))])
    if keep_angle > 0 and len(xy) > 2:
        ang = turning_angles(xy)
        breaks = [0, *(np.flatnonzero(ang >= keep_angle) + 1), len(xy) - 1]
    else:
        breaks = list(range(len(xy)))
    out = [xy[:1]]
    for b0, b1 in zip(breaks[:-1], breaks[1:]):
        c0, c1 = cum[b0], cum[b1]
        n = max(1, math.ceil((c1 - c0) / step - 1e-9))
        s = c0 + (c1 - c0) * np.arange(1, n) / n
        piece = np.column_stack([np.interp(s, cum, xy[:, 0]), np.interp(s, cum, xy[:, 1])])
        out.append(piece)
        out.append(xy[b1:b1 + 1])
    return Polyline.from_xy(np.concatenate(out))


def turning_angles(xy: np.ndarray, closed: bool = False) -> np.ndarray:
    """Turning angle in degrees at each vertex.

    Open lines get angles for the interior vertices only. Closed lines
    (last vertex repeats the first) get one angle per distinct vertex,
    starting with the junction vertex.
    """
    if closed:
        ring = xy[:-1]
        d_out = np.roll(ring, -1, axis=0) - ring
        d_in = ring - np.roll(ring, 1, axis=0)
    else:
        seg = np.diff(xy, axis=0)
        d_in, d_out = seg[:-1], seg[1:]
    cross = d_in[:, 0] * d_out[:, 1] - d_in[:, 1] * d_out[:, 0]
    dot = (d_in * d_out).sum(axis=1)
    return np.degrees(np.arctan2(np.abs(cross), dot))


def _point_at(xy: np.ndarray, cum: np.ndarray, s: float) -> tuple[float, float]:
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(xy) - 2)
    span = cum[i + 1] - cum[i]
    t = 0.0 if span <= 0 else (s - cum[i]) / span
    p = xy[i] + (xy[i + 1] - xy[i]) * t
    return float(p[0]), float(p[1])


def classify_vertices(
    p: Polyline, theta_soft: float = 5.0, theta_corner: float = 40.0, index: int = 0
) -> list[FeaturePoint]:
    """Ends and bends of an already resampled polyline.

    A vertex turning by at least ``theta_corner`` is a corner bend. A maximal
    run of consecutive vertices turning between ``theta_soft`` and
    ``theta_corner`` is one soft bend, placed at the arc-length midpoint of
    the run. Closed polylines have no ends.
    """
    if not 0 < theta_soft < theta_corner < 180:
        raise ValueError("need 0 < theta_soft < theta_corner < 180")
    xy = p.as_array()
    closed = p.closed
    ang = turning_angles(xy, closed)
    label = np.where(ang >= theta_corner, 2, np.where(ang >= theta_soft, 1, 0))
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xy, axis=0).T))])
    total = cum[-1]

    if closed:
        m = len(xy) - 1
        verts = list(range(m))
        if np.all(label == 1):
            x, y = _point_at(xy, cum, total / 2)
            return [FeaturePoint(x, y, Kind.SOFT_BEND, index)]
        start = int(np.flatnonzero(label != 1)[0])
        verts = [(start + k) % m for k in range(m)]
        # arc position of each vertex, unwrapped from the start vertex
        pos = [cum[v] + (total if v < start else 0.0) for v in verts]
        labs = [int(label[v]) for v in verts]
        ends: list[FeaturePoint] = []
    else:
        verts = list(range(1, len(xy) - 1))
        pos = [cum[v] for v in verts]
        labs = [int(v) for v in label]
        ends = [
            FeaturePoint(float(xy[0, 0]), float(xy[0, 1]), Kind.END, index),
            FeaturePoint(float(xy[-1, 0]), float(xy[-1, 1]), Kind.END, index),
        ]

    bends: list[tuple[float, FeaturePoint]] = []
    run_start: Optional[float] = None
    run_end = 0.0
    for v, s, lab in zip(verts, pos, labs):
        if lab == 1:
            if run_start is None:
                run_start = s
            run_end = s
            continue
        if run_start is not None:
            mid = (run_start + run_end) / 2
            x, y = _point_at(xy, cum, mid % total if closed else mid)
            bends.append((mid, FeaturePoint(x, y, Kind.SOFT_BEND, index)))
            run_start = None
        if lab == 2:
            bends.append((s, FeaturePoint(float(xy[v, 0]), float(xy[v, 1]), Kind.CORNER_BEND, index)))
    if run_start is not None:
        mid = (run_start + run_end) / 2
        x, y = _point_at(xy, cum, mid % total if closed else mid)
        bends.append((mid, FeaturePoint(x, y, Kind.SOFT_BEND, index)))

    bends.sort(key=lambda b: b[0])
    if closed:
        return [b for _, b in bends]
    return [ends[0]] + [b for _, b in bends] + [ends[1]]


# -- segment intersections ----------------------------------------------------


@dataclass(frozen=True)
class _Segments:
    a: np.ndarray  # (n, 2) start points
    b: np.ndarray  # (n, 2) end points
    poly: np.ndarray  # polyline index of each segment
    seg: np.ndarray  # segment index within its polyline
    nseg: np.ndarray  # segment count of the owning polyline
    closed: np.ndarray  # owning polyline is closed


def _segments(d: Drawing) -> _Segments:
    a, b, poly, seg, nseg, closed = [], [], [], [], [], []
    for i, p in enumerate(d.polylines):
        xy = p.as_array()
        n = len(xy) - 1
        a.append(xy[:-1])
        b.append(xy[1:])
        poly.append(np.full(n, i))
        seg.append(np.arange(n))
        nseg.append(np.full(n, n))
        closed.append(np.full(n, p.closed))
    return _Segments(
        np.concatenate(a), np.concatenate(b), np.concatenate(poly),
        np.concatenate(seg), np.concatenate(nseg), np.concatenate(closed),
    )


def _pair_hits(s: _Segments, i: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Test segment pairs (i[k], j[k]) with i < j; return hit pairs and points.

    Both intersection routines go through this kernel, so they classify
    every candidate pair identically.
    """
    same = s.poly[i] == s.poly[j]
    gap = np.abs(s.seg[i] - s.seg[j])
    adjacent = same & ((gap <= 1) | (s.closed[i] & (gap == s.nseg[i] - 1)))
    keep = ~adjacent
    i, j = i[keep], j[keep]

    p, q = s.a[i], s.a[j]
    r = s.b[i] - p
    u = s.b[j] - q
    w = q - p
    den = r[:, 0] * u[:, 1] - r[:, 1] * u[:, 0]
    scale = np.hypot(r[:, 0], r[:, 1]) * np.hypot(u[:, 0], u[:, 1])
    ok = np.abs(den) > 1e-12 * scale  # parallel and collinear pairs never cross transversally
    den = np.where(ok, den, 1.0)
    t = (w[:, 0] * u[:, 1] - w[:, 1] * u[:, 0]) / den
    v = (w[:, 0] * r[:, 1] - w[:, 1] * r[:, 0]) / den
    eps = 1e-12
    hit = ok & (t >= -eps) & (t <= 1 + eps) & (v >= -eps) & (v <= 1 + eps)
    pts = p[hit] + r[hit] * t[hit, None]
    return i[hit], j[hit], pts


def _dedup(s: _Segments, i: np.ndarray, j: np.ndarray, pts: np.ndarray) -> list[FeaturePoint]:
    order = np.lexsort((j, i))
    i, j, pts = i[order], j[order], pts[order]
    kept: list[tuple[float, float, int, int]] = []
    for k in np.lexsort((pts[:, 1], pts[:, 0])):
        x, y = float(pts[k, 0]), float(pts[k, 1])
        pa, pb = int(s.poly[i[k]]), int(s.poly[j[k]])
        # points are sorted by x, so only the tail can be within tolerance
        dup = False
        for kx, ky, _, _ in reversed(kept):
            if x - kx > DEDUP_TOL:
                break
            if math.hypot(x - kx, y - ky) <= DEDUP_TOL:
                dup = True
                break
        if not dup:
            kept.append((x, y, min(pa, pb), max(pa, pb)))
    return [FeaturePoint(x, y, Kind.INTERSECTION, -1, (pa, pb)) for x, y, pa, pb in kept]


def find_intersections_brute(d: Drawing) -> list[FeaturePoint]:
    """All crossings by testing every segment pair."""
    s = _segments(d)
    i, j = np.triu_indices(len(s.a), k=1)
    return _dedup(s, *_pair_hits(s, i, j))


def find_intersections(d: Drawing) -> list[FeaturePoint]:
    """All crossings found by sweeping a vertical line across the drawing.

    Segments enter the active set at their left x and leave after their
    right x; each entering segment is tested only against active segments
    whose y-extent overlaps its own.
    """
    s = _segments(d)
    n = len(s.a)
    xlo = np.minimum(s.a[:, 0], s.b[:, 0])
    xhi = np.maximum(s.a[:, 0], s.b[:, 0])
    ylo = np.minimum(s.a[:, 1], s.b[:, 1])
    yhi = np.maximum(s.a[:, 1], s.b[:, 1])
    slack = 1e-9 * (1.0 + float(np.abs(np.concatenate([s.a, s.b])).max()))

    active: list[tuple[float, int]] = []  # heap keyed on right x
    alive = np.zeros(n, dtype=bool)
    cand_i, cand_j = [], []
    for k in np.argsort(xlo, kind="stable"):
        while active and active[0][0] < xlo[k] - slack:
            alive[heapq.heappop(active)[1]] = False
        others = np.flatnonzero(alive)
        if len(others):
            others = others[(ylo[others] <= yhi[k] + slack) & (yhi[others] >= ylo[k] - slack)]
            cand_i.append(np.minimum(others, k))
            cand_j.append(np.maximum(others, k))
        heapq.heappush(active, (float(xhi[k]), int(k)))
        alive[k] = True

    if cand_i:
        i, j = np.concatenate(cand_i), np.concatenate(cand_j)
    else:
        i = j = np.zeros(0, dtype=int)
    return _dedup(s, *_pair_hits(s, i, j))


# -- aspects ------------------------------------------------------------------


def feature_points(d: Drawing, cfg: GeometryConfig = GeometryConfig()) -> list[FeaturePoint]:
    """Ends, bends and intersections of the whole drawing."""
    pts: list[FeaturePoint] = []
    for i, poly in enumerate(d.polylines):
        rp = resample(poly, cfg.resample_step_mm, keep_angle=cfg.theta_corner_deg)
        pts.extend(classify_vertices(rp, cfg.theta_soft_deg, cfg.theta_corner_deg, i))
    if not pts:
        return find_intersections(d)
    base = np.array([(p.x, p.y) for p in pts])
    for q in find_intersections(d):
        if np.hypot(base[:, 0] - q.x, base[:, 1] - q.y).min() > DEDUP_TOL:
            pts.append(q)
    return pts


def _extreme_distances(xy: np.ndarray, exclude_below: float = 0.0) -> tuple[float, float]:
    """(max pairwise distance, min pairwise distance among pairs >= exclude_below)."""
    hi, lo = 0.0, math.inf
    chunk = max(1, 2_000_000 // max(len(xy), 1))
    for start in range(0, len(xy) - 1, chunk):
        rows = xy[start:start + chunk]
        dist = np.hypot(rows[:, None, 0] - xy[None, :, 0], rows[:, None, 1] - xy[None, :, 1])
        # keep only pairs (r, c) with c > r to visit each pair once
        mask = np.arange(len(xy))[None, :] > (start + np.arange(len(rows)))[:, None]
        dist = dist[mask]
        if dist.size:
            hi = max(hi, float(dist.max()))
            far = dist[dist >= exclude_below]
            if far.size:
                lo = min(lo, float(far.min()))
    return hi, lo


def _components(d: Drawing, inters: Sequence[FeaturePoint]) -> list[int]:
    """Component label per polyline (polylines joined by crossings or shared ends)."""
    parent = list(range(len(d.polylines)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for q in inters:
        union(*q.partners)
    ends = [(p.vertices[0], p.vertices[-1]) for p in d.polylines]
    for a in range(len(ends)):
        for b in range(a + 1, len(ends)):
            if any(math.hypot(u.x - v.x, u.y - v.y) <= JOIN_TOL for u in ends[a] for v in ends[b]):
                union(a, b)
    return [find(i) for i in range(len(parent))]


def elementary_aspects(
    d: Drawing,
    cfg: GeometryConfig = GeometryConfig(),
    points: Optional[Sequence[FeaturePoint]] = None,
) -> ElementaryAspects:
    """Count and measure the elementary aspects of ``d``.

    S ignores point pairs closer than the resample step; M is the diameter
    of the connected component with the greatest total line length.
    """
    pts = list(points) if points is not None else feature_points(d, cfg)
    if len(pts) < 2:
        raise GeometryError(f"drawing {d.id}: fewer than 2 feature points")

    n_soft = sum(p.kind is Kind.SOFT_BEND for p in pts)
    n_corner = sum(p.kind is Kind.CORNER_BEND for p in pts)
    n_end = sum(p.kind is Kind.END for p in pts)
    n_e = n_end + n_soft + n_corner
    pct_soft = n_soft / n_e if n_e else 0.0
    pct_corner = n_corner / n_e if n_e else 0.0

    xy = np.array([(p.x, p.y) for p in pts])
    largest, smallest = _extreme_distances(xy, cfg.resample_step_mm)
    if not math.isfinite(smallest) or smallest <= 0:
        raise GeometryError(f"drawing {d.id}: no feature points at least one resample step apart")

    comp = _components(d, [p for p in pts if p.kind is Kind.INTERSECTION])
    length: dict[int, float] = {}
    for i, poly in enumerate(d.polylines):
        length[comp[i]] = length.get(comp[i], 0.0) + poly.length
    main = max(length, key=lambda c: (length[c], -c))
    in_main = [
        comp[p.partners[0] if p.kind is Kind.INTERSECTION else p.polyline_index] == main
        for p in pts
    ]
    main_xy = xy[np.array(in_main)]
    main_form = _extreme_distances(main_xy)[0] if len(main_xy) >= 2 else 0.0

    return ElementaryAspects(
        n_points=len(pts),
        n_ends_bends=n_e,
        pct_soft=pct_soft,
        pct_corner=pct_corner,
        largest=largest,
        smallest=smallest,
        main_form=main_form,
        lseg=math.sqrt(smallest * largest),
    )
