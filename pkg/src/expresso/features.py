"""Perceptron input and target vectors for a drawing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .drawing import Drawing, check_targets
from .geometry import ElementaryAspects, FeaturePoint, GeometryConfig, elementary_aspects, feature_points


class CompositionSummary(NamedTuple):
    avg_right: float
    avg_left: float
    avg_above: float
    avg_below: float
    dev_right: float
    dev_left: float
    dev_above: float
    dev_below: float


class InputVector(NamedTuple):
    avg_right: float
    avg_left: float
    avg_above: float
    avg_below: float
    dev_right: float
    dev_left: float
    dev_above: float
    dev_below: float
    n_points: float
    largest: float
    smallest_01mm: float
    ldiv: float


class TargetVector(NamedTuple):
    ends_bends_ratio: float
    pct_soft: float
    pct_corner: float
    composition: float
    main_form_ratio: float


INPUT_NAMES = [f"v{i}" for i in range(1, 13)]
TARGET_NAMES = [f"t{i}" for i in range(1, 6)]


def _side(rel: np.ndarray) -> tuple[float, float]:
    if rel.size == 0:
        return 0.0, 0.0
    avg = float(rel.mean())
    return avg, float(np.abs(rel - avg).mean())


def composition_reduction(points: Sequence[FeaturePoint] | np.ndarray) -> CompositionSummary:
    """Half-plane averages and mean absolute deviations around the centre.

    The centre is the bounding-box centre of the points. Points lying exactly
    on a centre line count for neither side; an empty side gives 0, 0.
    """
    if isinstance(points, np.ndarray):
        xy = np.asarray(points, dtype=float).reshape(-1, 2)
    else:
        xy = np.array([(p.x, p.y) for p in points], dtype=float).reshape(-1, 2)
    if len(xy) < 2:
        raise ValueError("composition reduction needs at least 2 points")
    cx = (xy[:, 0].min() + xy[:, 0].max()) / 2
    cy = (xy[:, 1].min() + xy[:, 1].max()) / 2
    dx, dy = xy[:, 0] - cx, xy[:, 1] - cy
    right, left = _side(dx[dx > 0]), _side(dx[dx < 0])
    above, below = _side(dy[dy > 0]), _side(dy[dy < 0])
    return CompositionSummary(right[0], left[0], above[0], below[0], right[1], left[1], above[1], below[1])


def composition_type(d: Drawing) -> float:
    """Portrait (0.2) to landscape (0.8) score from the bounding-box aspect ratio."""
    xy = d.all_vertices()
    w = float(np.ptp(xy[:, 0]))
    h = float(np.ptp(xy[:, 1]))
    if w <= 0 or h <= 0:
        return 0.5
    return min(0.8, max(0.2, 0.5 + 0.3 * math.log2(w / h)))


def assemble_input(d: Drawing, ea: ElementaryAspects, cs: CompositionSummary) -> InputVector:
    return InputVector(*cs, float(ea.n_points), ea.largest, 10.0 * ea.smallest, d.ldiv)


def assemble_target(ea: ElementaryAspects, d: Drawing) -> TargetVector:
    """Computed targets, unless the drawing carries hand-measured ones."""
    if d.annotations.hand_targets is not None:
        return TargetVector(*d.annotations.hand_targets)
    if ea.n_points < 1:
        raise ValueError("no feature points")
    main_ratio = ea.main_form / ea.largest if ea.largest > 0 else 0.0
    return TargetVector(
        ea.n_ends_bends / ea.n_points,
        ea.pct_soft,
        ea.pct_corner,
        composition_type(d),
        main_ratio,
    )


@dataclass(frozen=True)
class Analysis:
    """Everything measured on one drawing."""

    drawing: Drawing
    points: tuple[FeaturePoint, ...]
    aspects: ElementaryAspects
    composition: CompositionSummary
    inputs: InputVector
    targets: TargetVector

    @property
    def id(self) -> str:
        return self.drawing.id


def analyze(d: Drawing, cfg: Optional[GeometryConfig] = None) -> Analysis:
    cfg = cfg or GeometryConfig()
    pts = feature_points(d, cfg)
    ea = elementary_aspects(d, cfg, pts)
    cs = composition_reduction(pts)
    return Analysis(d, tuple(pts), ea, cs, assemble_input(d, ea, cs), assemble_target(ea, d))


def validate_target(t: Sequence[float]) -> TargetVector:
    return TargetVector(*check_targets(t))
