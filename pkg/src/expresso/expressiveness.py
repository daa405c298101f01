"""The three expressiveness aspects (a), (b), (c) and the statistics around them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .features import Analysis, InputVector, TargetVector


class DegenerateDrawing(ValueError):
    pass


@dataclass(frozen=True)
class AspectValues:
    a: float
    b: float
    c: float

    def __getitem__(self, name: str) -> float:
        return {"a": self.a, "b": self.b, "c": self.c}[name]


def aspect_a(ldiv: float, lseg: float) -> float:
    """Diffusion looking-time measure: line diversity over mean segment length."""
    if not lseg > 0:
        raise DegenerateDrawing(f"l-segm must be positive, got {lseg}")
    if not ldiv > 0:
        raise ValueError(f"ldiv must be positive, got {ldiv}")
    return ldiv / lseg


def aspect_b(n_ends_bends: float, pct_soft: float, pct_corner: float, lseg: float) -> float:
    """Kinematic looking-time measure.

    Soft bends cost ``lseg ** (2/3)`` and corner bends ``lseg ** (2/5)``,
    weighted by their shares and scaled by the number of ends and bends.
    """
    if not lseg > 0:
        raise DegenerateDrawing(f"l-segm must be positive, got {lseg}")
    if not (0 <= pct_soft <= 1 and 0 <= pct_corner <= 1 and pct_soft + pct_corner <= 1 + 1e-12):
        raise ValueError(f"bad bend fractions: soft={pct_soft}, corner={pct_corner}")
    return _kinematic(n_ends_bends, pct_soft, pct_corner, lseg)


def _kinematic(n_e: float, soft: float, corner: float, lseg: float) -> float:
    return n_e * (soft * lseg ** (2 / 3) + corner * lseg ** (2 / 5))


def aspect_c(main_form: float, ldiv: float, smallest: float) -> float:
    """Nearness measure: main form length times line diversity over the smallest distance."""
    if not smallest > 0:
        raise DegenerateDrawing(f"smallest distance must be positive, got {smallest}")
    return main_form * ldiv / smallest


def hand_aspects(an: Analysis) -> AspectValues:
    """(a), (b), (c) from the measured elementary aspects of a drawing."""
    ea, ldiv = an.aspects, an.drawing.ldiv
    return AspectValues(
        aspect_a(ldiv, ea.lseg),
        aspect_b(ea.n_ends_bends, ea.pct_soft, ea.pct_corner, ea.lseg),
        aspect_c(ea.main_form, ldiv, ea.smallest),
    )


def aspects_from_outputs(x: Sequence[float], out: Sequence[float]) -> AspectValues:
    """P(a), P(b), P(c): the aspects rebuilt from an input vector and (predicted) outputs.

    #e, %s, %c and M come from the outputs; S, L and ldiv from the inputs.
    """
    x = InputVector(*x)
    out = TargetVector(*out)
    smallest = x.smallest_01mm / 10.0
    lseg = math.sqrt(smallest * x.largest)
    n_e = out.ends_bends_ratio * x.n_points
    main_form = out.main_form_ratio * x.largest
    if not lseg > 0:
        raise DegenerateDrawing(f"l-segm must be positive, got {lseg}")
    # the network predicts the two fractions independently, so their sum may
    # exceed 1; the formula is applied to them as they are
    return AspectValues(
        aspect_a(x.ldiv, lseg),
        _kinematic(n_e, out.pct_soft, out.pct_corner, lseg),
        aspect_c(main_form, x.ldiv, smallest),
    )


# -- extremes -----------------------------------------------------------------


class Flag(str, Enum):
    LOW = "low-extreme"
    NORMAL = "normal"
    HIGH = "high-extreme"


def nearest_rank(values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile: the smallest value with at least pct% of the data at or below it."""
    v = sorted(values)
    rank = max(1, math.ceil(pct / 100.0 * len(v) - 1e-9))
    return v[min(rank, len(v)) - 1]


def flag_extremes(values: Sequence[float], low_pct: float = 10.0, high_pct: float = 90.0) -> list[Flag]:
    """Mark values in the lower and upper tails.

    A value is high-extreme when it exceeds the ``high_pct`` nearest-rank
    percentile. The low tail is the mirror image: a value is low-extreme when
    it lies below the ``low_pct`` percentile counted from the top, so both
    tails hold the same number of values for symmetric thresholds.
    """
    if not 0 < low_pct < high_pct < 100:
        raise ValueError("need 0 < low_pct < high_pct < 100")
    vals = [float(v) for v in values]
    if len(vals) < 3:
        raise ValueError("flag_extremes needs at least 3 values")
    hi = nearest_rank(vals, high_pct)
    lo = -nearest_rank([-v for v in vals], 100.0 - low_pct)
    return [Flag.LOW if v < lo else Flag.HIGH if v > hi else Flag.NORMAL for v in vals]


# -- rank statistics ----------------------------------------------------------


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v))
    sv = v[order]
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Spearman's rho (Pearson correlation of average ranks); None if a series is constant."""
    if len(x) != len(y):
        raise ValueError("series differ in length")
    if len(x) < 2:
        return None
    rx, ry = average_ranks(x), average_ranks(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    den = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if den == 0:
        return None
    return max(-1.0, min(1.0, float(dx @ dy) / den))


@dataclass(frozen=True)
class Trend:
    rho: Optional[float]
    n: int


TREND_PAIRS = [
    ("%s", "#e"),
    ("%c", "#e"),
    ("S", "#e"),
    ("L", "#e"),
    ("a", "1/S"),
    ("c", "1/S"),
    ("b", "L"),
    ("1/S", "L"),
    ("a", "b"),
]


def trend_series(analyses: Sequence[Analysis]) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {k: [] for k in ("%s", "%c", "#e", "S", "1/S", "L", "a", "b", "c")}
    for an in analyses:
        ea = an.aspects
        av = hand_aspects(an)
        cols["%s"].append(ea.pct_soft)
        cols["%c"].append(ea.pct_corner)
        cols["#e"].append(ea.n_ends_bends)
        cols["S"].append(ea.smallest)
        cols["1/S"].append(1.0 / ea.smallest)
        cols["L"].append(ea.largest)
        cols["a"].append(av.a)
        cols["b"].append(av.b)
        cols["c"].append(av.c)
    return cols


def correlation_trends(series: Mapping[str, Sequence[float]] | Sequence[Analysis]) -> dict[str, Trend]:
    """Spearman rho for each of the trend pairs, keyed ``"x vs y"``."""
    if not isinstance(series, Mapping):
        series = trend_series(series)
    n = len(next(iter(series.values())))
    if n < 5:
        raise ValueError("correlation trends need at least 5 drawings")
    return {f"{x} vs {y}": Trend(spearman(series[x], series[y]), n) for x, y in TREND_PAIRS}


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r2: float


def line_fit(x: Sequence[float], y: Sequence[float]) -> LineFit:
    """Least-squares line y = slope * x + intercept with its R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.ptp(x) == 0:
        raise ValueError("need at least 2 distinct x values for a line fit")
    dx = x - x.mean()
    slope = float(dx @ (y - y.mean()) / (dx @ dx))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return LineFit(slope, intercept, r2)
