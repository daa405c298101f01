"""Drawing data model and the plain-text ``.drw`` file format.

A drawing file looks like::

    drawing d001
    ldiv 3.0
    content setup
    targets 0.8 0.1 0.4 0.5 0.9      # optional
    polyline
    0 0
    10 0
    end

Coordinates are millimetres. One drawing per file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

COINCIDENT_TOL = 1e-9
CLOSED_TOL = 1e-6


class DrawingError(ValueError):
    """A drawing violates one of the model invariants."""


class DrawingParseError(DrawingError):
    """Syntax or content error while reading a drawing file."""

    def __init__(self, lineno: int, reason: str):
        self.lineno = lineno
        self.reason = reason
        super().__init__(f"line {lineno}: {reason}")


class Content(str, Enum):
    THEORY = "theory"
    SETUP = "setup"
    BOTH = "both"


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DrawingError(f"non-finite coordinate ({self.x}, {self.y})")


@dataclass(frozen=True)
class Polyline:
    vertices: tuple[Point, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(self.vertices) < 2:
            raise DrawingError("polyline needs at least 2 vertices")
        for p, q in zip(self.vertices, self.vertices[1:]):
            if math.hypot(q.x - p.x, q.y - p.y) <= COINCIDENT_TOL:
                raise DrawingError(f"duplicate consecutive vertex at ({q.x}, {q.y})")

    @classmethod
    def from_xy(cls, xy: Iterable[Sequence[float]]) -> "Polyline":
        return cls(tuple(Point(float(x), float(y)) for x, y in xy))

    def as_array(self) -> np.ndarray:
        """Vertices as an ``(n, 2)`` float array."""
        return np.array([(p.x, p.y) for p in self.vertices], dtype=float)

    @property
    def closed(self) -> bool:
        a, b = self.vertices[0], self.vertices[-1]
        return len(self.vertices) > 2 and math.hypot(a.x - b.x, a.y - b.y) <= CLOSED_TOL

    @property
    def length(self) -> float:
        xy = self.as_array()
        return float(np.hypot(*np.diff(xy, axis=0).T).sum())


def check_targets(t: Sequence[float]) -> tuple[float, ...]:
    """Validate a 5-value target vector and return it as a tuple of floats."""
    t = tuple(float(v) for v in t)
    if len(t) != 5:
        raise DrawingError(f"target vector needs 5 values, got {len(t)}")
    if not all(math.isfinite(v) and 0.0 <= v <= 1.0 for v in t):
        raise DrawingError(f"target values must lie in [0, 1]: {t}")
    if not 0.2 <= t[3] <= 0.8:
        raise DrawingError(f"composition type must lie in [0.2, 0.8]: {t[3]}")
    if t[1] + t[2] > 1.0 + 1e-12:
        raise DrawingError(f"soft + corner fractions exceed 1: {t[1]} + {t[2]}")
    return t


@dataclass(frozen=True)
class Annotations:
    ldiv: float
    content: Content = Content.BOTH
    hand_targets: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if not (math.isfinite(self.ldiv) and self.ldiv > 0):
            raise DrawingError(f"ldiv must be a positive number, got {self.ldiv}")
        object.__setattr__(self, "ldiv", float(self.ldiv))
        object.__setattr__(self, "content", Content(self.content))
        if self.hand_targets is not None:
            object.__setattr__(self, "hand_targets", check_targets(self.hand_targets))


@dataclass(frozen=True)
class Drawing:
    id: str
    polylines: tuple[Polyline, ...]
    annotations: Annotations = field(default_factory=lambda: Annotations(1.0))

    def __post_init__(self):
        object.__setattr__(self, "polylines", tuple(self.polylines))
        if not self.id or any(c.isspace() for c in self.id):
            raise DrawingError(f"drawing id must be a non-empty word, got {self.id!r}")
        if not self.polylines:
            raise DrawingError("no polylines")

    @property
    def ldiv(self) -> float:
        return self.annotations.ldiv

    def all_vertices(self) -> np.ndarray:
        return np.concatenate([p.as_array() for p in self.polylines])

    def transformed(self, matrix=None, offset=(0.0, 0.0)) -> "Drawing":
        """Copy of the drawing with every vertex mapped to ``matrix @ v + offset``."""
        m = np.eye(2) if matrix is None else np.asarray(matrix, dtype=float)
        off = np.asarray(offset, dtype=float)
        polys = tuple(Polyline.from_xy(p.as_array() @ m.T + off) for p in self.polylines)
        return Drawing(self.id, polys, self.annotations)


def _fmt(v: float) -> str:
    return repr(float(v))


def serialize_drawing(d: Drawing) -> str:
    lines = [
        f"drawing {d.id}",
        f"ldiv {_fmt(d.annotations.ldiv)}",
        f"content {d.annotations.content.value}",
    ]
    if d.annotations.hand_targets is not None:
        lines.append("targets " + " ".join(_fmt(t) for t in d.annotations.hand_targets))
    for poly in d.polylines:
        lines.append("polyline")
        lines.extend(f"{_fmt(p.x)} {_fmt(p.y)}" for p in poly.vertices)
        lines.append("end")
    return "\n".join(lines) + "\n"


def _number(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise DrawingParseError(lineno, f"not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise DrawingParseError(lineno, f"non-finite number: {tok!r}")
    return v


def parse_drawing(text: str) -> Drawing:
    """Parse the text of a ``.drw`` file.

    Raises :class:`DrawingParseError` carrying the offending line number.
    """
    header: dict[str, tuple[int, list[str]]] = {}
    polylines: list[Polyline] = []
    current: Optional[list[tuple[float, float]]] = None
    start_line = 0
    lineno = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        key = toks[0]
        if current is not None:
            if key == "end":
                if len(toks) != 1:
                    raise DrawingParseError(lineno, "unexpected tokens after 'end'")
                try:
                    polylines.append(Polyline.from_xy(current))
                except DrawingError as exc:
                    raise DrawingParseError(start_line, str(exc)) from None
                current = None
            elif len(toks) == 2:
                current.append((_number(toks[0], lineno), _number(toks[1], lineno)))
            else:
                raise DrawingParseError(lineno, "expected '<x> <y>' or 'end'")
            continue

        if key == "polyline":
            if len(toks) != 1:
                raise DrawingParseError(lineno, "unexpected tokens after 'polyline'")
            if "drawing" not in header:
                raise DrawingParseError(lineno, "polyline before 'drawing' header")
            current, start_line = [], lineno
        elif key in ("drawing", "ldiv", "content", "targets"):
            if key in header:
                raise DrawingParseError(lineno, f"duplicate '{key}' line")
            if key == "drawing" and len(header) > 0:
                raise DrawingParseError(lineno, "'drawing' must be the first line")
            if key != "drawing" and "drawing" not in header:
                raise DrawingParseError(lineno, "missing 'drawing <id>' header")
            if polylines:
                raise DrawingParseError(lineno, f"'{key}' after polylines")
            header[key] = (lineno, toks[1:])
        elif key == "end":
            raise DrawingParseError(lineno, "'end' without 'polyline'")
        else:
            raise DrawingParseError(lineno, f"unknown keyword {key!r}")

    if current is not None:
        raise DrawingParseError(start_line, "unterminated polyline (missing 'end')")
    if "drawing" not in header:
        raise DrawingParseError(max(lineno, 1), "missing 'drawing <id>' header")
    for key in ("ldiv", "content"):
        if key not in header:
            raise DrawingParseError(max(lineno, 1), f"missing '{key}' line")

    ln, args = header["drawing"]
    if len(args) != 1:
        raise DrawingParseError(ln, "expected 'drawing <id>'")
    did = args[0]

    ln, args = header["ldiv"]
    if len(args) != 1:
        raise DrawingParseError(ln, "expected 'ldiv <value>'")
    ldiv = _number(args[0], ln)
    if ldiv <= 0:
        raise DrawingParseError(ln, f"ldiv must be positive, got {args[0]}")

    ln, args = header["content"]
    if len(args) != 1 or args[0] not in {c.value for c in Content}:
        raise DrawingParseError(ln, "expected 'content theory|setup|both'")
    content = Content(args[0])

    targets = None
    if "targets" in header:
        ln, args = header["targets"]
        if len(args) != 5:
            raise DrawingParseError(ln, f"expected 5 target values, got {len(args)}")
        try:
            targets = check_targets([_number(a, ln) for a in args])
        except DrawingParseError:
            raise
        except DrawingError as exc:
            raise DrawingParseError(ln, str(exc)) from None

    if not polylines:
        raise DrawingParseError(max(lineno, 1), "no polylines")
    return Drawing(did, tuple(polylines), Annotations(ldiv, content, targets))


def read_drawing(path) -> Drawing:
    return parse_drawing(Path(path).read_text(encoding="utf-8"))


def write_drawing(d: Drawing, path) -> None:
    Path(path).write_text(serialize_drawing(d), encoding="utf-8")


def read_corpus(directory) -> list[Drawing]:
    """Every ``*.drw`` file in ``directory``, sorted by drawing id."""
    drawings = [read_drawing(p) for p in sorted(Path(directory).glob("*.drw"))]
    ids = [d.id for d in drawings]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise DrawingError(f"duplicate drawing ids in {directory}: {', '.join(dup)}")
    return sorted(drawings, key=lambda d: d.id)
