from __future__ import annotations

import numpy as np
import pytest

from expresso.drawing import Annotations, Drawing, Polyline


def make_drawing(polys, ldiv=1.0, id="t", **kw) -> Drawing:
    return Drawing(id, tuple(Polyline.from_xy(p) for p in polys), Annotations(ldiv, **kw))


def random_drawing(rng: np.random.Generator, n_segments: int, box: float = 100.0, id: str = "r") -> Drawing:
    """Random zig-zag polylines whose segment count adds up to ``n_segments``."""
    polys = []
    left = n_segments
    while left > 0:
        k = int(min(left, rng.integers(1, 12)))
        polys.append(rng.uniform(0, box, size=(k + 1, 2)))
        left -= k
    return make_drawing(polys, ldiv=float(rng.uniform(1, 10)), id=id)


def random_shape_drawing(rng: np.random.Generator, id: str = "s") -> Drawing:
    """Random open strokes with corners and arcs, the kind the feature extractor sees in practice."""
    polys = []
    for _ in range(int(rng.integers(1, 4))):
        x, y = rng.uniform(0, 80, 2)
        h = rng.uniform(0, 2 * np.pi)
        pts = [(x, y)]
        for _ in range(int(rng.integers(1, 5))):
            if rng.random() < 0.5:
                h += np.radians(rng.uniform(60, 130)) * rng.choice([-1, 1])
                L = rng.uniform(8, 30)
                x, y = x + L * np.cos(h), y + L * np.sin(h)
                pts.append((x, y))
            else:
                turn = np.radians(rng.uniform(12, 20)) * rng.choice([-1, 1])
                for _ in range(int(rng.integers(4, 9))):
                    h += turn / 8
                    for _ in range(8):
                        x, y = x + 0.125 * np.cos(h), y + 0.125 * np.sin(h)
                        pts.append((x, y))
                L = rng.uniform(8, 20)
                x, y = x + L * np.cos(h), y + L * np.sin(h)
                pts.append((x, y))
        polys.append(pts)
    return make_drawing(polys, ldiv=float(rng.uniform(1, 10)), id=id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary -------------------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m:
        num, title = m.args
        _criteria.setdefault(num, {"title": title, "ok": True, "seen": False, "nodes": set()})
        _criteria[num]["nodes"].add(item.nodeid)


def pytest_runtest_logreport(report):
    for entry in _criteria.values():
        if report.nodeid in entry["nodes"]:
            if report.when == "call":
                entry["seen"] = True
            if report.failed or (report.when == "call" and report.skipped):
                entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        status = "PASS" if e["ok"] and e["seen"] else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d} {status}  {e['title']}")
