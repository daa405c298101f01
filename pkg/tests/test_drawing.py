import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expresso.drawing import (
    Annotations,
    Content,
    Drawing,
    DrawingError,
    DrawingParseError,
    Point,
    Polyline,
    parse_drawing,
    read_corpus,
    serialize_drawing,
    write_drawing,
)
from expresso.synth import GenSpec, generate

SIMPLE = """\
drawing simple
ldiv 3.0
content both
polyline
0 0
10 0
end
"""


def test_parse_simple_file():
    d = parse_drawing(SIMPLE)
    assert d.id == "simple"
    assert len(d.polylines) == 1
    assert [(p.x, p.y) for p in d.polylines[0].vertices] == [(0, 0), (10, 0)]
    assert d.ldiv == 3.0
    assert d.annotations.content is Content.BOTH


def test_serialize_contains_ldiv_and_vertices():
    text = serialize_drawing(parse_drawing(SIMPLE))
    assert "ldiv 3.0" in text
    assert "0.0 0.0" in text and "10.0 0.0" in text


def test_zero_polylines_rejected():
    with pytest.raises(DrawingParseError, match="no polylines"):
        parse_drawing("drawing x\nldiv 1\ncontent theory\n")


def test_comments_blank_lines_and_targets():
    text = "# header comment\n\ndrawing c1  # trailing\nldiv 2\ncontent setup\ntargets 0.5 0.3 0.2 0.4 0.7\n\npolyline\n0 0\n1 1\nend\n"
    d = parse_drawing(text)
    assert d.annotations.hand_targets == (0.5, 0.3, 0.2, 0.4, 0.7)
    assert d.annotations.content is Content.SETUP


def test_parse_error_carries_line_number():
    bad = SIMPLE.replace("10 0", "10 zero")
    with pytest.raises(DrawingParseError) as e:
        parse_drawing(bad)
    assert e.value.lineno == 6
    assert str(e.value).startswith("line 6:")


@pytest.mark.parametrize(
    "make",
    [
        lambda: Point(math.nan, 0),
        lambda: Point(0, math.inf),
        lambda: Polyline.from_xy([(0, 0)]),
        lambda: Polyline.from_xy([(0, 0), (0, 0)]),
        lambda: Annotations(0.0),
        lambda: Annotations(-1.0),
        lambda: Annotations(1.0, hand_targets=(0.5, 0.7, 0.7, 0.5, 0.5)),
        lambda: Annotations(1.0, hand_targets=(0.5, 0.1, 0.1, 0.9, 0.5)),
        lambda: Drawing("x", ()),
        lambda: Drawing("", (Polyline.from_xy([(0, 0), (1, 0)]),)),
    ],
)
def test_type_invariants(make):
    with pytest.raises(DrawingError):
        make()


def test_closed_and_length():
    sq = Polyline.from_xy([(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
    assert sq.closed and sq.length == pytest.approx(4.0)
    assert not Polyline.from_xy([(0, 0), (1, 0), (0, 0.5)]).closed


# -- round trips --------------------------------------------------------------

coords = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)


@st.composite
def drawings(draw):
    n_poly = draw(st.integers(1, 4))
    polys = []
    for _ in range(n_poly):
        pts = draw(st.lists(st.tuples(coords, coords), min_size=2, max_size=8))
        clean = [pts[0]]
        for p in pts[1:]:
            if math.dist(p, clean[-1]) > 1e-6:
                clean.append(p)
        if len(clean) < 2:
            clean.append((clean[0][0] + 1.0, clean[0][1]))
        polys.append(Polyline.from_xy(clean))
    ldiv = draw(st.floats(1e-6, 1e3, allow_nan=False))
    content = draw(st.sampled_from(list(Content)))
    targets = None
    if draw(st.booleans()):
        t2 = draw(st.floats(0, 1))
        t3 = draw(st.floats(0, 1 - t2))
        targets = (draw(st.floats(0, 1)), t2, t3, draw(st.floats(0.2, 0.8)), draw(st.floats(0, 1)))
    ident = draw(st.from_regex(r"[A-Za-z0-9_-]{1,12}", fullmatch=True))
    return Drawing(ident, tuple(polys), Annotations(ldiv, content, targets))


@settings(max_examples=150, deadline=None)
@given(drawings())
def test_parse_serialize_identity(d):
    assert parse_drawing(serialize_drawing(d)) == d


@settings(max_examples=60, deadline=None)
@given(drawings())
def test_serialize_is_canonical(d):
    text = serialize_drawing(d)
    assert serialize_drawing(parse_drawing(text)) == text


def test_generated_corpus_round_trips():
    for d in generate(GenSpec(seed=7, count=10)).drawings:
        back = parse_drawing(serialize_drawing(d))
        assert back == d
        for p, q in zip(d.polylines, back.polylines):
            assert np.abs(p.as_array() - q.as_array()).max() <= 1e-9


# -- fuzzing with single-line corruptions ---------------------------------------

BASE = """\
drawing fz
ldiv 2.5
content theory
targets 0.5 0.3 0.2 0.4 0.7
polyline
0 0
10 0
end
polyline
5 5
5 -5
3 -1
end
"""

CORRUPTIONS = [
    ("ldiv 2.5", "ldiv 0"),
    ("ldiv 2.5", "ldiv -3"),
    ("ldiv 2.5", "ldiv nan"),
    ("ldiv 2.5", "ldiv"),
    ("content theory", "content poetry"),
    ("targets 0.5 0.3 0.2 0.4 0.7", "targets 0.5 0.3 0.2 0.4"),
    ("targets 0.5 0.3 0.2 0.4 0.7", "targets 1.5 0.3 0.2 0.4 0.7"),
    ("targets 0.5 0.3 0.2 0.4 0.7", "targets 0.5 0.6 0.6 0.4 0.7"),
    ("targets 0.5 0.3 0.2 0.4 0.7", "targets 0.5 0.3 0.2 0.9 0.7"),
    ("drawing fz", "drawing"),
    ("drawing fz", "drawing a b"),
    ("10 0\n", "0 0\n"),
    ("10 0\n", "\n"),
    ("5 -5\n", "5 5\n"),
    ("3 -1\n", "3 inf\n"),
    ("3 -1\n", "3 -1 7\n"),
    ("3 -1\n", "three -1\n"),
    ("end\npolyline", "polyline\npolyline"),
    ("content theory", "colour red"),
]


@pytest.mark.parametrize("old,new", CORRUPTIONS)
def test_single_line_corruptions_rejected(old, new):
    assert old in BASE
    with pytest.raises(DrawingParseError):
        parse_drawing(BASE.replace(old, new, 1))


def test_every_line_deletion_is_rejected_or_still_valid():
    parse_drawing(BASE)
    lines = BASE.splitlines(keepends=True)
    for i in range(len(lines)):
        text = "".join(lines[:i] + lines[i + 1:])
        try:
            d = parse_drawing(text)
        except DrawingParseError:
            continue
        # surviving deletions must still produce a valid drawing
        assert parse_drawing(serialize_drawing(d)) == d
        assert lines[i].startswith("targets") or all(len(p.vertices) >= 2 for p in d.polylines)


def test_corpus_io(tmp_path):
    corpus = generate(GenSpec(seed=1, count=4))
    for d in reversed(corpus.drawings):
        write_drawing(d, tmp_path / f"{d.id}.drw")
    back = read_corpus(tmp_path)
    assert [d.id for d in back] == sorted(d.id for d in corpus.drawings)
    write_drawing(corpus.drawings[0], tmp_path / "copy.drw")
    with pytest.raises(DrawingError, match="duplicate"):
        read_corpus(tmp_path)


def test_transformed_maps_vertices():
    d = parse_drawing(SIMPLE)
    t = d.transformed([[0, -1], [1, 0]], (1, 2))
    assert np.allclose(t.polylines[0].as_array(), [[1, 2], [1, 12]])
