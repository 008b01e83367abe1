from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from avoidset.arith import FqContext, PadicContext
from avoidset.geometry import (Cube, CubeSet, TupleCursor, closed_intersects, enumerate_tuples, falling_factorial,
                               interiors_meet, real_grid, subdivide, trim_border, ultra_grid)

R1 = real_grid(1)
F3 = FqContext(3, 6)


def test_subdivide_real():
    kids = subdivide(Cube((0,), 0, R1), 2)
    assert [c.coords for c in kids] == [(0,), (1,), (2,), (3,)]


def test_subdivide_ultra_digit_extension():
    g = ultra_grid(2, F3)
    c = Cube((1, 2), 1, g)
    kids = subdivide(c, 2)
    assert len(kids) == 9
    for k in kids:
        assert k.ancestor(1) == c
        assert all(x % 3 == y for x, y in zip(k.coords, c.coords))


def test_subdivide_identity():
    c = Cube((5, 7), 4, real_grid(2))
    assert subdivide(c, 4) == [c]


def test_trim_border_ultrametric_unchanged():
    g = ultra_grid(1, F3)
    kids = subdivide(Cube((0,), 0, g), 2)
    assert trim_border(kids, [Cube((0,), 1, g)]) == kids


def test_trim_border_shared_endpoint():
    kids = subdivide(Cube((0,), 0, R1), 2)
    out = trim_border(kids, [Cube((1,), 0, R1)])
    assert [c.coords for c in out] == [(0,), (1,), (2,)]


def test_trim_border_empty_avoid():
    kids = subdivide(Cube((0,), 0, R1), 2)
    assert trim_border(kids, []) == kids


def test_enumerate_tuples_small():
    s = CubeSet(subdivide(Cube((0,), 0, R1), 2)[:3], 2, R1)
    assert list(enumerate_tuples(s, 2)) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert list(enumerate_tuples(s, 1)) == [(0,), (1,), (2,)]


def test_enumerate_tuples_count_is_falling_factorial():
    tuples = list(TupleCursor(5, 3))
    assert len(tuples) == 60 == falling_factorial(5, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3))
def test_cursor_matches_permutations(M, v):
    if M < v:
        with pytest.raises(ValueError):
            TupleCursor(M, v)
        return
    assert list(TupleCursor(M, v)) == list(permutations(range(M), v))


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 7), st.integers(1, 3), st.integers(0, 40))
def test_cursor_resumes(M, v, k):
    full = list(TupleCursor(M, v))
    cur = TupleCursor(M, v)
    head = [next(cur) for _ in range(min(k, len(full)))]
    _, _, current, done = cur.state()
    rest = [] if done else list(TupleCursor(M, v, start=current))
    assert head + rest == full


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(0, 3), st.integers(0, 3), st.data())
def test_subdivide_union_is_parent_real(n, s, extra, data):
    g = real_grid(n)
    coords = [data.draw(st.integers(0, 2 ** s - 1)) for _ in range(n)]
    c = Cube(coords, s, g)
    kids = subdivide(c, s + extra)
    assert len(kids) == 2 ** (n * extra)
    assert CubeSet(kids, s + extra, g).coarsen(s).cubes == (c,)
    assert all(c.contains(k) for k in kids)
    # the lower corners tile the parent exactly
    h = g.r ** (s + extra)
    lo = c.lower_corner()
    corners = {tuple((x - y) / h for x, y in zip(k.lower_corner(), lo)) for k in kids}
    assert len(corners) == len(kids)
    assert all(0 <= t < 2 ** extra for cr in corners for t in cr)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2), st.data())
def test_subdivide_union_is_parent_ultra(s, extra, data):
    g = ultra_grid(1, PadicContext(3, 6))
    c = Cube([data.draw(st.integers(0, 3 ** s - 1))], s, g)
    kids = subdivide(c, s + extra)
    assert len(kids) == 3 ** extra
    assert CubeSet(kids, s + extra, g).coarsen(s).cubes == (c,)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=1, max_size=20, unique=True))
def test_serialize_parse_roundtrip(coords):
    g = real_grid(2)
    cs = CubeSet([Cube(c, 4, g) for c in coords], 4, g)
    text = cs.serialize()
    again = CubeSet.parse(text)
    assert again == cs and again.serialize() == text


def test_serialize_parse_roundtrip_ultra():
    g = ultra_grid(1, F3)
    cs = CubeSet(subdivide(Cube((2,), 1, g), 3), 3, g)
    assert CubeSet.parse(cs.serialize(), ring=F3).serialize() == cs.serialize()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.data())
def test_ultrametric_balls_nested_or_disjoint(s1, s2, data):
    g = ultra_grid(1, F3)
    a = Cube([data.draw(st.integers(0, 3 ** s1 - 1))], s1, g)
    b = Cube([data.draw(st.integers(0, 3 ** s2 - 1))], s2, g)
    # balls share a point iff one contains the other: compare on the finer common refinement
    fine = max(s1, s2)
    pa = {k.coords for k in subdivide(a, fine)}
    pb = {k.coords for k in subdivide(b, fine)}
    meet = bool(pa & pb)
    assert meet == (a.contains(b) or b.contains(a))
    assert interiors_meet(a, b) == meet


def test_real_closed_cubes_touch_but_interiors_do_not():
    a = Cube((0,), 1, R1)
    b = Cube((1,), 1, R1)
    assert closed_intersects(a, b)
    assert not interiors_meet(a, b)
    assert a.side() == Fraction(1, 2)
