from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from avoidset.arith import FqContext, QQ, parse_poly
from avoidset.construction import build_any, load_scenario
from avoidset.geometry import Cube, CubeSet, real_grid, ultra_grid
from avoidset.verify import SolutionSearchConfig, check_ap_free, cross_validate, search_solutions, with_final_set

SCEN = Path(__file__).resolve().parents[1] / "scenarios"
F3 = FqContext(3, 3)
G3 = ultra_grid(1, F3)
AP3 = parse_poly("x - 2*y + z", 1, 3, F3, ["x", "y", "z"])


@pytest.fixture(scope="module")
def ap_trace():
    return build_any(load_scenario(SCEN / "ap3_f3.ini"))


def _one(c):
    return CubeSet([c], c.scale, c.grid)


# ---------------------------------------------------------------- search_solutions

def test_nested_balls_share_the_zero_witness():
    sets = [_one(Cube((0,), s, G3)) for s in (1, 2, 3)]
    res = search_solutions(AP3, sets, SolutionSearchConfig(mode="exhaustive"))
    assert res.status == "witnesses"
    zero = tuple(tuple(F3([0]) for _ in range(1)) for _ in range(3))
    assert zero in res.witnesses


def test_disjoint_digit_balls_certified_empty():
    # over F_3 the form is x + y + z; leading digits 0, 1, 0 sum to 1, so |f| = 1 everywhere
    sets = [_one(Cube((0,), 1, G3)), _one(Cube((1,), 1, G3)), _one(Cube((3,), 2, G3))]
    res = search_solutions(AP3, sets, SolutionSearchConfig(mode="exhaustive"))
    assert res.certified_empty and res.bound == 1
    iv = search_solutions(AP3, sets, SolutionSearchConfig(mode="interval"))
    assert iv.certified_empty and iv.bound == 1


def test_grid_search_sign_change_on_real_line():
    g = real_grid(1)
    f = parse_poly("x - y", 1, 2, QQ, ["x", "y"])
    sets = [_one(Cube((0,), 1, g)), _one(Cube((1,), 2, g))]
    res = search_solutions(f, sets, SolutionSearchConfig(mode="grid", resolution=4))
    # [0, 1/2] x [1/4, 1/2] contains the diagonal point (1/4, 1/4)
    assert res.witnesses and res.sign_change
    assert res.min_abs == 0


def test_interval_search_real_bound():
    g = real_grid(1)
    f = parse_poly("x - y", 1, 2, QQ, ["x", "y"])
    sets = [_one(Cube((0,), 2, g)), _one(Cube((2,), 2, g))]
    res = search_solutions(f, sets, SolutionSearchConfig(mode="interval"))
    assert res.certified_empty and res.bound == Fraction(1, 4)


def test_exhaustive_needs_local_ring():
    g = real_grid(1)
    f = parse_poly("x - y", 1, 2, QQ, ["x", "y"])
    with pytest.raises(ValueError):
        search_solutions(f, [_one(Cube((0,), 1, g)), _one(Cube((1,), 1, g))],
                         SolutionSearchConfig(mode="exhaustive"))


# ---------------------------------------------------------------- check_ap_free

def test_check_ap_free_examples():
    ok, w = check_ap_free([0, 1, 2])
    assert not ok and sorted(w) == [(0,), (1,), (2,)]
    assert check_ap_free([0, 1, 5, 11]) == (True, None)
    # a repeated point is not a progression
    assert check_ap_free([3, 3, 7])[0]


def test_check_ap_free_groups():
    assert check_ap_free([0, 1, 2], groups=["a", "a", "b"])[0]
    assert not check_ap_free([0, 1, 2], groups=["a", "b", "c"])[0]


SUBSETS = st.sets(st.integers(0, 26), min_size=3, max_size=9)


@settings(max_examples=60, deadline=None)
@given(SUBSETS)
def test_ap_free_agrees_with_exhaustive_search(codes):
    # at full precision every cube is a single point
    cs = CubeSet([Cube((c,), 3, G3) for c in sorted(codes)], 3, G3)
    pts = [F3.from_code(c, 3) for c in sorted(codes)]
    free, _ = check_ap_free(pts)
    res = search_solutions(AP3, [cs] * 3, SolutionSearchConfig(mode="exhaustive"))
    assert free == res.certified_empty


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sets(st.integers(0, 8), min_size=1, max_size=3), min_size=3, max_size=3))
def test_interval_never_contradicts_exhaustive(blocks):
    sets = [CubeSet([Cube((c,), 2, G3) for c in sorted(b)], 2, G3) for b in blocks]
    ex = search_solutions(AP3, sets, SolutionSearchConfig(mode="exhaustive"))
    iv = search_solutions(AP3, sets, SolutionSearchConfig(mode="interval", depth_cap=2))
    if iv.certified_empty:
        assert ex.certified_empty
        if iv.bound is not None:
            assert ex.bound >= iv.bound
    if ex.status == "witnesses":
        assert not iv.certified_empty


# ---------------------------------------------------------------- cross_validate and fault injection

def test_cross_validate_green(ap_trace):
    rep = cross_validate(ap_trace)
    assert rep.passed
    checks = {r.check for r in rep.rows}
    assert {"nesting", "cell-count", "count-bound", "single-intersection", "avoidance", "lower-bound"} <= checks


def test_dropped_cube_fails_count_rows(ap_trace):
    fin = list(ap_trace.final)
    rep = cross_validate(with_final_set(ap_trace, fin[1:]))
    bad = {r.check for r in rep.failures()}
    # the emptied cell has no survivor to miscount; the block total drops below its window
    assert "count-bound" in bad


def test_moved_survivor_fails_lower_bound(ap_trace):
    ring = ap_trace.grid.ring
    P = ring.precision
    st_ = ap_trace.stages[1]
    led = next(e for e in st_.entries if e.entry.tau == (0, 1, 2))
    S = led.survivor_sets(st_.E)
    y, z = S[1][0], S[2][0]
    x = ring.from_code(y.coords[0], P) * 2 - ring.from_code(z.coords[0], P)
    bad = Cube((ring.code(x, P),), P, ap_trace.grid)
    assert led.blocks[0].contains(bad)
    # swap it for the survivor of its own cell so the counts stay intact
    cell = bad.ancestor(st_.cell_scale)
    cubes = [c for c in ap_trace.final if c.ancestor(st_.cell_scale) != cell] + [bad]
    rep = cross_validate(with_final_set(ap_trace, cubes))
    fails = {(r.check, r.subject) for r in rep.failures()}
    subj = f"stage 1 {led.label()}"
    assert ("avoidance", subj) in fails and ("lower-bound", subj) in fails
    assert not any(r.check in ("cell-count", "count-bound") for r in rep.failures())


def test_workers_keep_row_order(ap_trace):
    a = cross_validate(ap_trace, workers=1)
    b = cross_validate(ap_trace, workers=2)
    assert a.to_tsv() == b.to_tsv()
