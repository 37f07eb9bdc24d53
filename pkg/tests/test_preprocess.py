import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cuberamsey.coloring import AllRed, BlueMultipartite, ExplicitColoring, find_blue_clique
from cuberamsey.preprocess import (FamilyForest, FinderOptions, FreeSetFinder, LeveledSet,
                                   build_family, build_forest, check_degree_bounds, compress,
                                   exact_free_subset, expand, find_free_subset)
from cuberamsey.regime import ConfigError, RegimeParams

from conftest import all_cliques


def random_coloring(N, p, seed):
    rng = np.random.default_rng(seed)
    B = np.triu(rng.random((N, N)) < p, 1)
    return ExplicitColoring(B), B | B.T


def exists_free_subset(B, t, m):
    """Exhaustive: is there an m-subset with no t-clique in B?"""
    cliques = [set(c) for c in all_cliques(B, t)]
    for S in itertools.combinations(range(len(B)), m):
        s = set(S)
        if not any(c <= s for c in cliques):
            return True
    return False


def free_of(B, S, t):
    sub = B[np.ix_(S, S)]
    return next(all_cliques(sub, t), None) is None


# regime -----------------------------------------------------------------------

def test_regime_constants():
    p = RegimeParams.create(3, 6, 448000)
    assert p.multipliers == (4,) and p.codim_max == (6,)
    assert p.proper_threshold(1, 1, 2) == Fraction(1, 64)  # (4*2)^-2 = 1/(16*4)
    assert p.prune_cut(3) == Fraction(1, 24) and p.max_degree_bound(3) == Fraction(1, 12)
    assert p.internal_degree_bound(2) == Fraction(16, 12)
    q = RegimeParams.create(4, 32, 2 ** 46 * 2 ** 32)
    assert q.multipliers == (2 ** 18, 8) and q.codim_max == (23, 8)
    assert q.proper_threshold(2, 2, 1) == Fraction(1, 64)
    assert q.min_N() == 2 ** 78
    g = RegimeParams.create(5, 8, 1, mode="engineering", multipliers=(8, 4, 2), codim_max=(3, 3, 3))
    assert g.proper_threshold(3, 3, 1) == Fraction(1, 100) ** 4


def test_regime_refusals():
    with pytest.raises(ConfigError, match="7000"):
        RegimeParams.create(3, 6, 100).check_exact_limits()
    with pytest.raises(ConfigError):
        RegimeParams.create(3, 6, 448000, multipliers=(2,))
    with pytest.raises(ConfigError):
        RegimeParams.create(2, 6, 448000)
    with pytest.raises(ConfigError):
        RegimeParams.create(3, 6, 10, mode="engineering", multipliers=(0,), codim_max=(1,))
    RegimeParams.create(3, 6, 100, mode="engineering").check_exact_limits()  # allowed


# finders ----------------------------------------------------------------------

def test_compress_roundtrip():
    v = np.array([0, 1, 2, 5, 7, 8, 100])
    assert compress(v) == [[0, 3], [5, 6], [7, 9], [100, 101]]
    assert (expand(compress(v)) == v).all()


def test_all_red_greedy():
    S = find_free_subset(AllRed(300), range(300), 2, 256, "b")
    assert len(S) == 256 and len(set(S.tolist())) == 256


def test_bipartite_whole_pool():
    o = BlueMultipartite(200, 2, 1.0, 4)
    S = find_free_subset(o, range(200), 3, 200, "b")
    assert S is not None and len(S) == 200
    assert not find_blue_clique(o, S, 3).found


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 13), st.floats(0.2, 0.8), st.integers(0, 10 ** 6), st.integers(2, 4),
       st.data())
def test_exact_matches_exhaustive(N, p, seed, t, data):
    o, B = random_coloring(N, p, seed)
    m = data.draw(st.integers(t, N))
    S = exact_free_subset(o, np.arange(N), t, m)
    assert (S is not None) == exists_free_subset(B, t, m)
    if S is not None:
        assert len(S) == m and free_of(B, S, t)


@pytest.mark.parametrize("seed,m", [(1, 4), (2, 5), (3, 4)])
def test_exact_on_forty_vertex_pools(seed, m):
    o, B = random_coloring(40, 0.75, seed)
    S = exact_free_subset(o, np.arange(40), 3, m)
    assert (S is not None) == exists_free_subset(B, 3, m)


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 30), st.floats(0.1, 0.9), st.integers(0, 10 ** 6), st.integers(2, 4),
       st.sampled_from(["a", "b", "c", "d"]), st.data())
def test_every_strategy_is_sound(N, p, seed, t, strategy, data):
    o, B = random_coloring(N, p, seed)
    m = data.draw(st.integers(2, N))
    S = find_free_subset(o, np.arange(N), t, m, strategy)
    if S is not None:
        assert len(S) == m and len(set(S.tolist())) == m
        assert free_of(B, np.asarray(S), t)


def test_neighbourhood_descent_on_triangle_free_pool():
    # blue graph bipartite => triangle-free, so blue neighbourhoods are blue-K_2-free (red cliques)
    o = BlueMultipartite(120, 2, 1.0, 3)
    finder = FreeSetFinder(o, 2, FinderOptions(strategies=("a",)))
    res = finder.find(np.arange(120), 30)
    assert res is not None and res[1] == "a"
    S = res[0]
    assert not o.blue_matrix(S, S).any()


# families ---------------------------------------------------------------------

def check_forest(forest: FamilyForest, params: RegimeParams):
    kids = forest.children_map()
    for P in forest.sets:
        children = [forest.sets[c] for c in kids[P.id]]
        if P.level == params.top:
            assert not children
            continue
        assert 2 * sum(c.size for c in children) >= P.size
        seen = set()
        for c in children:
            v = set(c.vertices.tolist())
            assert v <= set(P.vertices.tolist()) and not (v & seen)
            seen |= v
            if c.exceptional:
                assert c.d(c.level) == 0
            else:
                assert c.size == params.multiplier(c.level) * 2 ** (params.n - c.codim)
    for S in forest.sets:
        stages = [e.stage for e in forest.log if e.parent == S.id and e.strategy not in ("remainder",)]
        assert stages == sorted(stages)


def test_all_red_family():
    p = RegimeParams.create(3, 6, 448000)
    f = build_forest(AllRed(448000), p)
    lev = f.level(1)
    assert len(lev) == 448000 // 256 and all(S.size == 256 and S.d(1) == 0 for S in lev)
    assert not any(S.exceptional for S in lev)
    assert all(b.ok and b.measured == 0 for b in check_degree_bounds(AllRed(448000), f, p))


def test_exceptional_parent_is_copied():
    p = RegimeParams.create(4, 3, 64, mode="engineering", multipliers=(4, 2), codim_max=(1, 1))
    f = FamilyForest(3, 4, [LeveledSet(0, np.arange(64), 0, ())])
    f.sets.append(LeveledSet(1, np.arange(10, 40), 1, (0,), True, 0, "remainder"))
    kids = build_family(AllRed(64), f, f.sets[1], 2, p)
    assert len(kids) == 1 and kids[0].exceptional and kids[0].level_codims == (0, 0)
    assert (kids[0].vertices == f.sets[1].vertices).all()


def test_remainder_becomes_exceptional():
    # every pair blue: no red clique of size >= 2 exists at all
    o = ExplicitColoring(np.ones((40, 40), dtype=bool))
    p = RegimeParams.create(3, 2, 40, mode="engineering", multipliers=(1,), codim_max=(1,))
    f = build_forest(o, p)
    assert [S.exceptional for S in f.level(1)][-1]
    check_forest(f, p)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.0, 0.5), st.integers(3, 4))
def test_forest_invariants(seed, p, s):
    N = 160
    o, _ = random_coloring(N, p, seed)
    mults = (2,) if s == 3 else (2, 1)
    params = RegimeParams.create(s, 3, N, mode="engineering", multipliers=mults,
                                 codim_max=(3,) * (s - 2))
    f = build_forest(o, params, FinderOptions(exact_cap=20))
    check_forest(f, params)
    again = FamilyForest.from_dict(f.to_dict())
    assert again.to_dict() == f.to_dict()


def test_degree_check_is_deterministic():
    o = BlueMultipartite(7000 * 8, 2, 0.1, 42)
    p = RegimeParams.create(3, 3, 7000 * 8, mode="engineering")
    f1 = build_forest(o, p)
    f2 = build_forest(o, p)
    assert f1.to_dict() == f2.to_dict()
    r1 = [b.to_dict() for b in check_degree_bounds(o, f1, p)]
    r2 = [b.to_dict() for b in check_degree_bounds(o, f2, p)]
    assert r1 == r2 and all(b["ok"] for b in r1)
