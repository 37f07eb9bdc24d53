"""Leveled blue-clique-free families.

Starting from the root set [N] at level 0, every set S' of level l-1 is carved
into level-l children: for each stage d the finders repeatedly extract a subset
of exact size ``multiplier(l) * 2**(n - d(S') - d)`` inducing no blue K_{s-l}.
A parent that ends up less than half covered contributes its remainder as an
exceptional child.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .coloring import (CapExceeded, ColoringOracle, blue_adjacency_bits, find_blue_clique,
                       is_red_clique)
from .regime import RegimeParams

log = logging.getLogger(__name__)

STRATEGIES = ("a", "b", "c", "d")


class PreprocessError(RuntimeError):
    pass


@dataclass
class LeveledSet:
    id: int
    vertices: np.ndarray
    level: int
    level_codims: tuple[int, ...]
    exceptional: bool = False
    parent: int | None = None
    strategy: str = ""

    @property
    def codim(self) -> int:
        return sum(self.level_codims)

    @property
    def size(self) -> int:
        return len(self.vertices)

    def d(self, level: int) -> int:
        return self.level_codims[level - 1]

    def to_dict(self) -> dict:
        return {"id": self.id, "level": self.level, "level_codims": list(self.level_codims),
                "exceptional": self.exceptional, "parent": self.parent, "strategy": self.strategy,
                "size": self.size, "vertices": compress(self.vertices)}

    @classmethod
    def from_dict(cls, d: dict) -> "LeveledSet":
        return cls(d["id"], expand(d["vertices"]), d["level"], tuple(d["level_codims"]),
                   d["exceptional"], d["parent"], d.get("strategy", ""))


def compress(v: np.ndarray) -> list[list[int]]:
    """Sorted vertex array to a list of half-open ``[lo, hi)`` runs."""
    v = np.asarray(v, dtype=np.int64)
    if len(v) == 0:
        return []
    breaks = np.nonzero(np.diff(v) != 1)[0]
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [len(v) - 1]])
    return [[int(v[a]), int(v[b]) + 1] for a, b in zip(starts, ends)]


def expand(runs: Sequence[Sequence[int]]) -> np.ndarray:
    if not runs:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([np.arange(a, b, dtype=np.int64) for a, b in runs])


@dataclass
class FinderOptions:
    strategies: tuple[str, ...] = STRATEGIES
    exact_cap: int = 64          # pool size limit for branch-and-bound
    verify_cap: int = 2000       # exact blue-K_t verification limit for t = 3, 4
    pivots_per_call: int = 8
    window: int = 512            # block size of the greedy red-clique growth
    node_budget: int = 200_000   # branch-and-bound nodes per call
    scan_budget: int = 50_000_000  # pairs for a full pool degree scan in strategy a
    outside_budget: int = 20_000_000  # pairs per stage for pivots outside the pool

    @classmethod
    def from_dict(cls, d: dict | None) -> "FinderOptions":
        d = dict(d or {})
        if "strategies" in d:
            bad = [x for x in d["strategies"] if x not in STRATEGIES]
            if bad:
                raise ValueError(f"unknown finder strategies {bad}")
            d["strategies"] = tuple(d["strategies"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {"strategies": list(self.strategies), "exact_cap": self.exact_cap,
                "verify_cap": self.verify_cap, "pivots_per_call": self.pivots_per_call,
                "window": self.window, "node_budget": self.node_budget,
                "scan_budget": self.scan_budget, "outside_budget": self.outside_budget}


def has_blue_clique(o: ColoringOracle, S: np.ndarray, t: int, cap: int) -> bool | None:
    """Exact blue K_t test; ``None`` when ``S`` is too large to decide."""
    if len(S) < t:
        return False
    if t == 2:
        return not is_red_clique(o, S)
    if t == 3 and len(S) <= 4 * cap:
        A = o.blue_matrix(S, S).astype(np.float32)
        # A @ A counts common blue neighbours; exact in float32 below 2**24
        return bool(((A @ A) * A).sum() > 0)
    try:
        return find_blue_clique(o, S, t, exact=True, cap=cap).found
    except CapExceeded:
        return None


class FreeSetFinder:
    """Stateful finder over one shrinking pool.

    The state caches blue-degree upper bounds (degrees into a pool only
    shrink) and the blue neighbourhood of the current pivot, so repeated
    extractions from the same pool stay cheap.
    """

    def __init__(self, o: ColoringOracle, t: int, opts: FinderOptions,
                 universe: np.ndarray | None = None):
        self.o = o
        # pivots may come from anywhere in the parent set; the descent argument only
        # needs the parent to be blue-K_{t+1}-free
        self.universe = universe
        self.outside_bound: np.ndarray | None = None
        self.outside_spent = 0
        self.t = t
        self.opts = opts
        self.deg_bound: dict[int, int] = {}
        self.reservoir: np.ndarray | None = None
        self.failed_pivots: set[int] = set()
        self.a_exhausted = False
        self.scanned = False
        self.outside_spent = 0
        self.uncertified = 0

    def reset_stage(self) -> None:
        self.deg_bound.clear()
        self.failed_pivots.clear()
        self.reservoir = None
        self.a_exhausted = False
        self.scanned = False
        self.outside_spent = 0

    def find(self, pool: np.ndarray, m: int) -> tuple[np.ndarray, str] | None:
        if m > len(pool) or m < 1:
            return None
        if m == 1:
            return pool[:1].copy(), "b"
        for strat in self.opts.strategies:
            if strat == "d" and len(pool) > self.opts.exact_cap:
                continue
            res = getattr(self, f"_strategy_{strat}")(pool, m)
            if res is not None:
                return res, strat
        return None

    def _verify(self, S: np.ndarray, by_construction: bool) -> bool:
        r = has_blue_clique(self.o, S, self.t, self.opts.verify_cap)
        if r is None:
            if by_construction:
                self.uncertified += 1
                return True
            return False
        return not r

    # (a) blue-neighbourhood descent
    def _strategy_a(self, pool: np.ndarray, m: int) -> np.ndarray | None:
        # the reservoir is only kept while every extraction came from it, so it lies in the pool
        if self.reservoir is not None:
            r = self.reservoir
            if len(r) >= m:
                cand = r[:m]
                if self._verify(cand, True):
                    self.reservoir = r[m:]
                    return cand
            self.reservoir = None
        if self.a_exhausted:
            return None
        limit = self.opts.pivots_per_call
        if not self.scanned and len(pool) ** 2 <= self.opts.scan_budget:
            # small pool: exact degrees once per stage, later they stay valid upper bounds
            deg = self.o.blue_row_counts(pool, pool)
            self.deg_bound.update(zip(pool.tolist(), deg.tolist()))
            self.scanned = True
        if self.scanned:
            limit = len(pool)
        tried = 0
        for v in pool:
            v = int(v)
            if tried >= limit:
                break
            if v in self.failed_pivots or self.deg_bound.get(v, len(pool)) < m:
                continue
            tried += 1
            nb = pool[self.o.blue_mask(v, pool)]
            self.deg_bound[v] = len(nb)
            if len(nb) < m:
                continue
            cand = nb[:m]
            if self._verify(cand, True):
                self.reservoir = nb[m:]
                return cand
            self.failed_pivots.add(v)
        got = self._outside_pivot(pool, m)
        if got is not None:
            return got
        self.a_exhausted = True
        return None

    def _outside_pivot(self, pool: np.ndarray, m: int) -> np.ndarray | None:
        U = self.universe
        if U is None or len(pool) == 0:
            return None
        if self.outside_bound is None:
            # degrees into the shrinking pool only decrease, so bounds survive across stages
            self.outside_bound = np.full(len(U), np.iinfo(np.int64).max, dtype=np.int64)
        inpool = np.zeros(len(U), dtype=bool)
        inpool[np.searchsorted(U, pool)] = True
        rows = max(1, (1 << 20) // len(pool))
        idx = np.nonzero(~inpool & (self.outside_bound >= m))[0]
        for a in range(0, len(idx), rows):
            if self.outside_spent >= self.opts.outside_budget:
                return None
            blk = idx[a:a + rows]
            deg = self.o.blue_row_counts(U[blk], pool)
            self.outside_spent += len(blk) * len(pool)
            self.outside_bound[blk] = deg
            for j in blk[deg >= m]:
                v = int(U[j])
                if v in self.failed_pivots:
                    continue
                nb = pool[self.o.blue_mask(v, pool)]
                cand = nb[:m]
                if self._verify(cand, True):
                    self.reservoir = nb[m:]
                    return cand
                self.failed_pivots.add(v)
        return None

    # (b) greedy growth in ascending order; it stops as soon as m vertices are chosen
    def _strategy_b(self, pool: np.ndarray, m: int) -> np.ndarray | None:
        return self._greedy(pool, m)

    def _greedy(self, win: np.ndarray, m: int) -> np.ndarray | None:
        o, t = self.o, self.t
        chosen: list[int] = []
        if t == 2:
            # red clique growth, blockwise: reject vertices blue to the clique, then resolve the block
            block = self.opts.window
            clique = np.zeros(0, dtype=np.int64)
            for a in range(0, len(win), block):
                blk = win[a:a + block]
                if len(clique):
                    blk = blk[~o.blue_matrix(blk, clique).any(axis=1)]
                if len(blk) == 0:
                    continue
                B = o.blue_matrix(blk, blk)
                keep = np.zeros(len(blk), dtype=bool)
                for i in range(len(blk)):
                    if not (B[i] & keep).any():
                        keep[i] = True
                        if keep.sum() + len(clique) == m:
                            break
                clique = np.concatenate([clique, blk[keep]])
                if len(clique) >= m:
                    clique = clique[:m]
                    return clique if self._verify(clique, False) else None
            return None
        # t >= 3: keep blue adjacency among chosen vertices as bitsets
        adj: list[int] = []
        for v in win:
            v = int(v)
            if len(chosen):
                mask = o.blue_mask(v, np.asarray(chosen, dtype=np.int64))
                nb = 0
                for i in np.nonzero(mask)[0]:
                    nb |= 1 << int(i)
                if nb and _has_clique(adj, nb, t - 1):
                    continue
            else:
                nb = 0
            k = len(chosen)
            for i in range(k):
                if nb >> i & 1:
                    adj[i] |= 1 << k
            adj.append(nb)
            chosen.append(v)
            if len(chosen) == m:
                cand = np.asarray(chosen, dtype=np.int64)
                return cand if self._verify(cand, False) else None
        return None

    # (c) Erdős–Szekeres walk
    def _strategy_c(self, pool: np.ndarray, m: int) -> np.ndarray | None:
        o, t = self.o, self.t
        red: list[int] = []
        blue = 0
        cand = pool
        while len(red) < m and blue < t:
            if len(cand) == 0:
                return None
            v = int(cand[0])
            rest = cand[1:]
            bm = o.blue_mask(v, rest)
            R, B = rest[~bm], rest[bm]
            a, b = m - len(red), t - blue
            need_red = math.comb(a + b - 3, a - 2) if a >= 2 else 0
            need_blue = math.comb(a + b - 3, a - 1) if b >= 2 else 0
            if len(R) >= need_red or (len(B) < need_blue and len(R) * need_blue >= len(B) * need_red):
                red.append(v)
                cand = R
            else:
                blue += 1
                cand = B
        if len(red) < m:
            return None
        S = np.sort(np.asarray(red, dtype=np.int64))
        return S if self._verify(S, False) else None

    # (d) exact branch-and-bound on small pools
    def _strategy_d(self, pool: np.ndarray, m: int) -> np.ndarray | None:
        try:
            return exact_free_subset(self.o, pool, self.t, m, self.opts.node_budget)
        except SearchBudgetExceeded:
            return None


def _has_clique(adj: list[int], cand: int, t: int) -> bool:
    if t <= 0:
        return True
    while cand:
        if cand.bit_count() < t:
            return False
        v = cand.bit_length() - 1
        cand &= ~(1 << v)
        if t == 1 or _has_clique(adj, cand & adj[v], t - 1):
            return True
    return False


class SearchBudgetExceeded(RuntimeError):
    pass


def exact_free_subset(o: ColoringOracle, pool: Sequence[int], t: int, m: int,
                      node_budget: int | None = None) -> np.ndarray | None:
    """Lexicographically first m-subset of ``pool`` with no blue K_t, or None if none exists.

    Branch-and-bound over the set of vertices that can still be added without
    closing a blue K_t; raises ``SearchBudgetExceeded`` past ``node_budget`` nodes.
    """
    pool = np.asarray(pool, dtype=np.int64)
    k = len(pool)
    if m > k:
        return None
    adj = blue_adjacency_bits(o, pool)
    full = (1 << k) - 1
    chosen: list[int] = []
    nodes = 0

    def addable(mask: int, cand: int, j: int) -> int:
        if t == 2:
            return cand & ~adj[j]
        # only vertices blue to j can lose addability
        out = cand
        risky = cand & adj[j]
        while risky:
            u = (risky & -risky).bit_length() - 1
            risky &= risky - 1
            if _has_clique(adj, adj[u] & mask, t - 1):
                out &= ~(1 << u)
        return out

    def rec(mask: int, cand: int) -> bool:
        nonlocal nodes
        nodes += 1
        if node_budget is not None and nodes > node_budget:
            raise SearchBudgetExceeded(f"more than {node_budget} nodes")
        if len(chosen) == m:
            return True
        while cand:
            if len(chosen) + cand.bit_count() < m:
                return False
            j = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            chosen.append(j)
            nmask = mask | (1 << j)
            if rec(nmask, addable(nmask, cand, j)):
                return True
            chosen.pop()
        return False

    if rec(0, full):
        return pool[chosen]
    return None


def find_free_subset(o: ColoringOracle, pool: Sequence[int], t: int, m: int,
                     strategy: str | Sequence[str] = STRATEGIES,
                     opts: FinderOptions | None = None) -> np.ndarray | None:
    """An m-subset of ``pool`` inducing no blue K_t, or None.

    None is a certificate of absence only for strategy ``d``.
    """
    if t < 2:
        raise ValueError("t must be at least 2")
    pool = np.sort(np.asarray(pool, dtype=np.int64))
    if m > len(pool):
        raise ValueError(f"m={m} exceeds pool size {len(pool)}")
    opts = opts or FinderOptions()
    strategies = (strategy,) if isinstance(strategy, str) else tuple(strategy)
    opts = FinderOptions(**{**opts.to_dict(), "strategies": strategies})
    if "d" in strategies and len(strategies) == 1:
        return exact_free_subset(o, pool, t, m)
    res = FreeSetFinder(o, t, opts).find(pool, m)
    return None if res is None else res[0]


@dataclass
class Extraction:
    set_id: int
    parent: int
    stage: int
    strategy: str


@dataclass
class FamilyForest:
    n: int
    s: int
    sets: list[LeveledSet] = field(default_factory=list)
    log: list[Extraction] = field(default_factory=list)
    uncertified: int = 0

    @property
    def root(self) -> LeveledSet:
        return self.sets[0]

    def level(self, level: int) -> list[LeveledSet]:
        return [S for S in self.sets if S.level == level]

    def children(self, sid: int) -> list[LeveledSet]:
        return [S for S in self.sets if S.parent == sid]

    def children_map(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {S.id: [] for S in self.sets}
        for S in self.sets:
            if S.parent is not None:
                out[S.parent].append(S.id)
        return out

    def stats(self) -> dict:
        out = {}
        for lev in range(self.s - 1):
            sets = self.level(lev)
            hist: dict[int, int] = {}
            for S in sets:
                if lev:
                    hist[S.d(lev)] = hist.get(S.d(lev), 0) + 1
            out[str(lev)] = {"count": len(sets), "exceptional": sum(S.exceptional for S in sets),
                             "mass": int(sum(S.size for S in sets)),
                             "codim_histogram": {str(k): v for k, v in sorted(hist.items())}}
        return {"levels": out, "uncertified_sets": self.uncertified}

    def to_dict(self) -> dict:
        return {"n": self.n, "s": self.s, "sets": [S.to_dict() for S in self.sets],
                "log": [[e.set_id, e.parent, e.stage, e.strategy] for e in self.log],
                "uncertified": self.uncertified}

    @classmethod
    def from_dict(cls, d: dict) -> "FamilyForest":
        f = cls(d["n"], d["s"], [LeveledSet.from_dict(x) for x in d["sets"]],
                [Extraction(*e) for e in d["log"]], d.get("uncertified", 0))
        return f

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FamilyForest":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_family(o: ColoringOracle, forest: FamilyForest, parent: LeveledSet, level: int,
                 params: RegimeParams, opts: FinderOptions | None = None) -> list[LeveledSet]:
    """Carve ``parent`` into level-``level`` children and append them to ``forest``."""
    if parent.level != level - 1 or not 1 <= level <= params.top:
        raise PreprocessError(f"cannot build level {level} under a level-{parent.level} set")
    opts = opts or FinderOptions()

    def new(vertices, d, exceptional, strategy) -> LeveledSet:
        S = LeveledSet(len(forest.sets), np.asarray(vertices, dtype=np.int64), level,
                       parent.level_codims + (d,), exceptional, parent.id, strategy)
        forest.sets.append(S)
        forest.log.append(Extraction(S.id, parent.id, d, strategy))
        return S

    if parent.exceptional:
        return [new(parent.vertices.copy(), 0, True, "copy")]

    t = params.s - level
    pool = np.sort(parent.vertices)
    alive = np.zeros(o.N, dtype=bool)
    alive[pool] = True
    finder = FreeSetFinder(o, t, opts, universe=pool)
    out = []
    for d in range(params.codim_limit(level) + 1):
        e = params.n - parent.codim - d
        if e < 0:
            break
        m = params.multiplier(level) * 2 ** e
        finder.reset_stage()
        while len(pool) >= m:
            try:
                res = finder.find(pool, m)
            except Exception as exc:  # pragma: no cover - propagated with context
                raise PreprocessError(f"finder failed at level {level}, parent {parent.id}, "
                                      f"stage {d}: {exc}") from exc
            if res is None:
                break
            S, strat = res
            if strat != "a":
                finder.reservoir = None
            S = np.sort(S)
            out.append(new(S, d, False, strat))
            alive[S] = False
            pool = pool[alive[pool]]
    forest.uncertified += finder.uncertified
    mass = sum(S.size for S in out)
    if 2 * mass < parent.size:
        out.append(new(pool, 0, True, "remainder"))
    return out


def build_forest(o: ColoringOracle, params: RegimeParams,
                 opts: FinderOptions | None = None) -> FamilyForest:
    forest = FamilyForest(params.n, params.s)
    forest.sets.append(LeveledSet(0, np.arange(params.N, dtype=np.int64), 0, ()))
    if o.N != params.N:
        raise PreprocessError(f"oracle has N={o.N} but regime says N={params.N}")
    for level in range(1, params.top + 1):
        for parent in forest.level(level - 1):
            kids = build_family(o, forest, parent, level, params, opts)
            log.debug("level %d parent %d: %d children", level, parent.id, len(kids))
    return forest


# diagnostics -------------------------------------------------------------

@dataclass
class BoundCheck:
    name: str
    level: int
    set_id: int
    i: int
    measured: int
    bound: str
    ok: bool
    exact: bool
    witness: int | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _sample_rows(rows: np.ndarray, width: int, budget: int) -> tuple[np.ndarray, bool]:
    if width == 0 or len(rows) * width <= budget:
        return rows, True
    k = max(1, budget // width)
    idx = np.linspace(0, len(rows) - 1, k).astype(np.int64)
    return rows[np.unique(idx)], False


def _max_degree(o: ColoringOracle, rows: np.ndarray, cols: np.ndarray) -> tuple[int, int | None]:
    if len(rows) == 0 or len(cols) == 0:
        return 0, None
    deg = o.blue_row_counts(rows, cols)
    j = int(np.argmax(deg))
    return int(deg[j]), int(rows[j])


def check_degree_bounds(o: ColoringOracle, forest: FamilyForest, params: RegimeParams,
                        pair_budget: int = 20_000_000) -> list[BoundCheck]:
    """Measure the cross-degree and internal-degree bounds of a built forest.

    Checks whose pair count exceeds ``pair_budget`` are run on an evenly
    spaced sample of rows and reported with ``exact=False``.
    """
    out: list[BoundCheck] = []
    kids = forest.children_map()
    for P in forest.sets:
        if P.level >= params.top:
            continue
        children = [forest.sets[c] for c in kids[P.id]]
        level = P.level + 1
        top_i = max((c.d(level) for c in children), default=0)
        for i in range(1, top_i + 1):
            X = [c.vertices for c in children if c.d(level) >= i]
            X = np.sort(np.concatenate(X)) if X else np.zeros(0, dtype=np.int64)
            rows, exact = _sample_rows(P.vertices, len(X), pair_budget)
            meas, wit = _max_degree(o, rows, X)
            bound = params.cross_degree_bound(level, P.codim, i)
            out.append(BoundCheck("cross-degree", level, P.id, i, meas, str(bound), meas <= bound,
                                  exact, wit))
    top = forest.level(params.top)
    total = sum(S.size ** 2 for S in top)
    scale = min(1.0, pair_budget / total) if total else 1.0
    for S in top:
        rows, exact = _sample_rows(S.vertices, S.size, int(S.size ** 2 * scale))
        meas, wit = _max_degree(o, rows, S.vertices)
        bound = params.internal_degree_bound(S.codim)
        out.append(BoundCheck("internal-degree", S.level, S.id, 0, meas, str(bound), meas <= bound,
                              exact, wit))
    return out
