"""Special subcubes of the hypercube and leveled tilings built from them.

A vertex of Q_n is the integer ``sum(a_i * 2**(n - i))``, so coordinate a_1
is the most significant bit.  A special cube fixes a prefix a_1..a_d and is
therefore the contiguous index interval ``[p * 2**(n-d), (p + 1) * 2**(n-d))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

import numpy as np


class CubeError(ValueError):
    pass


class Relation(str, Enum):
    NESTED = "nested"
    ADJACENT = "adjacent"
    NONADJACENT = "nonadjacent"


@dataclass(frozen=True, order=True)
class SpecialCube:
    n: int
    codim: int
    prefix: int = 0

    def __post_init__(self):
        if self.n < 0 or not 0 <= self.codim <= self.n:
            raise CubeError(f"codimension {self.codim} out of range for n={self.n}")
        if not 0 <= self.prefix < (1 << self.codim):
            raise CubeError(f"prefix {self.prefix} does not fit in {self.codim} bits")

    @classmethod
    def whole(cls, n: int) -> "SpecialCube":
        return cls(n, 0, 0)

    @classmethod
    def from_bits(cls, n: int, bits: Sequence[int]) -> "SpecialCube":
        p = 0
        for b in bits:
            if b not in (0, 1):
                raise CubeError(f"bad bit {b!r}")
            p = (p << 1) | b
        return cls(n, len(bits), p)

    @classmethod
    def parse(cls, text: str) -> "SpecialCube":
        """Parse the ``01**`` notation; stars must form a suffix."""
        text = text.strip()
        head = text.rstrip("*")
        if "*" in head or any(ch not in "01" for ch in head):
            raise CubeError(f"not a special cube: {text!r}")
        return cls.from_bits(len(text), [int(ch) for ch in head])

    @classmethod
    def containing(cls, n: int, vertex: int, codim: int) -> "SpecialCube":
        return cls(n, codim, vertex >> (n - codim))

    def __str__(self) -> str:
        head = format(self.prefix, f"0{self.codim}b") if self.codim else ""
        return head + "*" * (self.n - self.codim)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.prefix >> (self.codim - 1 - i)) & 1 for i in range(self.codim))

    @property
    def size(self) -> int:
        return 1 << (self.n - self.codim)

    @property
    def lo(self) -> int:
        return self.prefix << (self.n - self.codim)

    @property
    def hi(self) -> int:
        return (self.prefix + 1) << (self.n - self.codim)

    def truncate(self, d: int) -> "SpecialCube":
        if not 0 <= d <= self.codim:
            raise CubeError(f"cannot truncate codim {self.codim} cube to {d}")
        return SpecialCube(self.n, d, self.prefix >> (self.codim - d))

    def has_vertex(self, x: int) -> bool:
        return self.lo <= x < self.hi


def _same_dim(c1: SpecialCube, c2: SpecialCube) -> None:
    if c1.n != c2.n:
        raise CubeError(f"dimension mismatch: {c1.n} vs {c2.n}")


def contains(c: SpecialCube, c2: SpecialCube) -> bool:
    """True iff ``c2`` is a subcube of ``c`` (its prefix extends ``c``'s)."""
    _same_dim(c, c2)
    return c2.codim >= c.codim and (c2.prefix >> (c2.codim - c.codim)) == c.prefix


def relation(c: SpecialCube, c2: SpecialCube) -> Relation:
    _same_dim(c, c2)
    if contains(c, c2) or contains(c2, c):
        return Relation.NESTED
    d = min(c.codim, c2.codim)
    diff = (c.prefix >> (c.codim - d)) ^ (c2.prefix >> (c2.codim - d))
    return Relation.ADJACENT if diff & (diff - 1) == 0 else Relation.NONADJACENT


def enumerate_vertices(c: SpecialCube) -> Iterator[int]:
    return iter(range(c.lo, c.hi))


def hypercube_edges(n: int) -> np.ndarray:
    """All ``n * 2**(n-1)`` edges of Q_n as rows ``(x, y)`` with ``x < y``, sorted."""
    xs = np.arange(1 << n, dtype=np.int64)
    rows = []
    for k in range(n):
        low = xs[(xs >> k) & 1 == 0]
        rows.append(np.stack([low, low | (1 << k)], axis=1))
    if not rows:
        return np.zeros((0, 2), dtype=np.int64)
    edges = np.concatenate(rows)
    return edges[np.lexsort((edges[:, 1], edges[:, 0]))]


@dataclass(frozen=True, order=True)
class LeveledCube:
    """A special cube placed at some level of a multi-tiling.

    ``level_codims[i]`` is the (i+1)-codimension; their sum is the codimension.
    """

    cube: SpecialCube
    level: int
    level_codims: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.level_codims) != self.level:
            raise CubeError(f"level {self.level} needs {self.level} level codims")
        if any(d < 0 for d in self.level_codims) or sum(self.level_codims) != self.cube.codim:
            raise CubeError(f"level codims {self.level_codims} do not sum to {self.cube.codim}")

    @property
    def codim(self) -> int:
        return self.cube.codim

    def d(self, rho: int) -> int:
        """The rho-codimension."""
        if not 1 <= rho <= self.level:
            raise CubeError(f"rho={rho} out of range for level {self.level}")
        return self.level_codims[rho - 1]

    def depth(self, level: int) -> int:
        """Prefix length of the level-``level`` ancestor."""
        return sum(self.level_codims[:level])

    def ancestor_cube(self, level: int) -> SpecialCube:
        if not 0 <= level <= self.level:
            raise CubeError(f"no level-{level} ancestor for a level-{self.level} cube")
        return self.cube.truncate(self.depth(level))

    def __str__(self) -> str:
        return f"L{self.level}:{self.cube}"


class MultiTiling:
    """Up to ``s - 1`` successively refining tilings of Q_n, filled incrementally."""

    def __init__(self, n: int, s: int, check_order: bool = True):
        if s < 2:
            raise CubeError("need s >= 2")
        self.n = n
        self.s = s
        self.check_order = check_order
        self.cubes: list[LeveledCube] = []
        self.insertion_log: list[tuple[int, int]] = []  # (cube id, codim at insertion)
        self._index: list[dict[tuple[int, int], int]] = [{} for _ in range(s - 1)]
        self._ids: dict[LeveledCube, int] = {}
        self._cover = np.zeros((s - 1, 1 << n), dtype=np.uint8)

    @property
    def nlevels(self) -> int:
        return self.s - 1

    def level_ids(self, level: int) -> list[int]:
        return [i for i, c in enumerate(self.cubes) if c.level == level]

    def id_of(self, c: LeveledCube) -> int | None:
        return self._ids.get(c)

    def lookup(self, level: int, cube: SpecialCube) -> int | None:
        return self._index[level].get((cube.codim, cube.prefix))

    def containing(self, level: int, vertex: int) -> int | None:
        idx = self._index[level]
        for d in range(self.n + 1):
            cid = idx.get((d, vertex >> (self.n - d)))
            if cid is not None:
                return cid
        return None

    def check_addable(self, c: LeveledCube) -> None:
        if c.cube.n != self.n:
            raise CubeError("dimension mismatch")
        if not 0 <= c.level < self.nlevels:
            raise CubeError(f"level {c.level} outside 0..{self.nlevels - 1}")
        if c.level == 0 and c.codim != 0:
            raise CubeError("level 0 holds only the whole cube")
        if self._cover[c.level, c.cube.lo:c.cube.hi].any():
            raise CubeError(f"{c} intersects a level-{c.level} cube")
        if c.level >= 1:
            parent = c.ancestor_cube(c.level - 1)
            pid = self.lookup(c.level - 1, parent)
            if pid is None:
                raise CubeError(f"{c} has no level-{c.level - 1} parent {parent}")
            pc = self.cubes[pid]
            if pc.level_codims != c.level_codims[:-1]:
                raise CubeError(f"{c} level codims disagree with parent {pc}")
        if self.check_order and self.insertion_log and c.codim < self.insertion_log[-1][1]:
            raise CubeError(
                f"insertion codim {c.codim} below previous {self.insertion_log[-1][1]}")

    def add(self, c: LeveledCube) -> int:
        self.check_addable(c)
        cid = len(self.cubes)
        self.cubes.append(c)
        self._ids[c] = cid
        self._index[c.level][(c.codim, c.cube.prefix)] = cid
        self._cover[c.level, c.cube.lo:c.cube.hi] = 1
        self.insertion_log.append((cid, c.codim))
        return cid

    def coverage(self) -> np.ndarray:
        """Number of levels covering each vertex of Q_n."""
        return self._cover.sum(axis=0, dtype=np.int64)

    def level_complete(self, level: int) -> bool:
        return bool(self._cover[level].all())

    def complete(self) -> bool:
        return bool(self._cover.all())

    def parent_id(self, cid: int) -> int | None:
        c = self.cubes[cid]
        if c.level == 0:
            return None
        return self.lookup(c.level - 1, c.ancestor_cube(c.level - 1))

    def ancestor(self, c: LeveledCube, level: int) -> SpecialCube:
        """The level-``level`` cube containing ``c``, resolved by prefix truncation."""
        if level == c.level:
            return c.cube
        anc = c.ancestor_cube(level)
        if self.lookup(level, anc) is None:
            raise CubeError(f"ancestry of {c} at level {level} not present in tiling")
        return anc

    def adjacent_ids(self, c: LeveledCube, max_codim: int) -> list[int]:
        """Ids of cubes adjacent to ``c`` with codimension at most ``max_codim``."""
        found: set[int] = set()
        n, d, p = self.n, c.codim, c.cube.prefix
        top = min(max_codim, d)
        for j in range(d):  # flip bit j (0-based from the front)
            q = p ^ (1 << (d - 1 - j))
            for dd in range(j + 1, top + 1):
                key = (dd, q >> (d - dd))
                for idx in self._index:
                    cid = idx.get(key)
                    if cid is not None:
                        found.add(cid)
        if max_codim > d:
            for cid, other in enumerate(self.cubes):
                if d < other.codim <= max_codim and relation(c.cube, other.cube) is Relation.ADJACENT:
                    found.add(cid)
        found.discard(self._ids.get(c, -1))
        return sorted(found)


def adjacent_cubes(t: MultiTiling, c: LeveledCube, max_codim: int) -> list[LeveledCube]:
    return [t.cubes[i] for i in t.adjacent_ids(c, max_codim)]


def level_of_adjacency(t: MultiTiling | None, c: LeveledCube, c2: LeveledCube) -> int:
    """Smallest level at which the ancestors of two adjacent cubes differ."""
    if relation(c.cube, c2.cube) is not Relation.ADJACENT:
        raise CubeError(f"{c} and {c2} are not adjacent")
    for rho in range(1, min(c.level, c2.level) + 1):
        if t is not None:
            a, b = t.ancestor(c, rho), t.ancestor(c2, rho)
        else:
            a, b = c.ancestor_cube(rho), c2.ancestor_cube(rho)
        if a != b:
            return rho
    raise CubeError(f"ancestors of {c} and {c2} never differ")


def dominating_parameter(c: LeveledCube, c2: LeveledCube, rho: int) -> int:
    if not 1 <= rho <= min(c.level, c2.level):
        raise CubeError(f"rho={rho} out of range")
    return max(c.d(rho), c2.d(rho))


@dataclass
class AdjacencyViolation:
    cube: str
    rho: int
    level: int
    count: int
    bound: int


def check_adjacency_bounds(t: MultiTiling) -> list[AdjacencyViolation]:
    """Per (rho, level') adjacency counts against the rho-codimension of each cube."""
    out = []
    for c in t.cubes:
        counts: dict[tuple[int, int], int] = {}
        for cid in t.adjacent_ids(c, c.codim):
            other = t.cubes[cid]
            rho = level_of_adjacency(t, c, other)
            counts[rho, other.level] = counts.get((rho, other.level), 0) + 1
        for (rho, lev), k in sorted(counts.items()):
            if rho > c.level or k > c.d(rho):
                out.append(AdjacencyViolation(str(c), rho, lev, k, c.d(rho) if rho <= c.level else 0))
    return out


def random_multitiling(n: int, s: int, rng: np.random.Generator,
                       split_prob: float = 0.45) -> MultiTiling:
    """A random complete (s-1)-fold tiling, inserted in codimension order."""
    levels: list[list[LeveledCube]] = [[LeveledCube(SpecialCube.whole(n), 0, ())]]
    for lev in range(1, s - 1):
        nxt = []
        for parent in levels[-1]:
            stack = [parent.cube]
            while stack:
                cube = stack.pop()
                if cube.codim < n and rng.random() < split_prob:
                    stack.append(SpecialCube(n, cube.codim + 1, cube.prefix << 1 | 1))
                    stack.append(SpecialCube(n, cube.codim + 1, cube.prefix << 1))
                else:
                    nxt.append(LeveledCube(cube, lev, parent.level_codims + (cube.codim - parent.codim,)))
        levels.append(nxt)
    t = MultiTiling(n, s)
    for c in sorted((c for lv in levels for c in lv), key=lambda c: (c.codim, c.level, c.cube.prefix)):
        t.add(c)
    return t
