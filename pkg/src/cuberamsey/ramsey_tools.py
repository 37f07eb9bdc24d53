"""Small exact Ramsey computations, lower-bound certificates and the sum bounds
behind the tiling counting argument."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .coloring import LowerBoundColoring, is_red_clique
from .cubes import hypercube_edges

MAX_EXHAUSTIVE_N = 8
MAX_PATTERN = 8


class InstanceTooLarge(ValueError):
    pass


# patterns -------------------------------------------------------------------

@dataclass(frozen=True)
class Pattern:
    name: str
    k: int
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def cube(cls, n: int) -> "Pattern":
        if (1 << n) > MAX_PATTERN:
            raise InstanceTooLarge(f"Q_{n} has more than {MAX_PATTERN} vertices")
        return cls(f"Q{n}", 1 << n, tuple((int(a), int(b)) for a, b in hypercube_edges(n)))

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        """``Q<n>`` or ``k:a-b,c-d,...``."""
        if text.upper().startswith("Q"):
            return cls.cube(int(text[1:]))
        k, _, rest = text.partition(":")
        edges = tuple(tuple(sorted(map(int, e.split("-")))) for e in rest.split(",") if e)
        p = cls(text, int(k), edges)  # type: ignore[arg-type]
        if p.k > MAX_PATTERN or any(not 0 <= a < b < p.k for a, b in edges):
            raise InstanceTooLarge(f"bad pattern {text!r}")
        return p

    def is_c4(self) -> bool:
        if self.k != 4 or len(self.edges) != 4:
            return False
        deg = [0] * 4
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return all(d == 2 for d in deg)


def contains_pattern(adj: Sequence[int], pattern: Pattern, through: tuple[int, int] | None = None) -> bool:
    """Backtracking subgraph search in a host given by bitset adjacency.

    With ``through=(u, v)`` only copies using the host edge uv are searched.
    """
    N = len(adj)
    k = pattern.k
    padj = [0] * k
    for a, b in pattern.edges:
        padj[a] |= 1 << b
        padj[b] |= 1 << a
    # order pattern vertices so each one (after the first) has an earlier neighbour when possible
    order = [0]
    if through is not None and pattern.edges:
        a0, b0 = pattern.edges[0]
        order = [a0, b0]
    while len(order) < k:
        rest = [v for v in range(k) if v not in order]
        rest.sort(key=lambda v: -bin(padj[v] & sum(1 << u for u in order)).count("1"))
        order.append(rest[0])
    img = [-1] * k

    def rec(pos: int, used: int) -> bool:
        if pos == k:
            return True
        p = order[pos]
        cand = (1 << N) - 1 & ~used
        for q in order[:pos]:
            if padj[p] >> q & 1:
                cand &= adj[img[q]]
        while cand:
            h = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            img[p] = h
            if rec(pos + 1, used | 1 << h):
                return True
        img[p] = -1
        return False

    if through is None:
        return rec(0, 0)
    u, v = through
    for x, y in ((u, v), (v, u)):
        img[order[0]], img[order[1]] = x, y
        if rec(2, 1 << x | 1 << y):
            return True
    return False


def has_c4(adj: Sequence[int]) -> bool:
    """C4 exists iff two vertices share at least two neighbours."""
    N = len(adj)
    for a in range(N):
        for b in range(a + 1, N):
            if (adj[a] & adj[b]).bit_count() >= 2:
                return True
    return False


def has_clique(adj: Sequence[int], t: int) -> bool:
    def rec(cand: int, t: int) -> bool:
        if t == 0:
            return True
        while cand:
            if cand.bit_count() < t:
                return False
            v = cand.bit_length() - 1
            cand &= ~(1 << v)
            if rec(cand & adj[v], t - 1):
                return True
        return False

    return rec((1 << len(adj)) - 1, t)


# exhaustive search ------------------------------------------------------------

@dataclass
class ArrowResult:
    pattern: str
    s: int
    N: int
    arrows: bool
    witness_red_edges: list[tuple[int, int]] | None = None
    nodes: int = 0

    def to_dict(self) -> dict:
        return {"pattern": self.pattern, "s": self.s, "N": self.N, "arrows": self.arrows,
                "witness_red_edges": [list(e) for e in self.witness_red_edges]
                if self.witness_red_edges is not None else None,
                "nodes": self.nodes}


def brute_force_arrow(pattern: Pattern | str, s: int, N: int, c4_scan: bool = True) -> ArrowResult:
    """Decide whether every red/blue colouring of K_N has a red ``pattern`` or a blue K_s.

    Depth-first search over edges in colex order, pruning as soon as the
    partial colouring contains either forbidden structure.  The red
    neighbourhood of vertex 0 is forced to be an initial segment, which loses
    no colouring up to relabelling.
    """
    if isinstance(pattern, str):
        pattern = Pattern.parse(pattern)
    if N > MAX_EXHAUSTIVE_N:
        raise InstanceTooLarge(f"exhaustive search limited to N <= {MAX_EXHAUSTIVE_N}")
    if s < 2:
        raise ValueError("s must be at least 2")
    edges = [(i, j) for j in range(N) for i in range(j)]
    red = [0] * N
    blue = [0] * N
    c4 = c4_scan and pattern.is_c4()
    nodes = 0

    def red_ok(i: int, j: int) -> bool:
        if c4:
            # a new C4 through ij needs a in N(i) \ {j}, b in N(j) \ {i}, a ~ b
            ni = red[i] & ~(1 << j)
            nj = red[j] & ~(1 << i)
            while ni:
                a = (ni & -ni).bit_length() - 1
                ni &= ni - 1
                if red[a] & nj & ~(1 << a):
                    return False
            return True
        return not contains_pattern(red, pattern, (i, j))

    def blue_ok(i: int, j: int) -> bool:
        if s == 2:
            return False
        return not has_clique_in(blue[i] & blue[j], s - 2)

    def has_clique_in(cand: int, t: int) -> bool:
        if t == 0:
            return True
        while cand:
            if cand.bit_count() < t:
                return False
            v = cand.bit_length() - 1
            cand &= ~(1 << v)
            if has_clique_in(cand & blue[v], t - 1):
                return True
        return False

    def rec(e: int) -> bool:
        nonlocal nodes
        nodes += 1
        if e == len(edges):
            return True
        i, j = edges[e]
        # red first
        if not (i == 0 and j > 1 and not red[0] >> (j - 1) & 1):
            red[i] |= 1 << j
            red[j] |= 1 << i
            if red_ok(i, j) and rec(e + 1):
                return True
            red[i] &= ~(1 << j)
            red[j] &= ~(1 << i)
        blue[i] |= 1 << j
        blue[j] |= 1 << i
        if blue_ok(i, j) and rec(e + 1):
            return True
        blue[i] &= ~(1 << j)
        blue[j] &= ~(1 << i)
        return False

    if N >= 1 and rec(0):
        wit = [(i, j) for (i, j) in edges if red[i] >> j & 1]
        return ArrowResult(pattern.name, s, N, False, wit, nodes)
    if N == 0:
        return ArrowResult(pattern.name, s, N, False, [], 1)
    return ArrowResult(pattern.name, s, N, True, None, nodes)


def check_witness(pattern: Pattern, s: int, N: int, red_edges) -> bool:
    """Independent check that a colouring avoids a red pattern and a blue K_s."""
    red = [0] * N
    for a, b in red_edges:
        red[a] |= 1 << b
        red[b] |= 1 << a
    full = (1 << N) - 1
    blue = [full & ~red[v] & ~(1 << v) for v in range(N)]
    return not contains_pattern(red, pattern) and not has_clique(blue, s)


def ramsey_number(pattern: Pattern | str, s: int, start: int = 1) -> int:
    if isinstance(pattern, str):
        pattern = Pattern.parse(pattern)
    N = start
    while not brute_force_arrow(pattern, s, N).arrows:
        N += 1
    return N


# lower-bound certificates ------------------------------------------------------

@dataclass
class LowerBoundCertificate:
    s: int
    n: int
    N: int
    blocks: int
    no_blue_clique: bool
    max_red_component: int
    no_red_cube: bool

    @property
    def valid(self) -> bool:
        return self.no_blue_clique and self.no_red_cube

    def to_dict(self) -> dict:
        return {**self.__dict__, "valid": self.valid}


def red_components(o) -> np.ndarray:
    """Component labels of the red graph of an explicit-size oracle."""
    vs = np.arange(o.N, dtype=np.int64)
    rows, cols = [], []
    step = max(1, (1 << 22) // max(o.N, 1))
    for a in range(0, o.N, step):
        blk = vs[a:a + step]
        red = ~o.blue_matrix(blk, vs)
        red[np.arange(len(blk)), blk] = False
        r, c = np.nonzero(red)
        rows.append(blk[r])
        cols.append(c)
    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    g = csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(o.N, o.N))
    return connected_components(g, directed=False)[1]


def lower_bound_certificate(s: int, n: int) -> LowerBoundCertificate:
    """Check that s-1 red cliques of size 2^n - 1, blue between, avoid both targets."""
    if s < 3 or n < 1:
        raise ValueError("need s >= 3 and n >= 1")
    m = (1 << n) - 1
    o = LowerBoundColoring(s, m)
    # every block red => the blue graph is (s-1)-partite => no blue K_s
    blocks_red = all(is_red_clique(o, np.arange(b * m, (b + 1) * m)) for b in range(s - 1))
    labels = red_components(o)
    biggest = int(np.bincount(labels).max()) if o.N else 0
    return LowerBoundCertificate(s, n, o.N, s - 1, blocks_red, biggest, biggest < (1 << n))


# sums of i^s / 2^i --------------------------------------------------------------

@lru_cache(maxsize=None)
def stirling(t: int, k: int) -> int:
    """Stirling number of the second kind."""
    if t < 0 or not 0 <= k <= t:
        raise ValueError(f"stirling({t}, {k}) outside 0 <= k <= t")
    if t == k:
        return 1
    if k == 0:
        return 0
    return k * stirling(t - 1, k) + (stirling(t - 1, k - 1) if k - 1 <= t - 1 else 0)


def falling_factorial(x: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= x - i
    return out


def surjections(s: int) -> int:
    """T_s = sum_k k! S(s, k), the number of ordered set partitions of an s-set."""
    return sum(math.factorial(k) * stirling(s, k) for k in range(s + 1))


def _tail_start(s: int) -> int:
    # i^s <= (4/3)^i from here on, since s*ln(i) - i*ln(4/3) decreases past s/ln(4/3)
    i = max(1, math.ceil(s / math.log(4 / 3)))
    while 3 ** i * i ** s > 4 ** i:
        i += 1
    return i


def power_sum_by_truncation(s: int) -> tuple[int, Fraction, Fraction]:
    """Sum of i^s/2^i over i >= 1 via an exact partial sum plus a (2/3)^i tail majorant."""
    i0 = _tail_start(s)
    I = i0
    while 3 * Fraction(2, 3) ** (I + 1) >= Fraction(1, 2):
        I += 1
    partial = sum(Fraction(i ** s, 2 ** i) for i in range(1, I + 1))
    tail = 3 * Fraction(2, 3) ** (I + 1)
    lo = math.floor(partial) + 1
    hi = math.floor(partial + tail)
    if lo != hi:
        raise ArithmeticError(f"truncation does not isolate an integer for s={s}")
    return lo, partial, tail


def power_sum_by_stirling(s: int) -> int:
    return 2 * surjections(s)


def power_sum_by_double_sum(s: int) -> int:
    return 2 * sum((-1) ** (k - j) * math.comb(k, j) * j ** s
                   for k in range(s + 1) for j in range(k + 1))


@dataclass
class SumBounds:
    s: int
    partial_sum: str
    tail_bound: str
    by_truncation: int
    by_stirling: int
    by_double_sum: int
    bound: int
    surjections: int

    @property
    def agree(self) -> bool:
        return self.by_truncation == self.by_stirling == self.by_double_sum

    @property
    def within_bound(self) -> bool:
        return self.by_stirling <= self.bound

    @property
    def value(self) -> int:
        return self.by_stirling

    def to_dict(self) -> dict:
        return {**self.__dict__, "agree": self.agree, "within_bound": self.within_bound,
                "surjections_le_s_pow_s": self.surjections <= self.s ** self.s}


def power_sum_bounds(s: int) -> SumBounds:
    """X_s = sum_{i>=1} i^s / 2^i computed three ways, with the bound 2 s^s."""
    if not 1 <= s <= 20:
        raise ValueError("s must lie in 1..20")
    trunc, partial, tail = power_sum_by_truncation(s)
    return SumBounds(s, str(partial), str(tail), trunc, power_sum_by_stirling(s),
                     power_sum_by_double_sum(s), 2 * s ** s, surjections(s))
