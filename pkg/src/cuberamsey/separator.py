"""Degeneracy, separator validation and recursive balanced decomposition."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence


class SeparatorError(ValueError):
    pass


@dataclass
class SimpleGraph:
    n: int
    adj: list[set[int]]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "SimpleGraph":
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise SeparatorError(f"loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise SeparatorError(f"edge ({u}, {v}) outside 0..{n - 1}")
            adj[u].add(v)
            adj[v].add(u)
        return cls(n, adj)

    @classmethod
    def path(cls, n: int) -> "SimpleGraph":
        return cls.from_edges(n, ((i, i + 1) for i in range(n - 1)))

    @classmethod
    def complete(cls, n: int) -> "SimpleGraph":
        return cls.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def grid(cls, rows: int, cols: int | None = None) -> "SimpleGraph":
        """Vertex r*cols + c sits at row r, column c."""
        cols = rows if cols is None else cols
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        g = cls.from_edges(rows * cols, edges)
        g.shape = (rows, cols)  # type: ignore[attr-defined]
        return g

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u in range(self.n) for v in self.adj[u] if u < v)

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def induced(self, vertices: Sequence[int]) -> "SimpleGraph":
        idx = {v: i for i, v in enumerate(vertices)}
        return SimpleGraph.from_edges(len(vertices), ((idx[u], idx[v]) for u in vertices
                                                      for v in self.adj[u] if v in idx and u < v))

    def dumps(self) -> str:
        e = self.edges()
        return "\n".join([f"{self.n} {len(e)}"] + [f"{u} {v}" for u, v in e]) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SimpleGraph":
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines:
            raise SeparatorError("empty graph file")
        n, m = map(int, lines[0])
        edges = [(int(a), int(b)) for a, b in lines[1:]]
        if len(edges) != m:
            raise SeparatorError(f"header says {m} edges, found {len(edges)}")
        return cls.from_edges(n, edges)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "SimpleGraph":
        return cls.loads(Path(path).read_text())


def degeneracy(G: SimpleGraph) -> tuple[int, list[int]]:
    """Smallest d such that every subgraph has a vertex of degree <= d, with an elimination order."""
    deg = [len(a) for a in G.adj]
    buckets: list[set[int]] = [set() for _ in range(max(deg, default=0) + 1)]
    for v, d in enumerate(deg):
        buckets[d].add(v)
    removed = [False] * G.n
    order, best, low = [], 0, 0
    for _ in range(G.n):
        low = max(0, low - 1)
        while not buckets[low]:
            low += 1
        v = min(buckets[low])  # deterministic
        buckets[low].discard(v)
        removed[v] = True
        order.append(v)
        best = max(best, low)
        for u in G.adj[v]:
            if not removed[u]:
                buckets[deg[u]].discard(u)
                deg[u] -= 1
                buckets[deg[u]].add(u)
    return best, order


def components(G: SimpleGraph, vertices: Iterable[int]) -> list[list[int]]:
    """Connected components of the subgraph induced by ``vertices``, each sorted."""
    inside = set(vertices)
    seen: set[int] = set()
    out = []
    for s in sorted(inside):
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        q = deque([s])
        while q:
            v = q.popleft()
            for u in G.adj[v]:
                if u in inside and u not in seen:
                    seen.add(u)
                    comp.append(u)
                    q.append(u)
        out.append(sorted(comp))
    return out


def validate_separator(G: SimpleGraph, T: Iterable[int], t: int, eta) -> bool:
    T = set(T)
    if not T <= set(range(G.n)):
        raise SeparatorError("separator contains vertices outside the graph")
    if len(T) > t:
        return False
    eta = Fraction(eta).limit_denominator(10 ** 9) if isinstance(eta, float) else Fraction(eta)
    rest = [v for v in range(G.n) if v not in T]
    return all(len(c) <= eta * G.n for c in components(G, rest))


# oracles: (G, part) -> (cut, side_a, side_b), all subsets of part ---------------

Oracle = Callable[[SimpleGraph, list[int]], tuple[list[int], list[int], list[int]]]


def merge_components(comps: list[list[int]]) -> tuple[list[int], list[int]]:
    """Largest-first assignment of components to the currently smaller side."""
    a: list[int] = []
    b: list[int] = []
    for c in sorted(comps, key=lambda c: (-len(c), c[0])):
        (a if len(a) <= len(b) else b).extend(c)
    return sorted(a), sorted(b)


def _split(G: SimpleGraph, part: list[int], cut: Iterable[int]):
    cut = sorted(set(cut))
    rest = [v for v in part if v not in set(cut)]
    a, b = merge_components(components(G, rest))
    return cut, a, b


def tree_centroid_oracle(G: SimpleGraph, part: list[int]):
    """Centroid of the largest tree component in the part (exact for forests)."""
    comps = components(G, part)
    big = max(comps, key=len)
    inside = set(big)
    root = big[0]
    parent = {root: -1}
    order = [root]
    for v in order:
        for u in sorted(G.adj[v]):
            if u in inside and u not in parent:
                parent[u] = v
                order.append(u)
    size = {v: 1 for v in big}
    for v in reversed(order[1:]):
        size[parent[v]] += size[v]
    total = len(big)
    best, best_w = root, total
    for v in big:
        heaviest = total - size[v]
        for u in G.adj[v]:
            if u in inside and parent.get(u) == v:
                heaviest = max(heaviest, size[u])
        if heaviest < best_w or (heaviest == best_w and v < best):
            best, best_w = v, heaviest
    return _split(G, part, [best])


def grid_cut_oracle(G: SimpleGraph, part: list[int]):
    """Weighted-median row or column of the part, along its longer extent."""
    rows, cols = G.shape  # type: ignore[attr-defined]
    rc = [(v // cols, v % cols) for v in part]
    rs = [r for r, _ in rc]
    cs = [c for _, c in rc]
    axis = 1 if max(cs) - min(cs) >= max(rs) - min(rs) else 0
    key = cs if axis == 1 else rs
    m = len(part)
    counts: dict[int, int] = {}
    for k in key:
        counts[k] = counts.get(k, 0) + 1
    below = 0
    line = min(counts)
    for k in sorted(counts):
        if 2 * below <= m and 2 * (m - below - counts[k]) <= m:
            line = k
            break
        below += counts[k]
    return _split(G, part, [v for v, k in zip(part, key) if k == line])


def bfs_layer_oracle(G: SimpleGraph, part: list[int]):
    """Median BFS layer from a far vertex of the largest component (heuristic)."""
    comps = components(G, part)
    big = max(comps, key=len)
    inside = set(big)

    def layers(src):
        dist = {src: 0}
        q = deque([src])
        while q:
            v = q.popleft()
            for u in sorted(G.adj[v]):
                if u in inside and u not in dist:
                    dist[u] = dist[v] + 1
                    q.append(u)
        return dist

    d0 = layers(big[0])
    far = max(big, key=lambda v: (d0[v], -v))
    dist = layers(far)
    by: dict[int, list[int]] = {}
    for v, d in dist.items():
        by.setdefault(d, []).append(v)
    m = len(part)
    other = m - len(big)
    below = 0
    cut = by[0]
    for d in sorted(by):
        above = len(big) - below - len(by[d])
        if 2 * (below + other) <= m and 2 * above <= m or 2 * below <= m and 2 * (above + other) <= m:
            cut = by[d]
            break
        below += len(by[d])
    return _split(G, part, cut)


ORACLES: dict[str, Oracle] = {"tree": tree_centroid_oracle, "grid": grid_cut_oracle,
                              "bfs": bfs_layer_oracle}


@dataclass
class Decomposition:
    depth: int
    separator: list[int]
    parts: list[list[int]]
    t0: int
    rounds: list[dict] = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"depth": self.depth, "separator_size": len(self.separator), "t0": self.t0,
                "part_sizes": [len(p) for p in self.parts], "rounds": self.rounds,
                "checks": self.checks, "separator": self.separator}


def _check_split(G: SimpleGraph, part: list[int], cut, a, b) -> str | None:
    if sorted(list(cut) + list(a) + list(b)) != sorted(part):
        return "cut and sides do not partition the part"
    m = len(part)
    if 3 * len(a) > 2 * m or 3 * len(b) > 2 * m:
        return f"side sizes {len(a)}, {len(b)} exceed 2/3 of {m}"
    sb = set(b)
    if any(u in sb for v in a for u in G.adj[v]):
        return "an edge joins the two sides"
    return None


def recursive_decompose(G: SimpleGraph, oracle: Oracle | str, depth: int) -> Decomposition:
    """Apply a separator oracle ``depth`` times inside every part."""
    if isinstance(oracle, str):
        oracle = ORACLES[oracle]
    parts = [list(range(G.n))]
    sep: list[int] = []
    t0 = 0
    rounds = []
    for r in range(depth):
        nxt = []
        added = 0
        for j, part in enumerate(parts):
            if not part:
                nxt += [[], []]
                continue
            if len(part) == 1:
                cut, a, b = list(part), [], []
            else:
                cut, a, b = oracle(G, part)
            err = _check_split(G, part, cut, a, b)
            if err:
                raise SeparatorError(f"round {r + 1}, part {j} (size {len(part)}): {err}")
            t0 = max(t0, len(cut))
            added += len(cut)
            sep.extend(cut)
            nxt += [list(a), list(b)]
        parts = nxt
        rounds.append({"round": r + 1, "separator": len(sep), "added": added,
                       "max_part": max((len(p) for p in parts), default=0)})
    dec = Decomposition(depth, sorted(sep), parts, t0, rounds)
    dec.checks = certify(G, dec)
    return dec


def certify(G: SimpleGraph, dec: Decomposition) -> dict:
    owner = [-1] * G.n
    for v in dec.separator:
        owner[v] = -2
    partition = True
    for j, p in enumerate(dec.parts):
        for v in p:
            if owner[v] != -1:
                partition = False
            owner[v] = j
    partition = partition and all(o != -1 for o in owner)
    cut_ok = all(owner[u] == owner[v] or owner[u] == -2 or owner[v] == -2 for u, v in G.edges())
    size_ok = len(dec.separator) <= 2 ** dec.depth * dec.t0
    part_ok = all(3 ** dec.depth * len(p) <= 2 ** dec.depth * G.n for p in dec.parts)
    return {"partition": partition, "no_cross_edges": cut_ok, "separator_bound": size_ok,
            "part_bound": part_ok, "ok": partition and cut_ok and size_ok and part_ok}


def rounds_for(eta: float) -> int:
    """Rounds needed so that (2/3)^i <= eta, as 2*log2(1/eta) rounded up."""
    return math.ceil(2 * math.log2(1 / eta))
