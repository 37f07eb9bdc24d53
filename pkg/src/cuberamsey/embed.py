"""Greedy embeddings of Q_n into the red graph."""
from __future__ import annotations

import numpy as np

from .coloring import ColoringOracle, Embedding, verify_red_cube
from .errors import HonestFailure, InvariantBreach
from .refine import PrunedAssignment
from .regime import RegimeParams
from .tiling import TilingRun


class BaselineRefused(ValueError):
    def __init__(self, d_max: int, N: int, n: int):
        super().__init__(f"N={N} < d_max*n + 2^n = {d_max * n + (1 << n)} (d_max={d_max})")
        self.d_max = d_max


def greedy_embed(o: ColoringOracle, pruned: PrunedAssignment, run: TilingRun,
                 params: RegimeParams | None = None, stats: list | None = None) -> Embedding:
    """Embed Q_n cube by cube, decreasing codimension, smallest admissible image first."""
    params = params or run.params
    t = run.tiling
    n = t.n
    order = sorted(pruned.T, key=lambda cid: (-t.cubes[cid].codim, -cid))
    f = np.full(1 << n, -1, dtype=np.int64)
    owner = np.full(1 << n, -1, dtype=np.int64)
    for cid in order:
        c = t.cubes[cid]
        T = pruned.T[cid]
        used = np.zeros(len(T), dtype=bool)
        d = c.codim
        peak = {"internal": 0, "external": 0, "occupancy": 0}
        ext_cap = params.external_forbidden_fraction() * len(T)
        int_cap = params.internal_forbidden_bound(d)
        breaches = []
        for x in range(c.cube.lo, c.cube.hi):
            internal = np.zeros(len(T), dtype=bool)
            external = np.zeros(len(T), dtype=bool)
            for k in range(n):
                y = x ^ (1 << k)
                if f[y] < 0:
                    continue
                if c.cube.has_vertex(y):
                    internal |= o.blue_mask(int(f[y]), T)
                else:
                    other = t.cubes[owner[y]]
                    if other.codim < d:
                        raise InvariantBreach(f"neighbour of {x} embedded in {other} of smaller "
                                              f"codimension than {c}")
                    external |= o.blue_mask(int(f[y]), T)
            counts = {"internal": int(internal.sum()), "external": int(external.sum()),
                      "occupancy": int(used.sum())}
            for key in peak:
                peak[key] = max(peak[key], counts[key])
            if (counts["external"] > ext_cap or counts["internal"] > int_cap
                    or counts["occupancy"] > c.cube.size - 1):
                breaches.append({"vertex": x, **counts})
            free = np.nonzero(~(internal | external | used))[0]
            if len(free) == 0:
                raise HonestFailure("embed", f"no admissible image for vertex {x} in {c.cube}",
                                    {"vertex": x, "cube": str(c.cube), "size": len(T), **counts})
            j = int(free[0])
            used[j] = True
            f[x] = T[j]
            owner[x] = cid
        row = {"cube": str(c.cube), "codim": d, "size": len(T),
               "peak_internal": peak["internal"], "peak_external": peak["external"],
               "internal_cap": str(int_cap), "external_cap": str(ext_cap),
               "breaches": len(breaches)}
        if stats is not None:
            stats.append(row)
        if breaches and not params.engineering:
            raise InvariantBreach(f"forbidden-count bound exceeded in {c.cube}",
                                  {"cube": row, "first": breaches[0]})
    if (f < 0).any():
        raise InvariantBreach("embedding left vertices unmapped")
    e = Embedding(n, tuple(int(v) for v in f))
    v = verify_red_cube(o, e)
    if not v.valid:
        raise InvariantBreach("greedy embedding failed verification", v.to_dict())
    return e


def max_blue_degree(o: ColoringOracle) -> int:
    vs = np.arange(o.N, dtype=np.int64)
    deg = o.blue_row_counts(vs, vs)
    return int(deg.max()) if o.N else 0


def baseline_embed(o: ColoringOracle, n: int) -> Embedding:
    """Vertex-by-vertex embedding, valid whenever N >= d_max * n + 2^n."""
    d_max = max_blue_degree(o)
    if o.N < d_max * n + (1 << n):
        raise BaselineRefused(d_max, o.N, n)
    f = np.full(1 << n, -1, dtype=np.int64)
    free = np.ones(o.N, dtype=bool)
    allv = np.arange(o.N, dtype=np.int64)
    for x in range(1 << n):
        ok = free.copy()
        for k in range(n):
            y = x ^ (1 << k)
            if y < x:
                ok &= ~o.blue_mask(int(f[y]), allv)
        idx = np.flatnonzero(ok)
        if len(idx) == 0:  # impossible under the size condition
            raise InvariantBreach(f"baseline embedder stuck at vertex {x}", {"d_max": d_max})
        f[x] = idx[0]
        free[idx[0]] = False
    e = Embedding(n, tuple(int(v) for v in f))
    v = verify_red_cube(o, e)
    if not v.valid:
        raise InvariantBreach("baseline embedding failed verification", v.to_dict())
    return e
