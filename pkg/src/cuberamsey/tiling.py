"""Incremental construction of the (s-1)-fold tiling and its proper assignment.

Every step covers the lexicographically smallest vertex of Q_n that is
covered fewer than ``s - 1`` times.  Properness is never assumed: blue edge
counts between assigned sets are measured exactly against the oracle.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .coloring import ColoringOracle
from .cubes import (CubeError, LeveledCube, MultiTiling, Relation, SpecialCube, contains,
                    dominating_parameter, level_of_adjacency, relation)
from .errors import HonestFailure, InvariantBreach
from .preprocess import FamilyForest, LeveledSet
from .regime import RegimeParams

_BLOCK = 1 << 21


def count_blue_edges(o: ColoringOracle, A, B, threads: int = 1) -> int:
    """Exact number of blue pairs between two disjoint vertex sets."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if len(A) == 0 or len(B) == 0:
        return 0
    if len(A) > len(B):
        A, B = B, A
    if np.intersect1d(A, B, assume_unique=True).size:
        raise ValueError("count_blue_edges needs disjoint sets")
    rows = max(1, _BLOCK // len(B))
    chunks = [A[a:a + rows] for a in range(0, len(A), rows)]

    def part(chunk):
        return int(o.blue_matrix(chunk, B).sum())

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return sum(ex.map(part, chunks))  # integer sum: order does not matter
    return sum(part(c) for c in chunks)


def _density_ok(count: int, thr: Fraction, a: int, b: int) -> bool:
    """count <= thr * a * b in exact arithmetic."""
    return count * thr.denominator <= thr.numerator * a * b


def _below(count: int, thr: Fraction, a: int, b: int) -> bool:
    """Strictly below the threshold: the set is good for that cube."""
    return count * thr.denominator < thr.numerator * a * b


@dataclass
class StepResult:
    status: str  # "inserted" | "complete" | "failure"
    event: dict = field(default_factory=dict)


class TilingRun:
    def __init__(self, o: ColoringOracle, forest: FamilyForest, params: RegimeParams,
                 threads: int = 1):
        self.o = o
        self.forest = forest
        self.params = params
        self.threads = threads
        self.tiling = MultiTiling(params.n, params.s)
        self.assignment: dict[int, int] = {}     # cube id -> set id
        self.assigned: set[int] = set()
        self.last_codim = 0
        self.events: list[dict] = []
        self._edges: dict[tuple[int, int], int] = {}
        self._kids = forest.children_map()

    # edge counts between forest sets are cached by unordered id pair
    def edges(self, sid: int, sid2: int) -> int:
        key = (min(sid, sid2), max(sid, sid2))
        if key not in self._edges:
            self._edges[key] = count_blue_edges(self.o, self.forest.sets[sid].vertices,
                                                self.forest.sets[sid2].vertices, self.threads)
        return self._edges[key]

    def set_of(self, cid: int) -> LeveledSet:
        return self.forest.sets[self.assignment[cid]]

    def complete(self) -> bool:
        return bool(self.tiling.cubes) and self.tiling.complete()

    def _insert(self, c: LeveledCube, S: LeveledSet) -> int:
        try:
            cid = self.tiling.add(c)
        except CubeError as e:
            raise InvariantBreach(f"cube {c} not addable: {e}") from e
        self.assignment[cid] = S.id
        self.assigned.add(S.id)
        self.last_codim = c.codim
        return cid

    def threshold(self, c: LeveledCube, a: LeveledCube, rho: int) -> Fraction:
        return self.params.proper_threshold(c.level, a.level,
                                            dominating_parameter(c, a, rho))

    def is_proper(self, c: LeveledCube, S: LeveledSet) -> bool:
        return not self.proper_violations(c, S)

    def proper_violations(self, c: LeveledCube, S: LeveledSet) -> list[dict]:
        """Conditions 1-3 for assigning ``S`` to candidate ``c`` against the current tiling."""
        out = []
        if S.level != c.level or (c.level and S.d(c.level) != c.d(c.level)):
            out.append({"condition": 1, "cube": str(c), "set": S.id})
            return out
        if c.level:
            pid = self.tiling.lookup(c.level - 1, c.ancestor_cube(c.level - 1))
            if pid is None:
                out.append({"condition": 2, "cube": str(c), "set": S.id, "reason": "no parent"})
                return out
            P = self.set_of(pid)
            if not np.isin(S.vertices, P.vertices, assume_unique=True).all():
                out.append({"condition": 2, "cube": str(c), "set": S.id, "parent_set": P.id})
                return out
        for aid in self.tiling.adjacent_ids(c, self.params.n):
            a = self.tiling.cubes[aid]
            rho = level_of_adjacency(self.tiling, c, a)
            SA = self.set_of(aid)
            k = self.edges(S.id, SA.id)
            thr = self.threshold(c, a, rho)
            if not _density_ok(k, thr, S.size, SA.size):
                out.append({"condition": 3, "cube": str(c), "set": S.id, "other": str(a),
                            "other_set": SA.id, "blue": k, "threshold": str(thr)})
        return out

    # the algorithm ------------------------------------------------------

    def step(self) -> StepResult:
        t, n, s = self.tiling, self.params.n, self.params.s
        if not t.cubes:
            root = self.forest.root
            self._insert(LeveledCube(SpecialCube.whole(n), 0, ()), root)
            ev = {"step": 0, "event": "inserted", "level": 0, "cube": str(SpecialCube.whole(n)),
                  "set": root.id, "codim": 0}
            self.events.append(ev)
            return StepResult("inserted", ev)
        cov = t.coverage()
        open_ = np.nonzero(cov < s - 1)[0]
        if len(open_) == 0:
            return StepResult("complete")
        x = int(open_[0])
        lev = int(cov[x])
        pid = t.containing(lev - 1, x)
        if pid is None:
            raise InvariantBreach(f"vertex {x} covered {lev} times but has no level-{lev - 1} cube")
        parent = t.cubes[pid]
        P = self.set_of(pid)
        d = self.last_codim
        if d < parent.codim:
            raise InvariantBreach("last inserted codimension below an existing cube")
        family = [self.forest.sets[i] for i in self._kids[P.id] if i not in self.assigned]

        # phase 1: discard sets bad for cubes rho-adjacent to the provisional cube, rho < lev
        c_prov = LeveledCube(SpecialCube.containing(n, x, d), lev,
                             parent.level_codims + (d - parent.codim,))
        phase1 = []
        bad: set[int] = set()
        for aid in t.adjacent_ids(c_prov, d):
            a = t.cubes[aid]
            rho = level_of_adjacency(t, c_prov, a)
            if rho >= lev:
                continue
            delta = dominating_parameter(parent, a, rho)
            if delta != dominating_parameter(c_prov, a, rho):
                raise InvariantBreach(f"dominating parameters of {parent} and {c_prov} differ "
                                      f"against {a}")
            SA = self.set_of(aid)
            thr = self.params.proper_threshold(lev, a.level, delta)
            killed = [S for S in family if S.id not in bad
                      and not _below(self.edges(S.id, SA.id), thr, S.size, SA.size)]
            bad.update(S.id for S in killed)
            ratio = self.params.proper_threshold(lev - 1, a.level, delta) / thr
            phase1.append({"cube": str(a), "rho": rho, "delta": delta,
                           "discarded": len(killed), "mass": int(sum(S.size for S in killed)),
                           "mass_bound": str(Fraction(P.size) * ratio)})
        survivors = [S for S in family if S.id not in bad]

        # phase 2: fix the codimension, then look for a set good for the lev-adjacent cubes
        per_i = {}
        lo = max(0, d - parent.codim)
        for i in range(lo, self.params.codim_limit(lev) + 1):
            dc = parent.codim + i
            if dc > n:
                break
            c = LeveledCube(SpecialCube.containing(n, x, dc), lev, parent.level_codims + (i,))
            cands = [S for S in survivors if S.d(lev) == i]
            info = {"candidates": len(cands), "bad": 0}
            per_i[str(i)] = info
            if not cands:
                continue
            try:
                t.check_addable(c)
            except CubeError as e:
                raise InvariantBreach(f"candidate {c} not addable: {e}") from e
            adj = []
            for aid in t.adjacent_ids(c, dc):
                a = t.cubes[aid]
                rho = level_of_adjacency(t, c, a)
                if rho == lev:
                    adj.append((aid, a, self.threshold(c, a, rho)))
            for S in cands:
                if all(_below(self.edges(S.id, self.assignment[aid]), thr, S.size,
                              self.set_of(aid).size) for aid, a, thr in adj):
                    viol = self.proper_violations(c, S)
                    if viol:
                        raise InvariantBreach(f"set {S.id} good for {c} but not proper",
                                              {"violations": viol})
                    self._insert(c, S)
                    ev = {"step": len(t.cubes) - 1, "event": "inserted", "level": lev,
                          "cube": str(c.cube), "set": S.id, "codim": dc, "vertex": x,
                          "phase1": phase1, "tried": per_i}
                    self.events.append(ev)
                    return StepResult("inserted", ev)
                info["bad"] += 1
        report = {"event": "failure", "vertex": x, "level": lev, "parent_cube": str(parent.cube),
                  "parent_set": P.id, "last_codim": d, "family": len(family),
                  "phase1": phase1, "per_i": per_i}
        self.events.append(report)
        return StepResult("failure", report)

    def run(self, on_event=None) -> "TilingRun":
        while True:
            r = self.step()
            if r.status == "complete":
                return self
            if on_event is not None:
                on_event(r.event)
            if r.status == "failure":
                raise HonestFailure("tile", "no admissible cube/set pair", r.event)

    # checkpoints ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {"n": self.params.n, "s": self.params.s,
                "cubes": [[c.level, list(c.level_codims), str(c.cube)] for c in self.tiling.cubes],
                "assignment": [self.assignment[i] for i in range(len(self.tiling.cubes))],
                "last_codim": self.last_codim}

    @classmethod
    def from_dict(cls, d: dict, o: ColoringOracle, forest: FamilyForest,
                  params: RegimeParams, threads: int = 1) -> "TilingRun":
        run = cls(o, forest, params, threads)
        for (lev, codims, text), sid in zip(d["cubes"], d["assignment"]):
            run._insert(LeveledCube(SpecialCube.parse(text), lev, tuple(codims)),
                        forest.sets[sid])
        run.last_codim = d["last_codim"]
        return run

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def step(run: TilingRun) -> StepResult:
    return run.step()


def is_proper(run: TilingRun, c: LeveledCube, S: LeveledSet) -> bool:
    return run.is_proper(c, S)


def build_tiling(o: ColoringOracle, forest: FamilyForest, params: RegimeParams,
                 threads: int = 1, on_event=None) -> TilingRun:
    return TilingRun(o, forest, params, threads).run(on_event)


def audit(run: TilingRun) -> dict:
    """Re-derive every structural and density condition of a finished run."""
    t, forest, o = run.tiling, run.forest, run.o
    checks: dict[str, dict] = {}

    def record(name, witness):
        checks[name] = {"ok": witness is None, "witness": witness}

    cov = t.coverage()
    bad = np.nonzero(cov != run.params.s - 1)[0]
    record("coverage", None if len(bad) == 0 else {"vertex": int(bad[0]), "covered": int(cov[bad[0]])})

    w = None
    for cid, c in enumerate(t.cubes):
        if c.level and t.parent_id(cid) is None:
            w = {"cube": str(c)}
            break
    for lev in range(t.nlevels):
        ids = t.level_ids(lev)
        if sum(t.cubes[i].cube.size for i in ids) != 1 << t.n and w is None:
            w = {"level": lev, "reason": "cubes do not partition Q_n"}
    record("refinement", w)

    codims = [d for _, d in t.insertion_log]
    w = next(({"position": k, "codim": codims[k], "previous": codims[k - 1]}
              for k in range(1, len(codims)) if codims[k] < codims[k - 1]), None)
    record("monotone-codimension", w)

    sids = [run.assignment.get(i) for i in range(len(t.cubes))]
    dup = len(set(sids)) != len(sids) or None in sids
    record("assignment-injective", {"assignment": sids} if dup else None)

    w = None
    for cid, c in enumerate(t.cubes):
        S = forest.sets[sids[cid]]
        if S.level != c.level or (c.level and S.d(c.level) != c.d(c.level)):
            w = {"cube": str(c), "set": S.id, "set_level": S.level,
                 "set_codims": list(S.level_codims), "cube_codims": list(c.level_codims)}
            break
    record("condition-1", w)

    w = None
    for cid, c in enumerate(t.cubes):
        pid = t.parent_id(cid)
        if pid is None:
            continue
        S, P = forest.sets[sids[cid]], forest.sets[sids[pid]]
        if not np.isin(S.vertices, P.vertices, assume_unique=True).all():
            w = {"cube": str(c), "set": S.id, "parent_cube": str(t.cubes[pid]), "parent_set": P.id}
            break
    record("condition-2", w)

    w = None
    pairs = 0
    for cid, c in enumerate(t.cubes):
        for aid in t.adjacent_ids(c, t.n):
            if aid <= cid:
                continue
            a = t.cubes[aid]
            rho = level_of_adjacency(t, c, a)
            S, SA = forest.sets[sids[cid]], forest.sets[sids[aid]]
            try:
                k = count_blue_edges(o, S.vertices, SA.vertices)
            except ValueError:
                w = {"cube": str(c), "other": str(a), "reason": "assigned sets overlap"}
                break
            thr = run.params.proper_threshold(c.level, a.level, dominating_parameter(c, a, rho))
            pairs += 1
            if not _density_ok(k, thr, S.size, SA.size):
                w = {"cube": str(c), "other": str(a), "set": S.id, "other_set": SA.id,
                     "blue": k, "threshold": str(thr)}
                break
        if w:
            break
    record("condition-3", w)
    return {"ok": all(v["ok"] for v in checks.values()), "adjacent_pairs": pairs,
            "checks": checks}
