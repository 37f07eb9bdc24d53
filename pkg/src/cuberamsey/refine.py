"""Blue-degree pruning of the finest-level sets.

Each set S_C loses the vertices that have too many blue neighbours in the set
of some adjacent cube of no larger codimension.  Degrees are always measured
against the original S_A, and the resulting maximum-degree condition is then
certified by exhaustive measurement.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .coloring import ColoringOracle
from .cubes import dominating_parameter, level_of_adjacency
from .errors import HonestFailure, InvariantBreach
from .preprocess import compress, expand
from .regime import RegimeParams
from .tiling import TilingRun


def heavy_vertices(o: ColoringOracle, X: np.ndarray, Y: np.ndarray, cut: Fraction) -> np.ndarray:
    """Mask of the vertices of ``X`` with at least ``cut * |Y|`` blue neighbours in ``Y``."""
    deg = o.blue_row_counts(X, Y)
    return deg * cut.denominator >= cut.numerator * len(Y)


def prune_set(o: ColoringOracle, S: np.ndarray, others: list[tuple[np.ndarray, Fraction]]):
    """Remove from ``S`` the heavy vertices for every ``(S_A, cut)``; returns (kept, per-A removals)."""
    S = np.asarray(S, dtype=np.int64)
    drop = np.zeros(len(S), dtype=bool)
    counts = []
    for SA, cut in others:
        h = heavy_vertices(o, S, np.asarray(SA, dtype=np.int64), cut)
        counts.append(int(h.sum()))
        drop |= h
    return S[~drop], counts


@dataclass
class PrunedAssignment:
    T: dict[int, np.ndarray]
    ledger: list[dict] = field(default_factory=list)
    certificate: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        return {"cubes": len(self.T),
                "removed": int(sum(e["removed"] for e in self.ledger)),
                "ledger": self.ledger,
                "certified_pairs": len(self.certificate),
                "max_degree_ok": all(c["ok"] for c in self.certificate)}

    def to_dict(self) -> dict:
        return {"T": {str(k): compress(v) for k, v in sorted(self.T.items())},
                "ledger": self.ledger, "certificate": self.certificate}

    @classmethod
    def from_dict(cls, d: dict) -> "PrunedAssignment":
        return cls({int(k): expand(v) for k, v in d["T"].items()}, d.get("ledger", []),
                   d.get("certificate", []))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PrunedAssignment":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _top_adjacent(run: TilingRun, cid: int, max_codim: int):
    t = run.tiling
    c = t.cubes[cid]
    for aid in t.adjacent_ids(c, max_codim):
        a = t.cubes[aid]
        if a.level == c.level:
            rho = level_of_adjacency(t, c, a)
            yield aid, a, rho, dominating_parameter(c, a, rho)


def prune(o: ColoringOracle, run: TilingRun, params: RegimeParams) -> PrunedAssignment:
    if not run.complete():
        raise InvariantBreach("prune needs a complete tiling")
    t = run.tiling
    top = t.level_ids(params.top)
    T: dict[int, np.ndarray] = {}
    ledger = []
    for cid in top:
        c = t.cubes[cid]
        S = run.set_of(cid).vertices
        others, meta = [], []
        for aid, a, rho, delta in _top_adjacent(run, cid, c.codim):
            cut = params.prune_cut(delta)
            others.append((run.set_of(aid).vertices, cut))
            meta.append((aid, a, rho, delta, cut))
        kept, counts = prune_set(o, S, others)
        for (aid, a, rho, delta, cut), k in zip(meta, counts):
            ledger.append({"cube": str(c.cube), "other": str(a.cube), "rho": rho, "delta": delta,
                           "cut": str(cut), "removed": k, "size": len(S)})
        if 2 * len(kept) < len(S):
            info = {"cube": str(c.cube), "size": len(S), "kept": len(kept),
                    "tallies": [e for e in ledger if e["cube"] == str(c.cube)]}
            msg = f"pruning left {len(kept)} of {len(S)} vertices in {c.cube}"
            if params.engineering:
                raise HonestFailure("prune", msg, info)
            raise InvariantBreach(msg, info)
        T[cid] = kept
    pa = PrunedAssignment(T, ledger)
    pa.certificate = certify(o, run, params, pa)
    bad = [c for c in pa.certificate if not c["ok"]]
    if bad:
        raise InvariantBreach("maximum degree condition fails after pruning", {"witness": bad[0]})
    return pa


def certify(o: ColoringOracle, run: TilingRun, params: RegimeParams,
            pa: PrunedAssignment) -> list[dict]:
    """Exhaustive check: every v in T_C has < bound * |T_A| blue neighbours in T_A when d(C) >= d(A)."""
    out = []
    t = run.tiling
    for cid, TC in pa.T.items():
        c = t.cubes[cid]
        for aid, a, rho, delta in _top_adjacent(run, cid, c.codim):
            TA = pa.T[aid]
            bound = params.max_degree_bound(delta)
            deg = o.blue_row_counts(TC, TA)
            m = int(deg.max()) if len(deg) else 0
            ok = m * bound.denominator < bound.numerator * len(TA)
            out.append({"cube": str(c.cube), "other": str(a.cube), "delta": delta,
                        "max_blue": m, "bound": str(bound * len(TA)), "ok": bool(ok)})
    return out
