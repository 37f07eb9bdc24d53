"""Configuration handling and the end-to-end driver.

A config is a JSON object::

    {
      "regime":  {"s": 3, "n": 6, "mode": "paper-exact",
                  "multipliers": [4], "codim_max": [6]},      # last two optional
      "oracle":  {"kind": "blue-multipartite", "N": 448000, "parts": 2, "p": 0.1, "seed": 42},
      "finder":  {"strategies": ["a", "b", "c", "d"], ...},     # optional
      "checks":  {"degree_pair_budget": 20000000, "clique_sample": 400,
                  "sample_seed": 0, "audit": true},             # optional
      "threads": 1                                              # optional
    }

The report is a pure function of the config with ``threads`` removed, so it is
byte-identical across repeated runs and thread counts.  Wall-clock timings are
kept apart from the report for the same reason.
"""
from __future__ import annotations

import copy
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coloring import ColoringError, ColoringOracle, Embedding, make_oracle, verify_red_cube
from .embed import greedy_embed
from .errors import ConfigError, HonestFailure, InvariantBreach
from .preprocess import FamilyForest, FinderOptions, build_forest, check_degree_bounds, has_blue_clique
from .refine import prune
from .regime import ENGINEERING, PAPER_EXACT, RegimeParams
from .tiling import TilingRun, audit

log = logging.getLogger(__name__)

EXIT_OK, EXIT_HONEST, EXIT_BREACH, EXIT_CONFIG = 0, 2, 3, 4
STAMP = "guarantees-void: engineering constants"

_TOP_KEYS = {"regime", "oracle", "finder", "checks", "threads"}
_REGIME_KEYS = {"s", "n", "mode", "multipliers", "codim_max", "N"}
_CHECK_DEFAULTS = {"degree_pair_budget": 20_000_000, "clique_sample": 400, "sample_seed": 0,
                   "audit": True}


def env_threads(default: int = 1) -> int:
    raw = os.environ.get("CUBERAMSEY_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CUBERAMSEY_THREADS must be an integer, got {raw!r}") from None


@dataclass
class Context:
    config: dict
    params: RegimeParams
    oracle: ColoringOracle
    finder: FinderOptions
    checks: dict
    threads: int = 1


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from None


def build_context(config: dict, base: Path | None = None, threads: int | None = None) -> Context:
    """Validate a config and instantiate the regime, oracle and options."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(config) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    for key in ("regime", "oracle"):
        if not isinstance(config.get(key), dict):
            raise ConfigError(f"config needs a {key!r} object")
    reg = config["regime"]
    extra = set(reg) - _REGIME_KEYS
    if extra:
        raise ConfigError(f"unknown regime keys: {sorted(extra)}")
    try:
        s, n = int(reg["s"]), int(reg["n"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("regime needs integer 's' and 'n'") from None
    mode = reg.get("mode", PAPER_EXACT)
    if mode not in (PAPER_EXACT, ENGINEERING):
        raise ConfigError(f"regime mode must be {PAPER_EXACT!r} or {ENGINEERING!r}")
    try:
        oracle = make_oracle(config["oracle"], base)
    except (ColoringError, ValueError, OSError) as e:
        raise ConfigError(f"oracle: {e}") from None
    if "N" in reg and int(reg["N"]) != oracle.N:
        raise ConfigError(f"regime N={reg['N']} disagrees with oracle N={oracle.N}")
    mults = reg.get("multipliers")
    cmax = reg.get("codim_max")
    params = RegimeParams.create(s, n, oracle.N, mode,
                                 None if mults is None else tuple(int(m) for m in mults),
                                 None if cmax is None else tuple(int(c) for c in cmax))
    params.check_exact_limits()
    try:
        finder = FinderOptions.from_dict(config.get("finder"))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"finder: {e}") from None
    checks = dict(_CHECK_DEFAULTS)
    extra = set(config.get("checks", {})) - set(checks)
    if extra:
        raise ConfigError(f"unknown checks keys: {sorted(extra)}")
    checks.update(config.get("checks", {}))
    if threads is None:
        threads = int(config.get("threads", env_threads()))
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    return Context(config, params, oracle, finder, checks, threads)


def config_echo(config: dict) -> dict:
    echo = copy.deepcopy(config)
    echo.pop("threads", None)
    return echo


def spot_check_blue_clique(o: ColoringOracle, s: int, size: int, seed: int) -> dict:
    """Look for a blue K_s inside a seeded random vertex sample."""
    rng = np.random.default_rng(seed)
    k = min(size, o.N)
    sample = np.sort(rng.choice(o.N, size=k, replace=False)) if k else np.zeros(0, np.int64)
    found = has_blue_clique(o, sample, s, cap=10 ** 6)
    return {"sample": int(k), "seed": seed, "blue_clique_found": found}


@dataclass
class RunReport:
    data: dict
    exit_code: int
    timings: dict = field(default_factory=dict)
    embedding: Embedding | None = None

    @property
    def status(self) -> str:
        return self.data["status"]

    def dumps(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=1) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


def run_pipeline(config: dict, base: Path | None = None, threads: int | None = None,
                 artifacts: dict | None = None) -> RunReport:
    """generate -> preprocess -> tile -> prune -> embed -> verify.

    ``artifacts``, when given, receives the intermediate objects (forest, run,
    pruned assignment) for plotting and tabulation.
    """
    data: dict = {"config": config_echo(config) if isinstance(config, dict) else config}
    timings: dict[str, float] = {}
    invariants: dict[str, bool] = {}
    data["invariants"] = invariants
    art = artifacts if artifacts is not None else {}

    def finish(status: str, code: int, embedding=None) -> RunReport:
        data["status"] = status
        data["exit_code"] = code
        return RunReport(data, code, timings, embedding)

    try:
        ctx = build_context(config, base, threads)
    except ConfigError as e:
        data["error"] = {"stage": "config", "message": str(e)}
        return finish("config-error", EXIT_CONFIG)
    params, o = ctx.params, ctx.oracle
    data["regime"] = params.to_dict()
    data["oracle"] = o.descriptor()
    if params.engineering:
        data["stamp"] = STAMP
    stage = "preprocess"
    try:
        t0 = time.perf_counter()
        data["precondition"] = spot_check_blue_clique(o, params.s, int(ctx.checks["clique_sample"]),
                                                      int(ctx.checks["sample_seed"]))
        forest = build_forest(o, params, ctx.finder)
        art["forest"] = forest
        data["family"] = forest.stats()
        bounds = check_degree_bounds(o, forest, params, int(ctx.checks["degree_pair_budget"]))
        failed = [b.to_dict() for b in bounds if not b.ok]
        data["degree_checks"] = {"count": len(bounds), "exact": sum(b.exact for b in bounds),
                                 "failed": failed}
        invariants["degree-bounds"] = not failed
        invariants["sets-certified"] = forest.uncertified == 0
        timings["preprocess"] = time.perf_counter() - t0
        if failed and not params.engineering and any(f["exact"] for f in failed):
            raise InvariantBreach("measured degree bound exceeded", {"witness": failed[0]})

        stage = "tile"
        t0 = time.perf_counter()
        run = TilingRun(o, forest, params, ctx.threads)
        art["run"] = run
        try:
            run.run()
        finally:
            data["tiling"] = tiling_summary(run)
        timings["tile"] = time.perf_counter() - t0
        if ctx.checks["audit"]:
            a = audit(run)
            data["tiling"]["audit"] = a
            invariants["tiling-audit"] = a["ok"]
            if not a["ok"]:
                raise InvariantBreach("tiling audit failed", a)

        stage = "prune"
        t0 = time.perf_counter()
        pa = prune(o, run, params)
        art["pruned"] = pa
        data["pruning"] = pa.summary()
        invariants["half-survives"] = all(2 * len(pa.T[c]) >= run.set_of(c).size for c in pa.T)
        invariants["max-degree-certified"] = data["pruning"]["max_degree_ok"]
        timings["prune"] = time.perf_counter() - t0

        stage = "embed"
        t0 = time.perf_counter()
        stats: list = []
        art["embed_stats"] = stats
        try:
            emb = greedy_embed(o, pa, run, params, stats)
        finally:
            data["embedding_stats"] = stats
        timings["embed"] = time.perf_counter() - t0

        stage = "verify"
        verdict = verify_red_cube(o, emb)
        data["verification"] = verdict.to_dict()
        data["embedding"] = {"n": emb.n, "map": list(emb.map)}
        invariants["verify-red-cube"] = verdict.valid
        if not verdict.valid:
            raise InvariantBreach("embedding failed verification", verdict.to_dict())
    except HonestFailure as e:
        data["error"] = {"stage": e.stage, "message": str(e), "report": e.report}
        return finish("honest-failure", EXIT_HONEST)
    except InvariantBreach as e:
        data["error"] = {"stage": stage, "message": str(e), "details": e.details}
        return finish("invariant-breach", EXIT_BREACH)
    return finish("verified-success", EXIT_OK, emb)


def tiling_summary(run: TilingRun) -> dict:
    t = run.tiling
    kinds: dict[str, int] = {}
    for ev in run.events:
        kinds[ev.get("event", "?")] = kinds.get(ev.get("event", "?"), 0) + 1
    cubes = [{"id": cid, "level": c.level, "cube": str(c.cube), "codims": list(c.level_codims),
              "set": run.assignment.get(cid),
              "set_size": run.forest.sets[run.assignment[cid]].size if cid in run.assignment else None}
             for cid, c in enumerate(t.cubes)]
    return {"complete": run.complete(), "steps": len(run.events), "events": kinds,
            "cubes": cubes, "last_event": run.events[-1] if run.events else None}
