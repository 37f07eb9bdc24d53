"""Regime constants for the s=3, s=4 and general (s >= 5) constructions.

Every density threshold is an exact ``Fraction`` so comparisons against edge
counts are done in integer arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction


class ConfigError(ValueError):
    pass


PAPER_EXACT = "paper-exact"
ENGINEERING = "engineering"


def _clog2(n: int) -> int:
    return max(0, math.ceil(math.log2(n))) if n > 1 else 0


@dataclass(frozen=True)
class RegimeParams:
    s: int
    n: int
    N: int
    mode: str = PAPER_EXACT
    # index 0 is level 1
    multipliers: tuple[int, ...] = ()
    codim_max: tuple[int, ...] = ()

    def __post_init__(self):
        if self.s < 3:
            raise ConfigError("s must be at least 3")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.mode not in (PAPER_EXACT, ENGINEERING):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if len(self.multipliers) != self.s - 2 or len(self.codim_max) != self.s - 2:
            raise ConfigError("need one multiplier and one codim_max per level 1..s-2")
        if any(m < 1 for m in self.multipliers) or any(d < 0 for d in self.codim_max):
            raise ConfigError("multipliers must be >= 1 and codim_max >= 0")

    @classmethod
    def create(cls, s: int, n: int, N: int, mode: str = PAPER_EXACT,
               multipliers=None, codim_max=None) -> "RegimeParams":
        pm, pc = exact_constants(s, n)
        if mode == PAPER_EXACT and (multipliers is not None or codim_max is not None):
            if tuple(multipliers or pm) != pm or tuple(codim_max or pc) != pc:
                raise ConfigError("paper-exact mode locks multipliers and codim ranges")
        p = cls(s, n, N, mode,
                tuple(multipliers) if multipliers is not None else pm,
                tuple(codim_max) if codim_max is not None else pc)
        return p

    @property
    def engineering(self) -> bool:
        return self.mode == ENGINEERING

    @property
    def top(self) -> int:
        """Level of the finest tiling."""
        return self.s - 2

    @property
    def c(self) -> int:
        return self.s ** (15 * self.s)

    def multiplier(self, level: int) -> int:
        return self.multipliers[level - 1]

    def codim_limit(self, level: int) -> int:
        return self.codim_max[level - 1]

    # thresholds -----------------------------------------------------------

    def proper_threshold(self, level: int, level2: int, delta: int) -> Fraction:
        """Allowed blue density between sets of adjacent cubes."""
        if delta < 1:
            raise ValueError("dominating parameter must be >= 1")
        if self.s == 3:
            base, offset = 4 * delta, 4
        elif self.s == 4:
            base, offset = 8 * delta, 6
        else:
            base, offset = 4 * self.s ** 2 * delta, 2 * self.s
        e = level + level2 - offset
        return Fraction(base) ** e

    def prune_cut(self, delta: int) -> Fraction:
        if self.s <= 4:
            return Fraction(1, 8 * delta)
        return Fraction(1, 4 * self.s ** 2 * delta)

    def max_degree_bound(self, delta: int) -> Fraction:
        if self.s <= 4:
            return Fraction(1, 4 * delta)
        return Fraction(1, 2 * self.s ** 2 * delta)

    def cross_degree_bound(self, level: int, parent_codim: int, i: int) -> int:
        """Blue neighbours a vertex of a level-(level-1) set may have in children of level-codim >= i."""
        return 2 * self.multiplier(level) * 2 ** (self.n - parent_codim - i)

    def internal_degree_bound(self, codim: int) -> Fraction:
        denom = 2 * self.n if self.s == 3 else self.n
        return Fraction(2 ** (self.n - codim), denom)

    def external_forbidden_fraction(self) -> Fraction:
        return Fraction(1, 4) if self.s == 3 else Fraction(1, 2)

    def internal_forbidden_bound(self, codim: int) -> Fraction:
        size = 2 ** (self.n - codim)
        return Fraction(size, 2) if self.s == 3 else Fraction(size)

    # paper-exact thresholds ----------------------------------------------

    def min_N(self) -> int:
        if self.s == 3:
            return 7000 * 2 ** self.n
        if self.s == 4:
            return 2 ** 46 * 2 ** self.n
        return self.c ** self.s * 2 ** self.n

    def min_N_text(self) -> str:
        if self.s == 3:
            return "N >= 7000*2^n"
        if self.s == 4:
            return "N >= 2^46*2^n"
        return "N >= c^s*2^n with c = s^(15s)"

    def min_n(self) -> int:
        return {3: 6, 4: 32}.get(self.s, 1)

    def check_exact_limits(self) -> None:
        if self.mode != PAPER_EXACT:
            return
        if self.n < self.min_n():
            raise ConfigError(f"paper-exact mode for s={self.s} needs n >= {self.min_n()}")
        if self.N < self.min_N():
            raise ConfigError(f"paper-exact mode refuses N={self.N}: requires {self.min_N_text()}"
                              f" = {self.min_N()}")

    def to_dict(self) -> dict:
        return {"s": self.s, "n": self.n, "N": self.N, "mode": self.mode,
                "multipliers": [str(m) if m > 2 ** 53 else m for m in self.multipliers],
                "codim_max": list(self.codim_max)}


def exact_constants(s: int, n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Size multipliers and codimension ranges for levels 1..s-2."""
    lg = _clog2(n)
    if s == 3:
        return (4,), (min(n, lg + 3),)
    if s == 4:
        return (2 ** 18, 8), (min(n, lg + 18), min(n, lg + 3))
    c = s ** (15 * s)
    span = lg + math.ceil(s * 15 * s * math.log2(s))
    return tuple(c ** (s - lev) for lev in range(1, s - 1)), tuple(min(n, span) for _ in range(s - 2))
