"""Two-colourings of the pairs of [N]: explicit, seeded implicit, and structured.

Implicit oracles derive the colour of an unordered pair from a keyed
splitmix64 hash, so nothing quadratic in N is ever stored.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cubes import hypercube_edges

MAGIC = b"RQCB"
VERSION = 1

_M64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_PART_SALT = 0x5851F42D4C957F2D

_CHUNK = 1 << 22  # pair evaluations per vectorised block


class Color(str, Enum):
    RED = "red"
    BLUE = "blue"


class ColoringError(ValueError):
    pass


def splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x.astype(np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _key(seed: int, salt: int = 0) -> np.uint64:
    return splitmix64(np.array([(seed ^ salt) & _M64], dtype=np.uint64))[0]


def pair_hash(key: np.uint64, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    lo = np.minimum(u, v).astype(np.uint64)
    hi = np.maximum(u, v).astype(np.uint64)
    with np.errstate(over="ignore"):
        return splitmix64(splitmix64(lo ^ key) + hi)


def _threshold(p: float) -> np.uint64:
    if not 0.0 <= p <= 1.0:
        raise ColoringError(f"probability {p} outside [0, 1]")
    return np.uint64(min(_M64, int(round(p * 2.0 ** 64))))


def _as_index(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


class ColoringOracle:
    """Deterministic symmetric 2-colouring of the pairs of ``range(N)``."""

    kind = "abstract"

    def __init__(self, N: int):
        if N < 0:
            raise ColoringError("N must be non-negative")
        self.N = int(N)

    # subclasses implement this on broadcast int64 arrays with u != v
    def _blue(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.kind, "N": self.N}

    def _check(self, u: int, v: int) -> None:
        if u == v:
            raise ColoringError(f"self-pair ({u}, {u}) has no colour")
        if not (0 <= u < self.N and 0 <= v < self.N):
            raise ColoringError(f"pair ({u}, {v}) outside [0, {self.N})")

    def is_blue(self, u: int, v: int) -> bool:
        self._check(u, v)
        return bool(self._blue(np.int64(u), np.int64(v)))

    def color(self, u: int, v: int) -> Color:
        return Color.BLUE if self.is_blue(u, v) else Color.RED

    def blue_pairs(self, u, v) -> np.ndarray:
        """Elementwise blue test; equal entries give False."""
        u, v = np.broadcast_arrays(_as_index(u), _as_index(v))
        out = self._blue(u, v)
        return np.where(u == v, False, out)

    def blue_mask(self, u: int, vs) -> np.ndarray:
        vs = _as_index(vs)
        return self.blue_pairs(np.int64(u), vs)

    def blue_matrix(self, us, vs) -> np.ndarray:
        us, vs = _as_index(us), _as_index(vs)
        return self.blue_pairs(us[:, None], vs[None, :])

    def blue_row_counts(self, us, vs) -> np.ndarray:
        """For each u in ``us`` the number of blue neighbours in ``vs``."""
        us, vs = _as_index(us), _as_index(vs)
        out = np.zeros(len(us), dtype=np.int64)
        if len(vs) == 0:
            return out
        step = max(1, _CHUNK // len(vs))
        for a in range(0, len(us), step):
            out[a:a + step] = self.blue_matrix(us[a:a + step], vs).sum(axis=1)
        return out


class ExplicitColoring(ColoringOracle):
    kind = "explicit-matrix"

    def __init__(self, blue: np.ndarray, path: str | None = None):
        blue = np.asarray(blue, dtype=bool)
        if blue.ndim != 2 or blue.shape[0] != blue.shape[1]:
            raise ColoringError("explicit colouring needs a square matrix")
        blue = np.triu(blue, 1)
        blue = blue | blue.T
        super().__init__(blue.shape[0])
        self.matrix = blue
        self.path = path
        if path is not None:
            self.kind = "file-backed"

    def _blue(self, u, v):
        return self.matrix[u, v]

    def descriptor(self) -> dict:
        if self.path is not None:
            return {"kind": "file-backed", "N": self.N, "path": str(self.path)}
        return {"kind": self.kind, "N": self.N,
                "blue_edges": [[int(a), int(b)] for a, b in zip(*np.nonzero(np.triu(self.matrix, 1)))]}


class AllRed(ColoringOracle):
    kind = "all-red"

    def _blue(self, u, v):
        return np.zeros(np.broadcast(u, v).shape, dtype=bool)


class BlueMatching(ColoringOracle):
    """Blue perfect matching {2k, 2k+1}; everything else red."""

    kind = "blue-matching"

    def _blue(self, u, v):
        return (u >> 1) == (v >> 1)


class BlueRandom(ColoringOracle):
    kind = "blue-random"

    def __init__(self, N: int, p: float, seed: int):
        super().__init__(N)
        self.p = float(p)
        self.seed = int(seed)
        self._key = _key(self.seed)
        self._thr = _threshold(self.p)

    def _blue(self, u, v):
        return pair_hash(self._key, u, v) < self._thr

    def descriptor(self):
        return {"kind": self.kind, "N": self.N, "p": self.p, "seed": self.seed}


class BlueMultipartite(ColoringOracle):
    """Blue edges only between distinct parts, each present with probability p."""

    kind = "blue-multipartite"

    def __init__(self, N: int, parts: int, p: float, seed: int):
        super().__init__(N)
        if parts < 1:
            raise ColoringError("need at least one part")
        self.parts = int(parts)
        self.p = float(p)
        self.seed = int(seed)
        self._key = _key(self.seed)
        self._thr = _threshold(self.p)
        ids = np.arange(N, dtype=np.uint64)
        self.part = (splitmix64(ids ^ _key(self.seed, _PART_SALT)) % np.uint64(self.parts)).astype(np.int64)

    def _blue(self, u, v):
        return (self.part[u] != self.part[v]) & (pair_hash(self._key, u, v) < self._thr)

    def descriptor(self):
        return {"kind": self.kind, "N": self.N, "parts": self.parts, "p": self.p, "seed": self.seed}


class LowerBoundColoring(ColoringOracle):
    """s-1 red blocks of size m, blue between blocks."""

    kind = "lower-bound"

    def __init__(self, s: int, m: int):
        if s < 2 or m < 1:
            raise ColoringError("lower-bound colouring needs s >= 2 and m >= 1")
        super().__init__((s - 1) * m)
        self.s = int(s)
        self.m = int(m)

    def block(self, v):
        return _as_index(v) // self.m

    def _blue(self, u, v):
        return (u // self.m) != (v // self.m)

    def descriptor(self):
        return {"kind": self.kind, "N": self.N, "s": self.s, "m": self.m}


def make_oracle(desc: dict, base: Path | None = None) -> ColoringOracle:
    """Build an oracle from a generator descriptor (see README for the schema)."""
    kind = desc.get("kind")
    try:
        if kind == "all-red":
            return AllRed(int(desc["N"]))
        if kind == "blue-matching":
            return BlueMatching(int(desc["N"]))
        if kind == "blue-random":
            return BlueRandom(int(desc["N"]), float(desc["p"]), int(desc.get("seed", 0)))
        if kind == "blue-multipartite":
            return BlueMultipartite(int(desc["N"]), int(desc["parts"]), float(desc.get("p", 1.0)),
                                    int(desc.get("seed", 0)))
        if kind == "lower-bound":
            return LowerBoundColoring(int(desc["s"]), int(desc["m"]))
        if kind == "explicit-matrix":
            N = int(desc["N"])
            mat = np.zeros((N, N), dtype=bool)
            for a, b in desc.get("blue_edges", []):
                mat[a, b] = True
            return ExplicitColoring(mat)
        if kind == "file-backed":
            path = Path(desc["path"])
            if base is not None and not path.is_absolute():
                path = base / path
            o = read_matrix(path)
            if "N" in desc and int(desc["N"]) != o.N:
                raise ColoringError(f"descriptor N={desc['N']} but file holds N={o.N}")
            return o
    except KeyError as e:
        raise ColoringError(f"descriptor for {kind!r} lacks field {e.args[0]!r}") from None
    raise ColoringError(f"unknown oracle kind {kind!r}")


def load_descriptor(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


# explicit matrix files ----------------------------------------------------

def write_matrix(o: ColoringOracle, path: str | Path) -> None:
    """Write the RQCB format: magic, version byte, u64 LE N, per-row upper-triangle bits."""
    N = o.N
    with open(path, "wb") as fh:
        fh.write(MAGIC + bytes([VERSION]) + struct.pack("<Q", N))
        for u in range(N - 1):
            row = o.blue_mask(u, np.arange(u + 1, N))
            fh.write(np.packbits(row).tobytes())


def read_matrix(path: str | Path) -> ExplicitColoring:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ColoringError(f"{path}: bad magic")
    if data[4] != VERSION:
        raise ColoringError(f"{path}: unsupported version {data[4]}")
    (N,) = struct.unpack("<Q", data[5:13])
    mat = np.zeros((N, N), dtype=bool)
    pos = 13
    for u in range(N - 1):
        k = N - 1 - u
        nbytes = (k + 7) // 8
        chunk = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=pos)
        mat[u, u + 1:] = np.unpackbits(chunk)[:k].astype(bool)
        pos += nbytes
    if pos != len(data):
        raise ColoringError(f"{path}: trailing bytes")
    return ExplicitColoring(mat, path=str(path))


# queries --------------------------------------------------------------------

def color(o: ColoringOracle, u: int, v: int) -> Color:
    return o.color(u, v)


def blue_degree(o: ColoringOracle, v: int, X: Iterable[int]) -> int:
    if not 0 <= v < o.N:
        raise ColoringError(f"vertex {v} outside [0, {o.N})")
    X = np.unique(_as_index(list(X) if not isinstance(X, np.ndarray) else X))
    X = X[X != v]
    return int(o.blue_mask(v, X).sum())


def blue_adjacency_bits(o: ColoringOracle, S: Sequence[int]) -> list[int]:
    """Blue adjacency of ``S`` as Python-int bitsets over positions in ``S``."""
    S = _as_index(S)
    k = len(S)
    out = []
    step = max(1, _CHUNK // max(k, 1))
    for a in range(0, k, step):
        block = o.blue_matrix(S[a:a + step], S)
        packed = np.packbits(block[:, ::-1], axis=1)  # bit i of the int is position i
        for row in packed:
            out.append(int.from_bytes(row.tobytes(), "big") >> ((-k) % 8))
    return out


def _clique_search(adj: list[int], cand: int, t: int) -> list[int] | None:
    if t == 0:
        return []
    while cand:
        if cand.bit_count() < t:
            return None
        v = cand.bit_length() - 1
        cand &= ~(1 << v)
        sub = _clique_search(adj, cand & adj[v], t - 1)
        if sub is not None:
            return [v] + sub
    return None


@dataclass(frozen=True)
class CliqueSearch:
    clique: tuple[int, ...] | None
    status: str  # "found" | "absent" | "unconfirmed-absence"

    @property
    def found(self) -> bool:
        return self.clique is not None


class CapExceeded(ColoringError):
    pass


def find_blue_clique(o: ColoringOracle, S: Sequence[int], t: int, exact: bool = True,
                     cap: int = 2000) -> CliqueSearch:
    """Search ``S`` for a blue K_t.

    Exact mode is a bitset branch-and-bound and raises ``CapExceeded`` above
    ``cap`` vertices.  Heuristic mode only explores greedy descents and
    labels a negative answer ``unconfirmed-absence``.
    """
    if t < 2:
        raise ColoringError("t must be at least 2")
    S = np.unique(_as_index(S))
    if exact and len(S) > cap:
        raise CapExceeded(f"|S|={len(S)} exceeds exact cap {cap}")
    if len(S) < t:
        return CliqueSearch(None, "absent" if exact else "unconfirmed-absence")
    if exact:
        adj = blue_adjacency_bits(o, S)
        res = _clique_search(adj, (1 << len(S)) - 1, t)
        if res is None:
            return CliqueSearch(None, "absent")
        return CliqueSearch(tuple(sorted(int(S[i]) for i in res)), "found")
    # greedy: descend into blue neighbourhoods from each start vertex
    for start in S[: min(len(S), 64)]:
        clique = [int(start)]
        cand = S[o.blue_mask(int(start), S)]
        while len(clique) < t and len(cand):
            v = int(cand[0])
            clique.append(v)
            cand = cand[1:][o.blue_mask(v, cand[1:])]
        if len(clique) == t:
            return CliqueSearch(tuple(sorted(clique)), "found")
    return CliqueSearch(None, "unconfirmed-absence")


def is_red_clique(o: ColoringOracle, S: Sequence[int]) -> bool:
    S = _as_index(S)
    step = max(1, _CHUNK // max(len(S), 1))
    for a in range(0, len(S), step):
        if o.blue_matrix(S[a:a + step], S).any():
            return False
    return True


# embeddings -----------------------------------------------------------------

@dataclass(frozen=True)
class Embedding:
    n: int
    map: tuple[int, ...]

    def __post_init__(self):
        if len(self.map) != 1 << self.n:
            raise ColoringError(f"embedding of Q_{self.n} needs {1 << self.n} images")

    def to_dict(self) -> dict:
        return {"n": self.n, "map": list(self.map)}

    @classmethod
    def from_dict(cls, d: dict) -> "Embedding":
        return cls(int(d["n"]), tuple(int(x) for x in d["map"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Embedding":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class RedCubeVerdict:
    valid: bool
    violation: tuple[int, int] | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"valid": self.valid, "violation": list(self.violation) if self.violation else None,
                "reason": self.reason}


def verify_red_cube(o: ColoringOracle, e: Embedding) -> RedCubeVerdict:
    """Check injectivity and that every cube edge maps to a red pair."""
    img = np.asarray(e.map, dtype=np.int64)
    if len(img) and (img.min() < 0 or img.max() >= o.N):
        bad = int(np.nonzero((img < 0) | (img >= o.N))[0][0])
        return RedCubeVerdict(False, (bad, bad), "image out of range")
    order = np.argsort(img, kind="stable")
    dup = np.nonzero(img[order][1:] == img[order][:-1])[0]
    if len(dup):
        pairs = sorted((int(min(order[i], order[i + 1])), int(max(order[i], order[i + 1]))) for i in dup)
        return RedCubeVerdict(False, pairs[0], "not injective")
    edges = hypercube_edges(e.n)
    if len(edges):
        blue = o.blue_pairs(img[edges[:, 0]], img[edges[:, 1]])
        if blue.any():
            x, y = edges[np.argmax(blue)]
            return RedCubeVerdict(False, (int(x), int(y)), "blue cube edge")
    return RedCubeVerdict(True)
