import itertools

import numpy as np
import pytest

from cuberamsey.coloring import ExplicitColoring
from cuberamsey.cubes import Relation, random_multitiling, relation


def planted_coloring(n: int, mult: int, seed: int, copies: int = 3, frac: float = 0.5,
                     split: float = 0.6):
    """Red cliques planted on copies of a random tiling's cubes.

    Cliques for adjacent cubes get sparse random blue between them, well under
    the properness thresholds; every other pair is blue.
    """
    rng = np.random.default_rng(seed)
    t = random_multitiling(n, 3, rng, split)
    cubes = [c for c in t.cubes if c.level == 1] * copies
    sizes = [mult * c.cube.size for c in cubes]
    off = np.concatenate([[0], np.cumsum(sizes)])
    N = int(off[-1])
    B = np.ones((N, N), dtype=bool)
    for i, c in enumerate(cubes):
        B[off[i]:off[i + 1], off[i]:off[i + 1]] = False
        for j, c2 in enumerate(cubes):
            if i < j and relation(c.cube, c2.cube) is Relation.ADJACENT:
                d = max(c.codim, c2.codim)
                p = frac / (16 * d * d)
                B[off[i]:off[i + 1], off[j]:off[j + 1]] = rng.random((sizes[i], sizes[j])) < p
    return ExplicitColoring(np.triu(B, 1)), sorted({str(c.cube) for c in cubes})


@pytest.fixture(scope="session")
def planted6():
    return planted_coloring(5, 4, 6)


def all_cliques(adj_matrix: np.ndarray, t: int):
    """Brute-force enumeration of t-cliques of a boolean adjacency matrix."""
    n = len(adj_matrix)
    for S in itertools.combinations(range(n), t):
        if all(adj_matrix[a, b] for a, b in itertools.combinations(S, 2)):
            yield S
