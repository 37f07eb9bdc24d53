"""Red hypercubes in two-coloured complete graphs without a blue K_s.

The package builds a red copy of Q_n by preprocessing the colouring into
leveled families of blue-clique-free sets, tiling Q_n with special subcubes
matched to those sets, pruning by blue degree and embedding greedily.
Supporting tools cover subcube algebra, small Ramsey numbers, power-sum
bounds, lower-bound colourings and separator decompositions.
"""
from .coloring import Embedding, make_oracle, verify_red_cube
from .cubes import LeveledCube, MultiTiling, SpecialCube, contains, relation
from .errors import ConfigError, HonestFailure, InvariantBreach
from .pipeline import RunReport, run_pipeline
from .regime import RegimeParams

__version__ = "0.1.0"

__all__ = ["ConfigError", "Embedding", "HonestFailure", "InvariantBreach", "LeveledCube",
           "MultiTiling", "RegimeParams", "RunReport", "SpecialCube", "contains", "make_oracle",
           "relation", "run_pipeline", "verify_red_cube"]
