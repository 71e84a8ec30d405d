"""Online combinatorial optimisation with OSMD and Exp2.

Action sets, Legendre functions and Bregman projections, the two players,
lower-bound adversaries, a seeded game harness and independent oracles.
"""

from .action_sets import (
    DagPaths, Exp2LowerBound, MSet, ParallelGames, Ranking, build_action_set,
)
from .decomposition import decompose, sample_vertex
from .environments import build_adversary, observe
from .exp2 import Exp2
from .harness import PlayerSpec, SweepConfig, pseudo_regret, run_game, sweep
from .legendre import negentropy, parse_legendre
from .osmd import OSMD, regret_bound, tuned_eta
from .projection import bregman_project

__all__ = [
    "DagPaths", "Exp2", "Exp2LowerBound", "MSet", "OSMD", "ParallelGames", "PlayerSpec",
    "Ranking", "SweepConfig", "bregman_project", "build_action_set", "build_adversary", "decompose",
    "negentropy", "observe", "parse_legendre", "pseudo_regret", "regret_bound", "run_game",
    "sample_vertex", "sweep", "tuned_eta",
]
__version__ = "0.1.0"
