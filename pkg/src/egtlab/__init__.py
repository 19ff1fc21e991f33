"""Finite-population evolutionary game dynamics.

Submodules:

* :mod:`egtlab.games`, :mod:`egtlab.trust`: games and per-encounter payoffs
* :mod:`egtlab.wellmixed`: Fermi-rule dynamics, fixation and stationary distributions
* :mod:`egtlab.network`: lattice and scale-free populations
* :mod:`egtlab.interference`: external investment schemes
* :mod:`egtlab.airace`: AI development race and its governance phase diagram
* :mod:`egtlab.equilibria`: internal equilibria of random games
* :mod:`egtlab.harness`: configs, seeded sweeps and CSV output
"""
from .errors import (
    DegenerateSampleError,
    EgtLabError,
    InvalidParameterError,
    NumericalError,
    StructuralError,
)
from .games import MatrixGame, PayoffTable, donation_game
from .population import EvoParams, PopulationState
from .rng import SeedPolicy, make_rng

__version__ = "0.1.0"
