"""Two-player AI development race with SAFE and UNSAFE development.

Race mechanics (this package's convention):

* every round a SAFE developer pays ``c`` and advances 1 step, an UNSAFE
  developer pays nothing and advances ``s`` steps;
* the round's leader(s) after moving share the intermediate benefit ``b``;
* the race stops in the first round in which someone reaches ``W`` steps,
  and the finisher(s) share the prize ``B``;
* afterwards each player that acted UNSAFE is hit by a disaster with
  probability ``p_r``, losing its whole accumulated payoff (with
  ``disaster_externality`` a disaster wipes out both players).

Strategies never change action within a race, so every episode is
deterministic up to the terminal disasters and expected payoffs have a
closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError
from .games import MatrixGame
from .population import EvoParams
from .rng import RngStream
from .wellmixed import stationary_monomorphic_distribution


class RaceStrategy(IntEnum):
    AS = 0  # always safe
    AU = 1  # always unsafe
    CS = 2  # commit, then play safe
    CU = 3  # commit, then play unsafe

    @property
    def safe(self) -> bool:
        return self in (RaceStrategy.AS, RaceStrategy.CS)

    @property
    def commits(self) -> bool:
        return self in (RaceStrategy.CS, RaceStrategy.CU)


@dataclass(frozen=True)
class RaceParams:
    W: float = 10.0
    s: float = 1.5
    c: float = 1.8
    b: float = 4.0
    B: float = 40.0
    p_r: float = 0.5
    disaster_externality: bool = False

    def __post_init__(self):
        if self.W < 1:
            raise InvalidParameterError("W must be >= 1")
        if not self.s > 1:
            raise InvalidParameterError("unsafe speed s must be > 1")
        if min(self.c, self.b, self.B) < 0:
            raise InvalidParameterError("c, b and B must be >= 0")
        if not 0 <= self.p_r <= 1:
            raise InvalidParameterError("disaster probability must be in [0, 1]")


@dataclass(frozen=True)
class RaceIncentive:
    variant: str = "none"
    pi: float = 0.0
    eps_c: float = 0.0

    def __post_init__(self):
        if self.variant not in ("none", "sanction", "commitment"):
            raise InvalidParameterError(f"unknown incentive {self.variant!r}")
        if self.pi < 0 or self.eps_c < 0:
            raise InvalidParameterError("fine and arrangement cost must be >= 0")

    @property
    def strategies(self) -> tuple[RaceStrategy, ...]:
        if self.variant == "commitment":
            return tuple(RaceStrategy)
        return (RaceStrategy.AS, RaceStrategy.AU)


NO_INCENTIVE = RaceIncentive()

# shipped phase-diagram defaults
DEFAULT_EVO = EvoParams(Z=100, beta=0.01)
DEFAULT_SANCTION = RaceIncentive("sanction", pi=10.0)
DEFAULT_COMMITMENT = RaceIncentive("commitment", pi=20.0, eps_c=1.0)
DEFAULT_S_GRID = tuple(float(x) for x in np.round(np.linspace(1.2, 5.0, 20), 10))
DEFAULT_PR_GRID = tuple(float(x) for x in np.round(np.linspace(0.0, 1.0, 20), 10))

# relative slack when comparing a position against the finish line
_FINISH_TOL = 1e-9


def race_trace(safe_a: bool, safe_b: bool, p: RaceParams) -> tuple[float, float]:
    """Accumulated payoffs of one race before any disaster is drawn."""
    speed = (1.0 if safe_a else p.s, 1.0 if safe_b else p.s)
    cost = (p.c if safe_a else 0.0, p.c if safe_b else 0.0)
    pos = [0.0, 0.0]
    pay = [0.0, 0.0]
    rounds = 0
    while True:
        rounds += 1
        pos[0] = rounds * speed[0]
        pos[1] = rounds * speed[1]
        pay[0] -= cost[0]
        pay[1] -= cost[1]
        lead = max(pos)
        leaders = [i for i in (0, 1) if pos[i] >= lead * (1 - _FINISH_TOL)]
        for i in leaders:
            pay[i] += p.b / len(leaders)
        finished = [i for i in (0, 1) if pos[i] >= p.W * (1 - _FINISH_TOL)]
        if finished:
            for i in finished:
                pay[i] += p.B / len(finished)
            return pay[0], pay[1]


def _unsafe_count(a: RaceStrategy, b: RaceStrategy) -> int:
    return (not a.safe) + (not b.safe)


def _overlay(a: RaceStrategy, b: RaceStrategy, pay: tuple[float, float], incentive: RaceIncentive,
             include_fines: bool = True) -> tuple[float, float]:
    out = list(pay)
    if incentive.variant == "sanction":
        if a.commits or b.commits:
            raise InvalidParameterError("commitment strategies need the commitment incentive")
        if include_fines:
            for i, st in enumerate((a, b)):
                if not st.safe:
                    out[i] -= incentive.pi
    elif incentive.variant == "commitment":
        if a.commits and b.commits:
            for i, st in enumerate((a, b)):
                out[i] -= incentive.eps_c / 2
                if include_fines and not st.safe:
                    out[i] -= incentive.pi
    elif a.commits or b.commits:
        raise InvalidParameterError("commitment strategies need the commitment incentive")
    return out[0], out[1]


def simulate_race_episode(a: RaceStrategy, b: RaceStrategy, p: RaceParams, rng: RngStream) -> tuple[float, float]:
    """One stochastic race without incentives."""
    a, b = RaceStrategy(a), RaceStrategy(b)
    pay = list(race_trace(a.safe, b.safe, p))
    hit = [(not st.safe) and rng.random() < p.p_r for st in (a, b)]
    if p.disaster_externality:
        if any(hit):
            pay = [0.0, 0.0]
    else:
        pay = [0.0 if h else x for h, x in zip(hit, pay)]
    return pay[0], pay[1]


def expected_pairwise_payoffs(
    a: RaceStrategy, b: RaceStrategy, p: RaceParams, incentive: RaceIncentive = NO_INCENTIVE,
    include_fines: bool = True,
) -> tuple[float, float]:
    """Exact expected payoffs of ``a`` and ``b``.

    ``include_fines=False`` leaves out sanctions, which are transfers to the
    institution rather than losses to society (used for welfare accounting).
    """
    a, b = RaceStrategy(a), RaceStrategy(b)
    pa, pb = race_trace(a.safe, b.safe, p)
    if p.disaster_externality:
        survive = (1.0 - p.p_r) ** _unsafe_count(a, b)
        base = (pa * survive, pb * survive)
    else:
        base = (pa if a.safe else pa * (1.0 - p.p_r), pb if b.safe else pb * (1.0 - p.p_r))
    return _overlay(a, b, base, incentive, include_fines)


def monte_carlo_pairwise_payoffs(
    a: RaceStrategy, b: RaceStrategy, p: RaceParams, incentive: RaceIncentive, episodes: int, rng: RngStream,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of both players' payoffs."""
    if episodes < 2:
        raise InvalidParameterError("need at least 2 episodes for an error estimate")
    a, b = RaceStrategy(a), RaceStrategy(b)
    samples = np.array([_overlay(a, b, simulate_race_episode(a, b, p, rng), incentive) for _ in range(episodes)])
    return samples.mean(axis=0), samples.std(axis=0, ddof=1) / math.sqrt(episodes)


def race_payoff_matrix(p: RaceParams, incentive: RaceIncentive = NO_INCENTIVE,
                       include_fines: bool = True) -> MatrixGame:
    strategies = incentive.strategies
    k = len(strategies)
    m = np.empty((k, k))
    for i, x in enumerate(strategies):
        for j, y in enumerate(strategies):
            m[i, j] = expected_pairwise_payoffs(x, y, p, incentive, include_fines)[0]
    return MatrixGame(m, labels=tuple(s.name for s in strategies))


@dataclass(frozen=True)
class PhaseCell:
    s: float
    p_r: float
    region: str
    unsafe_freq: float
    welfare_AS: float
    welfare_AU: float
    welfare: float

    def as_row(self) -> dict:
        return {
            "s": self.s,
            "p_r": self.p_r,
            "region": self.region,
            "unsafe_freq": self.unsafe_freq,
            "welfare_AS": self.welfare_AS,
            "welfare_AU": self.welfare_AU,
            "welfare": self.welfare,
        }


def _region(prefers_safe: bool, selects_safe: bool) -> str:
    if prefers_safe and selects_safe:
        return "I"
    if prefers_safe:
        return "II"
    if not selects_safe:
        return "III"
    return "X"


def classify_governance_region(p: RaceParams, evo: EvoParams) -> str:
    """Region of the no-incentive phase diagram.

    Preferred outcome: whichever homogeneous population (all AS or all AU)
    earns more.  Selected outcome: whichever strategy holds more than half
    of the small-mutation stationary distribution.
    """
    return evaluate_cell(p, evo, NO_INCENTIVE).region


def evaluate_cell(p: RaceParams, evo: EvoParams, incentive: RaceIncentive = NO_INCENTIVE) -> PhaseCell:
    welfare_as = expected_pairwise_payoffs(RaceStrategy.AS, RaceStrategy.AS, p)[0]
    welfare_au = expected_pairwise_payoffs(RaceStrategy.AU, RaceStrategy.AU, p)[0]
    base_pi = stationary_monomorphic_distribution(race_payoff_matrix(p), evo)
    region = _region(welfare_as > welfare_au, base_pi[RaceStrategy.AU] <= 0.5)
    if incentive.variant == "none":
        pi = base_pi
    else:
        pi = stationary_monomorphic_distribution(race_payoff_matrix(p, incentive), evo)
    strategies = incentive.strategies
    unsafe = float(sum(w for w, st in zip(pi, strategies) if not st.safe))
    homogeneous = race_payoff_matrix(p, incentive, include_fines=False).payoff.diagonal()
    return PhaseCell(p.s, p.p_r, region, unsafe, welfare_as, welfare_au, float(pi @ homogeneous))


def _check_grid(name: str, grid: Sequence[float]) -> list[float]:
    grid = [float(x) for x in grid]
    if not grid:
        raise InvalidParameterError(f"{name} grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError(f"{name} grid must be strictly ascending")
    return grid


def sweep_phase_diagram(
    s_grid: Sequence[float],
    p_r_grid: Sequence[float],
    template: RaceParams,
    evo: EvoParams,
    incentive: RaceIncentive = NO_INCENTIVE,
) -> list[PhaseCell]:
    """Evaluate every (s, p_r) cell, s-major, in grid order.

    ``region`` is always the no-incentive classification of the cell, so
    panels with and without incentives can be compared cell by cell.
    """
    s_grid = _check_grid("s", s_grid)
    p_r_grid = _check_grid("p_r", p_r_grid)
    return [
        evaluate_cell(replace(template, s=s, p_r=pr), evo, incentive)
        for s in s_grid
        for pr in p_r_grid
    ]
