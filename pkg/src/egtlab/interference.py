"""External investment schemes that reward agents playing a desired strategy.

Three decision rules are supported:

``pop_threshold``
    reward every desired-strategy agent when the number of such agents in
    the whole population is at most ``t`` (``t = Z - 1`` therefore rewards
    whenever at least one agent is not yet desired, the unconditional limit);
``neighborhood_threshold``
    reward a desired-strategy node when at most ``n_t`` of its neighbours
    play the desired strategy (graph populations only);
``unconditional``
    always reward every desired-strategy agent.

``direction="ge"`` flips both threshold comparisons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError
from .population import PopulationState

KINDS = ("pop_threshold", "neighborhood_threshold", "unconditional")


@dataclass(frozen=True)
class InterferenceScheme:
    kind: str
    theta: float
    desired: int = 0
    t: int | None = None
    n_t: int | None = None
    direction: str = "le"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown scheme kind {self.kind!r}; expected one of {KINDS}")
        if not self.theta >= 0:
            raise InvalidParameterError("reward theta must be >= 0")
        if self.direction not in ("le", "ge"):
            raise InvalidParameterError("direction must be 'le' or 'ge'")
        if self.kind == "pop_threshold" and (self.t is None or self.t < 1):
            raise InvalidParameterError("pop_threshold needs an integer t >= 1")
        if self.kind == "neighborhood_threshold" and (self.n_t is None or self.n_t < 0):
            raise InvalidParameterError("neighborhood_threshold needs an integer n_t >= 0")

    def _passes(self, count: int, threshold: int) -> bool:
        return count <= threshold if self.direction == "le" else count >= threshold


@dataclass(frozen=True)
class Investments:
    """Agents rewarded during one generation."""

    agents: np.ndarray
    theta: float

    @property
    def cost(self) -> float:
        return self.theta * len(self.agents)

    def __len__(self) -> int:
        return len(self.agents)


@dataclass
class CostLedger:
    per_generation: list[float] = field(default_factory=list)

    def record(self, cost: float) -> None:
        if cost < 0:
            raise InvalidParameterError("investment cost cannot be negative")
        self.per_generation.append(float(cost))

    @property
    def total(self) -> float:
        return math.fsum(self.per_generation)


_EMPTY = np.zeros(0, dtype=np.int64)


def decide_investments(scheme: InterferenceScheme, context) -> Investments:
    """Investment set for a well-mixed state or a ``(graph, strategies)`` pair.

    Well-mixed agents are indexed in strategy order: the agents of strategy
    ``s`` occupy ``sum(counts[:s]) .. sum(counts[:s+1]) - 1``.
    """
    if isinstance(context, PopulationState):
        counts = context.counts
        if scheme.kind == "neighborhood_threshold":
            raise InvalidParameterError("neighborhood_threshold needs a graph context")
        if not 0 <= scheme.desired < len(counts):
            raise InvalidParameterError("desired strategy not present in the game")
        if scheme.kind == "pop_threshold" and scheme.t > context.Z - 1:
            raise InvalidParameterError(f"t must be in [1, Z-1] = [1, {context.Z - 1}]")
        k = counts[scheme.desired]
        if k == 0 or (scheme.kind == "pop_threshold" and not scheme._passes(k, scheme.t)):
            return Investments(_EMPTY, scheme.theta)
        start = sum(counts[: scheme.desired])
        return Investments(np.arange(start, start + k, dtype=np.int64), scheme.theta)

    try:
        graph, strategies = context
    except (TypeError, ValueError):
        raise InvalidParameterError(
            "context must be a PopulationState or a (Graph, strategies) pair"
        ) from None
    strategies = np.asarray(strategies)
    if len(strategies) != graph.N:
        raise InvalidParameterError("one strategy per node required")
    is_desired = strategies == scheme.desired
    nodes = np.flatnonzero(is_desired)
    if len(nodes) == 0:
        return Investments(_EMPTY, scheme.theta)
    if scheme.kind == "unconditional":
        return Investments(nodes, scheme.theta)
    if scheme.kind == "pop_threshold":
        if scheme.t > graph.N - 1:
            raise InvalidParameterError(f"t must be in [1, N-1] = [1, {graph.N - 1}]")
        return Investments(nodes if scheme._passes(len(nodes), scheme.t) else _EMPTY, scheme.theta)
    if scheme.n_t > graph.degrees.max():
        raise InvalidParameterError("n_t exceeds the maximum degree of the graph")
    # desired-neighbour count of every node
    nb = np.bincount(graph.rows, weights=is_desired[graph.indices], minlength=graph.N)
    if scheme.direction == "le":
        chosen = nb[nodes] <= scheme.n_t
    else:
        chosen = nb[nodes] >= scheme.n_t
    return Investments(nodes[chosen], scheme.theta)


def apply_investments(fitnesses: Sequence[float], investments: Investments) -> np.ndarray:
    out = np.array(fitnesses, dtype=float)
    out[investments.agents] += investments.theta
    return out


def strategy_rewards(scheme: InterferenceScheme | None, state: PopulationState) -> tuple[np.ndarray, float]:
    """Per-strategy reward vector and cost of one well-mixed generation."""
    rewards = np.zeros(state.n)
    if scheme is None:
        return rewards, 0.0
    inv = decide_investments(scheme, state)
    if len(inv):
        rewards[scheme.desired] = scheme.theta
    return rewards, inv.cost


@dataclass(frozen=True)
class EfficiencyReport:
    final_coop: float
    mean_coop: float
    total_cost: float
    coop_per_unit_cost: float

    def as_row(self) -> dict:
        return {
            "final_coop": self.final_coop,
            "mean_coop": self.mean_coop,
            "total_cost": self.total_cost,
            "coop_per_unit_cost": self.coop_per_unit_cost,
        }


def efficiency_report(coop: Sequence[float], ledger: CostLedger) -> EfficiencyReport:
    """Summarise a cooperation-fraction series and its investment ledger.

    ``coop_per_unit_cost`` is ``inf`` when cooperation was obtained for free.
    """
    coop = np.asarray(coop, dtype=float)
    if coop.size == 0:
        raise InvalidParameterError("empty trajectory")
    mean = float(coop.mean())
    total = ledger.total
    if total > 0:
        ratio = mean / total
    else:
        ratio = math.inf if mean > 0 else 0.0
    return EfficiencyReport(float(coop[-1]), mean, total, ratio)
