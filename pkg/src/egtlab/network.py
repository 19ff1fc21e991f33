"""Strategy dynamics on graphs.

Nodes play a 2-player matrix game with each neighbour; fitness is the mean
(optionally summed) payoff over those encounters.  Two update rules:

* ``fermi_async`` -- a random node compares itself with a random neighbour
  and imitates it with the Fermi probability; one generation is N updates;
* ``imitate_best_sync`` -- every node simultaneously adopts the strategy of
  the fittest member of its closed neighbourhood if that member is strictly
  fitter than itself; ties between equally fit candidates go to the lowest
  node index.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, StructuralError
from .games import MatrixGame
from .interference import CostLedger, InterferenceScheme, decide_investments
from .rng import RngStream


@dataclass(frozen=True, eq=False)
class Graph:
    N: int
    kind: str
    indptr: np.ndarray
    indices: np.ndarray
    params: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, N: int, edges, kind: str = "custom", **params) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(N)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < N and 0 <= v < N):
                raise StructuralError(f"edge ({u}, {v}) outside node range [0, {N})")
            if u == v:
                raise StructuralError(f"self-loop at node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        indptr = np.zeros(N + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(s) for s in nbrs])
        indices = np.fromiter((v for s in nbrs for v in sorted(s)), dtype=np.int64, count=int(indptr[-1]))
        indptr.setflags(write=False)
        indices.setflags(write=False)
        return cls(N, kind, indptr, indices, params)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def rows(self) -> np.ndarray:
        """Source node of every entry of ``indices``."""
        return np.repeat(np.arange(self.N), self.degrees)

    @property
    def n_edges(self) -> int:
        return int(self.indptr[-1]) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def _adj(self) -> list[list[int]]:
        # shared by the update loops; never mutated
        return [self.neighbors(v).tolist() for v in range(self.N)]

    def adjacency_lists(self) -> list[list[int]]:
        return [list(nb) for nb in self._adj]

    def edges(self) -> list[tuple[int, int]]:
        r = self.rows
        mask = r < self.indices
        return list(zip(r[mask].tolist(), self.indices[mask].tolist()))

    def is_connected(self) -> bool:
        if self.N == 0:
            return True
        seen = np.zeros(self.N, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return bool(seen.all())

    # -- edge-list exchange format ----------------------------------------

    def to_edge_list(self) -> str:
        return "\n".join([str(self.N), *(f"{u} {v}" for u, v in self.edges())]) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "Graph":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines or len(lines[0]) != 1:
            raise StructuralError("edge list must start with a single node-count line")
        N = int(lines[0][0])
        edges = []
        for lineno, parts in enumerate(lines[1:], start=2):
            if len(parts) != 2:
                raise StructuralError(f"line {lineno}: expected 'u v'")
            edges.append((int(parts[0]), int(parts[1])))
        return cls.from_edges(N, edges)


def lattice_graph(L: int, periodic: bool = True) -> Graph:
    """L x L square lattice with von Neumann (4-neighbour) connectivity."""
    if L < 2:
        raise InvalidParameterError("lattice side L must be >= 2")
    edges = []
    for r in range(L):
        for c in range(L):
            v = r * L + c
            if periodic or c + 1 < L:
                edges.append((v, r * L + (c + 1) % L))
            if periodic or r + 1 < L:
                edges.append((v, ((r + 1) % L) * L + c))
    # L == 2 on a torus folds both neighbours in a direction onto one node
    edges = [(u, v) for u, v in edges if u != v]
    return Graph.from_edges(L * L, edges, kind="lattice2d", L=L, periodic=periodic)


def scale_free_graph(N: int, m: int, rng: RngStream) -> Graph:
    """Barabasi-Albert preferential attachment grown from an (m+1)-clique."""
    if not N > m >= 1:
        raise InvalidParameterError(f"scale-free graph needs N > m >= 1, got N={N}, m={m}")
    edges = [(u, v) for u in range(m + 1) for v in range(u + 1, m + 1)]
    # every node appears once per incident edge, so uniform picks are degree-weighted
    endpoints = [x for e in edges for x in e]
    for new in range(m + 1, N):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(endpoints[int(rng.integers(len(endpoints)))])
        for t in sorted(targets):
            edges.append((new, t))
            endpoints.extend((new, t))
    return Graph.from_edges(N, edges, kind="scale_free", m=m)


def complete_graph(N: int) -> Graph:
    if N < 2:
        raise InvalidParameterError("complete graph needs N >= 2")
    return Graph.from_edges(N, [(u, v) for u in range(N) for v in range(u + 1, N)], kind="complete")


def generate_graph(kind: str, rng: RngStream | None = None, **params) -> Graph:
    if kind == "lattice2d":
        return lattice_graph(params["L"], params.get("periodic", True))
    if kind == "scale_free":
        if rng is None:
            raise InvalidParameterError("scale-free generation needs a random stream")
        return scale_free_graph(params["N"], params["m"], rng)
    if kind == "complete":
        return complete_graph(params["N"])
    raise InvalidParameterError(f"unknown graph kind {kind!r}")


# -- fitness ------------------------------------------------------------------


def all_fitness(g: Graph, strategies: Sequence[int], game: MatrixGame, accumulated: bool = False) -> np.ndarray:
    s = np.asarray(strategies)
    deg = g.degrees
    if (deg == 0).any():
        raise StructuralError(f"node {int(np.flatnonzero(deg == 0)[0])} has no neighbours")
    pay = game.payoff[s[g.rows], s[g.indices]]
    total = np.bincount(g.rows, weights=pay, minlength=g.N)
    return total if accumulated else total / deg


def node_fitness(g: Graph, strategies: Sequence[int], game: MatrixGame, v: int, accumulated: bool = False) -> float:
    nb = g.neighbors(v)
    if len(nb) == 0:
        raise StructuralError(f"node {v} has no neighbours")
    s = np.asarray(strategies)
    total = float(game.payoff[s[v], s[nb]].sum())
    return total if accumulated else total / len(nb)


def _node_bonus(g: Graph, strategies: np.ndarray, scheme: InterferenceScheme | None) -> tuple[np.ndarray, float]:
    bonus = np.zeros(g.N)
    if scheme is None:
        return bonus, 0.0
    inv = decide_investments(scheme, (g, strategies))
    bonus[inv.agents] = inv.theta
    return bonus, inv.cost


# -- update rules -------------------------------------------------------------


@dataclass(frozen=True)
class UpdateRule:
    variant: str
    beta: float | None = None
    accumulated: bool = False

    def __post_init__(self):
        if self.variant not in ("fermi_async", "imitate_best_sync"):
            raise InvalidParameterError(f"unknown update rule {self.variant!r}")
        if self.variant == "fermi_async" and (self.beta is None or self.beta < 0):
            raise InvalidParameterError("fermi_async needs beta >= 0")


def _fermi_updates(adj, s: list[int], payoff, beta: float, bonus, desired: int,
                   nodes, picks, coins, accumulated: bool) -> None:
    """Asynchronous Fermi updates on ``s`` in place, from pre-drawn numbers.

    ``bonus[v]`` is paid to ``v`` only while it still plays ``desired``.
    """
    exp = math.exp
    for v, pick, coin in zip(nodes, picks, coins):
        nb = adj[v]
        u = nb[int(pick * len(nb))]
        sv, su = s[v], s[u]
        if sv == su:
            continue
        row = payoff[sv]
        fv = 0.0
        for w in nb:
            fv += row[s[w]]
        nbu = adj[u]
        row = payoff[su]
        fu = 0.0
        for w in nbu:
            fu += row[s[w]]
        if not accumulated:
            fv /= len(nb)
            fu /= len(nbu)
        if sv == desired:
            fv += bonus[v]
        if su == desired:
            fu += bonus[u]
        x = beta * (fu - fv)
        if x >= 0:
            p = 1.0 / (1.0 + exp(-x))
        else:
            e = exp(x)
            p = e / (1.0 + e)
        if coin < p:
            s[v] = su


def update_fermi_async(
    g: Graph,
    strategies: Sequence[int],
    game: MatrixGame,
    beta: float,
    scheme: InterferenceScheme | None = None,
    rng: RngStream | None = None,
    accumulated: bool = False,
) -> np.ndarray:
    """One asynchronous update; investments are decided on the given state."""
    if rng is None:
        raise InvalidParameterError("an explicit random stream is required")
    s = np.asarray(strategies)
    bonus, _ = _node_bonus(g, s, scheme)
    out = s.tolist()
    v = int(rng.integers(g.N))
    if g.degrees[v] == 0:
        raise StructuralError(f"node {v} has no neighbours")
    _fermi_updates(g._adj, out, game.payoff.tolist(), beta, bonus.tolist(),
                   scheme.desired if scheme else -1, [v], [rng.random()], [rng.random()], accumulated)
    return np.array(out, dtype=s.dtype)


def _imitate_best(g: Graph, s: np.ndarray, game: MatrixGame, bonus: np.ndarray, desired: int,
                  accumulated: bool) -> np.ndarray:
    f = all_fitness(g, s, game, accumulated)
    f = f + np.where(s == desired, bonus, 0.0)
    # best neighbour per node: highest fitness, lowest index among ties
    nb_f = f[g.indices]
    seg_max = np.maximum.reduceat(nb_f, g.indptr[:-1])
    is_best = nb_f == seg_max[g.rows]
    big = np.iinfo(np.int64).max
    best_idx = np.minimum.reduceat(np.where(is_best, g.indices, big), g.indptr[:-1])
    switch = seg_max > f
    out = s.copy()
    out[switch] = s[best_idx[switch]]
    return out


def update_imitate_best_sync(
    g: Graph,
    strategies: Sequence[int],
    game: MatrixGame,
    scheme: InterferenceScheme | None = None,
    accumulated: bool = False,
) -> np.ndarray:
    s = np.asarray(strategies)
    if (g.degrees == 0).any():
        raise StructuralError("imitate-best needs every node to have a neighbour")
    bonus, _ = _node_bonus(g, s, scheme)
    return _imitate_best(g, s, game, bonus, scheme.desired if scheme else -1, accumulated)


@dataclass
class NetworkRun:
    coop: np.ndarray  # cooperator fraction after each generation
    cumulative_cost: np.ndarray
    ledger: CostLedger
    final: np.ndarray


def run_network_sim(
    g: Graph,
    initial: Sequence[int],
    rule: UpdateRule,
    game: MatrixGame,
    scheme: InterferenceScheme | None,
    generations: int,
    rng: RngStream | None = None,
    cooperator: int = 0,
) -> NetworkRun:
    """Run ``generations`` generations; investments are decided once per generation."""
    if generations < 1:
        raise InvalidParameterError("generations must be >= 1")
    s = np.array(initial, dtype=np.int64)
    if len(s) != g.N:
        raise InvalidParameterError("one strategy per node required")
    if s.min() < 0 or s.max() >= game.n:
        raise InvalidParameterError("node strategy outside the game's strategy set")
    if (g.degrees == 0).any():
        raise StructuralError("every node needs at least one neighbour")
    if rule.variant == "fermi_async" and rng is None:
        raise InvalidParameterError("fermi_async needs a random stream")
    desired = scheme.desired if scheme else -1
    ledger = CostLedger()
    coop = np.empty(generations)
    cum = np.empty(generations)
    spent = 0.0
    adj = g._adj if rule.variant == "fermi_async" else None
    payoff = game.payoff.tolist()
    for gen in range(generations):
        bonus, cost = _node_bonus(g, s, scheme)
        if scheme is not None:
            ledger.record(cost)
            spent += cost
        if rule.variant == "fermi_async":
            nodes = rng.integers(0, g.N, size=g.N).tolist()
            picks = rng.random(g.N).tolist()
            coins = rng.random(g.N).tolist()
            cur = s.tolist()
            _fermi_updates(adj, cur, payoff, rule.beta, bonus.tolist(), desired,
                           nodes, picks, coins, rule.accumulated)
            s = np.array(cur, dtype=np.int64)
        else:
            s = _imitate_best(g, s, game, bonus, desired, rule.accumulated)
        coop[gen] = np.count_nonzero(s == cooperator) / g.N
        cum[gen] = spent
    return NetworkRun(coop, cum, ledger, s)


def strategies_to_csv(strategies: Sequence[int]) -> str:
    return "node,strategy\n" + "".join(f"{v},{int(x)}\n" for v, x in enumerate(strategies))


def strategies_from_csv(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "node,strategy":
        raise StructuralError("strategy snapshot must start with header 'node,strategy'")
    rows = [ln.split(",") for ln in lines[1:]]
    nodes = [int(r[0]) for r in rows]
    if nodes != list(range(len(nodes))):
        raise StructuralError("strategy snapshot must list nodes 0..N-1 in order")
    return np.array([int(r[1]) for r in rows], dtype=np.int64)
