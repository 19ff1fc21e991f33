"""Stochastic dynamics of a finite well-mixed population.

Social learning follows the pairwise-comparison (Fermi) rule: a randomly
chosen focal agent compares itself with a randomly chosen model and copies
it with probability ``1 / (1 + exp(beta * (f_focal - f_model)))``.  Fitness
is the expected payoff over co-player groups drawn without replacement from
the rest of the population, computed exactly (no sampling).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import expit, logsumexp

from .errors import InvalidParameterError, NumericalError
from .games import MatrixGame, PayoffTable
from .interference import CostLedger, InterferenceScheme, strategy_rewards
from .population import EvoParams, PopulationState
from .rng import RngStream

GameLike = Union[MatrixGame, PayoffTable]


def _as_table(game: GameLike) -> PayoffTable:
    return game.as_table() if isinstance(game, MatrixGame) else game


def fermi_probability(f_a, f_b, beta: float):
    """Probability that an agent with fitness ``f_a`` imitates one with ``f_b``."""
    if np.any(np.asarray(beta) < 0):
        raise InvalidParameterError("beta must be >= 0")
    return expit(beta * (np.asarray(f_b, float) - np.asarray(f_a, float)))


def _group_weights(coplayers: np.ndarray, table: PayoffTable) -> np.ndarray:
    """Hypergeometric probability of every composition of the d-1 co-players."""
    total = int(coplayers.sum())
    m = table.d - 1
    denom = math.comb(total, m)
    w = np.empty(len(table.comps))
    for idx, comp in enumerate(table.comps):
        num = 1
        for k, j in zip(coplayers, comp):
            num *= math.comb(int(k), j)
        w[idx] = num / denom
    return w


def hypergeometric_fitness(state: PopulationState, table: GameLike, focal: int) -> float:
    table = _as_table(table)
    if state.n != table.n:
        raise InvalidParameterError("state and game disagree on the number of strategies")
    if state.Z < table.d:
        raise InvalidParameterError(f"population size Z={state.Z} smaller than group size d={table.d}")
    if state.counts[focal] < 1:
        raise InvalidParameterError(f"no agent plays strategy {focal}")
    co = state.as_array()
    co[focal] -= 1
    return float(_group_weights(co, table) @ table.payoffs[focal])


def fitness_vector(state: PopulationState, table: GameLike) -> np.ndarray:
    """Fitness of every strategy present in ``state`` (NaN for absent ones)."""
    table = _as_table(table)
    out = np.full(table.n, np.nan)
    for i, k in enumerate(state.counts):
        if k:
            out[i] = hypergeometric_fitness(state, table, i)
    return out


def fitness_profiles(table: GameLike, invader: int, resident: int, Z: int) -> tuple[np.ndarray, np.ndarray]:
    """Invader and resident fitness for ``k = 1 .. Z-1`` invaders."""
    table = _as_table(table)
    if Z < table.d:
        raise InvalidParameterError(f"population size Z={Z} smaller than group size d={table.d}")
    f_inv = np.empty(Z - 1)
    f_res = np.empty(Z - 1)
    for k in range(1, Z):
        counts = [0] * table.n
        counts[invader] += k
        counts[resident] += Z - k
        st = PopulationState(tuple(counts))
        f_inv[k - 1] = hypergeometric_fitness(st, table, invader)
        f_res[k - 1] = hypergeometric_fitness(st, table, resident)
    return f_inv, f_res


def log_fixation_probability(game: GameLike, invader: int, resident: int, p: EvoParams) -> float:
    """Natural log of :func:`fixation_probability`, safe against underflow."""
    if invader == resident:
        raise InvalidParameterError("invader and resident must differ")
    f_inv, f_res = fitness_profiles(game, invader, resident, p.Z)
    log_terms = np.concatenate(([0.0], np.cumsum(-p.beta * (f_inv - f_res))))
    return float(-logsumexp(log_terms))


def fixation_probability(game: GameLike, invader: int, resident: int, p: EvoParams) -> float:
    """Probability that one invader takes over a resident population (no mutation).

    Uses the product formula ``1 / (1 + sum_i prod_{k<=i} T-(k)/T+(k))`` with
    ``T-(k)/T+(k) = exp(-beta * (f_inv(k) - f_res(k)))``, summed in log space.
    """
    return math.exp(log_fixation_probability(game, invader, resident, p))


def _log_rates(game: GameLike, p: EvoParams) -> np.ndarray:
    table = _as_table(game)
    n = table.n
    logr = np.full((n, n), -np.inf)
    for res in range(n):
        for inv in range(n):
            if inv != res:
                logr[res, inv] = log_fixation_probability(table, inv, res, p) - math.log(n - 1)
    return logr


def monomorphic_transition_matrix(game: GameLike, p: EvoParams) -> np.ndarray:
    """Small-mutation embedded chain over the n monomorphic states.

    Entry ``[r, i]`` is the probability that the population moves from
    resident ``r`` to ``i``, i.e. ``rho(i invades r) / (n - 1)``.
    """
    m = np.exp(_log_rates(game, p))
    np.fill_diagonal(m, 0.0)
    np.fill_diagonal(m, 1.0 - m.sum(axis=1))
    return m


def stationary_monomorphic_distribution(game: GameLike, p: EvoParams) -> np.ndarray:
    """Stationary distribution of the small-mutation chain.

    Grassmann-Taksar-Heyman state reduction carried out on log rates: only
    sums of positive terms appear, so even tiny entries keep full relative
    accuracy and nothing underflows at strong selection.
    """
    logr = _log_rates(game, p)
    n = logr.shape[0]
    lg = logr.copy()
    for k in range(n - 1, 0, -1):
        out = logsumexp(lg[k, :k])
        if not np.isfinite(out):
            raise NumericalError(f"state {k} cannot reach lower states; log rates=\n{logr}")
        lg[:k, k] -= out
        for i in range(k):
            for j in range(k):
                if i != j:
                    lg[i, j] = np.logaddexp(lg[i, j], lg[i, k] + lg[k, j])
    log_pi = np.zeros(n)
    for k in range(1, n):
        log_pi[k] = logsumexp(log_pi[:k] + lg[:k, k])
    return np.exp(log_pi - logsumexp(log_pi))


# -- stochastic simulation --------------------------------------------------


class _FitnessCache:
    def __init__(self, table: PayoffTable):
        self.table = table
        self._memo: dict[tuple[int, ...], np.ndarray] = {}

    def __call__(self, counts: tuple[int, ...]) -> np.ndarray:
        f = self._memo.get(counts)
        if f is None:
            f = fitness_vector(PopulationState(counts), self.table)
            self._memo[counts] = f
        return f


def _expit(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _apply_step(counts: list[int], fit: _FitnessCache, rewards: np.ndarray, beta: float, mu: float,
                u_focal: int, u_model: int, r_mut: float, new_strategy: int, r_copy: float) -> None:
    """Update ``counts`` in place from pre-drawn random numbers."""
    cum = 0
    focal = 0
    for focal, k in enumerate(counts):
        cum += k
        if u_focal < cum:
            break
    if r_mut < mu:
        counts[focal] -= 1
        counts[new_strategy] += 1
        return
    # model is uniform over the other Z - 1 agents
    v = u_model + (u_model >= u_focal)
    cum = 0
    model = 0
    for model, k in enumerate(counts):
        cum += k
        if v < cum:
            break
    if model == focal:
        return
    f = fit(tuple(counts))
    if r_copy < _expit(beta * ((f[model] + rewards[model]) - (f[focal] + rewards[focal]))):
        counts[focal] -= 1
        counts[model] += 1


def _draws(rng: RngStream, size: int, Z: int, n: int):
    return (
        rng.integers(0, Z, size=size),
        rng.integers(0, Z - 1, size=size),
        rng.random(size),
        rng.integers(0, n, size=size),
        rng.random(size),
    )


def evolve_step(
    state: PopulationState,
    game: GameLike,
    p: EvoParams,
    scheme: InterferenceScheme | None = None,
    rng: RngStream | None = None,
    rewards: np.ndarray | None = None,
) -> PopulationState:
    """One asynchronous update.

    With ``scheme`` and no explicit ``rewards`` the investment decision is
    taken on ``state`` itself.
    """
    if rng is None:
        raise InvalidParameterError("an explicit random stream is required")
    table = _as_table(game)
    if rewards is None:
        rewards, _ = strategy_rewards(scheme, state)
    counts = list(state.counts)
    draws = _draws(rng, 1, state.Z, state.n)
    _apply_step(counts, _FitnessCache(table), rewards, p.beta, p.mu, *(d[0] for d in draws))
    return PopulationState(tuple(counts))


@dataclass
class Trajectory:
    counts: np.ndarray  # shape (steps + 1, n); row 0 is the initial state
    cumulative_cost: np.ndarray  # shape (steps + 1,)
    ledger: CostLedger = field(default_factory=CostLedger)

    def fraction(self, strategy: int) -> np.ndarray:
        return self.counts[:, strategy] / self.counts[0].sum()

    def generation_fractions(self, strategy: int, Z: int) -> np.ndarray:
        """Fraction of ``strategy`` at the end of every complete generation."""
        return self.counts[Z::Z, strategy] / Z

    def write_csv(self, path) -> None:
        n = self.counts.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", *(f"count_{i}" for i in range(n)), "cumulative_cost"])
            for step, (row, cost) in enumerate(zip(self.counts, self.cumulative_cost)):
                w.writerow([step, *map(int, row), repr(float(cost))])


def simulate_trajectory(
    initial: PopulationState,
    game: GameLike,
    p: EvoParams,
    scheme: InterferenceScheme | None,
    steps: int,
    rng: RngStream,
) -> Trajectory:
    """Run ``steps`` asynchronous updates.

    Investments are decided at the start of every generation of ``Z`` steps
    and their cost is charged to the ledger at that moment.
    """
    if steps < 1:
        raise InvalidParameterError("steps must be >= 1")
    table = _as_table(game)
    if initial.n != table.n:
        raise InvalidParameterError("state and game disagree on the number of strategies")
    Z, n = initial.Z, initial.n
    if Z < table.d:
        raise InvalidParameterError(f"population size Z={Z} smaller than group size d={table.d}")
    fit = _FitnessCache(table)
    ledger = CostLedger()
    out = np.empty((steps + 1, n), dtype=np.int64)
    cum_cost = np.empty(steps + 1)
    counts = list(initial.counts)
    out[0] = counts
    cum_cost[0] = 0.0
    spent = 0.0
    step = 0
    while step < steps:
        rewards, cost = strategy_rewards(scheme, PopulationState(tuple(counts)))
        if scheme is not None:
            ledger.record(cost)
            spent += cost
        block = min(Z, steps - step)
        draws = _draws(rng, block, Z, n)
        for j in range(block):
            _apply_step(counts, fit, rewards, p.beta, p.mu,
                        draws[0][j], draws[1][j], draws[2][j], draws[3][j], draws[4][j])
            step += 1
            out[step] = counts
            cum_cost[step] = spent
    return Trajectory(out, cum_cost, ledger)
