"""Trust-based strategies in the repeated donation game.

TFT verifies its co-player's action every round and pays ``c_v`` for it.
TRUST behaves like TFT until it has observed ``tau`` consecutive rounds of
mutual cooperation; from then on it cooperates and only verifies with
probability ``p_c``.  An unverified round is taken to be cooperative.  A
verification that reveals a defection sends TRUST back to the distrusting
state, and it defects in the next round.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidParameterError
from .rng import RngStream, spawn


class TrustStrategy(IntEnum):
    ALLC = 0
    ALLD = 1
    TFT = 2
    TRUST = 3


@dataclass(frozen=True)
class TrustGameParams:
    b: float
    c: float
    w: float
    c_v: float
    tau: int
    p_c: float
    # play exactly this many rounds instead of continuing with probability w
    rounds: int | None = None

    def __post_init__(self):
        if not 0 <= self.w < 1:
            raise InvalidParameterError("continuation probability must be in [0, 1)")
        if not 0 <= self.p_c <= 1:
            raise InvalidParameterError("check probability must be in [0, 1]")
        if self.tau < 1:
            raise InvalidParameterError("trust threshold must be >= 1")
        if self.c_v < 0:
            raise InvalidParameterError("verification cost must be >= 0")
        if self.rounds is not None and self.rounds < 1:
            raise InvalidParameterError("fixed horizon must be >= 1 round")


class _Player:
    __slots__ = ("strategy", "trusting", "streak", "planned", "checks", "trusting_rounds", "trusting_checks")

    def __init__(self, strategy: TrustStrategy):
        self.strategy = strategy
        self.trusting = False
        self.streak = 0
        self.planned = strategy is not TrustStrategy.ALLD
        self.checks = 0
        self.trusting_rounds = 0
        self.trusting_checks = 0

    def verifies(self, rng: RngStream, p_c: float) -> bool:
        s = self.strategy
        if s is TrustStrategy.TFT:
            return True
        if s is TrustStrategy.TRUST:
            return (not self.trusting) or rng.random() < p_c
        return False

    def observe(self, own: bool, other: bool, checked: bool, tau: int) -> None:
        s = self.strategy
        if s is TrustStrategy.TFT:
            self.planned = other
        elif s is TrustStrategy.TRUST:
            if self.trusting:
                if checked and not other:
                    self.trusting = False
                    self.streak = 0
                    self.planned = False
            else:
                self.planned = other
                self.streak = self.streak + 1 if (own and other) else 0
                if self.streak >= tau:
                    self.trusting = True
                    self.planned = True


@dataclass
class TrustEpisodes:
    payoffs: np.ndarray  # shape (episodes, 2)
    rounds: np.ndarray
    # aggregate verification counts of each player while in the trusting state
    trusting_rounds: tuple[int, int]
    trusting_checks: tuple[int, int]

    def mean(self) -> tuple[float, float]:
        m = self.payoffs.mean(axis=0)
        return float(m[0]), float(m[1])

    def stderr(self) -> tuple[float, float]:
        k = len(self.payoffs)
        if k < 2:
            return (float("nan"), float("nan"))
        se = self.payoffs.std(axis=0, ddof=1) / np.sqrt(k)
        return float(se[0]), float(se[1])


def simulate_trust_episodes(
    p: TrustGameParams,
    a: TrustStrategy,
    b: TrustStrategy,
    episodes: int,
    rng: RngStream,
) -> TrustEpisodes:
    """Play ``episodes`` independent repeated games between ``a`` and ``b``."""
    if episodes < 1:
        raise InvalidParameterError("episodes must be >= 1")
    a, b = TrustStrategy(a), TrustStrategy(b)
    # episode lengths and check coins come from separate streams so that
    # strategies consuming no coins see the same lengths
    length_rng, check_rng = spawn(rng, 2)
    if p.rounds is not None:
        lengths = np.full(episodes, p.rounds, dtype=np.int64)
    else:
        lengths = length_rng.geometric(1.0 - p.w, size=episodes)
    out = np.zeros((episodes, 2))
    trusting_rounds = [0, 0]
    trusting_checks = [0, 0]
    for e in range(episodes):
        players = (_Player(a), _Player(b))
        pay = [0.0, 0.0]
        for _ in range(int(lengths[e])):
            acts = (players[0].planned, players[1].planned)
            for i in (0, 1):
                if acts[i]:
                    pay[i] -= p.c
                    pay[1 - i] += p.b
            for i in (0, 1):
                pl = players[i]
                was_trusting = pl.trusting
                checked = pl.verifies(check_rng, p.p_c)
                if checked:
                    pay[i] -= p.c_v
                if was_trusting:
                    trusting_rounds[i] += 1
                    trusting_checks[i] += checked
                pl.observe(acts[i], acts[1 - i], checked, p.tau)
        out[e] = pay
    return TrustEpisodes(out, lengths, tuple(trusting_rounds), tuple(trusting_checks))


def trust_game_expected_payoffs(
    p: TrustGameParams,
    a: TrustStrategy,
    b: TrustStrategy,
    episodes: int,
    rng: RngStream,
) -> tuple[float, float]:
    """Mean accumulated payoff per episode of each player."""
    return simulate_trust_episodes(p, a, b, episodes, rng).mean()
