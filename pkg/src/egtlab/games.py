"""Games and per-encounter payoffs.

A :class:`PayoffTable` stores the payoff of a focal player for every
(focal strategy, co-player composition) pair of a symmetric d-player
n-strategy game.  :class:`MatrixGame` is the 2-player view used by the
network engine and the AI race model.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError, StructuralError

Composition = tuple[int, ...]


def compositions(n: int, total: int) -> list[Composition]:
    """All n-tuples of non-negative integers summing to ``total``.

    Ordered lexicographically, so for ``n == 2`` entry ``k`` is
    ``(k, total - k)``.
    """
    if n == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in compositions(n - 1, total - first):
            out.append((first,) + rest)
    return out


@dataclass(frozen=True, eq=False)
class PayoffTable:
    n: int
    d: int
    payoffs: np.ndarray
    comps: tuple[Composition, ...] = field(repr=False)
    _index: dict = field(repr=False, compare=False)

    def __init__(self, n: int, d: int, payoffs: np.ndarray | Sequence[Sequence[float]]):
        if n < 2 or d < 2:
            raise InvalidParameterError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
        comps = tuple(compositions(n, d - 1))
        arr = np.array(payoffs, dtype=float)
        if arr.shape != (n, len(comps)):
            raise StructuralError(
                f"payoff array has shape {arr.shape}, expected {(n, len(comps))}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("payoffs must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "payoffs", arr)
        object.__setattr__(self, "comps", comps)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(comps)})

    @classmethod
    def from_function(cls, n: int, d: int, payoff: Callable[[int, Composition], float]) -> "PayoffTable":
        comps = compositions(n, d - 1)
        return cls(n, d, [[payoff(i, c) for c in comps] for i in range(n)])

    @classmethod
    def from_matrix(cls, matrix: "MatrixGame | np.ndarray") -> "PayoffTable":
        a = matrix.payoff if isinstance(matrix, MatrixGame) else np.asarray(matrix, float)
        n = a.shape[0]
        # for d == 2 the composition with a single co-player of strategy j is e_j
        return cls.from_function(n, 2, lambda i, c: a[i, c.index(1)])

    def comp_index(self, comp: Iterable[int]) -> int:
        key = tuple(int(k) for k in comp)
        try:
            return self._index[key]
        except KeyError:
            raise StructuralError(
                f"no entry for composition {key} in a table with n={self.n}, d={self.d}"
            ) from None

    def lookup(self, focal: int, comp: Iterable[int]) -> float:
        if not 0 <= focal < self.n:
            raise StructuralError(f"focal strategy {focal} outside [0, {self.n})")
        return float(self.payoffs[focal, self.comp_index(comp)])

    def to_matrix(self) -> "MatrixGame":
        if self.d != 2:
            raise InvalidParameterError("only 2-player tables have a matrix view")
        a = np.empty((self.n, self.n))
        for j in range(self.n):
            e = tuple(int(i == j) for i in range(self.n))
            a[:, j] = self.payoffs[:, self._index[e]]
        return MatrixGame(a)

    def restrict(self, strategies: Sequence[int]) -> "PayoffTable":
        """Sub-game in which only ``strategies`` (in that order) are present."""
        m = len(strategies)

        def payoff(i, c):
            full = [0] * self.n
            for s, k in zip(strategies, c):
                full[s] += k
            return self.payoffs[strategies[i], self._index[tuple(full)]]

        return PayoffTable.from_function(m, self.d, payoff)

    def shifted(self, constant: float) -> "PayoffTable":
        return PayoffTable(self.n, self.d, self.payoffs + constant)

    # -- plain-text exchange format ---------------------------------------

    def to_text(self) -> str:
        lines = [f"{self.n} {self.d}"]
        for i in range(self.n):
            for c, v in zip(self.comps, self.payoffs[i]):
                lines.append(" ".join([str(i), *map(str, c), repr(float(v))]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PayoffTable":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows:
            raise StructuralError("empty payoff table")
        try:
            n, d = (int(x) for x in rows[0])
        except ValueError:
            raise StructuralError(f"bad header {' '.join(rows[0])!r}, expected 'n d'") from None
        comps = compositions(n, d - 1)
        index = {c: k for k, c in enumerate(comps)}
        arr = np.full((n, len(comps)), np.nan)
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != n + 2:
                raise StructuralError(f"line {lineno}: expected {n + 2} fields, got {len(row)}")
            focal, comp, value = int(row[0]), tuple(int(x) for x in row[1:-1]), float(row[-1])
            if not 0 <= focal < n or comp not in index:
                raise StructuralError(f"line {lineno}: invalid entry ({focal}, {comp})")
            if not np.isnan(arr[focal, index[comp]]):
                raise StructuralError(f"line {lineno}: duplicate entry ({focal}, {comp})")
            arr[focal, index[comp]] = value
        if np.isnan(arr).any():
            raise StructuralError("payoff table is missing entries")
        return cls(n, d, arr)


def payoff_lookup(table: PayoffTable, focal: int, comp: Iterable[int]) -> float:
    return table.lookup(focal, comp)


@dataclass(frozen=True, eq=False)
class MatrixGame:
    """Symmetric 2-player game; ``payoff[a, b]`` is what ``a`` earns against ``b``."""

    payoff: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        a = np.array(self.payoff, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise InvalidParameterError(f"payoff must be a square matrix with n >= 2, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidParameterError("payoff entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "payoff", a)
        if self.labels and len(self.labels) != a.shape[0]:
            raise InvalidParameterError("one label per strategy required")

    @property
    def n(self) -> int:
        return self.payoff.shape[0]

    def as_table(self) -> PayoffTable:
        return PayoffTable.from_matrix(self)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def donation_game(b: float, c: float) -> MatrixGame:
    """Prisoner's dilemma with T=b, R=b-c, P=0, S=-c.  Strategy 0 is C, 1 is D."""
    if not b > c > 0:
        raise InvalidParameterError(f"donation game requires b > c > 0, got b={b}, c={c}")
    return MatrixGame(np.array([[b - c, -c], [b, 0.0]]), labels=("C", "D"))


# -- commitment protocol ---------------------------------------------------


class CommitStrategy(IntEnum):
    COMP = 0
    C = 1
    D = 2
    FAKE = 3
    FREE = 4


@dataclass(frozen=True)
class CommitmentParams:
    b: float
    c: float
    eps: float
    delta: float
    # False: the proposer only pays the arrangement cost if the deal is accepted
    eps_sunk_on_rejection: bool = True

    def __post_init__(self):
        if not self.b > self.c > 0:
            raise InvalidParameterError("commitment game requires b > c > 0")
        if self.eps < 0 or self.delta < 0:
            raise InvalidParameterError("arrangement cost and compensation must be >= 0")


_ACCEPTS = {CommitStrategy.COMP, CommitStrategy.C, CommitStrategy.FAKE, CommitStrategy.FREE}
_HONOURS = {CommitStrategy.COMP, CommitStrategy.C, CommitStrategy.FREE}


def play_commitment(x: CommitStrategy, y: CommitStrategy, p: CommitmentParams) -> tuple[float, float]:
    """Run the proposal stage and the donation game for one ordered pair."""
    pay = [0.0, 0.0]
    players = (x, y)
    proposers = [i for i in (0, 1) if players[i] is CommitStrategy.COMP]

    if len(proposers) == 2:
        pay[0] -= p.eps / 2
        pay[1] -= p.eps / 2
        committed = True
    elif len(proposers) == 1:
        other = 1 - proposers[0]
        committed = players[other] in _ACCEPTS
        if committed or p.eps_sunk_on_rejection:
            pay[proposers[0]] -= p.eps
        if not committed:
            return pay[0], pay[1]
    else:
        committed = False

    if committed:
        cooperates = [s in _HONOURS for s in players]
    else:
        cooperates = [s is CommitStrategy.C for s in players]

    for i in (0, 1):
        if cooperates[i]:
            pay[i] -= p.c
            pay[1 - i] += p.b
    if committed:
        for i in (0, 1):
            # a violator compensates a partner who kept the deal
            if not cooperates[i] and cooperates[1 - i]:
                pay[i] -= p.delta
                pay[1 - i] += p.delta
    return pay[0], pay[1]


def commitment_payoff_matrix(p: CommitmentParams) -> MatrixGame:
    strategies = list(CommitStrategy)
    a = np.empty((len(strategies), len(strategies)))
    for x in strategies:
        for y in strategies:
            a[x, y] = play_commitment(x, y, p)[0]
    return MatrixGame(a, labels=tuple(s.name for s in strategies))
