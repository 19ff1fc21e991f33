from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class PopulationState:
    """Strategy counts of a finite well-mixed population."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(k) for k in self.counts)
        if any(k < 0 for k in counts):
            raise InvalidParameterError(f"negative strategy count in {counts}")
        if len(counts) < 2:
            raise InvalidParameterError("need at least two strategies")
        if sum(counts) < 2:
            raise InvalidParameterError("Z >= 2 required")
        object.__setattr__(self, "counts", counts)

    @property
    def Z(self) -> int:
        return sum(self.counts)

    @property
    def n(self) -> int:
        return len(self.counts)

    @classmethod
    def monomorphic(cls, n: int, Z: int, strategy: int) -> "PopulationState":
        counts = [0] * n
        counts[strategy] = Z
        return cls(tuple(counts))

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class EvoParams:
    Z: int
    beta: float = 0.1
    mu: float = 0.0

    def __post_init__(self):
        if self.Z < 2:
            raise InvalidParameterError("Z >= 2 required")
        if self.beta < 0:
            raise InvalidParameterError("selection intensity beta must be >= 0")
        if not 0 <= self.mu <= 1:
            raise InvalidParameterError("mutation probability must be in [0, 1]")
