"""Experiment configuration files.

A config is a YAML mapping with a ``kind`` key selecting the experiment.
Unknown keys are rejected, every block is checked against the owning
module's own validation, and a ``sweep`` mapping of dotted paths to explicit
value lists expands into the cartesian product of sweep points (first key
varies slowest).  Every point is validated before any work starts.
"""
from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..airace import (
    DEFAULT_EVO,
    DEFAULT_PR_GRID,
    DEFAULT_S_GRID,
    RaceIncentive,
    RaceParams,
)
from ..equilibria import RandomGameSpec
from ..errors import EgtLabError
from ..games import CommitmentParams, MatrixGame, PayoffTable, commitment_payoff_matrix, donation_game
from ..interference import InterferenceScheme
from ..network import UpdateRule
from ..population import EvoParams, PopulationState

KINDS = ("wellmixed", "network", "interference", "ai_race_phase", "random_equilibria")


class ConfigError(EgtLabError, ValueError):
    """A config file failed to parse or validate."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -- games --------------------------------------------------------------------


class DonationGameCfg(_Strict):
    type: Literal["donation"]
    b: float
    c: float

    def build(self) -> MatrixGame:
        return donation_game(self.b, self.c)


class MatrixGameCfg(_Strict):
    type: Literal["matrix"]
    payoff: list[list[float]]
    labels: list[str] = []

    def build(self) -> MatrixGame:
        return MatrixGame(np.array(self.payoff, dtype=float), labels=tuple(self.labels))


class CommitmentGameCfg(_Strict):
    type: Literal["commitment"]
    b: float
    c: float
    eps: float
    delta: float
    eps_sunk_on_rejection: bool = True

    def build(self) -> MatrixGame:
        return commitment_payoff_matrix(
            CommitmentParams(self.b, self.c, self.eps, self.delta, self.eps_sunk_on_rejection)
        )


class TableGameCfg(_Strict):
    """A d-player game in the plain-text table format, inline or from a file."""

    type: Literal["table"]
    text: Optional[str] = None
    path: Optional[str] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.text is None) == (self.path is None):
            raise ValueError("give exactly one of 'text' or 'path'")
        return self

    def build(self) -> PayoffTable:
        text = self.text if self.text is not None else Path(self.path).read_text()
        return PayoffTable.from_text(text)


GameCfg = Annotated[
    Union[DonationGameCfg, MatrixGameCfg, CommitmentGameCfg, TableGameCfg], Field(discriminator="type")
]


# -- shared blocks ------------------------------------------------------------


class EvoCfg(_Strict):
    Z: int
    beta: float = 0.1
    mu: float = 0.0

    @field_validator("Z")
    @classmethod
    def _z(cls, v):
        if v < 2:
            raise ValueError(f"Z ≥ 2 required (got Z={v})")
        return v

    def build(self) -> EvoParams:
        return EvoParams(self.Z, self.beta, self.mu)


class SchemeCfg(_Strict):
    kind: Literal["pop_threshold", "neighborhood_threshold", "unconditional"]
    theta: float
    desired: int = 0
    t: Optional[int] = None
    n_t: Optional[int] = None
    direction: Literal["le", "ge"] = "le"

    def build(self) -> InterferenceScheme:
        return InterferenceScheme(self.kind, self.theta, self.desired, self.t, self.n_t, self.direction)


class GraphCfg(_Strict):
    kind: Literal["lattice2d", "scale_free", "complete"]
    L: Optional[int] = None
    periodic: bool = True
    N: Optional[int] = None
    m: Optional[int] = None

    @model_validator(mode="after")
    def _params(self):
        if self.kind == "lattice2d":
            if self.L is None or self.L < 2:
                raise ValueError("lattice2d needs L ≥ 2")
        elif self.kind == "scale_free":
            if self.N is None or self.m is None or not 1 <= self.m < self.N:
                raise ValueError("scale_free needs N and m with 1 ≤ m < N")
        elif self.N is None or self.N < 2:
            raise ValueError("complete needs N ≥ 2")
        return self

    @property
    def n_nodes(self) -> int:
        return self.L * self.L if self.kind == "lattice2d" else self.N

    @property
    def params(self) -> dict:
        if self.kind == "lattice2d":
            return {"L": self.L, "periodic": self.periodic}
        if self.kind == "scale_free":
            return {"N": self.N, "m": self.m}
        return {"N": self.N}


class RuleCfg(_Strict):
    variant: Literal["fermi_async", "imitate_best_sync"] = "fermi_async"
    beta: Optional[float] = 0.1
    accumulated: bool = False

    def build(self) -> UpdateRule:
        return UpdateRule(self.variant, self.beta, self.accumulated)


# -- population bodies --------------------------------------------------------


class WellmixedBody(_Strict):
    """Well-mixed population run with :func:`simulate_trajectory`."""

    type: Literal["wellmixed"] = "wellmixed"
    game: GameCfg
    evo: EvoCfg
    initial: list[int]
    steps: int = Field(ge=1)
    scheme: Optional[SchemeCfg] = None
    cooperator: int = 0

    @model_validator(mode="after")
    def _cross(self):
        game = self.game.build()
        PopulationState(tuple(self.initial))
        if len(self.initial) != game.n:
            raise ValueError(f"initial has {len(self.initial)} counts but the game has {game.n} strategies")
        if sum(self.initial) != self.evo.Z:
            raise ValueError(f"initial counts sum to {sum(self.initial)}, not Z={self.evo.Z}")
        d = getattr(game, "d", 2)
        if self.evo.Z < d:
            raise ValueError(f"Z={self.evo.Z} is smaller than the group size d={d}")
        if not 0 <= self.cooperator < game.n:
            raise ValueError("cooperator is not a strategy of the game")
        if self.scheme is not None:
            scheme = self.scheme.build()
            if scheme.kind == "neighborhood_threshold":
                raise ValueError("neighborhood_threshold needs a network population")
            if not 0 <= scheme.desired < game.n:
                raise ValueError("scheme.desired is not a strategy of the game")
            if scheme.kind == "pop_threshold" and scheme.t > self.evo.Z - 1:
                raise ValueError(f"scheme.t must be in [1, Z-1] = [1, {self.evo.Z - 1}]")
        return self


class NetworkBody(_Strict):
    """Graph-structured population run with :func:`run_network_sim`."""

    type: Literal["network"] = "network"
    game: Union[DonationGameCfg, MatrixGameCfg, CommitmentGameCfg] = Field(discriminator="type")
    graph: GraphCfg
    rule: RuleCfg = RuleCfg()
    initial_coop: float = Field(0.5, ge=0.0, le=1.0)
    generations: int = Field(ge=1)
    scheme: Optional[SchemeCfg] = None
    cooperator: int = 0
    defector: int = 1

    @model_validator(mode="after")
    def _cross(self):
        game = self.game.build()
        self.rule.build()
        for name in ("cooperator", "defector"):
            if not 0 <= getattr(self, name) < game.n:
                raise ValueError(f"{name} is not a strategy of the game")
        if self.scheme is not None:
            scheme = self.scheme.build()
            if not 0 <= scheme.desired < game.n:
                raise ValueError("scheme.desired is not a strategy of the game")
            if scheme.kind == "pop_threshold" and scheme.t > self.graph.n_nodes - 1:
                raise ValueError(f"scheme.t must be in [1, N-1] = [1, {self.graph.n_nodes - 1}]")
        return self


# -- experiment kinds ---------------------------------------------------------


class _Experiment(_Strict):
    master_seed: int = Field(0, ge=0, lt=2**64)
    replicates: int = Field(1, ge=1)
    output: str = "results.csv"
    sweep: dict[str, list[Any]] = {}

    @field_validator("sweep")
    @classmethod
    def _sweep(cls, v):
        for key, values in v.items():
            if not values:
                raise ValueError(f"sweep axis {key!r} has no values")
        return v


class WellmixedExperiment(_Experiment, WellmixedBody):
    kind: Literal["wellmixed"]
    type: Literal["wellmixed"] = "wellmixed"


class NetworkExperiment(_Experiment, NetworkBody):
    kind: Literal["network"]
    type: Literal["network"] = "network"


class InterferenceExperiment(_Experiment):
    kind: Literal["interference"]
    population: Annotated[Union[WellmixedBody, NetworkBody], Field(discriminator="type")]

    @model_validator(mode="after")
    def _needs_scheme(self):
        if self.population.scheme is None:
            raise ValueError("interference experiments need population.scheme")
        return self


class GridCfg(_Strict):
    """Evenly spaced grid given by bounds and resolution."""

    start: float
    stop: float
    num: int = Field(ge=1)

    def values(self) -> list[float]:
        return [float(x) for x in np.round(np.linspace(self.start, self.stop, self.num), 10)]


def _grid(v) -> list[float]:
    values = v.values() if isinstance(v, GridCfg) else [float(x) for x in v]
    if not values:
        raise ValueError("grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("grid must be strictly ascending")
    return values


class RaceCfg(_Strict):
    W: float = RaceParams.W
    c: float = RaceParams.c
    b: float = RaceParams.b
    B: float = RaceParams.B
    disaster_externality: bool = False


class IncentiveCfg(_Strict):
    variant: Literal["none", "sanction", "commitment"] = "none"
    pi: float = 0.0
    eps_c: float = 0.0

    def build(self) -> RaceIncentive:
        return RaceIncentive(self.variant, self.pi, self.eps_c)


class AiRaceExperiment(_Experiment):
    kind: Literal["ai_race_phase"]
    race: RaceCfg = RaceCfg()
    evo: EvoCfg = EvoCfg(Z=DEFAULT_EVO.Z, beta=DEFAULT_EVO.beta)
    incentive: IncentiveCfg = IncentiveCfg()
    s_grid: Union[list[float], GridCfg] = list(DEFAULT_S_GRID)
    p_r_grid: Union[list[float], GridCfg] = list(DEFAULT_PR_GRID)

    @model_validator(mode="after")
    def _cross(self):
        s_values = _grid(self.s_grid)
        p_values = _grid(self.p_r_grid)
        for s in (s_values[0], s_values[-1]):
            for p_r in (p_values[0], p_values[-1]):
                self.template(s, p_r)
        self.incentive.build()
        if self.evo.mu:
            raise ValueError("the phase diagram uses the small-mutation limit; evo.mu must be 0")
        return self

    def template(self, s: float, p_r: float) -> RaceParams:
        r = self.race
        return RaceParams(r.W, s, r.c, r.b, r.B, p_r, r.disaster_externality)

    @property
    def s_values(self) -> list[float]:
        return _grid(self.s_grid)

    @property
    def p_r_values(self) -> list[float]:
        return _grid(self.p_r_grid)


class RandomGameCfg(_Strict):
    n: int
    d: int
    dist: Literal["normal", "uniform"] = "normal"
    corr: float = 0.0
    support: tuple[float, float] = (-1.0, 1.0)

    def build(self) -> RandomGameSpec:
        return RandomGameSpec(self.n, self.d, self.dist, self.corr, tuple(self.support))


class RandomEquilibriaExperiment(_Experiment):
    kind: Literal["random_equilibria"]
    game: RandomGameCfg
    samples: int = Field(ge=1000)
    bins: int = Field(20, ge=1)
    method: Literal["auto", "polynomial", "linear"] = "auto"

    @model_validator(mode="after")
    def _cross(self):
        spec = self.game.build()
        if spec.n > 2 and spec.d > 2:
            raise ValueError("n > 2 strategies with d > 2 players is not supported")
        if self.method == "polynomial" and spec.n != 2:
            raise ValueError("method 'polynomial' needs n = 2")
        if self.method == "linear" and spec.d != 2:
            raise ValueError("method 'linear' needs d = 2")
        return self


ExperimentModel = Annotated[
    Union[WellmixedExperiment, NetworkExperiment, InterferenceExperiment, AiRaceExperiment,
          RandomEquilibriaExperiment],
    Field(discriminator="kind"),
]


class _Root(BaseModel):
    cfg: ExperimentModel


@dataclass(frozen=True)
class SweepPoint:
    index: int
    coords: tuple[tuple[str, Any], ...]
    cfg: BaseModel


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: the base config plus every expanded sweep point."""

    base: BaseModel
    points: tuple[SweepPoint, ...]
    source: str = "<config>"

    @property
    def kind(self) -> str:
        return self.base.kind

    @property
    def master_seed(self) -> int:
        return self.base.master_seed

    @property
    def replicates(self) -> int:
        return self.base.replicates

    @property
    def output(self) -> str:
        return self.base.output

    @property
    def sweep_keys(self) -> tuple[str, ...]:
        return tuple(self.base.sweep)

    def with_overrides(self, master_seed: int | None = None, output: str | None = None) -> "ExperimentConfig":
        raw = self.base.model_dump(mode="python")
        if master_seed is not None:
            raw["master_seed"] = master_seed
        if output is not None:
            raw["output"] = output
        return build_config(raw, self.source)


# -- parsing with line diagnostics ----------------------------------------------


def _line_map(node, path=(), out=None) -> dict[tuple, int]:
    """Map every key path of a composed YAML node to its 1-based line."""
    if out is None:
        out = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            p = path + (key.value,)
            out[p] = key.start_mark.line + 1
            _line_map(value, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            p = path + (i,)
            out[p] = value.start_mark.line + 1
            _line_map(value, p, out)
    return out


def _format_validation(err: ValidationError, source: str, lines: dict[tuple, int], prefix=()) -> str:
    msgs = []
    for e in err.errors():
        loc = tuple(x for x in e["loc"] if x != "cfg")
        # drop discriminator tags that pydantic inserts into the location
        loc = tuple(x for x in loc if not (isinstance(x, str) and x in _TAGS))
        full = prefix + loc
        line = None
        for k in range(len(full), 0, -1):
            if full[:k] in lines:
                line = lines[full[:k]]
                break
        where = f"{source}:{line}" if line else source
        field = ".".join(str(x) for x in full) or "<root>"
        msg = e["msg"]
        if e["type"] == "extra_forbidden":
            msg = f"unknown field {full[-1]!r}"
        elif msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        msgs.append(f"{where}: {field}: {msg}")
    return "\n".join(msgs)


_TAGS = set(KINDS) | {"donation", "matrix", "commitment", "table", "network", "wellmixed",
                      "list[float]", "GridCfg"}


def _set_path(raw: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = raw
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node or not isinstance(node[k], dict):
            raise ConfigError(f"sweep key {dotted!r} does not name a field of the config")
        node = node[k]
    if not isinstance(node, dict):
        raise ConfigError(f"sweep key {dotted!r} does not name a field of the config")
    node[keys[-1]] = value


def _validate(raw: dict, source: str, lines: dict, label: str = "") -> BaseModel:
    try:
        return _Root(cfg=raw).cfg
    except ValidationError as err:
        raise ConfigError((label + "\n" if label else "") + _format_validation(err, source, lines)) from None
    except EgtLabError as err:
        raise ConfigError(f"{source}: {label}{err}") from None


def build_config(raw: Any, source: str = "<config>", lines: dict | None = None) -> ExperimentConfig:
    lines = lines or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    kind = raw.get("kind")
    if kind not in KINDS:
        line = lines.get(("kind",))
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: kind: expected one of {KINDS}, got {kind!r}")
    base = _validate(raw, source, lines)
    sweep = base.sweep
    points = []
    axes = list(sweep.items())
    for index, combo in enumerate(itertools.product(*(values for _, values in axes))):
        coords = tuple((key, value) for (key, _), value in zip(axes, combo))
        point_raw = copy.deepcopy(raw)
        point_raw.pop("sweep", None)
        for key, value in coords:
            if key.split(".")[0] in ("sweep", "kind", "master_seed", "replicates", "output"):
                raise ConfigError(f"{source}: sweep key {key!r} cannot be swept")
            _set_path(point_raw, key, value)
        label = "sweep point " + ", ".join(f"{k}={v!r}" for k, v in coords) if coords else ""
        points.append(SweepPoint(index, coords, _validate(point_raw, source, lines, label)))
    return ExperimentConfig(base, tuple(points), source)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(err, "problem", None) or str(err)
        raise ConfigError(f"{where}: YAML parse error: {problem}") from None
    if raw is None:
        raise ConfigError(f"{source}: empty config")
    return build_config(raw, source, _line_map(node) if node is not None else {})


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    return parse_config(text, str(path))
