"""Execution of validated experiments.

Every (sweep point, replicate) pair is an independent work item with its own
random stream derived from ``(master_seed, kind, sweep index, replicate)``.
Items share nothing, so the result only depends on the config, whatever the
number of workers.
"""
from __future__ import annotations

import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import BaseModel

from ..airace import sweep_phase_diagram
from ..equilibria import estimate_equilibrium_stats
from ..errors import EgtLabError
from ..interference import efficiency_report
from ..network import generate_graph, run_network_sim
from ..population import PopulationState
from ..rng import RngStream, SeedPolicy, spawn
from ..wellmixed import simulate_trajectory
from .config import ExperimentConfig, NetworkBody, SweepPoint, WellmixedBody

Row = dict[str, Any]


class ExperimentError(EgtLabError, RuntimeError):
    """A work item failed; the message names its sweep coordinates."""


@dataclass
class ExperimentResult:
    rows: list[Row]
    # extra tables written next to the main CSV, keyed by file suffix
    tables: dict[str, list[Row]] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)


# -- per-kind evaluation ------------------------------------------------------


def _wellmixed_run(body: WellmixedBody, rng: RngStream) -> tuple[Row, np.ndarray, Any]:
    game = body.game.build()
    p = body.evo.build()
    scheme = body.scheme.build() if body.scheme else None
    traj = simulate_trajectory(PopulationState(tuple(body.initial)), game, p, scheme, body.steps, rng)
    Z = p.Z
    n = traj.counts.shape[1]
    gens = traj.counts[Z::Z] / Z if body.steps >= Z else traj.counts[-1:] / Z
    row: Row = {}
    for i in range(n):
        row[f"final_freq_{i}"] = float(traj.counts[-1, i] / Z)
    for i in range(n):
        row[f"mean_freq_{i}"] = float(gens[:, i].mean())
    row["total_cost"] = traj.ledger.total
    return row, gens[:, body.cooperator], traj.ledger


def _network_run(body: NetworkBody, rng: RngStream) -> tuple[Row, np.ndarray, Any]:
    graph_rng, init_rng, sim_rng = spawn(rng, 3)
    g = generate_graph(body.graph.kind, graph_rng, **body.graph.params)
    n_coop = int(round(body.initial_coop * g.N))
    initial = np.full(g.N, body.defector, dtype=np.int64)
    initial[init_rng.permutation(g.N)[:n_coop]] = body.cooperator
    run = run_network_sim(g, initial, body.rule.build(), body.game.build(),
                          body.scheme.build() if body.scheme else None,
                          body.generations, sim_rng, cooperator=body.cooperator)
    coop = np.asarray(run.coop, dtype=float)
    row = {"final_coop": float(coop[-1]), "mean_coop": float(coop.mean()), "total_cost": run.ledger.total}
    return row, coop, run.ledger


def _flatten(prefix: str, value, out: Row) -> None:
    if isinstance(value, BaseModel):
        value = value.model_dump()
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}", v, out)
    elif isinstance(value, (list, tuple)):
        out[prefix] = " ".join(repr(v) for v in value)
    elif value is None:
        # optional field that does not apply at this point
        out[prefix] = "none"
    else:
        out[prefix] = value


def sweep_columns(point: SweepPoint) -> Row:
    """Sweep coordinates as read back from the validated config.

    Block-valued coordinates are flattened into one column per field, with
    defaults filled in, so every row of an experiment has the same schema.
    """
    out: Row = {}
    for key, _ in point.coords:
        value = point.cfg
        for part in key.split("."):
            value = getattr(value, part)
        _flatten(key, value, out)
    return out


def _evaluate(kind: str, point: SweepPoint, replicate: int, master_seed: int) -> tuple[list[Row], dict[str, list[Row]]]:
    cfg = point.cfg
    rng = SeedPolicy(master_seed, kind).stream(point.index, replicate)
    head: Row = {"sweep_index": point.index}
    head.update(sweep_columns(point))
    head["replicate"] = replicate
    if kind == "wellmixed":
        row, _, _ = _wellmixed_run(cfg, rng)
        return [{**head, **row}], {}
    if kind == "network":
        row, _, _ = _network_run(cfg, rng)
        return [{**head, **row}], {}
    if kind == "interference":
        body = cfg.population
        run = _wellmixed_run if isinstance(body, WellmixedBody) else _network_run
        _, coop, ledger = run(body, rng)
        return [{**head, **efficiency_report(coop, ledger).as_row()}], {}
    if kind == "ai_race_phase":
        cells = sweep_phase_diagram(cfg.s_values, cfg.p_r_values, cfg.template(cfg.s_values[0], 0.0),
                                    cfg.evo.build(), cfg.incentive.build())
        return [{**head, **cell.as_row()} for cell in cells], {}
    if kind == "random_equilibria":
        stats = estimate_equilibrium_stats(cfg.game.build(), cfg.samples, rng, bins=cfg.bins, method=cfg.method)
        density = [{**head, "bin_mid": mid, "density": v} for mid, v in zip(stats.bin_midpoints, stats.density)]
        return [{**head, **stats.as_row()}], {"density": density}
    raise ExperimentError(f"unknown experiment kind {kind!r}")


def _work(args) -> tuple[int, int, list[Row], dict[str, list[Row]]]:
    kind, point, replicate, master_seed = args
    try:
        rows, tables = _evaluate(kind, point, replicate, master_seed)
    except Exception as err:
        coords = ", ".join(f"{k}={v!r}" for k, v in point.coords) or "<no sweep>"
        raise ExperimentError(
            f"work item failed at sweep point {point.index} ({coords}), replicate {replicate}: "
            f"{type(err).__name__}: {err}"
        ) from None
    return point.index, replicate, rows, tables


def run_experiment(cfg: ExperimentConfig, workers: int = 1, progress: bool = True) -> ExperimentResult:
    """Run every sweep point and replicate; rows come back sorted by coordinates."""
    if workers < 1:
        raise ExperimentError("workers must be >= 1")
    items = [(cfg.kind, point, r, cfg.master_seed) for point in cfg.points for r in range(cfg.replicates)]
    total = len(items)
    start = time.monotonic()
    done = []

    def report(res):
        done.append(res)
        if progress:
            print(f"[{len(done)}/{total}] sweep {res[0]} replicate {res[1]} "
                  f"({time.monotonic() - start:.1f}s)", file=sys.stderr, flush=True)

    if workers == 1 or total == 1:
        for item in items:
            report(_work(item))
    else:
        with ProcessPoolExecutor(max_workers=min(workers, total)) as pool:
            for res in pool.map(_work, items):
                report(res)
    done.sort(key=lambda res: (res[0], res[1]))
    rows: list[Row] = []
    tables: dict[str, list[Row]] = {}
    for _, _, item_rows, item_tables in done:
        rows.extend(item_rows)
        for name, table in item_tables.items():
            tables.setdefault(name, []).extend(table)
    return ExperimentResult(rows, tables)
