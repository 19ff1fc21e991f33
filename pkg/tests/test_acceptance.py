"""End-to-end acceptance criteria.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary (see ``conftest.py``).  Run alone with
``pytest tests/test_acceptance.py -v``.
"""
import copy
import math
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from egtlab.airace import (
    DEFAULT_COMMITMENT,
    DEFAULT_EVO,
    DEFAULT_PR_GRID,
    DEFAULT_S_GRID,
    DEFAULT_SANCTION,
    RaceParams,
    sweep_phase_diagram,
)
from egtlab.equilibria import (
    DegenerateRoots,
    PolynomialCoeffs,
    RandomGameSpec,
    build_polynomial_2strategy,
    classify_stability_1d,
    count_positive_real_roots,
    estimate_equilibrium_stats,
    positive_root_bounds,
)
from egtlab.games import donation_game
from egtlab.harness import build_config, load_config, run_experiment, write_experiment
from egtlab.interference import InterferenceScheme, decide_investments
from egtlab.population import EvoParams, PopulationState
from egtlab.rng import make_rng
from egtlab.wellmixed import fermi_probability, fixation_probability

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def se_gap(a, b):
    return math.hypot(a.se_count, b.se_count)


# -- random games --------------------------------------------------------------


def test_criterion_01_two_player_closed_form():
    start = time.monotonic()
    worst = 0.0
    parts = []
    for n in (2, 3, 4, 5):
        s = estimate_equilibrium_stats(RandomGameSpec(n, 2), 200_000, make_rng(100 + n))
        err = abs(s.mean_count - 2.0 ** (1 - n))
        worst = max(worst, err)
        parts.append(f"E({n},2)={s.mean_count:.4f}")
    elapsed = time.monotonic() - start
    report(1, worst <= 0.01 and elapsed < 120,
           f"{' '.join(parts)}; max error {worst:.4f} (tol 0.01); {elapsed:.1f}s (limit 120s)")


def test_criterion_02_linear_and_polynomial_agree():
    spec = RandomGameSpec(2, 2)
    lin = estimate_equilibrium_stats(spec, 200_000, make_rng(201), method="linear")
    pol = estimate_equilibrium_stats(spec, 200_000, make_rng(202), method="polynomial")
    gap = abs(lin.mean_count - pol.mean_count)
    off = max(abs(lin.mean_count - 0.5) / lin.se_count, abs(pol.mean_count - 0.5) / pol.se_count)
    report(2, gap <= 3 * se_gap(lin, pol) and off <= 3,
           f"linear {lin.mean_count:.4f}, polynomial {pol.mean_count:.4f}, gap {gap:.4f} "
           f"vs 3 SE {3 * se_gap(lin, pol):.4f}; max |E-0.5|/SE {off:.2f}")


def test_criterion_03_growth_trend():
    samples = {3: 100_000, 5: 100_000, 10: 50_000, 20: 20_000}
    est = {d: estimate_equilibrium_stats(RandomGameSpec(2, d), m, make_rng(300 + d)) for d, m in samples.items()}
    ds = sorted(est)
    gaps_ok = all(est[b].mean_count - est[a].mean_count > 3 * se_gap(est[a], est[b]) for a, b in zip(ds, ds[1:]))
    ratio = math.log(est[20].mean_count) / math.log(19)
    report(3, gaps_ok and 0.3 <= ratio <= 0.7,
           " ".join(f"E(2,{d})={est[d].mean_count:.4f}" for d in ds)
           + f"; gaps > 3 SE: {gaps_ok}; ln E/ln(d-1) at d=20 = {ratio:.4f} (want [0.3, 0.7])")


def test_criterion_04_maximal_count_vanishes():
    p = {}
    for d in (3, 5, 8):
        s = estimate_equilibrium_stats(RandomGameSpec(2, d), 100_000, make_rng(400 + d))
        p[d] = s.count_histogram[d - 1]
    ok = p[3] > p[5] > p[8]
    report(4, ok, " ".join(f"p_{d - 1}(d={d})={v:.5f}" for d, v in p.items()))


def test_criterion_05_stability_structure():
    rng = make_rng(500)
    n_samples = 100_000
    degenerate = violations = roots = 0
    for _ in range(n_samples):
        d = int(rng.integers(3, 9))
        poly = build_polynomial_2strategy(rng.standard_normal(d) - rng.standard_normal(d), d)
        try:
            eq = count_positive_real_roots(poly)
            # independent split from the float derivative at every root
            split = classify_stability_1d(poly, eq.positions, rel_tol=1e-10)
        except DegenerateRoots:
            degenerate += 1
            continue
        roots += eq.total
        if (eq.stable + eq.unstable != eq.total or split != (eq.stable, eq.unstable)
                or abs(eq.stable - eq.unstable) > 1):
            violations += 1
    rate = degenerate / n_samples
    report(5, violations == 0 and rate < 1e-4,
           f"{n_samples} samples (d in 3..8), {roots} roots, {violations} violations, degenerate rate {rate:.1e}")


def test_criterion_06_correlation_reduces_count():
    est = {r: estimate_equilibrium_stats(RandomGameSpec(2, 4, corr=r), 100_000, make_rng(600 + int(10 * r)))
           for r in (0.0, 0.5, 0.9)}
    ok = all(est[a].mean_count - est[b].mean_count > 3 * se_gap(est[a], est[b]) for a, b in ((0.0, 0.5), (0.5, 0.9)))
    report(6, ok, " ".join(f"r={r}: {s.mean_count:.4f}±{s.se_count:.4f}" for r, s in est.items()))


def _sign_scan(c, points=100_000):
    lo, hi = positive_root_bounds(c)
    y = np.geomspace(lo * (1 - 1e-9), hi * (1 + 1e-9), points)
    v = np.polynomial.polynomial.polyval(y, c)
    s = np.sign(v[v != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def test_criterion_07_oracle_equivalence():
    rng = make_rng(700)
    mismatches = degenerate = 0
    n_polys = 10_000
    for i in range(n_polys):
        d = int(rng.integers(2, 11))
        if i % 2:
            c = PolynomialCoeffs(tuple(rng.standard_normal(d)))
        else:
            c = build_polynomial_2strategy(rng.standard_normal(d), d)
        try:
            exact = count_positive_real_roots(c).total
        except DegenerateRoots:
            degenerate += 1
            continue
        mismatches += exact != _sign_scan(np.array(c.coeffs))
    report(7, mismatches == 0, f"{n_polys} polynomials (degree <= 9), {mismatches} mismatches, {degenerate} degenerate")


# -- dynamics ------------------------------------------------------------------


def _donation_absorption(Z, beta, runs, rng, b=4.0, c=1.0):
    """Embedded chain of cooperator counts, from the Fermi rule written out by hand."""
    k = np.arange(1, Z)
    f_c = ((k - 1) * (b - c) - (Z - k) * c) / (Z - 1)
    f_d = k * b / (Z - 1)
    up = 1 / (1 + np.exp(beta * (f_d - f_c)))
    down = 1 / (1 + np.exp(beta * (f_c - f_d)))
    p_up = up / (up + down)
    # a single defector among cooperators
    state = np.full(runs, Z - 1)
    alive = np.ones(runs, dtype=bool)
    while alive.any():
        idx = np.flatnonzero(alive)
        state[idx] += np.where(rng.random(len(idx)) < p_up[state[idx] - 1], 1, -1)
        alive[idx] = (state[idx] > 0) & (state[idx] < Z)
    return float(np.mean(state == 0))


def test_criterion_08_fermi_and_fixation():
    rng = make_rng(800)
    fa, fb = rng.normal(0, 10, size=(2, 1_000_000))
    beta = rng.exponential(1.0, size=1_000_000)
    sym = float(np.max(np.abs(fermi_probability(fa, fb, beta) + fermi_probability(fb, fa, beta) - 1.0)))
    game = donation_game(4, 1)
    neutral = max(abs(fixation_probability(game, 0, 1, EvoParams(Z=Z, beta=0.0)) - 1 / Z) for Z in range(2, 201))
    Z, beta0, runs = 50, 0.1, 100_000
    rho = fixation_probability(game, 1, 0, EvoParams(Z=Z, beta=beta0))
    freq = _donation_absorption(Z, beta0, runs, rng)
    se = math.sqrt(rho * (1 - rho) / runs)
    ok = sym <= 1e-15 and neutral <= 1e-12 and abs(freq - rho) <= 3 * se
    report(8, ok, f"symmetry max error {sym:.1e}; neutral max |rho-1/Z| {neutral:.1e}; "
                  f"Z=50 rho={rho:.5f} vs MC {freq:.5f} (3 SE {3 * se:.5f})")


def test_criterion_09_interference_anchor():
    rng = make_rng(900)
    Z = 100
    differ = 0
    for _ in range(10_000):
        n = int(rng.integers(2, 4))
        desired = int(rng.integers(0, n))
        # counts with at least one non-desired agent
        while True:
            counts = rng.multinomial(Z, rng.dirichlet(np.ones(n)))
            if counts[desired] < Z:
                break
        state = PopulationState(tuple(int(x) for x in counts))
        theta = float(rng.exponential(2.0))
        a = decide_investments(InterferenceScheme("pop_threshold", theta, desired=desired, t=Z - 1), state)
        b = decide_investments(InterferenceScheme("unconditional", theta, desired=desired), state)
        differ += not (np.array_equal(a.agents, b.agents) and a.cost == b.cost)

    cfg = load_config(CONFIGS / "interference.yaml")
    rows = run_experiment(cfg, progress=False).rows
    by_point: dict[int, list] = {}
    for r in rows:
        by_point.setdefault(r["sweep_index"], []).append(r)
    summary = {}
    for idx, rs in by_point.items():
        key = rs[0]["population.scheme.kind"], rs[0]["population.scheme.t"]
        summary[key] = (np.mean([r["mean_coop"] for r in rs]), np.mean([r["total_cost"] for r in rs]))
    base_coop, base_cost = summary[("unconditional", "none")]
    good = [t for (kind, t), (coop, cost) in summary.items()
            if kind == "pop_threshold" and t < Z - 1 and abs(coop - base_coop) <= 0.02 and cost < base_cost]
    lines = ", ".join(f"t={t}: {c:.4f}/{k:.0f}" for (kind, t), (c, k) in summary.items() if kind == "pop_threshold")
    report(9, differ == 0 and bool(good),
           f"{differ} differing sets on 10000 states; unconditional coop {base_coop:.4f} at cost {base_cost:.0f}; "
           f"{lines}; qualifying t: {good}")


# -- AI race -------------------------------------------------------------------

ORDER = {"III": 0, "II": 1, "I": 2}


def _panel(incentive=None):
    kw = {} if incentive is None else {"incentive": incentive}
    return sweep_phase_diagram(DEFAULT_S_GRID, DEFAULT_PR_GRID, RaceParams(), DEFAULT_EVO, **kw)


def test_criterion_10_phase_topology():
    start = time.monotonic()
    cells = _panel()
    elapsed = time.monotonic() - start
    regions = {name: sum(c.region == name for c in cells) for name in ("I", "II", "III", "X")}
    n_p = len(DEFAULT_PR_GRID)
    inversions = 0
    for i in range(len(DEFAULT_S_GRID)):
        col = cells[i * n_p:(i + 1) * n_p]
        ranks = [ORDER.get(c.region, -1) for c in col]
        inversions += sum(1 for a, b in zip(ranks, ranks[1:]) if b < a) + ranks.count(-1)
    ok = len(cells) == 400 and all(regions[r] > 0 for r in ("I", "II", "III")) and inversions == 0 and elapsed < 300
    report(10, ok, f"regions {regions}; {inversions} inversions along p_r; {elapsed:.1f}s (limit 300s)")


def test_criterion_11_incentive_overlays():
    base = _panel()
    sanc = _panel(DEFAULT_SANCTION)
    com = _panel(DEFAULT_COMMITMENT)
    ii = [i for i, c in enumerate(base) if c.region == "II"]
    iii = [i for i, c in enumerate(base) if c.region == "III"]
    sanc_ii = np.mean([sanc[i].unsafe_freq < base[i].unsafe_freq for i in ii])
    sanc_iii = np.mean([sanc[i].welfare < base[i].welfare for i in iii])
    com_ii = np.mean([com[i].unsafe_freq < base[i].unsafe_freq for i in ii])
    com_iii = max(abs(com[i].unsafe_freq - base[i].unsafe_freq) for i in iii)
    ok = sanc_ii >= 0.9 and sanc_iii >= 0.5 and com_ii >= 0.9 and com_iii <= 0.05
    report(11, ok, f"sanction: region II unsafe reduced in {sanc_ii:.0%}, region III welfare reduced in "
                   f"{sanc_iii:.0%}; commitment: region II unsafe reduced in {com_ii:.0%}, "
                   f"max region III unsafe change {com_iii:.1e} (limit 0.05)")


# -- harness -------------------------------------------------------------------


def _shrink(raw: dict) -> dict:
    """Same experiment, smaller workload, so every kind can be rerun quickly."""
    raw = copy.deepcopy(raw)
    raw["replicates"] = min(raw.get("replicates", 1), 3)
    body = raw.get("population", raw)
    if "steps" in body:
        body["steps"] = min(body["steps"], 2000)
    if "generations" in body:
        body["generations"] = min(body["generations"], 10)
    if "samples" in raw:
        raw["samples"] = min(raw["samples"], 5000)
    for key in ("s_grid", "p_r_grid"):
        if isinstance(raw.get(key), dict):
            raw[key]["num"] = min(raw[key]["num"], 5)
    return raw


def test_criterion_12_determinism(tmp_path):
    names = sorted(p.name for p in CONFIGS.glob("*.yaml"))
    identical = []
    for name in names:
        raw = _shrink(yaml.safe_load((CONFIGS / name).read_text()))
        outputs = []
        for run, workers in enumerate((1, 1, 3)):
            raw["output"] = str(tmp_path / f"{Path(name).stem}_{run}.csv")
            cfg = build_config(raw, name)
            paths = write_experiment(run_experiment(cfg, workers=workers, progress=False), cfg.output)
            outputs.append([p.read_bytes() for p in paths])
        identical.append(outputs[0] == outputs[1] == outputs[2])
    report(12, all(identical), f"{sum(identical)}/{len(names)} shipped configs byte-identical "
                               f"across 2 reruns and 1 vs 3 workers")
