"""Random games and Monte Carlo statistics of their internal equilibria.

Two routes are supported: two-strategy games with any group size ``d``
(roots of the payoff-difference polynomial in ``y = x / (1 - x)``) and
two-player games with any number of strategies (a linear indifference
system).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DegenerateSampleError, InvalidParameterError
from ..games import PayoffTable, compositions
from ..rng import RngStream, spawn
from .roots import DegenerateRoots, EquilibriumCount, PolynomialCoeffs, count_positive_real_roots

DISTRIBUTIONS = ("normal", "uniform")
# degenerate samples above this rate point at a bug rather than bad luck
MAX_DEGENERATE_RATE = 1e-4
# condition number beyond which a linear indifference system counts as singular
_SINGULAR_COND = 1e12
CHUNK = 8192


@dataclass(frozen=True)
class RandomGameSpec:
    n: int
    d: int
    dist: str = "normal"
    corr: float = 0.0
    support: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.n < 2 or self.d < 2:
            raise InvalidParameterError("a random game needs n >= 2 strategies and d >= 2 players")
        if self.dist not in DISTRIBUTIONS:
            raise InvalidParameterError(f"unknown distribution {self.dist!r}; expected one of {DISTRIBUTIONS}")
        if not 0.0 <= self.corr < 1.0:
            raise InvalidParameterError("correlation must lie in [0, 1)")
        if self.corr and self.dist != "normal":
            raise InvalidParameterError("correlated payoffs are only defined for normal entries")
        lo, hi = self.support
        if not lo < hi:
            raise InvalidParameterError("uniform support needs lo < hi")

    @property
    def n_comps(self) -> int:
        return math.comb(self.n + self.d - 2, self.d - 1)

    @property
    def max_count(self) -> int:
        return self.d - 1 if self.n == 2 else 1


def _sample_payoffs(spec: RandomGameSpec, rng: RngStream, size: int) -> np.ndarray:
    """Array of shape ``(size, n, n_comps)``."""
    shape = (size, spec.n, spec.n_comps)
    if spec.dist == "uniform":
        lo, hi = spec.support
        return rng.uniform(lo, hi, size=shape)
    z = rng.standard_normal(shape)
    if spec.corr:
        # one shared factor per focal strategy gives pairwise covariance r
        common = rng.standard_normal((size, spec.n, 1))
        z = math.sqrt(spec.corr) * common + math.sqrt(1.0 - spec.corr) * z
    return z


def sample_payoff_table(spec: RandomGameSpec, rng: RngStream) -> PayoffTable:
    return PayoffTable(spec.n, spec.d, _sample_payoffs(spec, rng, 1)[0])


def beta_differences(table: PayoffTable) -> np.ndarray:
    """Payoff of every strategy but the last minus that of the last, per composition."""
    return table.payoffs[:-1] - table.payoffs[-1]


def _binomials(d: int) -> np.ndarray:
    return np.array([math.comb(d - 1, k) for k in range(d)], dtype=float)


def build_polynomial_2strategy(beta: Sequence[float], d: int) -> PolynomialCoeffs:
    """Payoff-difference polynomial of a two-strategy ``d``-player game.

    ``beta[k]`` is the payoff advantage of strategy 0 when ``k`` of the
    ``d - 1`` co-players play strategy 0, and ``y`` is the ratio of
    strategy-0 to strategy-1 players.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    if len(beta) != d:
        raise InvalidParameterError(f"need d={d} differences, got {len(beta)}")
    return PolynomialCoeffs(tuple(beta * _binomials(d)))


def equilibria_2strategy(table: PayoffTable) -> EquilibriumCount:
    if table.n != 2:
        raise InvalidParameterError("polynomial route needs a two-strategy game")
    return count_positive_real_roots(build_polynomial_2strategy(beta_differences(table)[0], table.d))


def _matrix_columns(n: int) -> np.ndarray:
    """Position of composition ``e_j`` for every co-player strategy ``j``."""
    index = {c: i for i, c in enumerate(compositions(n, 1))}
    return np.array([index[tuple(int(i == j) for i in range(n))] for j in range(n)])


def _interior_solutions(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched interior rest points of two-player games with matrices ``a``.

    Returns ``(x, interior, singular)``; ``x`` holds the full frequency
    vector of every non-singular sample.
    """
    m, n, _ = a.shape
    beta = a[:, :-1, :] - a[:, -1:, :]
    b = beta[:, :, :-1]
    rhs = -beta[:, :, -1]
    singular = ~np.isfinite(np.linalg.cond(b)) | (np.linalg.cond(b) > _SINGULAR_COND)
    y = np.full((m, n - 1), np.nan)
    ok = ~singular
    if ok.any():
        y[ok] = np.linalg.solve(b[ok], rhs[ok][..., None])[..., 0]
    interior = ok & np.all(y > 0, axis=1)
    x = np.concatenate([y, np.ones((m, 1))], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        # rows summing to zero have a negative entry and are never interior
        x /= x.sum(axis=1, keepdims=True)
    return x, interior, singular


def _replicator_stable(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear stability of interior rest points ``x`` under replicator dynamics.

    The Jacobian ``J_ij = x_i (a_ij - (Ax)_j - (A^T x)_j)`` leaves the simplex
    tangent space invariant; stability means every tangent eigenvalue has a
    negative real part.
    """
    n = a.shape[1]
    if len(a) == 0:
        return np.zeros(0, dtype=bool)
    ax = np.einsum("mij,mj->mi", a, x)
    atx = np.einsum("mji,mj->mi", a, x)
    jac = x[:, :, None] * (a - ax[:, None, :] - atx[:, None, :])
    # orthonormal basis of {v : sum(v) = 0}
    basis = np.linalg.qr(np.eye(n)[:, :-1] - 1.0 / n)[0][:, : n - 1]
    tangent = np.einsum("ia,mij,jb->mab", basis, jac, basis)
    return np.linalg.eigvals(tangent).real.max(axis=1) < 0


def count_internal_equilibria_2player(table: PayoffTable | np.ndarray, n: int | None = None) -> int:
    """1 if the two-player game has a strictly interior rest point, else 0.

    Accepts a ``d = 2`` :class:`PayoffTable` or an ``n x n`` matrix (row
    player's payoffs).  A singular indifference system raises
    :class:`DegenerateSampleError`.
    """
    if isinstance(table, PayoffTable):
        if table.d != 2:
            raise InvalidParameterError("the linear route needs a two-player game")
        a = table.payoffs[:, _matrix_columns(table.n)]
    else:
        a = np.asarray(table, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidParameterError("expected a square payoff matrix")
    if n is not None and n != a.shape[0]:
        raise InvalidParameterError(f"game has {a.shape[0]} strategies, not {n}")
    _, interior, singular = _interior_solutions(a[None])
    if singular[0]:
        raise DegenerateSampleError("singular indifference system")
    return int(interior[0])


# -- Monte Carlo ------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriaStats:
    spec: RandomGameSpec
    samples: int  # games drawn
    degenerate: int  # excluded from every statistic below
    mean_count: float
    se_count: float
    count_histogram: tuple[float, ...]  # p_m for m = 0 .. max_count
    mean_stable: float
    se_stable: float
    density: tuple[float, ...]  # equilibria per unit x per valid sample
    bin_edges: tuple[float, ...]

    @property
    def valid(self) -> int:
        return self.samples - self.degenerate

    @property
    def degenerate_rate(self) -> float:
        return self.degenerate / self.samples

    @property
    def bin_midpoints(self) -> tuple[float, ...]:
        e = self.bin_edges
        return tuple((a + b) / 2 for a, b in zip(e, e[1:]))

    def as_row(self) -> dict:
        row = {
            "n": self.spec.n,
            "d": self.spec.d,
            "dist": self.spec.dist,
            "corr": self.spec.corr,
            "samples": self.samples,
            "mean": self.mean_count,
            "se": self.se_count,
        }
        row.update({f"p_{m}": p for m, p in enumerate(self.count_histogram)})
        row.update({"mean_stable": self.mean_stable, "se_stable": self.se_stable,
                    "degenerate_rate": self.degenerate_rate})
        return row


@dataclass
class _Batch:
    counts: np.ndarray
    stable: np.ndarray
    positions: np.ndarray  # x* in (0, 1) of every equilibrium found
    degenerate: int


def _q_sign(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Sign of sum_k a_k x^k (1 - x)^(n-k), evaluated row-wise and stably."""
    low = x <= 0.5
    y = np.where(low, x / (1.0 - x), (1.0 - x) / x)
    acc = np.zeros(len(x))
    n = a.shape[1]
    for k in range(n - 1, -1, -1):
        # Horner in y on the low side, in 1/y (reversed coefficients) on the high side
        acc = acc * y + np.where(low, a[:, k], a[:, n - 1 - k])
    return np.sign(acc)


def _single_root_positions(a: np.ndarray) -> np.ndarray:
    if a.shape[1] == 2:
        y = -a[:, 0] / a[:, 1]
        return y / (1.0 + y)
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    s_lo = np.sign(a[:, 0])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        same = _q_sign(a, mid) == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _polynomial_batch(payoffs: np.ndarray, d: int) -> _Batch:
    coeffs = (payoffs[:, 0, :] - payoffs[:, 1, :]) * _binomials(d)
    m = len(coeffs)
    signs = np.sign(coeffs)
    clean = np.all(signs != 0, axis=1)
    variations = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1)
    counts = np.zeros(m, dtype=np.int64)
    stable = np.zeros(m, dtype=np.int64)
    valid = np.ones(m, dtype=bool)
    one = clean & (variations == 1)
    counts[one] = 1
    stable[one] = coeffs[one, 0] > 0
    positions = [_single_root_positions(coeffs[one])]
    for i in np.flatnonzero(~clean | (variations >= 2)):
        try:
            eq = count_positive_real_roots(coeffs[i])
        except DegenerateRoots:
            valid[i] = False
            continue
        counts[i] = eq.total
        stable[i] = eq.stable
        positions.append(np.asarray(eq.x_positions))
    return _Batch(counts[valid], stable[valid], np.concatenate(positions), int(m - valid.sum()))


def _linear_batch(payoffs: np.ndarray, n: int) -> _Batch:
    a = payoffs[:, :, _matrix_columns(n)]
    x, interior, singular = _interior_solutions(a)
    stable = np.zeros(len(a), dtype=np.int64)
    stable[interior] = _replicator_stable(a[interior], x[interior])
    valid = ~singular
    return _Batch(interior[valid].astype(np.int64), stable[valid], x[interior, 0], int(singular.sum()))


def _resolve_method(spec: RandomGameSpec, method: str) -> str:
    if method not in ("auto", "polynomial", "linear"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if spec.n > 2 and spec.d > 2:
        raise NotImplementedError("equilibria of games with n > 2 strategies and d > 2 players are not supported")
    if method == "auto":
        return "polynomial" if spec.n == 2 else "linear"
    if method == "polynomial" and spec.n != 2:
        raise InvalidParameterError("the polynomial route needs n = 2")
    if method == "linear" and spec.d != 2:
        raise InvalidParameterError("the linear route needs d = 2")
    return method


def estimate_equilibrium_stats(
    spec: RandomGameSpec,
    samples: int,
    rng: RngStream,
    bins: int = 20,
    method: str = "auto",
    min_samples: int = 1000,
) -> EquilibriaStats:
    """Monte Carlo estimate of the number, stability and density of internal equilibria.

    Samples are drawn in fixed-size chunks, each from its own stream spawned
    from ``rng``, so the result depends only on ``rng`` and ``samples``.
    """
    method = _resolve_method(spec, method)
    if samples < min_samples:
        raise InvalidParameterError(f"need at least {min_samples} samples, got {samples}")
    if bins < 1:
        raise InvalidParameterError("bins must be >= 1")
    n_chunks = -(-samples // CHUNK)
    streams = spawn(rng, n_chunks)
    counts, stable, positions = [], [], []
    degenerate = 0
    for j, stream in enumerate(streams):
        size = min(CHUNK, samples - j * CHUNK)
        payoffs = _sample_payoffs(spec, stream, size)
        batch = _polynomial_batch(payoffs, spec.d) if method == "polynomial" else _linear_batch(payoffs, spec.n)
        counts.append(batch.counts)
        stable.append(batch.stable)
        positions.append(batch.positions)
        degenerate += batch.degenerate
    if degenerate / samples >= MAX_DEGENERATE_RATE:
        raise DegenerateSampleError(
            f"{degenerate} of {samples} samples were degenerate (rate >= {MAX_DEGENERATE_RATE})"
        )
    counts = np.concatenate(counts)
    stable = np.concatenate(stable)
    positions = np.concatenate(positions)
    valid = len(counts)
    hist = np.bincount(counts, minlength=spec.max_count + 1) / valid
    edges = np.linspace(0.0, 1.0, bins + 1)
    density = np.histogram(positions, bins=edges)[0] / (valid * (1.0 / bins))
    return EquilibriaStats(
        spec=spec,
        samples=samples,
        degenerate=degenerate,
        mean_count=float(counts.mean()),
        se_count=float(counts.std(ddof=1) / math.sqrt(valid)),
        count_histogram=tuple(float(p) for p in hist),
        mean_stable=float(stable.mean()),
        se_stable=float(stable.std(ddof=1) / math.sqrt(valid)),
        density=tuple(float(v) for v in density),
        bin_edges=tuple(float(e) for e in edges),
    )
