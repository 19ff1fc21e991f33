"""Certified counting of positive real roots.

Float coefficients are converted exactly to integers (every float is a
dyadic rational), so all sign decisions below are exact.  A polynomial
``P(y) = sum a_k y^k`` is rewritten on ``x = y / (1 + y)`` as
``Q(x) = (1 - x)^n P(x / (1 - x)) = sum a_k x^k (1 - x)^(n - k)``; positive
roots of ``P`` are then the roots of ``Q`` in ``(0, 1)``, which are isolated
by Descartes' rule of signs with dyadic bisection (Vincent-Collins-Akritas)
and refined by exact bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from ..errors import EgtLabError, InvalidParameterError

# bisection depth (in x) beyond which a cluster of sign variations counts as a
# near-multiple root: 2**-40 ~ 9.1e-13
MAX_DEPTH = 40
# relative refinement precision (bits) for x and 1 - x
REFINE_BITS = 56
_MAX_REFINE_BITS = 4000


class DegenerateRoots(EgtLabError):
    """The polynomial has a multiple or near-multiple root (or vanishes)."""


@dataclass(frozen=True)
class PolynomialCoeffs:
    """Coefficients in the monomial basis of ``y``, lowest degree first."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if not c:
            raise InvalidParameterError("empty coefficient sequence")
        if not all(math.isfinite(x) for x in c):
            raise InvalidParameterError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, y):
        return np.polynomial.polynomial.polyval(y, self.coeffs)

    def derivative(self) -> "PolynomialCoeffs":
        if self.degree == 0:
            return PolynomialCoeffs((0.0,))
        return PolynomialCoeffs(tuple(k * a for k, a in enumerate(self.coeffs) if k))


@dataclass(frozen=True)
class EquilibriumCount:
    total: int
    stable: int
    unstable: int
    positions: tuple[float, ...]  # roots y* > 0, ascending

    @property
    def x_positions(self) -> tuple[float, ...]:
        return tuple(y / (1.0 + y) for y in self.positions)


def sign_variations(seq: Sequence) -> int:
    v = 0
    last = 0
    for a in seq:
        if a:
            s = 1 if a > 0 else -1
            if last and s != last:
                v += 1
            last = s
    return v


def to_integer_coeffs(coeffs: Sequence[float]) -> list[int]:
    """Exact integer multiple of a float coefficient vector."""
    ratios = [Fraction(float(a)) for a in coeffs]
    den = reduce(math.lcm, (r.denominator for r in ratios), 1)
    ints = [int(r * den) for r in ratios]
    g = reduce(math.gcd, ints, 0)
    return [a // g for a in ints] if g > 1 else ints


def _strip(a: list[int]) -> tuple[list[int], int]:
    """Drop leading zeros and factor out powers of y; returns (poly, zeros at 0)."""
    while a and a[-1] == 0:
        a.pop()
    k = 0
    while k < len(a) and a[k] == 0:
        k += 1
    return a[k:], k


def _taylor_shift1(q: list[int]) -> list[int]:
    """Coefficients of q(x + 1)."""
    a = list(q)
    n = len(a) - 1
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            a[j] += a[j + 1]
    return a


def _halve(q: list[int]) -> list[int]:
    """2^n q(x / 2)."""
    n = len(q) - 1
    return [c << (n - i) for i, c in enumerate(q)]


def _content_free(q: list[int]) -> list[int]:
    g = reduce(math.gcd, q, 0)
    return [c // g for c in q] if g > 1 else q


def _bernstein_to_x(a: list[int]) -> list[int]:
    """Monomial coefficients of sum_k a_k x^k (1 - x)^(n - k)."""
    n = len(a) - 1
    q = [0] * (n + 1)
    for k, ak in enumerate(a):
        if not ak:
            continue
        m = n - k
        for j in range(m + 1):
            term = ak * math.comb(m, j)
            q[k + j] += -term if j & 1 else term
    return q


def _eval_dyadic(q: list[int], num: int, bits: int) -> int:
    """2^(bits * n) * q(num / 2^bits), exactly."""
    n = len(q) - 1
    acc = q[n]
    for i in range(n - 1, -1, -1):
        acc = acc * num + (q[i] << (bits * (n - i)))
    return acc


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


def _isolate_unit(q: list[int], max_depth: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Isolate roots of integer polynomial ``q`` in (0, 1).

    Returns ``(intervals, exact)`` with dyadic intervals ``(c, k)`` meaning
    ``(c / 2^k, (c + 1) / 2^k)`` that each hold exactly one simple root, and
    exact dyadic roots ``(c, k)`` meaning ``c / 2^k``.
    """
    intervals: list[tuple[int, int]] = []
    exact: list[tuple[int, int]] = []
    stack = [(q, 0, 0)]
    while stack:
        p, c, k = stack.pop()
        v = sign_variations(_taylor_shift1(p[::-1]))
        if v == 0:
            continue
        if v == 1:
            intervals.append((c, k))
            continue
        if k >= max_depth:
            raise DegenerateRoots(
                f"sign variations persist on an interval of width 2^-{k} near x={c / 2 ** k:.15g}"
            )
        left = _content_free(_halve(p))
        if sum(left) == 0:  # p(1/2) == 0
            exact.append((2 * c + 1, k + 1))
        right = _taylor_shift1(left)
        stack.append((right, 2 * c + 1, k + 1))
        stack.append((left, 2 * c, k + 1))
    return intervals, exact


def _refine(q: list[int], c: int, k: int) -> tuple[float, int]:
    """Bisect the isolating interval ``(c/2^k, (c+1)/2^k)`` of ``q``.

    Stops once the interval is narrower than ``2^-REFINE_BITS`` relative to
    both ``x`` and ``1 - x``, so ``y = x / (1 - x)`` keeps full relative
    precision near either end.  Returns ``y`` and the sign of ``q`` just
    right of the left endpoint.
    """
    bits = k
    lo, hi = c, c + 1
    s_lo = _sign(_eval_dyadic(q, lo, bits))
    if s_lo == 0:
        # left endpoint is an exact root; the sign to its right is the sign of q'
        dq = [i * a for i, a in enumerate(q)][1:]
        s_lo = _sign(_eval_dyadic(dq, lo, bits)) if dq else 0
        if s_lo == 0:
            raise DegenerateRoots("multiple root at an interval endpoint")
    while True:
        if hi - lo == 1:
            if (1 << REFINE_BITS) <= min(lo, (1 << bits) - hi) or bits > _MAX_REFINE_BITS:
                break
            lo, hi, bits = lo << 1, hi << 1, bits + 1
        mid = (lo + hi) >> 1
        sm = _sign(_eval_dyadic(q, mid, bits))
        if sm == 0:
            lo = hi = mid
            break
        if sm == s_lo:
            lo = mid
        else:
            hi = mid
    num = lo + hi
    return float(Fraction(num, (2 << bits) - num)), s_lo


def count_positive_real_roots(poly: PolynomialCoeffs | Sequence[float], max_depth: int = MAX_DEPTH) -> EquilibriumCount:
    """Exact number of distinct roots in (0, inf), with positions and stability.

    A root counts as stable when the polynomial changes sign from positive to
    negative as ``y`` increases through it.  Raises :class:`DegenerateRoots`
    for the zero polynomial and for multiple or near-multiple roots.
    """
    coeffs = poly.coeffs if isinstance(poly, PolynomialCoeffs) else tuple(poly)
    a, _ = _strip(to_integer_coeffs(coeffs))
    if not a:
        raise DegenerateRoots("zero polynomial")
    if len(a) == 1 or sign_variations(a) == 0:
        return EquilibriumCount(0, 0, 0, ())
    q = _content_free(_bernstein_to_x(a))
    intervals, exact = _isolate_unit(q, max_depth)
    dq = [i * b for i, b in enumerate(q)][1:]
    roots: list[tuple[float, bool]] = []
    for c, k in intervals:
        y, s_lo = _refine(q, c, k)
        roots.append((y, s_lo > 0))
    for c, k in exact:
        s = _sign(_eval_dyadic(dq, c, k))
        if s == 0:
            raise DegenerateRoots(f"multiple root at x={c / 2 ** k}")
        roots.append((float(Fraction(c, (1 << k) - c)), s < 0))
    roots.sort()
    stable = sum(1 for _, st in roots if st)
    return EquilibriumCount(len(roots), stable, len(roots) - stable, tuple(y for y, _ in roots))


def classify_stability_1d(poly: PolynomialCoeffs, positions: Sequence[float], rel_tol: float = 1e-12) -> tuple[int, int]:
    """Stable/unstable split from the sign of the derivative at each root.

    A root whose scaled derivative is below ``rel_tol`` is treated as
    degenerate.
    """
    dpoly = poly.derivative()
    stable = unstable = 0
    coeffs = np.abs(poly.coeffs)
    for y in positions:
        slope = float(dpoly(y))
        # magnitude of the terms of y * P'(y), the natural scale of the slope
        scale = float(np.sum(coeffs * np.arange(len(coeffs)) * y ** np.arange(len(coeffs)))) / max(y, 1e-300)
        if abs(slope) <= rel_tol * scale:
            raise DegenerateRoots(f"vanishing derivative at y={y}")
        if slope < 0:
            stable += 1
        else:
            unstable += 1
    return stable, unstable


def positive_root_bounds(coeffs: Sequence[float]) -> tuple[float, float]:
    """Interval ``[lo, hi]`` containing every positive root (Cauchy bounds)."""
    a = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    k = 0
    while k < len(a) and a[k] == 0:
        k += 1
    a = a[k:]
    if len(a) < 2:
        return (1.0, 1.0)
    hi = 1.0 + float(np.max(np.abs(a[:-1]) / abs(a[-1])))
    lo = 1.0 / (1.0 + float(np.max(np.abs(a[1:]) / abs(a[0]))))
    return lo, hi
