import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import stats

from egtlab.equilibria import (
    DegenerateRoots,
    PolynomialCoeffs,
    RandomGameSpec,
    beta_differences,
    build_polynomial_2strategy,
    classify_stability_1d,
    count_internal_equilibria_2player,
    count_positive_real_roots,
    equilibria_2strategy,
    estimate_equilibrium_stats,
    positive_root_bounds,
    sample_payoff_table,
    sign_variations,
)
from egtlab.equilibria.random_games import _polynomial_batch, _sample_payoffs
from egtlab.errors import DegenerateSampleError, InvalidParameterError
from egtlab.games import PayoffTable, donation_game
from egtlab.rng import make_rng

# mean number of positive roots of sum_k xi_k C(d-1, k) y^k with iid normal xi,
# from numerical integration of the Kac-Rice density
KAC_RICE = {2: 0.5, 3: 0.76830, 4: 0.97930, 5: 1.15967, 8: 1.60049, 10: 1.84477, 20: 2.79029}


def sign_scan_count(coeffs, points=100_000):
    """Independent oracle: sign changes of P on a dense geometric grid."""
    c = np.asarray(coeffs, dtype=float)
    lo, hi = positive_root_bounds(c)
    y = np.geomspace(lo * (1 - 1e-9), hi * (1 + 1e-9), points)
    v = np.polynomial.polynomial.polyval(y, c)
    s = np.sign(v[v != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


# -- sampling ---------------------------------------------------------------


def test_sampler_moments():
    z = _sample_payoffs(RandomGameSpec(2, 4), make_rng(0), 50_000)
    assert z.shape == (50_000, 2, 4)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01
    zc = _sample_payoffs(RandomGameSpec(2, 4, corr=0.6), make_rng(1), 50_000)
    r = np.corrcoef(zc[:, 0, 0], zc[:, 0, 3])[0, 1]
    assert abs(r - 0.6) < 0.02
    # strategies are independent of each other
    assert abs(np.corrcoef(zc[:, 0, 0], zc[:, 1, 0])[0, 1]) < 0.02
    u = _sample_payoffs(RandomGameSpec(3, 2, dist="uniform", support=(2, 5)), make_rng(2), 10_000)
    assert u.min() >= 2 and u.max() < 5 and abs(u.mean() - 3.5) < 0.03


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        RandomGameSpec(2, 3, dist="uniform", corr=0.5)
    with pytest.raises(InvalidParameterError):
        RandomGameSpec(1, 3)
    with pytest.raises(InvalidParameterError):
        RandomGameSpec(2, 3, dist="cauchy")
    with pytest.raises(InvalidParameterError):
        RandomGameSpec(2, 3, corr=1.0)
    assert RandomGameSpec(2, 6).max_count == 5 and RandomGameSpec(4, 2).max_count == 1


def test_sample_table_shape():
    t = sample_payoff_table(RandomGameSpec(3, 3), make_rng(0))
    assert t.payoffs.shape == (3, 6)


# -- polynomial construction ------------------------------------------------


def test_beta_of_donation_game():
    beta = beta_differences(donation_game(4, 1).as_table())
    np.testing.assert_allclose(beta, [[-1.0, -1.0]])
    assert equilibria_2strategy(donation_game(4, 1).as_table()).total == 0


def test_identical_payoffs_give_zero_beta():
    t = PayoffTable(2, 4, [[1, 2, 3, 4], [1, 2, 3, 4]])
    assert not beta_differences(t).any()
    with pytest.raises(DegenerateRoots):
        equilibria_2strategy(t)


@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_swapping_strategies_negates_beta(vals):
    t = PayoffTable(2, 3, [vals[:3], vals[3:]])
    s = PayoffTable(2, 3, [vals[3:][::-1], vals[:3][::-1]])
    np.testing.assert_array_equal(beta_differences(s)[0], -beta_differences(t)[0][::-1])


def test_polynomial_examples():
    assert build_polynomial_2strategy([1, -1], 2).coeffs == (1.0, -1.0)
    assert build_polynomial_2strategy([1, 2, 3], 3).coeffs == (1.0, 4.0, 3.0)
    with pytest.raises(InvalidParameterError):
        build_polynomial_2strategy([1, 2], 3)


def test_root_examples():
    eq = count_positive_real_roots([-1, 0, 1])
    assert (eq.total, eq.stable, eq.unstable) == (1, 0, 1)
    assert eq.positions == (1.0,) and eq.x_positions == (0.5,)
    eq = count_positive_real_roots([-6, 11, -6, 1])
    assert eq.positions == pytest.approx((1, 2, 3), rel=1e-14)
    assert (eq.stable, eq.unstable) == (1, 2)
    assert count_positive_real_roots([1, 0, 1]).total == 0
    assert count_positive_real_roots([1, -1]).stable == 1
    assert count_positive_real_roots([5]).total == 0
    with pytest.raises(DegenerateRoots):
        count_positive_real_roots([1, -2, 1])
    with pytest.raises(DegenerateRoots):
        count_positive_real_roots([0, 0])


def test_widely_separated_roots():
    c = np.polynomial.polynomial.polyfromroots([1e-7, 3e6])
    eq = count_positive_real_roots(c)
    assert eq.total == 2
    assert eq.positions == pytest.approx((1e-7, 3e6), rel=1e-9)


def test_close_roots_are_separated():
    c = np.polynomial.polynomial.polyfromroots([1.0, 1.001, 5.0])
    assert count_positive_real_roots(c).total == 3


def test_sign_variations_skip_zeros():
    assert sign_variations([1, 0, -1, 0, 0, 2]) == 2
    assert sign_variations([0, 0]) == 0


def test_classify_stability():
    p = PolynomialCoeffs((-6, 11, -6, 1))
    assert classify_stability_1d(p, [1, 2, 3]) == (1, 2)
    with pytest.raises(DegenerateRoots):
        classify_stability_1d(PolynomialCoeffs((1, -2, 1)), [1.0])


def test_root_bounds_contain_roots():
    c = np.polynomial.polynomial.polyfromroots([0.01, 2, 70])
    lo, hi = positive_root_bounds(c)
    assert lo <= 0.01 and hi >= 70


coeff_lists = st.lists(st.floats(-100, 100, allow_subnormal=False).filter(lambda v: abs(v) > 1e-3),
                       min_size=2, max_size=9)


@given(coeff_lists, st.floats(1e-3, 1e3))
def test_scale_invariance(c, k):
    try:
        a = count_positive_real_roots(c)
    except DegenerateRoots:
        assume(False)
    b = count_positive_real_roots([k * v for v in c])
    assert (a.total, a.stable) == (b.total, b.stable)
    np.testing.assert_allclose(a.positions, b.positions, rtol=1e-12)


@given(coeff_lists)
def test_relabelling_maps_x_to_one_minus_x(c):
    # swapping the two strategies reverses and negates the coefficients
    try:
        a = count_positive_real_roots(c)
    except DegenerateRoots:
        assume(False)
    b = count_positive_real_roots([-v for v in reversed(c)])
    assert a.total == b.total and a.stable == b.stable
    np.testing.assert_allclose(sorted(1 - x for x in a.x_positions), b.x_positions, atol=1e-12)


@given(coeff_lists)
def test_stable_and_unstable_alternate(c):
    try:
        eq = count_positive_real_roots(c)
    except DegenerateRoots:
        assume(False)
    assert eq.stable + eq.unstable == eq.total
    assert abs(eq.stable - eq.unstable) <= 1
    assert eq.total <= sign_variations(c)
    assert eq.total % 2 == sign_variations(c) % 2


@given(coeff_lists)
def test_stability_agrees_with_derivative(c):
    try:
        eq = count_positive_real_roots(c)
        split = classify_stability_1d(PolynomialCoeffs(tuple(c)), eq.positions, rel_tol=1e-9)
    except DegenerateRoots:
        assume(False)
    assert split == (eq.stable, eq.unstable)


def test_sign_scan_oracle_small():
    rng = make_rng(5)
    for _ in range(300):
        d = int(rng.integers(2, 11))
        c = build_polynomial_2strategy(rng.standard_normal(d), d).coeffs
        assert count_positive_real_roots(c).total == sign_scan_count(c, 20_000)


# -- two-player linear route ------------------------------------------------


def test_linear_examples():
    assert count_internal_equilibria_2player(np.array([[0, 2], [1, 0]])) == 1
    assert count_internal_equilibria_2player(np.array([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])) == 1
    assert count_internal_equilibria_2player(np.array([[3, 0], [5, 1]])) == 0
    assert count_internal_equilibria_2player(donation_game(4, 1).as_table()) == 0
    with pytest.raises(DegenerateSampleError):
        count_internal_equilibria_2player(np.ones((3, 3)))
    with pytest.raises(InvalidParameterError):
        count_internal_equilibria_2player(np.ones((2, 3)))


def test_linear_matches_polynomial_for_two_strategies():
    rng = make_rng(8)
    for _ in range(200):
        m = rng.standard_normal((2, 2))
        t = PayoffTable.from_matrix(m)
        assert count_internal_equilibria_2player(m) == equilibria_2strategy(t).total


# -- Monte Carlo --------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_mean_matches_kac_rice(d):
    s = estimate_equilibrium_stats(RandomGameSpec(2, d), 40_000, make_rng(d))
    assert abs(s.mean_count - KAC_RICE[d]) < 4 * s.se_count
    assert sum(s.count_histogram) == pytest.approx(1.0)
    assert s.degenerate == 0


def test_two_player_mean_is_power_of_two():
    for n in (2, 3, 4):
        s = estimate_equilibrium_stats(RandomGameSpec(n, 2), 40_000, make_rng(20 + n))
        assert abs(s.mean_count - 2.0 ** (1 - n)) < 4 * s.se_count


def test_density_is_symmetric():
    a = _polynomial_batch(_sample_payoffs(RandomGameSpec(2, 4), make_rng(1), 10_000), 4).positions
    b = _polynomial_batch(_sample_payoffs(RandomGameSpec(2, 4), make_rng(2), 10_000), 4).positions
    assert stats.ks_2samp(a, 1 - b).pvalue > 0.001


def test_density_integrates_to_mean():
    s = estimate_equilibrium_stats(RandomGameSpec(2, 4), 20_000, make_rng(3), bins=10)
    width = np.diff(s.bin_edges)
    assert float(np.dot(s.density, width)) == pytest.approx(s.mean_count, rel=1e-12)


def test_estimate_is_deterministic_and_chunk_stable():
    a = estimate_equilibrium_stats(RandomGameSpec(2, 3), 10_000, make_rng(4))
    b = estimate_equilibrium_stats(RandomGameSpec(2, 3), 10_000, make_rng(4))
    assert a == b


def test_estimate_errors():
    with pytest.raises(NotImplementedError):
        estimate_equilibrium_stats(RandomGameSpec(3, 3), 1000, make_rng(0))
    with pytest.raises(InvalidParameterError):
        estimate_equilibrium_stats(RandomGameSpec(2, 3), 10, make_rng(0))
    with pytest.raises(InvalidParameterError):
        estimate_equilibrium_stats(RandomGameSpec(3, 2), 1000, make_rng(0), method="polynomial")
    with pytest.raises(InvalidParameterError):
        estimate_equilibrium_stats(RandomGameSpec(2, 3), 1000, make_rng(0), method="linear")


def test_as_row_columns():
    s = estimate_equilibrium_stats(RandomGameSpec(2, 3), 1000, make_rng(0))
    assert list(s.as_row()) == ["n", "d", "dist", "corr", "samples", "mean", "se", "p_0", "p_1", "p_2",
                                "mean_stable", "se_stable", "degenerate_rate"]
