from .random_games import (
    EquilibriaStats,
    RandomGameSpec,
    beta_differences,
    build_polynomial_2strategy,
    count_internal_equilibria_2player,
    equilibria_2strategy,
    estimate_equilibrium_stats,
    sample_payoff_table,
)
from .roots import (
    DegenerateRoots,
    EquilibriumCount,
    PolynomialCoeffs,
    classify_stability_1d,
    count_positive_real_roots,
    positive_root_bounds,
    sign_variations,
)
