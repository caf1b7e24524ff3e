"""Reference constants for the bundled benchmark problems.

``TOY_SIGMA`` is the 5-variable correlation matrix used throughout the toy
experiments.  The published rendering of this matrix carries a misprinted
(2,5) entry of 0.6647, which makes the matrix indefinite; the corrected
value 0.06647 restores positive definiteness and reproduces the published
partial correlations to all printed digits.

``WINE_REFERENCE`` records the published distance values for the red/white
Portuguese wine comparison.  They are not reproducible from the public
wine files alone (the 300-row subsample used is unknown), so they serve as
reference numbers for the comparison script, never as test assertions.
"""

import numpy as np

__all__ = ["TOY_SIGMA", "TOY_PARTIALS", "WINE_REFERENCE", "toy_sigma"]


def _sym(upper):
    m = np.array(upper, dtype=float)
    return np.where(np.eye(m.shape[0], dtype=bool), 1.0, m + m.T)


TOY_SIGMA = _sym([
    [0.0, 0.9914, -0.8964, 0.02526, 0.0656],
    [0.0, 0.0, -0.8916, 0.01981, 0.06647],
    [0.0, 0.0, 0.0, -0.009747, -0.06140],
    [0.0, 0.0, 0.0, 0.0, 0.03622],
    [0.0, 0.0, 0.0, 0.0, 0.0],
])

# published partial correlations of TOY_SIGMA (rho_12, rho_13, rho_23)
TOY_PARTIALS = {"rho_12": 0.9574, "rho_13": -0.2114, "rho_23": -0.04897}

WINE_REFERENCE = {
    "scale_s": 142.7687,
    "hellinger": 0.1153,
    "bhattacharyya": -1.7623,
    "d_max_white": 0.0694,
    "d_max_red": 0.05521,
    "delta": 0.44,
    "affinity": 0.1030,
    "log_odds_mean": 18.9273,
}


def toy_sigma():
    """A fresh copy of the corrected toy correlation matrix."""
    return TOY_SIGMA.copy()
