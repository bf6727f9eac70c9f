"""Conditional density estimation for stationary time series.

The estimator expands the conditional density of the next observation in
an orthonormal basis of the rescaled response, estimates each basis
coefficient with a regression on lagged covariates, and picks the number
of terms by minimizing a density loss on a temporal validation split.
Simulation scenarios with known conditional densities and two reference
methods (nearest-neighbor kernel CDE and an AR-GARCH model) are included
for benchmarking.
"""

from flexts.errors import DataError, NumericError

__all__ = ["DataError", "NumericError"]

__version__ = "0.1.0"
