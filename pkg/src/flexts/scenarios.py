"""Simulation scenarios with known conditional densities.

Each scenario generates a stationary series from zero initial
conditions with a burn-in that is discarded, and exposes the exact
conditional density of Y_t given the three most recent lagged values
(u = (y_{t-1}, y_{t-2}, y_{t-3})). The closed forms make oracle loss
computations possible in benchmarks.

Scenarios
---------
ar
    Y_t = 0.2 Y_{t-1} + 0.3 Y_{t-2} + 0.35 Y_{t-3} + e_t, e ~ N(0,1).
arma_jump
    Y_t = 0.1 Y_{t-1} + 0.4 Y_{t-2} + 0.4 Y_{t-3} + 0.01 - 0.3 Z_t
          + 0.05 (1 + Z_t) e_t with Z_t ~ Bernoulli(0.05), e ~ N(0,1);
    a two-component Gaussian mixture conditional.
arma_jump_t
    Same recursion with e_t ~ t(3): a scaled-t mixture conditional.
nonlinear_mean
    Y_t = sin^2(pi Y_{t-3}) + sigma_nm e_t, e ~ N(0,1).
nonlinear_variance
    Y_t = sigma_t e_t with sigma_t = 0.1 if |Y_{t-3}| > 0.5 else 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from flexts.errors import DataError

SCENARIO_NAMES = (
    "ar",
    "arma_jump",
    "arma_jump_t",
    "nonlinear_mean",
    "nonlinear_variance",
)

JUMP_PROB = 0.05

AR_COEFFS = (0.2, 0.3, 0.35)
ARMA_COEFFS = (0.1, 0.4, 0.4)


@dataclass(frozen=True)
class ScenarioSpec:
    """What to simulate: scenario name, length, seed, and knobs."""

    name: str
    n: int
    seed: int
    burn_in: int = 200
    sigma_nm: float = 0.5

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ValueError(
                f"unknown scenario {self.name!r}; expected one of {SCENARIO_NAMES}"
            )
        if self.n < 100:
            raise ValueError(f"scenario length must be >= 100, got {self.n}")
        if self.burn_in < 100:
            raise ValueError(f"burn-in must be >= 100, got {self.burn_in}")
        if self.sigma_nm <= 0:
            raise ValueError(f"sigma_nm must be positive, got {self.sigma_nm}")


@dataclass
class ScenarioDraw:
    """A simulated path; ``jumps`` is set for the jump scenarios only."""

    y: np.ndarray
    jumps: np.ndarray | None = None


def simulate(spec):
    """Simulate a scenario path of length spec.n after burn-in.

    All randomness comes from ``numpy.random.default_rng(spec.seed)``
    with a fixed draw order (innovations first, then jump indicators),
    so a given spec always produces the same path.
    """
    rng = np.random.default_rng(spec.seed)
    total = spec.burn_in + spec.n
    name = spec.name

    if name in ("ar", "arma_jump", "arma_jump_t"):
        if name == "arma_jump_t":
            eps = rng.standard_t(3, size=total)
        else:
            eps = rng.standard_normal(total)
        if name == "ar":
            a1, a2, a3 = AR_COEFFS
            z = None
            y = np.zeros(total)
            for t in range(total):
                y3 = y[t - 3] if t >= 3 else 0.0
                y2 = y[t - 2] if t >= 2 else 0.0
                y1 = y[t - 1] if t >= 1 else 0.0
                y[t] = a1 * y1 + a2 * y2 + a3 * y3 + eps[t]
        else:
            a1, a2, a3 = ARMA_COEFFS
            z = (rng.random(total) < JUMP_PROB).astype(float)
            y = np.zeros(total)
            for t in range(total):
                y3 = y[t - 3] if t >= 3 else 0.0
                y2 = y[t - 2] if t >= 2 else 0.0
                y1 = y[t - 1] if t >= 1 else 0.0
                mean = a1 * y1 + a2 * y2 + a3 * y3 + 0.01 - 0.3 * z[t]
                y[t] = mean + 0.05 * (1.0 + z[t]) * eps[t]
        jumps = None if z is None else z[spec.burn_in:]
        return ScenarioDraw(y=y[spec.burn_in:], jumps=jumps)

    if name == "nonlinear_mean":
        eps = rng.standard_normal(total)
        y = np.zeros(total)
        for t in range(total):
            y3 = y[t - 3] if t >= 3 else 0.0
            y[t] = np.sin(np.pi * y3) ** 2 + spec.sigma_nm * eps[t]
        return ScenarioDraw(y=y[spec.burn_in:])

    # nonlinear_variance
    eps = rng.standard_normal(total)
    y = np.zeros(total)
    for t in range(total):
        y3 = y[t - 3] if t >= 3 else 0.0
        sigma = 0.1 if abs(y3) > 0.5 else 1.0
        y[t] = sigma * eps[t]
    return ScenarioDraw(y=y[spec.burn_in:])


def generate(name, n, seed, burn_in=200, sigma_nm=0.5):
    """Convenience wrapper returning just the simulated path."""
    return simulate(
        ScenarioSpec(name=name, n=n, seed=seed, burn_in=burn_in, sigma_nm=sigma_nm)
    ).y


def _norm_pdf(x, mean, sd):
    z = (x - mean) / sd
    return np.exp(-0.5 * z * z) / (sd * np.sqrt(2.0 * np.pi))


def true_density(name, u, grid_y, sigma_nm=0.5):
    """Exact conditional density f(y | u) on a grid of y values.

    ``u`` holds the lagged covariates ordered (y_{t-1}, y_{t-2},
    y_{t-3}, ...); only the first three entries are used and at least
    three are required. Extra entries (longer lag embeddings) are
    ignored because every scenario is third-order Markov at most.
    """
    if name not in SCENARIO_NAMES:
        raise ValueError(
            f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}"
        )
    u = np.asarray(u, dtype=float).ravel()
    if u.size < 3:
        raise DataError(
            f"scenario {name!r} conditions on three lags; got {u.size} covariates"
        )
    grid_y = np.asarray(grid_y, dtype=float)
    y1, y2, y3 = u[0], u[1], u[2]

    if name == "ar":
        a1, a2, a3 = AR_COEFFS
        return _norm_pdf(grid_y, a1 * y1 + a2 * y2 + a3 * y3, 1.0)

    if name in ("arma_jump", "arma_jump_t"):
        a1, a2, a3 = ARMA_COEFFS
        base = a1 * y1 + a2 * y2 + a3 * y3 + 0.01
        if name == "arma_jump":
            calm = _norm_pdf(grid_y, base, 0.05)
            jump = _norm_pdf(grid_y, base - 0.3, 0.10)
        else:
            calm = stats.t.pdf(grid_y, 3, loc=base, scale=0.05)
            jump = stats.t.pdf(grid_y, 3, loc=base - 0.3, scale=0.10)
        return (1.0 - JUMP_PROB) * calm + JUMP_PROB * jump

    if name == "nonlinear_mean":
        return _norm_pdf(grid_y, np.sin(np.pi * y3) ** 2, sigma_nm)

    sigma = 0.1 if abs(y3) > 0.5 else 1.0
    return _norm_pdf(grid_y, 0.0, sigma)


def density_rows(name, u_rows, grid_y, sigma_nm=0.5):
    """Stack true_density over many covariate rows: (n_rows, len(grid))."""
    u_rows = np.asarray(u_rows, dtype=float)
    if u_rows.ndim != 2:
        raise ValueError(f"u_rows must be 2-d, got shape {u_rows.shape}")
    return np.vstack(
        [true_density(name, row, grid_y, sigma_nm=sigma_nm) for row in u_rows]
    )
