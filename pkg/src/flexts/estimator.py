"""Series-expansion conditional density estimation for time series.

The conditional density f(y_t | u_t) is expanded in an orthonormal
basis of the rescaled response; each coefficient beta_i(u) = E[phi_i(Z_t) | u]
is estimated by regressing phi_i(z_t) on the covariates u_t. The number
of expansion terms and the backend hyperparameter are chosen jointly by
minimizing the empirical density loss on a later-in-time validation
block. Predicted densities are post-processed (negative part clipped,
mass renormalized) before consumption.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from flexts.basis import BASIS_KINDS, basis_matrix, fit_scaler
from flexts.errors import DataError, NumericError
from flexts.evaluation import cde_loss_curve, cde_loss_from_coeffs, cde_loss_grid
from flexts.features import SplitSpec, temporal_split
from flexts.regression import (
    BACKEND_KINDS,
    KnnModel,
    LassoModel,
    NadarayaWatsonModel,
    default_delta_grid,
    default_k_grid,
    default_lambda_grid,
    knn_predict_grid,
    lasso_path,
    nw_predict_grid,
)


@dataclass(frozen=True)
class FitConfig:
    """Estimator settings; hyper_grid=None means backend defaults."""

    basis: str = "cosine"
    i_max: int = 30
    backend: str = "nw"
    hyper_grid: tuple | None = None
    grid_size: int = 1001
    pad: float = 0.05
    refit_final: bool = False
    select_postprocessed: bool = False
    lasso_max_iter: int = 10000
    lasso_tol: float = 1e-7

    def __post_init__(self):
        if self.basis not in BASIS_KINDS:
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.backend not in BACKEND_KINDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.i_max < 1:
            raise ValueError(f"i_max must be >= 1, got {self.i_max}")
        if self.grid_size < 101 or self.grid_size % 2 == 0:
            raise ValueError(
                f"grid_size must be odd and >= 101, got {self.grid_size}"
            )


@dataclass
class CoefficientModel:
    """A fitted conditional density estimator."""

    scaler: object
    basis: str
    i_max: int
    i_selected: int
    grid_size: int
    backend_kind: str
    hyper: float
    backend: object
    val_losses: np.ndarray
    val_std_errors: np.ndarray
    candidate_hypers: list
    candidate_losses: list
    feature_names: list
    n_lags: int
    diagnostics: dict = field(default_factory=dict)


@dataclass
class DensityBatch:
    """Post-processed densities on a shared response grid."""

    grid_y: np.ndarray
    density: np.ndarray
    raw_density: np.ndarray
    degenerate: np.ndarray
    n_fallback: int = 0


@dataclass
class DensityEstimate:
    """A single post-processed conditional density."""

    grid_y: np.ndarray
    density: np.ndarray
    raw_density: np.ndarray
    degenerate: bool


def _candidate_predictions(u_tr, phi_tr, u_va, config):
    """Validation-set coefficient predictions for every hyper candidate.

    Returns (hypers, predictions, path_models); path_models is non-None
    only for the lasso backend, whose fitted models are reused directly.
    """
    kind = config.backend
    if kind == "nw":
        hypers = (
            default_delta_grid(u_tr)
            if config.hyper_grid is None
            else [float(h) for h in config.hyper_grid]
        )
        if any(h <= 0 for h in hypers):
            raise ValueError("nw radii must be positive")
        preds = nw_predict_grid(u_tr, phi_tr, u_va, hypers)
        return list(hypers), preds, None
    if kind == "knn":
        n_tr = u_tr.shape[0]
        if config.hyper_grid is None:
            hypers = default_k_grid(n_tr)
        else:
            hypers = []
            for k in config.hyper_grid:
                k = int(k)
                if k > n_tr:
                    warnings.warn(
                        f"skipping k={k}: larger than the {n_tr} training rows",
                        RuntimeWarning,
                    )
                    continue
                hypers.append(k)
            if not hypers:
                raise ValueError("no usable k candidates after filtering")
        preds = knn_predict_grid(u_tr, phi_tr, u_va, hypers)
        return list(hypers), preds, None
    # lasso
    if config.hyper_grid is None:
        lams = default_lambda_grid(u_tr, phi_tr)
    else:
        lams = sorted((float(l) for l in config.hyper_grid), reverse=True)
        if any(l < 0 for l in lams):
            raise ValueError("lasso penalties must be nonnegative")
    models = lasso_path(
        u_tr, phi_tr, lams, max_iter=config.lasso_max_iter, tol=config.lasso_tol
    )
    preds = [m.predict(u_va) for m in models]
    return list(lams), preds, models


def _postprocess_raw(raw, grid_y, width):
    """Clip negatives and renormalize rows to unit mass on the grid."""
    clipped = np.maximum(raw, 0.0)
    mass = np.trapezoid(clipped, grid_y, axis=1)
    degenerate = ~(mass > 0.0) | ~np.isfinite(mass)
    safe = np.where(degenerate, 1.0, mass)
    density = clipped / safe[:, None]
    if degenerate.any():
        density[degenerate] = 1.0 / width
    return density, degenerate


def _postprocessed_loss_curve(b_hat, grid_y, phi_grid, width, y_va):
    """Grid-form validation loss of post-processed densities at each cutoff."""
    n_coef = b_hat.shape[1]
    losses = np.empty(n_coef)
    raw = np.zeros((b_hat.shape[0], grid_y.size))
    for i in range(n_coef):
        raw += np.outer(b_hat[:, i], phi_grid[:, i]) / width
        density, _ = _postprocess_raw(raw, grid_y, width)
        losses[i] = cde_loss_grid(grid_y, density, y_va).loss
    return losses


def fit(design, split=SplitSpec(), config=FitConfig()):
    """Fit the estimator on a design matrix with a temporal split.

    Hyperparameter and cutoff are selected jointly: for every candidate
    in the backend grid the validation loss curve over cutoffs I = 0..i_max
    is computed, and the (candidate, I) pair with the smallest loss wins.
    Ties prefer the smaller I, then the earlier candidate. By default
    the selection loss is the coefficient form on raw expansions;
    ``config.select_postprocessed`` switches to the grid-form loss of
    clipped, renormalized densities.
    """
    tr, va, te = temporal_split(design.n_rows, split)
    if tr.stop - tr.start < 30:
        raise DataError(
            f"training split has {tr.stop - tr.start} rows; need at least 30"
        )
    u_tr = design.u[tr.start : tr.stop]
    y_tr = design.y[tr.start : tr.stop]
    u_va = design.u[va.start : va.stop]
    y_va = design.y[va.start : va.stop]

    scaler = fit_scaler(y_tr, pad=config.pad)
    z_tr = scaler.transform(y_tr)
    phi_tr = basis_matrix(config.basis, z_tr, config.i_max)
    z_va = scaler.transform(y_va)

    hypers, preds, path_models = _candidate_predictions(u_tr, phi_tr, u_va, config)

    grid_y = np.linspace(scaler.lo, scaler.hi, config.grid_size)
    phi_grid = basis_matrix(
        config.basis, scaler.transform(grid_y), config.i_max
    )

    best = None  # (loss, i, candidate_index)
    curves = []
    for c, pred in enumerate(preds):
        if config.select_postprocessed:
            losses = _postprocessed_loss_curve(
                pred.b_hat, grid_y, phi_grid, scaler.width, y_va
            )
            _, ses = cde_loss_curve(pred.b_hat, z_va, kind=config.basis)
        else:
            losses, ses = cde_loss_curve(pred.b_hat, z_va, kind=config.basis)
        bad = ~np.isfinite(losses)
        if bad.any():
            raise NumericError(
                f"non-finite validation loss at I={int(np.argmax(bad))} "
                f"for {config.backend} candidate {hypers[c]!r}"
            )
        i_best = int(np.argmin(losses))
        key = (float(losses[i_best]), i_best, c)
        curves.append((losses, ses))
        if best is None or key < best:
            best = key
    best_loss, i_selected, c_best = best

    if i_selected == config.i_max and config.i_max > 0:
        warnings.warn(
            f"selected cutoff I={i_selected} hit i_max; consider raising i_max",
            RuntimeWarning,
        )

    n_fallback_val = getattr(preds[c_best], "n_fallback", 0)

    if config.refit_final:
        # refit on train+validation rows at the chosen hyperparameter;
        # the scaler stays train-only, so validation responses that fall
        # off the padded range cannot be used as targets and are dropped
        inside = (z_va >= 0.0) & (z_va <= 1.0)
        u_fit = np.vstack([u_tr, u_va[inside]])
        phi_fit = np.vstack(
            [phi_tr, basis_matrix(config.basis, z_va[inside], config.i_max)]
        )
        n_dropped = int((~inside).sum())
    else:
        u_fit, phi_fit = u_tr, phi_tr
        n_dropped = 0

    kind = config.backend
    hyper = hypers[c_best]
    if kind == "nw":
        backend = NadarayaWatsonModel(u_fit, phi_fit, float(hyper))
    elif kind == "knn":
        backend = KnnModel(u_fit, phi_fit, int(hyper))
    elif config.refit_final:
        backend = lasso_path(
            u_fit,
            phi_fit,
            hypers[: c_best + 1],
            max_iter=config.lasso_max_iter,
            tol=config.lasso_tol,
        )[-1]
    else:
        backend = path_models[c_best]

    losses, ses = curves[c_best]
    return CoefficientModel(
        scaler=scaler,
        basis=config.basis,
        i_max=config.i_max,
        i_selected=i_selected,
        grid_size=config.grid_size,
        backend_kind=kind,
        hyper=float(hyper),
        backend=backend,
        val_losses=np.asarray(losses),
        val_std_errors=np.asarray(ses),
        candidate_hypers=list(hypers),
        candidate_losses=[float(c[0][int(np.argmin(c[0]))]) for c in curves],
        feature_names=list(design.feature_names),
        n_lags=design.n_lags,
        diagnostics={
            "val_loss": float(best_loss),
            "n_fallback_val": int(n_fallback_val),
            "n_val_dropped_refit": n_dropped,
            "n_train": int(u_tr.shape[0]),
            "n_val": int(u_va.shape[0]),
            "n_test": int(te.stop - te.start),
            "at_i_max": bool(i_selected == config.i_max),
        },
    )


def _check_u(model, u):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[None, :]
    if u.ndim != 2 or u.shape[1] != len(model.feature_names):
        raise DataError(
            f"expected covariate rows with {len(model.feature_names)} features "
            f"({model.feature_names}), got shape {u.shape}"
        )
    if not np.all(np.isfinite(u)):
        raise DataError("covariates contain non-finite values")
    return u


def predict_coefficients(model, u):
    """Predicted basis coefficients (all i_max+1 columns) at covariates u."""
    u = _check_u(model, u)
    return model.backend.predict(u)


def predict_density_batch(model, u, grid_size=None):
    """Post-processed conditional densities for many covariate rows."""
    u = _check_u(model, u)
    gs = model.grid_size if grid_size is None else int(grid_size)
    if gs < 2:
        raise ValueError(f"grid_size must be >= 2, got {gs}")
    scaler = model.scaler
    grid_y = np.linspace(scaler.lo, scaler.hi, gs)
    phi_grid = basis_matrix(model.basis, scaler.transform(grid_y), model.i_selected)
    pred = model.backend.predict(u)
    coeffs = pred.b_hat[:, : model.i_selected + 1]
    raw = (coeffs @ phi_grid.T) / scaler.width
    density, degenerate = _postprocess_raw(raw, grid_y, scaler.width)
    return DensityBatch(
        grid_y=grid_y,
        density=density,
        raw_density=raw,
        degenerate=degenerate,
        n_fallback=getattr(pred, "n_fallback", 0),
    )


def predict_density(model, u):
    """Post-processed conditional density for a single covariate row."""
    batch = predict_density_batch(model, u)
    if batch.density.shape[0] != 1:
        raise DataError("predict_density expects a single covariate row")
    return DensityEstimate(
        grid_y=batch.grid_y,
        density=batch.density[0],
        raw_density=batch.raw_density[0],
        degenerate=bool(batch.degenerate[0]),
    )


def quantiles_from_grid_density(grid_y, density, taus):
    """Invert the CDF of one tabulated density by linear interpolation."""
    steps = np.diff(grid_y)
    cdf = np.concatenate(
        [[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * steps)]
    )
    total = cdf[-1]
    if total <= 0 or not np.isfinite(total):
        raise NumericError("density has no positive mass; quantiles undefined")
    cdf /= total
    return np.interp(taus, cdf, grid_y)


def predict_quantiles(model, u, taus):
    """Conditional quantiles by inverting the post-processed density CDF."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if taus.size == 0 or np.any(taus <= 0.0) or np.any(taus >= 1.0):
        raise ValueError(f"quantile levels must lie strictly in (0, 1), got {taus}")
    batch = predict_density_batch(model, u)
    out = np.empty((batch.density.shape[0], taus.size))
    for r in range(batch.density.shape[0]):
        out[r] = quantiles_from_grid_density(batch.grid_y, batch.density[r], taus)
    if out.shape[0] == 1 and np.asarray(u).ndim == 1:
        return out[0]
    return out


def importance(model, u_val=None, y_val=None, n_permutations=5, seed=0):
    """Feature importance scores, one per covariate.

    For the lasso backend the score of feature j is the mean absolute
    standardized coefficient over the selected expansion terms, needing
    no data. For the local backends (nw, knn) it is permutation
    importance: the increase in validation density loss when column j is
    shuffled, averaged over ``n_permutations`` draws and floored at zero.
    """
    if model.backend_kind == "lasso":
        lm = model.backend
        assert isinstance(lm, LassoModel)
        return np.abs(lm.coef_std[:, : model.i_selected + 1]).mean(axis=1)
    if u_val is None or y_val is None:
        raise ValueError(
            f"{model.backend_kind} importance is permutation-based and "
            "requires validation covariates and responses"
        )
    u_val = _check_u(model, u_val)
    y_val = np.asarray(y_val, dtype=float)
    if y_val.shape[0] != u_val.shape[0]:
        raise DataError("u_val and y_val row counts differ")
    z_val = model.scaler.transform(y_val)
    i_cut = model.i_selected

    def loss_of(u):
        b = model.backend.predict(u).b_hat
        return cde_loss_from_coeffs(b, z_val, i_cut, kind=model.basis).loss

    base = loss_of(u_val)
    rng = np.random.default_rng(seed)
    scores = np.empty(u_val.shape[1])
    for j in range(u_val.shape[1]):
        bumps = []
        for _ in range(n_permutations):
            perm = rng.permutation(u_val.shape[0])
            shuffled = u_val.copy()
            shuffled[:, j] = u_val[perm, j]
            bumps.append(loss_of(shuffled) - base)
        scores[j] = max(float(np.mean(bumps)), 0.0)
    return scores
