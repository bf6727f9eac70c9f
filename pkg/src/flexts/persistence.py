"""Model save/load as self-describing JSON.

Floating point values are written as 17-significant-digit decimal
strings, which round-trip IEEE doubles exactly, so a loaded model
reproduces the saved model's predictions bit for bit. Files carry a
format version and enough metadata (feature construction, split
fractions) to rebuild design matrices for evaluation.
"""

import json

import numpy as np

from flexts.basis import Scaler
from flexts.baselines import GarchModel, NnkcdeModel
from flexts.errors import DataError
from flexts.estimator import CoefficientModel
from flexts.regression import KnnModel, LassoModel, NadarayaWatsonModel

FORMAT_VERSION = 1


def _enc_float(x):
    return format(float(x), ".17g")


def _enc_array(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        return [_enc_float(v) for v in a]
    return [[_enc_float(v) for v in row] for row in a]


def _dec_array(obj):
    return np.asarray(obj, dtype=float)


def _backend_doc(model):
    kind = model.backend_kind
    be = model.backend
    if kind in ("nw", "knn"):
        return {
            "kind": kind,
            "hyper": _enc_float(model.hyper),
            "train_u": _enc_array(be.train_u),
            "train_phi": _enc_array(be.train_phi),
        }
    return {
        "kind": "lasso",
        "hyper": _enc_float(model.hyper),
        "intercept": _enc_array(be.intercept),
        "coef": _enc_array(be.coef),
        "coef_std": _enc_array(be.coef_std),
        "feature_mean": _enc_array(be.feature_mean),
        "feature_scale": _enc_array(be.feature_scale),
        "converged": [bool(v) for v in np.atleast_1d(be.converged)],
    }


def flexcode_doc(model):
    return {
        "scaler": {
            "lo": _enc_float(model.scaler.lo),
            "hi": _enc_float(model.scaler.hi),
            "pad": _enc_float(model.scaler.pad),
        },
        "basis": model.basis,
        "i_max": int(model.i_max),
        "i_selected": int(model.i_selected),
        "grid_size": int(model.grid_size),
        "val_losses": _enc_array(model.val_losses),
        "val_std_errors": _enc_array(model.val_std_errors),
        "candidate_hypers": _enc_array(model.candidate_hypers),
        "candidate_losses": _enc_array(model.candidate_losses),
        "feature_names": list(model.feature_names),
        "n_lags": int(model.n_lags),
        "backend": _backend_doc(model),
        "diagnostics": {k: _jsonable(v) for k, v in model.diagnostics.items()},
    }


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return _enc_float(v)
    return v


def nnkcde_doc(model):
    return {
        "train_u": _enc_array(model.train_u),
        "train_y": _enc_array(model.train_y),
        "k": int(model.k),
        "h": _enc_float(model.h),
        "lo": _enc_float(model.lo),
        "hi": _enc_float(model.hi),
        "grid_size": int(model.grid_size),
    }


def garch_doc(model):
    return {
        "c": _enc_float(model.c),
        "ar": _enc_array(model.ar),
        "omega": _enc_float(model.omega),
        "alpha": _enc_float(model.alpha),
        "beta": _enc_float(model.beta),
        "s2_init": _enc_float(model.s2_init),
        "loglik": _enc_float(model.loglik),
    }


def save_model(path, method, model, metadata=None):
    """Write a fitted model with metadata; identical fits yield identical bytes."""
    if method == "flexcode":
        body = flexcode_doc(model)
    elif method == "nnkcde":
        body = nnkcde_doc(model)
    elif method == "garch":
        body = garch_doc(model)
    else:
        raise ValueError(f"unknown method {method!r}")
    doc = {
        "format_version": FORMAT_VERSION,
        "method": method,
        "metadata": metadata or {},
        "model": body,
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(text + "\n")


def _load_flexcode(body):
    backend_doc = body["backend"]
    kind = backend_doc["kind"]
    hyper = float(backend_doc["hyper"])
    if kind == "nw":
        backend = NadarayaWatsonModel(
            train_u=_dec_array(backend_doc["train_u"]),
            train_phi=_dec_array(backend_doc["train_phi"]),
            delta=hyper,
        )
    elif kind == "knn":
        backend = KnnModel(
            train_u=_dec_array(backend_doc["train_u"]),
            train_phi=_dec_array(backend_doc["train_phi"]),
            k=int(hyper),
        )
    elif kind == "lasso":
        backend = LassoModel(
            intercept=_dec_array(backend_doc["intercept"]),
            coef=_dec_array(backend_doc["coef"]),
            coef_std=_dec_array(backend_doc["coef_std"]),
            lam=hyper,
            feature_mean=_dec_array(backend_doc["feature_mean"]),
            feature_scale=_dec_array(backend_doc["feature_scale"]),
            converged=np.asarray(backend_doc["converged"], dtype=bool),
        )
    else:
        raise DataError(f"unknown backend kind {kind!r} in model file")
    scal = body["scaler"]
    scaler = Scaler(
        lo=float(scal["lo"]), hi=float(scal["hi"]), pad=float(scal["pad"])
    )
    return CoefficientModel(
        scaler=scaler,
        basis=body["basis"],
        i_max=int(body["i_max"]),
        i_selected=int(body["i_selected"]),
        grid_size=int(body["grid_size"]),
        backend_kind=kind,
        hyper=hyper,
        backend=backend,
        val_losses=_dec_array(body["val_losses"]),
        val_std_errors=_dec_array(body["val_std_errors"]),
        candidate_hypers=[float(v) for v in body["candidate_hypers"]],
        candidate_losses=[float(v) for v in body["candidate_losses"]],
        feature_names=list(body["feature_names"]),
        n_lags=int(body["n_lags"]),
        diagnostics=dict(body.get("diagnostics", {})),
    )


def load_model(path):
    """Read a model file; returns (method, model, metadata)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise DataError(f"model file {path} lacks a format_version field")
    version = doc["format_version"]
    if version != FORMAT_VERSION:
        raise DataError(
            f"model file {path} has format_version {version}; "
            f"this build reads version {FORMAT_VERSION}"
        )
    method = doc.get("method")
    body = doc.get("model", {})
    try:
        if method == "flexcode":
            model = _load_flexcode(body)
        elif method == "nnkcde":
            model = NnkcdeModel(
                train_u=_dec_array(body["train_u"]),
                train_y=_dec_array(body["train_y"]),
                k=int(body["k"]),
                h=float(body["h"]),
                lo=float(body["lo"]),
                hi=float(body["hi"]),
                grid_size=int(body["grid_size"]),
            )
        elif method == "garch":
            model = GarchModel(
                c=float(body["c"]),
                ar=_dec_array(body["ar"]),
                omega=float(body["omega"]),
                alpha=float(body["alpha"]),
                beta=float(body["beta"]),
                s2_init=float(body["s2_init"]),
                loglik=float(body["loglik"]),
            )
        else:
            raise DataError(f"model file {path} has unknown method {method!r}")
    except (KeyError, TypeError) as exc:
        raise DataError(f"model file {path} is missing fields: {exc}") from exc
    return method, model, doc.get("metadata", {})
