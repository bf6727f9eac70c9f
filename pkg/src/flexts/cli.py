"""Command line interface: simulate, fit, evaluate, predict, importance, bench.

All commands are batch operations on CSV/JSON files and are
deterministic given their inputs: float columns are written with
shortest round-trip formatting and bench rows are emitted in sorted
cell order, so reruns produce byte-identical outputs. Errors exit with
a single-line ``flexts: error: ...`` message on stderr and a category
code: 2 for usage, 3 for data problems, 4 for numeric failures.
"""

import argparse
import csv
import itertools
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from flexts import baselines, estimator, persistence, scenarios
from flexts.basis import fit_scaler
from flexts.errors import DataError, NumericError
from flexts.evaluation import cde_loss_grid, oracle_cde_loss, pinball_loss
from flexts.features import (
    RollingSpec,
    SeriesTable,
    SplitSpec,
    lag_embed,
    next_step_covariates,
    temporal_split,
)

PROG = "flexts"


# ---------------------------------------------------------------------------
# small I/O helpers
# ---------------------------------------------------------------------------


def _fmt_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])


def read_series_csv(path, target, exog_names=()):
    """Read a CSV with a header row; parse the named numeric columns."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        wanted = [target, *exog_names]
        for name in wanted:
            if name not in header:
                raise DataError(
                    f"{path}: no column {name!r}; file has {header}"
                )
        idx = {name: header.index(name) for name in wanted}
        cols = {name: [] for name in wanted}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            for name, j in idx.items():
                if j >= len(row):
                    raise DataError(
                        f"{path}: line {line_no}: missing column {name!r}"
                    )
                try:
                    cols[name].append(float(row[j]))
                except ValueError:
                    raise DataError(
                        f"{path}: line {line_no}: column {name!r}: "
                        f"could not parse {row[j]!r} as a number"
                    ) from None
    if not cols[target]:
        raise DataError(f"{path}: no data rows")
    return {name: np.asarray(vals) for name, vals in cols.items()}


def _parse_rolling(specs):
    out = []
    for item in specs or ():
        try:
            stat, window = item.split(":")
            out.append(RollingSpec(stat=stat, window=int(window)))
        except ValueError as exc:
            raise ValueError(
                f"bad rolling spec {item!r}; expected stat:window like mean:3"
            ) from exc
    return out


def _parse_split(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"split needs three fractions, got {text!r}")
    return SplitSpec(*parts)


def _parse_taus(text):
    taus = [float(p) for p in text.split(",") if p]
    if not taus:
        raise ValueError("no quantile levels given")
    return taus


def _parse_int_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _default_seed(value):
    if value is not None:
        return value
    env = os.environ.get("FLEXTS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"FLEXTS_SEED must be an integer, got {env!r}") from None
    return 0


# ---------------------------------------------------------------------------
# feature spec plumbing shared by fit/evaluate/predict/importance
# ---------------------------------------------------------------------------


def _metadata_from_args(args, method):
    return {
        "target": args.target,
        "n_lags": args.lags,
        "rolling": [[s.stat, s.window] for s in _parse_rolling(args.rolling)],
        "exog": list(args.exog or ()),
        "exog_contemporaneous": bool(args.exog_contemporaneous),
        "split": [args.split_spec.train_frac, args.split_spec.val_frac,
                  args.split_spec.test_frac],
        "method": method,
    }


def _table_from_meta(meta, path):
    target = meta.get("target")
    if not target:
        raise DataError("model metadata lacks the target column name")
    cols = read_series_csv(path, target, meta.get("exog", ()))
    exog_names = list(meta.get("exog", ()))
    exog = (
        np.column_stack([cols[name] for name in exog_names]) if exog_names else None
    )
    return SeriesTable(response=cols[target], exogenous=exog, exog_names=exog_names)


def _design_from_meta(meta, table):
    rolling = [RollingSpec(stat=s, window=int(w)) for s, w in meta.get("rolling", [])]
    return lag_embed(
        table,
        int(meta["n_lags"]),
        rolling=rolling,
        exog_contemporaneous=bool(meta.get("exog_contemporaneous", False)),
    )


def _split_from_meta(meta):
    fracs = meta.get("split", [0.7, 0.1, 0.2])
    return SplitSpec(*[float(f) for f in fracs])


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args):
    seed = _default_seed(args.seed)
    if args.scenario == "jump_diffusion":
        raise ValueError(
            "scenario 'jump_diffusion' (continuous-time) is out of scope; "
            f"available scenarios: {', '.join(scenarios.SCENARIO_NAMES)}"
        )
    spec = scenarios.ScenarioSpec(
        name=args.scenario,
        n=args.n,
        seed=seed,
        burn_in=args.burn_in,
        sigma_nm=args.sigma_nm,
    )
    draw = scenarios.simulate(spec)
    if args.with_jumps:
        if draw.jumps is None:
            raise ValueError(
                f"scenario {args.scenario!r} has no jump indicator column"
            )
        header = ["y", "z_jump"]
        rows = [(y, int(z)) for y, z in zip(draw.y, draw.jumps)]
    else:
        header = ["y"]
        rows = [(y,) for y in draw.y]
    write_csv(args.output, header, rows)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def _fit_flexcode(args, design, split):
    hyper_grid = None
    if args.backend == "nw" and args.delta:
        hyper_grid = tuple(float(v) for v in args.delta.split(","))
    elif args.backend == "knn" and args.k:
        hyper_grid = tuple(int(v) for v in args.k.split(","))
    elif args.backend == "lasso" and args.lam:
        hyper_grid = tuple(float(v) for v in args.lam.split(","))
    config = estimator.FitConfig(
        basis=args.basis,
        i_max=args.i_max,
        backend=args.backend,
        hyper_grid=hyper_grid,
        grid_size=args.grid_size,
        pad=args.pad,
        refit_final=args.refit_final,
        select_postprocessed=args.select_postprocessed,
    )
    model = estimator.fit(design, split, config)
    print(f"method: flexcode backend={model.backend_kind}")
    hyper_name = {"nw": "delta", "knn": "k", "lasso": "lam"}[model.backend_kind]
    hyper = model.hyper if hyper_name != "k" else int(model.hyper)
    print(f"selected {hyper_name}={hyper} I={model.i_selected}")
    print(
        f"validation loss {model.diagnostics['val_loss']:.6f} "
        f"over {model.diagnostics['n_val']} rows"
    )
    print("validation loss curve (selected candidate):")
    for i, (loss, se) in enumerate(zip(model.val_losses, model.val_std_errors)):
        print(f"  I={i} loss={loss:.6f} se={se:.6f}")
    return model


def cmd_fit(args):
    args.split_spec = _parse_split(args.split)
    meta = _metadata_from_args(args, args.method)
    table = _table_from_meta(meta, args.input)
    design = _design_from_meta(meta, table)
    split = args.split_spec
    tr, va, te = temporal_split(design.n_rows, split)

    if args.method == "flexcode":
        model = _fit_flexcode(args, design, split)
        meta["backend"] = model.backend_kind
        meta["basis"] = model.basis
        persistence.save_model(args.output, "flexcode", model, meta)
    elif args.method == "nnkcde":
        scaler = fit_scaler(design.y[tr.start : tr.stop], pad=args.pad)
        k_grid = (
            [int(v) for v in args.k.split(",")] if args.k else None
        )
        h_grid = (
            [float(v) for v in args.h.split(",")] if args.h else None
        )
        model = baselines.nnkcde_fit(
            design.u[tr.start : tr.stop],
            design.y[tr.start : tr.stop],
            design.u[va.start : va.stop],
            design.y[va.start : va.stop],
            scaler.lo,
            scaler.hi,
            k_grid=k_grid,
            h_grid=h_grid,
            grid_size=args.grid_size,
        )
        print(f"method: nnkcde selected k={model.k} h={model.h!r}")
        persistence.save_model(args.output, "nnkcde", model, meta)
    elif args.method == "garch":
        if args.rolling or args.exog:
            raise ValueError("garch supports lag features only")
        # fit on the series prefix covered by the training rows
        prefix_end = int(design.origin_index[tr.stop - 1]) + 1
        model = baselines.garch_fit(table.response[:prefix_end], args.lags)
        print(
            f"method: garch p={model.p} omega={model.omega:.6g} "
            f"alpha={model.alpha:.6g} beta={model.beta:.6g} "
            f"loglik={model.loglik:.6f}"
        )
        persistence.save_model(args.output, "garch", model, meta)
    else:
        raise ValueError(f"unknown method {args.method!r}")
    print(f"model written: {args.output}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _test_densities(method, model, meta, table, design, rows, grid_y=None):
    """Tabulated test-row densities for any method on its response grid."""
    u_rows = design.u[rows.start : rows.stop]
    if method == "flexcode":
        if grid_y is None:
            batch = estimator.predict_density_batch(model, u_rows)
            return batch.grid_y, batch.density
        batch = estimator.predict_density_batch(model, u_rows, grid_size=grid_y.size)
        return grid_y, batch.density
    if method == "nnkcde":
        grid = model.grid() if grid_y is None else grid_y
        return grid, model.predict_density_batch(u_rows, grid_y=grid)
    # garch: filter the whole series once, take the requested rows
    means, s2 = baselines.garch_filter(model, table.response)
    if grid_y is None:
        raise ValueError("garch evaluation needs an explicit grid")
    return grid_y, baselines.garch_density_rows(
        means[rows.start : rows.stop], s2[rows.start : rows.stop], grid_y
    )


def _garch_grid(meta, design, split, grid_size, pad=0.05):
    tr, _, _ = temporal_split(design.n_rows, split)
    scaler = fit_scaler(design.y[tr.start : tr.stop], pad=pad)
    return np.linspace(scaler.lo, scaler.hi, grid_size)


DEFAULT_TAUS = [i / 100 for i in range(5, 100, 5)]


def cmd_evaluate(args):
    taus = _parse_taus(args.quantiles) if args.quantiles else list(DEFAULT_TAUS)
    for tau in taus:
        if not 0.0 < tau < 1.0:
            raise ValueError(f"quantile level {tau} outside (0, 1)")
    header = ["model", "method", "n_test", "n_outside_grid", "cde_loss",
              "cde_loss_se"]
    if args.oracle_scenario:
        header += ["oracle_cde_loss", "oracle_cde_loss_se"]
    header += [f"pinball_{tau:g}" for tau in taus]
    if args.log_pinball:
        header += [f"log_pinball_{tau:g}" for tau in taus]
    out_rows = []
    for path in args.model:
        method, model, meta = persistence.load_model(path)
        table = _table_from_meta(meta, args.input)
        design = _design_from_meta(meta, table)
        split = _split_from_meta(meta)
        _, _, te = temporal_split(design.n_rows, split)
        y_te = design.y[te.start : te.stop]

        if method == "garch":
            grid_y = _garch_grid(meta, design, split, args.grid_size)
            grid_y, dens = _test_densities(method, model, meta, table, design, te,
                                           grid_y)
        else:
            grid_y, dens = _test_densities(method, model, meta, table, design, te)
        rep = cde_loss_grid(grid_y, dens, y_te)
        row = [path, method, rep.n_eval, rep.n_outside, rep.loss, rep.std_error]

        if args.oracle_scenario:
            if int(meta["n_lags"]) < 3:
                raise ValueError(
                    "oracle loss needs at least 3 lagged covariates in the design"
                )
            u_te = design.u[te.start : te.stop]
            truth = scenarios.density_rows(
                args.oracle_scenario, u_te[:, :3], grid_y, sigma_nm=args.sigma_nm
            )
            orep = oracle_cde_loss(truth, dens, grid_y)
            row += [orep.loss, orep.std_error]

        qmat = np.empty((dens.shape[0], len(taus)))
        for r in range(dens.shape[0]):
            qmat[r] = estimator.quantiles_from_grid_density(grid_y, dens[r], taus)
        pinballs = [pinball_loss(qmat[:, j], y_te, tau)
                    for j, tau in enumerate(taus)]
        row += pinballs
        if args.log_pinball:
            row += [float(np.log(v)) if v > 0 else "" for v in pinballs]
        out_rows.append(row)
    write_csv(args.output, header, out_rows)
    print(f"wrote {len(out_rows)} method rows to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


def _resolve_row(design, row):
    resolved = row if row >= 0 else design.n_rows + row
    if not 0 <= resolved < design.n_rows:
        raise DataError(f"row {row} outside the {design.n_rows} design rows")
    return resolved


def _write_density_csv(path, grid_y, density, raw=None):
    if raw is None:
        write_csv(path, ["y", "density"], list(zip(grid_y, density)))
    else:
        write_csv(
            path, ["y", "density", "raw_density"], list(zip(grid_y, density, raw))
        )


def cmd_predict(args):
    method, model, meta = persistence.load_model(args.model)
    taus = _parse_taus(args.taus) if args.taus else None
    if args.u is None and args.input is None:
        raise ValueError("predict needs either --u or --input")

    if method == "garch":
        if args.u is not None:
            raise ValueError(
                "garch one-step prediction needs --input (the variance "
                "recursion state depends on the whole series)"
            )
        table = _table_from_meta(meta, args.input)
        design = _design_from_meta(meta, table)
        grid_y = _garch_grid(meta, design, _split_from_meta(meta), args.grid_size)
        if args.row is None:
            mean, var = baselines.garch_forecast(model, table.response)
            label = "one step past the series end"
        else:
            row = _resolve_row(design, args.row)
            means, s2 = baselines.garch_filter(model, table.response)
            mean, var = means[row], s2[row]
            label = f"design row {row}"
        dens = baselines.garch_density_rows(
            np.array([mean]), np.array([var]), grid_y
        )[0]
        if taus is not None:
            q = estimator.quantiles_from_grid_density(grid_y, dens, taus)
            write_csv(args.output, ["tau", "quantile"], list(zip(taus, q)))
        else:
            _write_density_csv(args.output, grid_y, dens)
        print(f"prediction for {label} written: {args.output}")
        return 0

    if args.u is not None:
        u = np.array([float(v) for v in args.u.split(",")])
        label = "explicit covariates"
    else:
        table = _table_from_meta(meta, args.input)
        if args.row is None:
            rolling = [
                RollingSpec(stat=s, window=int(w))
                for s, w in meta.get("rolling", [])
            ]
            u = next_step_covariates(
                table,
                int(meta["n_lags"]),
                rolling=rolling,
                exog_contemporaneous=bool(meta.get("exog_contemporaneous", False)),
            )
            label = "one step past the series end"
        else:
            design = _design_from_meta(meta, table)
            row = _resolve_row(design, args.row)
            u = design.u[row]
            label = f"design row {row}"

    if method == "flexcode":
        if taus is not None:
            q = estimator.predict_quantiles(model, u, taus)
            write_csv(args.output, ["tau", "quantile"], list(zip(taus, q)))
        else:
            est = estimator.predict_density(model, u)
            _write_density_csv(
                args.output, est.grid_y, est.density, raw=est.raw_density
            )
            if est.degenerate:
                print("warning: clipped density had no mass; wrote uniform")
    else:  # nnkcde
        grid_y = model.grid()
        dens = model.predict_density(u)
        if taus is not None:
            q = estimator.quantiles_from_grid_density(grid_y, dens, taus)
            write_csv(args.output, ["tau", "quantile"], list(zip(taus, q)))
        else:
            _write_density_csv(args.output, grid_y, dens)
    print(f"prediction for {label} written: {args.output}")
    return 0


# ---------------------------------------------------------------------------
# importance
# ---------------------------------------------------------------------------


def cmd_importance(args):
    method, model, meta = persistence.load_model(args.model)
    if method != "flexcode":
        raise ValueError(f"importance is defined for flexcode models, not {method}")
    seed = _default_seed(args.seed)
    if model.backend_kind == "lasso":
        scores = estimator.importance(model)
    else:
        if not args.input:
            raise ValueError(
                f"{model.backend_kind} importance is permutation-based; "
                "pass --input with the fitting data"
            )
        table = _table_from_meta(meta, args.input)
        design = _design_from_meta(meta, table)
        split = _split_from_meta(meta)
        _, va, _ = temporal_split(design.n_rows, split)
        scores = estimator.importance(
            model,
            u_val=design.u[va.start : va.stop],
            y_val=design.y[va.start : va.stop],
            n_permutations=args.n_permutations,
            seed=seed,
        )
    order = np.argsort(-scores, kind="stable")
    rows = [(model.feature_names[j], scores[j]) for j in order]
    write_csv(args.output, ["feature", "score"], rows)
    for name, score in rows:
        print(f"{name}: {score:.6g}")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

BENCH_METHODS = ("flexcode", "nnkcde", "garch")

BENCH_DEFAULTS = {
    "scenarios": ["ar"],
    "sizes": [1000],
    "methods": ["flexcode"],
    "seeds": [0],
    "lags": [3],
    "backend": "nw",
    "basis": "cosine",
    "i_max": 30,
    "grid_size": 1001,
    "pad": 0.05,
    "split": [0.7, 0.1, 0.2],
    "burn_in": 200,
    "sigma_nm": 0.5,
    "oracle": True,
    "output": "bench_results.csv",
}


@dataclass(frozen=True)
class BenchCell:
    scenario: str
    n: int
    method: str
    lags: int
    seed: int


def run_bench_cell(
    cell,
    backend="nw",
    basis="cosine",
    i_max=30,
    grid_size=1001,
    pad=0.05,
    split=SplitSpec(),
    burn_in=200,
    sigma_nm=0.5,
    oracle=True,
    oracle_grid_size=2001,
):
    """Run one (scenario, n, method, lags, seed) cell; returns a metrics dict.

    The three methods share the response grid derived from the training
    rows so their losses are commensurable. Oracle integrated squared
    error is computed on a finer grid when the scenario truth is known
    and the design keeps at least three lags.
    """
    y = scenarios.generate(
        cell.scenario, cell.n, cell.seed, burn_in=burn_in, sigma_nm=sigma_nm
    )
    design = lag_embed(SeriesTable(y), cell.lags)
    tr, va, te = temporal_split(design.n_rows, split)
    u_tr = design.u[tr.start : tr.stop]
    y_tr = design.y[tr.start : tr.stop]
    u_va = design.u[va.start : va.stop]
    y_va = design.y[va.start : va.stop]
    u_te = design.u[te.start : te.stop]
    y_te = design.y[te.start : te.stop]
    scaler = fit_scaler(y_tr, pad=pad)
    grid_y = np.linspace(scaler.lo, scaler.hi, grid_size)

    i_selected = ""
    hyper = ""
    if cell.method == "flexcode":
        config = estimator.FitConfig(
            basis=basis,
            i_max=i_max,
            backend=backend,
            grid_size=grid_size,
            pad=pad,
        )
        model = estimator.fit(design, split, config)
        dens = estimator.predict_density_batch(model, u_te).density
        i_selected = model.i_selected
        hyper = model.hyper

        def fine_densities(fine_grid):
            return estimator.predict_density_batch(
                model, u_te, grid_size=fine_grid.size
            ).density

    elif cell.method == "nnkcde":
        model = baselines.nnkcde_fit(
            u_tr, y_tr, u_va, y_va, scaler.lo, scaler.hi, grid_size=grid_size
        )
        dens = model.predict_density_batch(u_te, grid_y=grid_y)
        hyper = model.h
        i_selected = model.k

        def fine_densities(fine_grid):
            return model.predict_density_batch(u_te, grid_y=fine_grid)

    elif cell.method == "garch":
        prefix_end = int(design.origin_index[tr.stop - 1]) + 1
        model = baselines.garch_fit(y[:prefix_end], cell.lags)
        means, s2 = baselines.garch_filter(model, y)
        m_te, s2_te = means[te.start : te.stop], s2[te.start : te.stop]
        dens = baselines.garch_density_rows(m_te, s2_te, grid_y)
        hyper = model.alpha + model.beta

        def fine_densities(fine_grid):
            return baselines.garch_density_rows(m_te, s2_te, fine_grid)

    else:
        raise ValueError(f"unknown bench method {cell.method!r}")

    rep = cde_loss_grid(grid_y, dens, y_te)
    result = {
        "scenario": cell.scenario,
        "n": cell.n,
        "method": cell.method,
        "lags": cell.lags,
        "seed": cell.seed,
        "status": "ok",
        "cde_loss": rep.loss,
        "cde_loss_se": rep.std_error,
        "oracle_cde_loss": "",
        "oracle_cde_loss_se": "",
        "i_selected": i_selected,
        "hyper": hyper,
        "n_test": rep.n_eval,
    }
    if oracle and cell.lags >= 3:
        fine_grid = np.linspace(scaler.lo, scaler.hi, oracle_grid_size)
        truth = scenarios.density_rows(
            cell.scenario, u_te[:, :3], fine_grid, sigma_nm=sigma_nm
        )
        orep = oracle_cde_loss(truth, fine_densities(fine_grid), fine_grid)
        result["oracle_cde_loss"] = orep.loss
        result["oracle_cde_loss_se"] = orep.std_error
    return result


BENCH_COLUMNS = [
    "scenario",
    "n",
    "method",
    "lags",
    "seed",
    "status",
    "cde_loss",
    "cde_loss_se",
    "oracle_cde_loss",
    "oracle_cde_loss_se",
    "i_selected",
    "hyper",
    "n_test",
]


def cmd_bench(args):
    cfg = dict(BENCH_DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                user_cfg = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot open {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.config}: invalid JSON: {exc}") from exc
        unknown = set(user_cfg) - set(BENCH_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown bench config keys: {sorted(unknown)}")
        cfg.update(user_cfg)
    if args.scenarios:
        cfg["scenarios"] = args.scenarios.split(",")
    if args.sizes:
        cfg["sizes"] = _parse_int_list(args.sizes)
    if args.methods:
        cfg["methods"] = args.methods.split(",")
    if args.seeds:
        cfg["seeds"] = _parse_int_list(args.seeds)
    if args.lags:
        cfg["lags"] = _parse_int_list(args.lags)
    if args.backend:
        cfg["backend"] = args.backend
    if args.output:
        cfg["output"] = args.output

    for m in cfg["methods"]:
        if m not in BENCH_METHODS:
            raise ValueError(
                f"unknown bench method {m!r}; expected subset of {BENCH_METHODS}"
            )
    split = SplitSpec(*[float(f) for f in cfg["split"]])

    cells = [
        BenchCell(scenario=s, n=int(n), method=m, lags=int(p), seed=int(sd))
        for s, n, m, p, sd in itertools.product(
            cfg["scenarios"], cfg["sizes"], cfg["methods"], cfg["lags"], cfg["seeds"]
        )
    ]
    cells.sort(key=lambda c: (c.scenario, c.n, c.method, c.lags, c.seed))

    rows = []
    n_failed = 0
    for cell in cells:
        try:
            result = run_bench_cell(
                cell,
                backend=cfg["backend"],
                basis=cfg["basis"],
                i_max=int(cfg["i_max"]),
                grid_size=int(cfg["grid_size"]),
                pad=float(cfg["pad"]),
                split=split,
                burn_in=int(cfg["burn_in"]),
                sigma_nm=float(cfg["sigma_nm"]),
                oracle=bool(cfg["oracle"]),
            )
        except (DataError, NumericError, ValueError) as exc:
            n_failed += 1
            result = {col: "" for col in BENCH_COLUMNS}
            result.update(
                scenario=cell.scenario,
                n=cell.n,
                method=cell.method,
                lags=cell.lags,
                seed=cell.seed,
                status=f"error: {exc}",
            )
        rows.append([result[col] for col in BENCH_COLUMNS])
        print(
            f"[{len(rows)}/{len(cells)}] {cell.scenario} n={cell.n} "
            f"{cell.method} p={cell.lags} seed={cell.seed}: {result['status']}"
        )
    write_csv(cfg["output"], BENCH_COLUMNS, rows)
    print(f"wrote {len(rows)} cells to {cfg['output']} ({n_failed} failed)")
    return 0


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Conditional density estimation for stationary time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a scenario series as CSV")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--burn-in", type=int, default=200)
    p_sim.add_argument("--sigma-nm", type=float, default=0.5)
    p_sim.add_argument("--with-jumps", action="store_true")
    p_sim.add_argument("-o", "--output", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit a model on a CSV series")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--target", default="y")
    p_fit.add_argument(
        "--method", choices=("flexcode", "nnkcde", "garch"), default="flexcode"
    )
    p_fit.add_argument("--lags", type=int, default=3)
    p_fit.add_argument("--rolling", action="append", metavar="STAT:WINDOW")
    p_fit.add_argument("--exog", action="append", metavar="COLUMN")
    p_fit.add_argument("--exog-contemporaneous", action="store_true")
    p_fit.add_argument("--split", default="0.7,0.1,0.2")
    p_fit.add_argument("--basis", choices=("cosine", "fourier"), default="cosine")
    p_fit.add_argument("--i-max", type=int, default=30)
    p_fit.add_argument("--backend", choices=("nw", "knn", "lasso"), default="nw")
    p_fit.add_argument("--delta", help="comma list of nw radii")
    p_fit.add_argument("--k", help="comma list of neighbor counts")
    p_fit.add_argument("--lam", help="comma list of lasso penalties")
    p_fit.add_argument("--h", help="comma list of nnkcde bandwidths")
    p_fit.add_argument("--grid-size", type=int, default=1001)
    p_fit.add_argument("--pad", type=float, default=0.05)
    p_fit.add_argument("--refit-final", action="store_true")
    p_fit.add_argument("--select-postprocessed", action="store_true")
    p_fit.add_argument("-o", "--output", required=True)
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("evaluate", help="compare models on test rows")
    p_eval.add_argument("--model", action="append", required=True)
    p_eval.add_argument("--input", required=True)
    p_eval.add_argument("--quantiles", help="comma list of levels in (0,1)")
    p_eval.add_argument("--log-pinball", action="store_true")
    p_eval.add_argument("--oracle-scenario", choices=scenarios.SCENARIO_NAMES)
    p_eval.add_argument("--sigma-nm", type=float, default=0.5)
    p_eval.add_argument("--grid-size", type=int, default=1001)
    p_eval.add_argument("-o", "--output", required=True)
    p_eval.set_defaults(func=cmd_evaluate)

    p_pred = sub.add_parser("predict", help="density or quantiles for one query")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--u", help="comma list of covariate values")
    p_pred.add_argument("--input", help="CSV series for one-step-ahead forecasting")
    p_pred.add_argument("--row", type=int, default=None)
    p_pred.add_argument("--taus", help="comma list of quantile levels")
    p_pred.add_argument("--grid-size", type=int, default=1001)
    p_pred.add_argument("-o", "--output", required=True)
    p_pred.set_defaults(func=cmd_predict)

    p_imp = sub.add_parser("importance", help="feature importance scores")
    p_imp.add_argument("--model", required=True)
    p_imp.add_argument("--input")
    p_imp.add_argument("--seed", type=int, default=None)
    p_imp.add_argument("--n-permutations", type=int, default=5)
    p_imp.add_argument("-o", "--output", required=True)
    p_imp.set_defaults(func=cmd_importance)

    p_bench = sub.add_parser("bench", help="factorial simulation benchmark")
    p_bench.add_argument("--config", help="JSON file of bench settings")
    p_bench.add_argument("--scenarios")
    p_bench.add_argument("--sizes")
    p_bench.add_argument("--methods")
    p_bench.add_argument("--seeds", help="comma list, ranges like 1-10 allowed")
    p_bench.add_argument("--lags")
    p_bench.add_argument("--backend", choices=("nw", "knn", "lasso"))
    p_bench.add_argument("-o", "--output")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"{PROG}: error: data: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"{PROG}: error: numeric: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"{PROG}: error: usage: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
