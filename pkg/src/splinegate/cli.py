"""Command-line entry points: simulate, fit, sweep, metrics, plotdata.

Every artifact directory is reproducible from the recorded manifest and
seed. Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical
failure.
"""

import argparse
import json
import os
import sys

import numpy as np
import pandas as pd

from . import __version__
from .dataio import DataManifest, load_dataset, load_truth, save_dataset
from .exceptions import DataError, NumericalError, SplinegateError
from .metrics import ari, centered_rase, rase, sari
from .model import PriorConfig
from .postproc import (align_to_reference, aligned_smooth_means,
                       map_allocation, relabel, summarize_fit)
from .sampler import ChainConfig, FitContext, load_draws, run_chain, save_draws
from .simgen import brexit_fixture, generate, scenario_g2, scenario_g6

VARIANT_NAMES = {"semi": "semiparametric", "param": "parametric",
                 "blca": "blca"}


def _percentiles(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2 or not (0 < parts[0] < parts[1] < 100):
        raise argparse.ArgumentTypeError(
            "percentiles must be 'lo,hi' with 0 < lo < hi < 100")
    return tuple(parts)


def build_parser():
    top = argparse.ArgumentParser(
        prog="splinegate",
        description="Spline-gated mixture modeling for categorical data")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write synthetic datasets")
    sim.add_argument("--scenario", required=True,
                     choices=["g2", "g6", "brexit"])
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--replications", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)

    def fit_args(p):
        p.add_argument("--responses", required=True)
        p.add_argument("--covariates", required=True)
        p.add_argument("--smooth", default="",
                       help="comma-separated smooth covariate columns")
        p.add_argument("--linear", default="",
                       help="comma-separated linear covariate columns")
        p.add_argument("--id-col", default="id")
        p.add_argument("--levels", default=None,
                       help="levels.json fixing the category dictionaries")
        p.add_argument("--variant", default="semi",
                       choices=sorted(VARIANT_NAMES))
        p.add_argument("--iters", type=int, default=5000)
        p.add_argument("--burnin", type=int, default=1000)
        p.add_argument("--thin", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--knots", type=int, default=23,
                       help="spline basis size per smooth covariate")
        p.add_argument("--H", type=int, default=6, choices=[3, 6])
        p.add_argument("--percentiles", type=_percentiles, default=(2.5, 97.5))
        p.add_argument("--out", required=True)

    fit = sub.add_parser("fit", help="run one chain and summarize it")
    fit_args(fit)
    fit.add_argument("--G", type=int, required=True)

    sweep = sub.add_parser("sweep", help="fit a range of component counts")
    fit_args(sweep)
    sweep.add_argument("--G-min", type=int, required=True, dest="gmin")
    sweep.add_argument("--G-max", type=int, required=True, dest="gmax")
    sweep.add_argument("--workers", type=int, default=1,
                       help="independent fits run in this many processes")

    met = sub.add_parser("metrics", help="score a fit against truths/labels")
    met.add_argument("--fit", required=True, help="fit output directory")
    met.add_argument("--truth", default=None, help="truth sidecar CSV")
    met.add_argument("--scenario", default=None, choices=["g2", "g6"],
                     help="closed-form truth curves for RASE")
    met.add_argument("--labels", default=None, help="labels CSV")
    met.add_argument("--label-col", default=None)
    met.add_argument("--out", required=True)

    plot = sub.add_parser("plotdata", help="emit plot-ready grid tables")
    plot.add_argument("--fit", required=True)
    plot.add_argument("--out", required=True)
    return top


def _cmd_simulate(args):
    os.makedirs(args.out, exist_ok=True)
    for rep in range(args.replications):
        seed = args.seed + rep
        repdir = os.path.join(args.out, f"rep{rep + 1:03d}")
        if args.scenario == "brexit":
            synth, party = brexit_fixture(n=args.n or 240, seed=seed)
            levels = tuple(("absent", "aye", "no")
                           for _ in range(synth.data.Q))
            save_dataset(synth.data, repdir, levels=levels,
                         true_labels=synth.true_labels,
                         true_eta=synth.true_eta,
                         extra_labels={"party": party})
        else:
            scen = scenario_g2() if args.scenario == "g2" else scenario_g6()
            synth = generate(scen, n=args.n, seed=seed)
            save_dataset(synth.data, repdir,
                         true_labels=synth.true_labels,
                         true_eta=synth.true_eta)
    return 0


def _manifest_from_args(args):
    smooth = tuple(s for s in args.smooth.split(",") if s)
    linear = tuple(s for s in args.linear.split(",") if s)
    if not smooth:
        cov = pd.read_csv(args.covariates, nrows=1)
        smooth = tuple(c for c in cov.columns
                       if c != args.id_col and c not in linear)
    return DataManifest(responses_path=args.responses,
                        covariates_path=args.covariates,
                        smooth_covariates=smooth,
                        linear_covariates=linear,
                        id_column=args.id_col,
                        levels_path=args.levels)


def run_fit(data, variant, G, iters, burnin, thin, seed, knots, H,
            percentiles, outdir, manifest=None):
    """Fit one chain, relabel, and write the full artifact set.

    Returns (store, summary)."""
    prior = PriorConfig(H=H, m=knots, variant=VARIANT_NAMES.get(variant, variant))
    config = ChainConfig(G=G, T=iters, T0=burnin, seed=seed, thin=thin,
                         prior=prior)
    store = run_chain(data, config)
    ctx = FitContext(data, prior, G)
    summary, rel = summarize_fit(store, ctx.bases, percentiles=percentiles,
                                 relabel_seed=seed)

    os.makedirs(outdir, exist_ok=True)
    save_draws(rel.draws, os.path.join(outdir, "draws"))
    summary.bands.to_csv(os.path.join(outdir, "bands.csv"), index=False)
    ids = list(data.unit_ids) if data.unit_ids else \
        list(range(1, data.n + 1))
    pd.DataFrame({"unit_id": ids, "component": summary.map_partition}) \
        .to_csv(os.path.join(outdir, "map.csv"), index=False)

    doc = summary.to_json_dict()
    runtime = doc["diagnostics"].pop("runtime_s", None)
    doc.update({
        "seed": seed,
        "variant": prior.variant,
        "iters": iters,
        "burnin": burnin,
        "thin": thin,
        "knots": knots,
        "H": H,
        "percentiles": list(percentiles),
        "smooth_covariates": list(data.smooth_names),
        "smooth_ranges": [[float(data.X_smooth[:, j].min()),
                           float(data.X_smooth[:, j].max())]
                          for j in range(data.n_smooth)],
        "levels": [list(l) for l in data.levels],
        "version": __version__,
    })
    if manifest is not None:
        doc["inputs"] = {
            "responses_path": manifest.responses_path,
            "covariates_path": manifest.covariates_path,
            "id_column": manifest.id_column,
            "linear_covariates": list(manifest.linear_covariates),
        }
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    with open(os.path.join(outdir, "run_info.json"), "w") as fh:
        json.dump({"runtime_s": runtime}, fh)
    return store, summary


def _cmd_fit(args):
    manifest = _manifest_from_args(args)
    data = load_dataset(manifest)
    run_fit(data, args.variant, args.G, args.iters, args.burnin, args.thin,
            args.seed, args.knots, args.H, args.percentiles, args.out,
            manifest=manifest)
    return 0


def _sweep_one(job):
    data, args_d, G, outdir, manifest = job
    _, summary = run_fit(data, args_d["variant"], G, args_d["iters"],
                         args_d["burnin"], args_d["thin"], args_d["seed"],
                         args_d["knots"], args_d["H"], args_d["percentiles"],
                         outdir, manifest=manifest)
    return {"G": G, "aicm": summary.aicm, "G_tilde": summary.G_tilde}


def _cmd_sweep(args):
    if not (1 <= args.gmin <= args.gmax):
        raise DataError("need 1 <= G-min <= G-max")
    manifest = _manifest_from_args(args)
    data = load_dataset(manifest)
    args_d = {k: getattr(args, k) for k in
              ("variant", "iters", "burnin", "thin", "seed", "knots", "H",
               "percentiles")}
    jobs = [(data, args_d, G, os.path.join(args.out, f"G{G:02d}"), manifest)
            for G in range(args.gmin, args.gmax + 1)]
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(job) for job in jobs]
    table = pd.DataFrame(rows)
    # aicm is 2*(mean - var) of the log-likelihoods, so the preferred model
    # maximizes it (the sign-flipped "deviance-style" report would minimize)
    table["selected"] = table["aicm"] == table["aicm"].max()
    table.to_csv(os.path.join(args.out, "aicm_by_G.csv"), index=False)
    return 0


def _load_fit(fitdir):
    store = load_draws(os.path.join(fitdir, "draws"))
    with open(os.path.join(fitdir, "summary.json")) as fh:
        summary = json.load(fh)
    return store, summary


def _cmd_metrics(args):
    store, summary = _load_fit(args.fit)
    mapping = pd.read_csv(os.path.join(args.fit, "map.csv"))
    c_hat = mapping["component"].to_numpy(dtype=np.int64)
    G = int(summary["G"])
    out = {"G": G, "aicm": summary["aicm"], "G_tilde": summary["G_tilde"]}
    os.makedirs(args.out, exist_ok=True)

    if args.truth:
        true_labels, _ = load_truth(args.truth)
        if len(true_labels) != len(c_hat):
            raise DataError("truth sidecar does not match the fitted units")
        out["ari"] = ari(c_hat, true_labels)
        soft = store.soft_allocation()
        G_true = int(true_labels.max())
        onehot = np.eye(G_true)[true_labels - 1]
        out["sari"] = sari(soft, onehot)

        if args.scenario:
            scen = scenario_g2() if args.scenario == "g2" else scenario_g6()
            if scen.G == G:
                rases = _rase_table(args.fit, summary, store, c_hat,
                                    true_labels, scen)
                out["rase"] = rases
    if args.labels:
        lab = pd.read_csv(args.labels)
        col = args.label_col or lab.columns[-1]
        if col not in lab.columns:
            raise DataError(f"label column {col!r} not in {args.labels}")
        tab = pd.crosstab(lab[col], pd.Series(c_hat, name="component"))
        tab.to_csv(os.path.join(args.out, "crosstab.csv"))
        out["crosstab_rows"] = int(tab.shape[0])

    with open(os.path.join(args.out, "metrics.json"), "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
    return 0


def _rebuild_dataset(summary):
    inputs = summary.get("inputs")
    if inputs is None:
        raise DataError("fit artifact lacks input paths; rerun fit to score RASE")
    manifest = DataManifest(
        responses_path=inputs["responses_path"],
        covariates_path=inputs["covariates_path"],
        smooth_covariates=tuple(summary["smooth_covariates"]),
        linear_covariates=tuple(inputs["linear_covariates"]),
        id_column=inputs["id_column"])
    return load_dataset(manifest)


def _rase_table(fitdir, summary, store, c_hat, true_labels, scen):
    data = _rebuild_dataset(summary)
    prior = store.config.prior
    if prior.variant != "semiparametric":
        return []
    ctx = FitContext(data, prior, store.config.G)
    rel = relabel(store, seed=store.config.seed)
    sigma = align_to_reference(map_allocation(rel), true_labels, store.config.G)
    grids, means = aligned_smooth_means(rel, ctx.bases, sigma)
    rows = []
    for g in range(means.shape[0]):
        for j in range(means.shape[1]):
            truth = scen.smooth_component(g, j, grids[j])
            rows.append({
                "component": g + 1, "covariate": j + 1,
                "rase_centered": centered_rase(means[g, j], truth),
                "rase_raw": rase(means[g, j], truth),
            })
    return rows


def _cmd_plotdata(args):
    store, summary = _load_fit(args.fit)
    os.makedirs(args.out, exist_ok=True)
    bands = pd.read_csv(os.path.join(args.fit, "bands.csv"))
    bands.to_csv(os.path.join(args.out, "smooth_effects.csv"), index=False)

    rows = []
    names = summary.get("levels") or []
    for q, tm in enumerate(summary["theta_mean"]):
        tm = np.asarray(tm)
        for g in range(tm.shape[0]):
            for c in range(tm.shape[1]):
                level = names[q][c] if q < len(names) and names[q] else c + 1
                rows.append({"component": g + 1, "variable": q + 1,
                             "level": level, "mean": tm[g, c]})
    pd.DataFrame(rows).to_csv(os.path.join(args.out, "vote_means.csv"),
                              index=False)
    return 0


_COMMANDS = {"simulate": _cmd_simulate, "fit": _cmd_fit, "sweep": _cmd_sweep,
             "metrics": _cmd_metrics, "plotdata": _cmd_plotdata}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 4
    except (DataError, SplinegateError, FileNotFoundError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
