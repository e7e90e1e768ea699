"""Command-line entry point: ``behavior-clust <command> ...``.

Exit status is 0 on success, 1 on a usage error (bad flag, bad value, unknown
command) and 2 on a data error (unreadable or inconsistent input).

Any flag may also come from ``--config FILE.json``: keys are flag names with
dashes turned into underscores (``{"last_fraction": 0.005}``). Flags given on
the command line win over the file, which wins over the built-in defaults.
A ``report.json`` written by this tool is accepted too; its ``run_config`` is
used, so a run can be repeated from its own report.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__, plotting
from ._runtime import THREADS_ENV, resolve_threads
from .baselines import (DEFAULT_EPS_GRID, DEFAULT_MINPTS_GRID, DbscanParams, NOISE, dbscan,
                        dbscan_grid_search, elbow_curve, kmeans)
from .dataset import PerturbSpec, SynthConfig, load_jsonl, perturb, save_jsonl, synthesize
from .errors import DataError, DegenerateInputError, TrainingDivergedError
from .features import (KINDS, action_sets_by_label, clustering_trend_metrics,
                       pairwise_percentile_ratios, sample_actions, taat_matrix, wlln_curve)
from .metrics import ari, calinski_harabasz, cluster_purity, contingency_table, davies_bouldin, silhouette
from .network import ClassifierHyper
from .pipeline import PipelineConfig, cluster, read_assignment_csv, write_assignment_csv
from .pufilter import MIN_RULES, PuConfig
from .seed import SeedConfig, purity_to_csv, seed_purity_experiment


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse with exit status 1 for usage errors (argparse itself uses 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- flag types

def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _optional_float(text):
    if text.lower() == "none":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'none', got {text!r}")


# ---------------------------------------------------------------- output helpers

def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _run_config(args):
    skip = {"func", "config", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _report(args, **body):
    return {"version": __version__, "command": args.command_path, "run_config": _run_config(args),
            **body}


def _label_metrics(pred, truth):
    return {"ari": ari(pred, truth), "purity": cluster_purity(pred, truth)}


def _partition_metrics(x, labels):
    """Internal validity metrics of a partition, or None where undefined."""
    out = {}
    for name, fn in (("silhouette", silhouette), ("calinski_harabasz", calinski_harabasz),
                     ("davies_bouldin", davies_bouldin)):
        try:
            out[name] = fn(x, labels)
        except (DegenerateInputError, DataError):
            out[name] = None
    return out


# ---------------------------------------------------------------- commands

def cmd_synth(args):
    cfg = SynthConfig(n_policies=args.policies, trajectories_per_policy=args.per_policy,
                      traj_len=args.len, state_dim=args.state_dim, action_dim=args.action_dim,
                      separation=args.separation, action_noise_std=args.noise,
                      rng_seed=args.seed, action_gain=args.gain, action_power=args.power,
                      action_bound=args.bound, state_separation=args.state_separation)
    save_jsonl(synthesize(cfg), args.output)
    print(f"wrote {cfg.n_policies * cfg.trajectories_per_policy} trajectories to {args.output}")


def cmd_perturb(args):
    ds = load_jsonl(args.input)
    spec = PerturbSpec(args.mode, tuple(args.ratios or ()), args.uniform_share,
                       tuple(args.scale_range))
    out = perturb(ds, spec, args.seed)
    save_jsonl(out, args.output)
    print(f"wrote {len(out)} trajectories to {args.output}")


def _pipeline_config(args):
    hyper = ClassifierHyper(tuple(args.hidden), args.lr, args.epochs, args.batch_size)
    pu = PuConfig(n_members=args.members, hyper=hyper, max_rounds=args.max_rounds,
                  max_positive_pairs=args.max_pairs, min_rule=args.kde_min_rule,
                  rng_seed=args.seed)
    seed = SeedConfig(z=args.z, g=args.g, g2_fraction=args.g2_fraction, rng_seed=args.seed)
    return PipelineConfig(seed=seed, pu=pu, last_cluster_fraction=args.last_fraction,
                          max_clusters=args.max_clusters, taat_kind=args.taat,
                          taat_shift=args.shift)


def cmd_cluster(args):
    try:
        config = _pipeline_config(args)
    except ValueError as exc:
        raise UsageError(str(exc))
    ds = load_jsonl(args.input)
    out = _outdir(args.output)
    result = cluster(ds, config, threads=args.threads)
    result.to_csv(os.path.join(out, "assignment.csv"))

    tm = taat_matrix(ds, config.taat_kind, config.taat_shift)
    body = {"pipeline_config": config.to_dict(), "n_trajectories": len(ds),
            "n_clusters": result.n_clusters, "sizes": result.sizes(),
            "iterations": result.iterations,
            "taat_metrics": _partition_metrics(tm.rows, result.cluster_ids)}
    truth = ds.labels
    if truth is not None:
        body.update(_label_metrics(result.cluster_ids, truth))
    write_json(os.path.join(out, "report.json"), _report(args, **body))

    if args.write_clusters:
        cdir = _outdir(os.path.join(out, "clusters"))
        for c in range(result.n_clusters):
            save_jsonl(ds.subset(np.flatnonzero(result.cluster_ids == c)),
                       os.path.join(cdir, f"cluster_{c:02d}.jsonl"))
    if not args.no_figures:
        table = None if truth is None else contingency_table(result.cluster_ids, truth).counts
        plotting.plot_cluster_sizes(result.sizes(), os.path.join(out, "cluster_sizes.png"), table)
        plotting.plot_thresholds(result.iterations, os.path.join(out, "thresholds.png"))
        plotting.plot_embedding(tm.rows, result.cluster_ids, os.path.join(out, "taat_clusters.png"),
                                "TAAT, coloured by cluster")
    print(f"clusters {result.n_clusters}")
    if truth is not None:
        print(f"ari {body['ari']!r}")


def _features(ds, args):
    if args.features == "raw":
        x, labels = sample_actions(ds, args.raw_samples, args.seed)
        return x, labels, None
    tm = taat_matrix(ds, args.taat, args.shift)
    return tm.rows, ds.labels, tm.trajectory_ids


def cmd_kmeans(args):
    ds = load_jsonl(args.input)
    out = _outdir(args.output)
    x, truth, ids = _features(ds, args)
    res = kmeans(x, args.k, max_iter=args.max_iter, rng_seed=args.seed, n_init=args.n_init)
    if ids is not None:
        write_assignment_csv(os.path.join(out, "assignment.csv"), ids, res.labels)
    body = {"sse": res.sse, "iterations": res.iterations, "sse_history": res.sse_history,
            "sizes": np.bincount(res.labels, minlength=args.k)}
    if truth is not None:
        body.update(_label_metrics(res.labels, truth))
    write_json(os.path.join(out, "report.json"), _report(args, **body))
    if not args.no_figures:
        plotting.plot_embedding(x, res.labels, os.path.join(out, "kmeans.png"),
                                f"k-means, k={args.k}")
    if truth is not None:
        print(f"ari {body['ari']!r}")


def cmd_elbow(args):
    ds = load_jsonl(args.input)
    out = _outdir(args.output)
    x, _, _ = _features(ds, args)
    curve = elbow_curve(x, range(args.k_min, args.k_max + 1), args.seed, args.n_init, args.threads)
    write_csv(os.path.join(out, "elbow.csv"), ["k", "sse"], curve)
    write_json(os.path.join(out, "report.json"), _report(args, curve=curve))
    if not args.no_figures:
        plotting.plot_elbow(curve, os.path.join(out, "elbow.png"))


def cmd_dbscan(args):
    ds = load_jsonl(args.input)
    out = _outdir(args.output)
    x, truth, ids = _features(ds, args)
    if args.grid:
        if truth is None:
            raise DataError("--grid needs ground-truth labels in the dataset")
        res = dbscan_grid_search(x, truth, args.eps_grid or DEFAULT_EPS_GRID,
                                 args.minpts_grid or DEFAULT_MINPTS_GRID, args.threads)
        params = res.best_params
        write_csv(os.path.join(out, "grid.csv"), ["eps", "min_pts", "ari", "n_clusters", "n_noise"],
                  [[c["eps"], c["min_pts"], c["ari"], c["n_clusters"], c["n_noise"]]
                   for c in res.cells])
        grid = {"cells": res.cells, "n_cells": len(res.cells),
                "best": {"eps": params.eps, "min_pts": params.min_pts, "ari": res.best_ari}}
    else:
        try:
            params = DbscanParams(args.eps, args.min_pts)
        except ValueError as exc:
            raise UsageError(str(exc))
        grid = {}
    labels = dbscan(x, params)
    if ids is not None:
        write_assignment_csv(os.path.join(out, "assignment.csv"), ids, labels)
    body = {"eps": params.eps, "min_pts": params.min_pts, "n_clusters": int(labels.max()) + 1,
            "n_noise": int((labels == NOISE).sum()), **grid}
    if truth is not None:
        body.update(_label_metrics(labels, truth))
    write_json(os.path.join(out, "report.json"), _report(args, **body))
    if not args.no_figures:
        plotting.plot_embedding(x, labels, os.path.join(out, "dbscan.png"),
                                f"DBSCAN, eps={params.eps:.3g}, min_pts={params.min_pts}")
    print(f"clusters {body['n_clusters']} noise {body['n_noise']}")
    if grid:
        print(f"cells {grid['n_cells']}")
    if truth is not None:
        print(f"ari {body['ari']!r}")


def _read_labels(path):
    if path.endswith(".jsonl"):
        ds = load_jsonl(path)
        if ds.labels is None:
            raise DataError(f"{path}: not every trajectory carries a label")
        return dict(zip(ds.ids, ds.labels.tolist()))
    return read_assignment_csv(path)


def cmd_eval(args):
    pred, truth = _read_labels(args.pred), _read_labels(args.truth)
    if pred.keys() != truth.keys():
        missing = sorted(pred.keys() ^ truth.keys())
        raise DataError(f"trajectory ids differ between files (e.g. {missing[:3]})")
    ids = sorted(pred)
    p, t = [pred[i] for i in ids], [truth[i] for i in ids]
    scores = _label_metrics(p, t)
    print(f"ari {scores['ari']!r}")
    print(f"purity {scores['purity']!r}")
    if args.output:
        write_json(args.output, _report(args, n_items=len(ids), **scores))


def cmd_obs1(args):
    ds = load_jsonl(args.input)
    out = _outdir(args.output)
    sets = action_sets_by_label(ds, args.n_per_label, args.seed)
    curves = pairwise_percentile_ratios(sets, args.percentiles)
    rows = [[q, p, pct, ds_, dd, r] for (q, p), c in curves.items()
            for pct, ds_, dd, r in zip(c.percentiles, c.delta_same, c.delta_diff, c.ratios)]
    write_csv(os.path.join(out, "obs1.csv"),
              ["label_a", "label_b", "percentile", "delta_same", "delta_diff", "ratio"], rows)
    mean = np.mean([c.ratios for c in curves.values()], axis=0)
    write_json(os.path.join(out, "report.json"),
               _report(args, percentiles=args.percentiles, mean_ratio=mean))
    if not args.no_figures:
        plotting.plot_percentile_ratio(curves, os.path.join(out, "obs1.png"))
    for pct, r in zip(args.percentiles, mean):
        print(f"p{pct:g} {r:.4f}")


def cmd_wlln(args):
    ds = load_jsonl(args.input)
    out = _outdir(args.output)
    curves = wlln_curve(ds, args.lengths)
    rows = [[lab, L, d] for lab, c in sorted(curves.items())
            for L, d in zip(c.lengths, c.mean_distance)]
    write_csv(os.path.join(out, "wlln.csv"), ["label", "length", "mean_distance"], rows)
    write_json(os.path.join(out, "report.json"), _report(
        args, curves={lab: c.mean_distance for lab, c in curves.items()}))
    if not args.no_figures:
        plotting.plot_wlln(curves, os.path.join(out, "wlln.png"))


def cmd_trend(args):
    ds = load_jsonl(args.input)
    if ds.labels is None:
        raise DataError("trend analysis needs ground-truth labels")
    out = _outdir(args.output)
    k = len(np.unique(ds.labels))
    tm = taat_matrix(ds, args.taat, args.shift)
    raw, raw_labels = sample_actions(ds, args.raw_samples, args.seed)
    rows, body = [], {}
    for name, x, labels in (("taat", tm.rows, ds.labels), ("raw", raw, raw_labels)):
        m = clustering_trend_metrics(x, labels)
        m["kmeans_ari"] = ari(kmeans(x, k, rng_seed=args.seed).labels, labels)
        body[name] = m
        rows.append([name, m["silhouette"], m["calinski_harabasz"], m["davies_bouldin"],
                     m["kmeans_ari"]])
    write_csv(os.path.join(out, "trend.csv"),
              ["features", "silhouette", "calinski_harabasz", "davies_bouldin", "kmeans_ari"], rows)
    write_json(os.path.join(out, "report.json"), _report(args, **body))
    if not args.no_figures:
        plotting.plot_embedding(tm.rows, ds.labels, os.path.join(out, "taat.png"),
                                "TAAT, coloured by policy")
        plotting.plot_embedding(raw, raw_labels, os.path.join(out, "raw_actions.png"),
                                "raw actions, coloured by policy")
    for row in rows:
        print(" ".join([row[0]] + [f"{v:.4g}" for v in row[1:]]))


def cmd_seed_purity(args):
    ds = load_jsonl(args.input)
    out = _outdir(args.output)
    table = seed_purity_experiment(ds, args.g_values, args.repeats, args.z, args.seed,
                                   args.taat, args.shift, args.threads)
    purity_to_csv(table, os.path.join(out, "seed_purity.csv"))
    write_json(os.path.join(out, "report.json"),
               _report(args, rows=[[r.g, r.repeats, r.success_rate] for r in table]))
    if not args.no_figures:
        plotting.plot_seed_purity(table, os.path.join(out, "seed_purity.png"))
    for r in table:
        print(f"g {r.g} success {r.success_rate!r}")


# ---------------------------------------------------------------- parser

def _common(p, output="dir"):
    p.add_argument("--config", help="JSON file supplying flag values (command line wins)")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--seed", type=int, default=0)
    if output == "dir":
        p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")


def _io(p, output="dir"):
    p.add_argument("-i", "--input", required=True, help="trajset-v1 JSONL dataset")
    p.add_argument("-o", "--output", required=True,
                   help="output directory" if output == "dir" else "output JSONL file")


def _feature_flags(p, default="taat"):
    p.add_argument("--features", choices=("taat", "raw"), default=default)
    p.add_argument("--taat", choices=KINDS, default="arithmetic")
    p.add_argument("--shift", type=float, default=0.0, help="shift for the geometric TAAT")
    p.add_argument("--raw-samples", type=int, default=3000,
                   help="transitions sampled when --features raw")


def build_parser():
    parser = Parser(prog="behavior-clust",
                    description="Behavior-aware clustering of multi-policy trajectory datasets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)
    leaves = {}

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    _common(p, output="file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--policies", type=int, default=6)
    p.add_argument("--per-policy", type=int, default=500)
    p.add_argument("--len", type=int, default=50)
    p.add_argument("--state-dim", type=int, default=8)
    p.add_argument("--action-dim", type=int, default=4)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=0.1, help="action noise std")
    p.add_argument("--gain", type=float, default=SynthConfig.action_gain,
                   help="state-dependent action gain; 0 gives i.i.d. actions")
    p.add_argument("--power", type=float, default=SynthConfig.action_power)
    p.add_argument("--bound", type=_optional_float, default=SynthConfig.action_bound,
                   help="action box half-width, or 'none'")
    p.add_argument("--state-separation", type=float, default=SynthConfig.state_separation,
                   help="min distance between policy home states, in state-std units")
    p.set_defaults(func=cmd_synth, seed=7)
    leaves["synth"] = p

    p = sub.add_parser("perturb", help="rebalance or add noise to a dataset")
    _common(p, output="file")
    _io(p, output="file")
    p.add_argument("--mode", choices=("imbalance", "noise"), required=True)
    p.add_argument("--ratios", type=_int_list, help="imbalance ratios, e.g. 5,5,3,3,1,1")
    p.add_argument("--uniform-share", type=float, default=0.5)
    p.add_argument("--scale-range", type=float, nargs=2, default=(0.05, 0.20), metavar=("LO", "HI"))
    p.set_defaults(func=cmd_perturb)
    leaves["perturb"] = p

    p = sub.add_parser("cluster", help="run the iterative clustering pipeline")
    _common(p)
    _io(p)
    d = PipelineConfig()
    p.add_argument("--g", type=int, default=d.seed.g, help="seed subset size")
    p.add_argument("--z", type=int, default=d.seed.z, help="Monte-Carlo draws")
    p.add_argument("--g2-fraction", type=float, default=d.seed.g2_fraction)
    p.add_argument("--last-fraction", type=float, default=d.last_cluster_fraction)
    p.add_argument("--max-clusters", type=int, default=d.max_clusters)
    p.add_argument("--members", type=int, default=d.pu.n_members, help="bagging ensemble size")
    p.add_argument("--max-rounds", type=int, default=d.pu.max_rounds)
    p.add_argument("--max-pairs", type=int, default=d.pu.max_positive_pairs)
    p.add_argument("--hidden", type=_int_list, default=list(d.pu.hyper.hidden))
    p.add_argument("--lr", type=float, default=d.pu.hyper.learning_rate)
    p.add_argument("--epochs", type=int, default=d.pu.hyper.epochs)
    p.add_argument("--batch-size", type=int, default=d.pu.hyper.batch_size)
    p.add_argument("--kde-min-rule", choices=MIN_RULES, default=d.pu.min_rule)
    p.add_argument("--taat", choices=KINDS, default=d.taat_kind)
    p.add_argument("--shift", type=float, default=d.taat_shift)
    p.add_argument("--write-clusters", action="store_true",
                   help="also write one JSONL file per cluster")
    p.set_defaults(func=cmd_cluster)
    leaves["cluster"] = p

    base = sub.add_parser("baseline", help="k-means / DBSCAN baselines")
    bsub = base.add_subparsers(dest="baseline", required=True, parser_class=Parser)
    p = bsub.add_parser("kmeans")
    _common(p)
    _io(p)
    _feature_flags(p)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=300)
    p.set_defaults(func=cmd_kmeans)
    leaves["baseline kmeans"] = p

    p = bsub.add_parser("elbow")
    _common(p)
    _io(p)
    _feature_flags(p)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=15)
    p.add_argument("--n-init", type=int, default=10)
    p.set_defaults(func=cmd_elbow)
    leaves["baseline elbow"] = p

    p = bsub.add_parser("dbscan")
    _common(p)
    _io(p)
    _feature_flags(p)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--grid", action="store_true",
                   help="search the eps x min_pts grid by ARI (needs labels)")
    p.add_argument("--eps-grid", type=_float_list)
    p.add_argument("--minpts-grid", type=_int_list)
    p.set_defaults(func=cmd_dbscan)
    leaves["baseline dbscan"] = p

    p = sub.add_parser("eval", help="ARI and purity between two label files")
    _common(p, output="file")
    p.add_argument("--pred", required=True, help="assignment CSV or labeled JSONL")
    p.add_argument("--truth", required=True, help="label CSV or labeled JSONL")
    p.add_argument("-o", "--output", help="optional JSON report path")
    p.set_defaults(func=cmd_eval)
    leaves["eval"] = p

    an = sub.add_parser("analyze", help="feature analyses (CSV curves and figures)")
    asub = an.add_subparsers(dest="analysis", required=True, parser_class=Parser)
    p = asub.add_parser("obs1", help="percentile distance ratio of raw actions")
    _common(p)
    _io(p)
    p.add_argument("--n-per-label", type=int, default=2000)
    p.add_argument("--percentiles", type=_float_list, default=[5, 10, 20, 40, 60, 80, 100])
    p.set_defaults(func=cmd_obs1)
    leaves["analyze obs1"] = p

    p = asub.add_parser("wlln", help="TAAT convergence with trajectory length")
    _common(p)
    _io(p)
    p.add_argument("--lengths", type=_int_list, default=[25, 50, 100, 200, 400])
    p.set_defaults(func=cmd_wlln)
    leaves["analyze wlln"] = p

    p = asub.add_parser("trend", help="clustering metrics of TAAT vs raw actions")
    _common(p)
    _io(p)
    _feature_flags(p)
    p.set_defaults(func=cmd_trend)
    leaves["analyze trend"] = p

    p = asub.add_parser("seed-purity", help="single-label rate of Monte-Carlo seeds")
    _common(p)
    _io(p)
    p.add_argument("--g-values", type=_int_list, default=[2, 4, 6, 8, 10])
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--z", type=int, default=100_000)
    p.add_argument("--taat", choices=KINDS, default="arithmetic")
    p.add_argument("--shift", type=float, default=0.0)
    p.set_defaults(func=cmd_seed_purity)
    leaves["analyze seed-purity"] = p
    return parser, leaves


def _command_path(args):
    path = args.command
    for extra in ("baseline", "analysis"):
        if getattr(args, extra, None):
            path += " " + getattr(args, extra)
    return path


def _load_config(path, leaf):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read config {path}: {exc}")
    if isinstance(cfg, dict) and "run_config" in cfg:
        cfg = cfg["run_config"]
    if not isinstance(cfg, dict):
        raise DataError(f"{path}: config must be a JSON object")
    routing = {"command", "baseline", "analysis", "command_path"}
    known = {a.dest for a in leaf._actions}
    unknown = sorted(set(cfg) - known - routing)
    if unknown:
        leaf.error(f"unknown config key(s) in {path}: {', '.join(unknown)}")
    cfg = {k: v for k, v in cfg.items() if k not in routing}
    for key in ("scale_range",):
        if key in cfg and isinstance(cfg[key], list):
            cfg[key] = tuple(cfg[key])
    return cfg


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    leaf = leaves[_command_path(args)]
    try:
        if args.config:
            leaf.set_defaults(**_load_config(args.config, leaf))
            args = parser.parse_args(argv)
        args.command_path = _command_path(args)
        try:
            args.threads = resolve_threads(args.threads)
        except ValueError as exc:
            raise UsageError(str(exc))
        args.func(args)
    except UsageError as exc:
        leaf.error(str(exc))
    except (DataError, DegenerateInputError, TrainingDivergedError, OSError) as exc:
        print(f"behavior-clust: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
