"""Command-line front end: ``msgs-lab <subcommand> [--flags]``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
Every subcommand writes ``manifest.json`` next to its outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import datagen, spectral, trainer
from .autodiff import finite_difference_check
from .datagen import DatasetError, GenerationError, SbmConfig
from .graph import GraphError, build_graph, laplacian, read_edge_list, ring_lattice
from .jacobi import ConvergenceError
from .models import Ablation, GraphContext, ModelError, ModelParams, extract_equivalent_filter
from .spectral import InfeasibleFilterError, SpectralInputError

log = logging.getLogger("msgs_lab")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
FAMILIES = ("gcn", "fagcn-low", "fagcn-high", "rfagnn", "msgs")
INPUT_ERRORS = (
    DatasetError, GraphError, SpectralInputError, InfeasibleFilterError,
    GenerationError, ModelError, FileNotFoundError, IsADirectoryError, KeyError, ValueError,
)
NUMERIC_ERRORS = (trainer.TrainingDiverged, ConvergenceError, FloatingPointError)


class UsageError(Exception):
    pass


# -- small parsers ---------------------------------------------------------------


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {text}")
    return v


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# -- shared plumbing -------------------------------------------------------------


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _data_paths(args, need_labels=True, need_features=True) -> dict[str, Path]:
    base = Path(args.data) if args.data else None
    paths = {}
    for key, default in (("edges", "edges.txt"), ("features", "features.csv"), ("labels", "labels.csv")):
        explicit = getattr(args, key, None)
        if explicit:
            paths[key] = Path(explicit)
        elif base is not None:
            paths[key] = base / f"{args.prefix}{default}"
    required = ["edges"] + (["features"] if need_features else []) + (["labels"] if need_labels else [])
    for key in required:
        if key not in paths:
            raise UsageError(f"missing --{key} (or --data DIR holding it)")
        if not paths[key].is_file():
            raise UsageError(f"{key} file not found: {paths[key]}")
    return {k: p for k, p in paths.items() if p.is_file()}


def _load(args, need_labels=True):
    paths = _data_paths(args, need_labels=need_labels)
    ds = datagen.load_dataset(paths["edges"], paths["features"], paths["labels"])
    return ds, paths


def _split(args, ds):
    ratios = args.split
    if len(ratios) != 3:
        raise UsageError("--split needs three comma-separated ratios")
    return datagen.split(ds, ratios, seed=args.split_seed)


def _train_config(args, **extra) -> trainer.TrainConfig:
    cfg = trainer.TrainConfig(
        model=args.model, lr=args.lr, weight_decay=args.weight_decay, dropout=args.dropout,
        hidden=args.hidden, layers=args.layers, epochs=args.epochs, seed=args.seed,
        eps=args.eps, ablation=getattr(args, "ablation", None), positive_class=args.positive_class,
    )
    return replace(cfg, **extra)


def _write_rows(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(v) -> str:
    return f"{v:.12g}" if isinstance(v, float) else str(v)


# -- subcommands -----------------------------------------------------------------


def cmd_generate(args):
    cfg = SbmConfig(
        num_nodes=args.nodes, num_classes=args.classes,
        proportions=tuple(args.proportions) if args.proportions else None,
        p_in=args.p_in, p_out=args.p_out, feature_dim=args.feature_dim,
        mu=args.mu, sigma=args.sigma, seed=args.seed,
        require_connected=not args.allow_disconnected, max_attempts=args.max_attempts,
    )
    ds = datagen.generate_sbm(cfg)
    paths = datagen.save_dataset(ds, _out_dir(args), args.prefix)
    print(f"nodes={ds.graph.num_nodes} edges={ds.graph.num_edges} "
          f"homophily={ds.edge_homophily():.4f} expected={cfg.expected_homophily():.4f}")
    return {}, list(paths.values())


def cmd_train(args):
    ds, inputs = _load(args)
    ds = _split(args, ds)
    cfg = _train_config(args)
    with np.errstate(over="ignore", invalid="ignore"):
        result = trainer.train(ds, cfg)
    out = _out_dir(args)
    label = trainer.model_label(cfg)
    records = [
        trainer.RunRecord(label, cfg.layers, cfg.seed, "val", result.val),
        trainer.RunRecord(label, cfg.layers, cfg.seed, "test", result.test),
    ]
    metrics, log_path, params = out / "metrics.csv", out / "log.csv", out / "params.json"
    trainer.write_metrics_csv(records, metrics)
    trainer.write_log_csv(result.log, log_path)
    result.params.save(params)
    m = result.test
    print(f"{label} K={cfg.layers} seed={cfg.seed} best_epoch={result.best_epoch} "
          f"test_accuracy={m.accuracy:.4f} test_f1={m.f1:.4f}")
    return inputs, [metrics, log_path, params]


def _family_spec(args):
    f = args.family
    if f == "gcn":
        return spectral.Gcn(args.k)
    if f == "fagcn-low":
        return spectral.FagcnLow(args.k, args.eps)
    if f == "fagcn-high":
        return spectral.FagcnHigh(args.k, args.eps)
    if f == "rfagnn":
        return spectral.RfaGnn(args.k, args.alpha, args.beta)
    if not (args.alphas and args.betas and args.gammas):
        raise UsageError("--family msgs needs --alphas, --betas and --gammas (K+1 values each)")
    return spectral.Msgs(args.alphas, args.betas, args.gammas)


def cmd_spectrum(args):
    grid = spectral.lambda_grid(args.points, args.lambda_min, args.lambda_max)
    inputs = {}
    if args.from_params:
        params = ModelParams.load(args.from_params)
        if params.spec.kind != "msgs":
            raise UsageError("--from-params needs MSGS parameters")
        ds, inputs = _load(args, need_labels=False) if args.data or args.edges else (None, {})
        if ds is None:
            raise UsageError("--from-params needs the dataset (--data or --edges/--features)")
        _, art = trainer.predict(params, ds)
        curve = extract_equivalent_filter(art, lambdas=grid)
        inputs = dict(inputs, params=Path(args.from_params))
    else:
        if args.family is None:
            raise UsageError("give --family or --from-params")
        curve = spectral.response_closed_form(_family_spec(args), grid)
    out = _out_dir(args) / "response.csv"
    curve.to_csv(out)
    print(f"{len(curve.lambdas)} points, g(0)={curve.amplitudes[0]:.6g}, g(2)={curve.amplitudes[-1]:.6g}")
    return inputs, [out]


def cmd_oversmooth(args):
    paths = _data_paths(args, need_labels=False, need_features=False)
    graph = (
        datagen.load_dataset(paths["edges"], paths["features"], paths["labels"]).graph
        if "features" in paths and "labels" in paths
        else read_edge_list(paths["edges"], num_nodes=args.nodes)
    )
    if not graph.is_connected():
        raise UsageError("graph is disconnected; the oversmoothing limit needs a connected graph")
    rng = np.random.default_rng(args.seed)
    rows = []
    for s in range(args.signals):
        rep = spectral.verify_oversmoothing_limit(graph, rng.standard_normal(graph.num_nodes), args.k_max, args.tol)
        rows.append([s, "" if rep.k_converged is None else rep.k_converged, _fmt(rep.limit_error), rep.steps])
    out = _out_dir(args)
    report = out / "oversmooth_report.csv"
    _write_rows(report, ["signal", "k_converged", "limit_error", "steps"], rows)
    outputs = [report]
    print(f"converged {sum(r[1] != '' for r in rows)}/{len(rows)} signals; "
          f"max limit_error {max(float(r[2]) for r in rows):.3e}")
    if "features" in paths and "labels" in paths and args.kinds:
        ds = _split(args, datagen.load_dataset(paths["edges"], paths["features"], paths["labels"]))
        with np.errstate(over="ignore", invalid="ignore"):
            records = trainer.depth_sweep(ds, args.kinds, args.k_list, _train_config(args), args.seeds, args.workers)
        sweep = out / "depth_sweep.csv"
        trainer.write_metrics_csv(records, sweep)
        outputs.append(sweep)
        for (model, k), (mean, std) in trainer.summarize(records).items():
            print(f"{model:8s} K={k:3d} accuracy {mean:.4f} +- {std:.4f}")
    return paths, outputs


def cmd_ablation(args):
    ds, inputs = _load(args)
    ds = _split(args, ds)
    with np.errstate(over="ignore", invalid="ignore"):
        records = trainer.ablation_suite(ds, _train_config(args, model="msgs"), args.seeds, args.workers)
    out = _out_dir(args) / "ablation.csv"
    trainer.write_metrics_csv(records, out)
    for (model, k), (mean, std) in trainer.summarize(records).items():
        print(f"{model:18s} K={k} accuracy {mean:.4f} +- {std:.4f}")
    return inputs, [out]


def cmd_edge_coeffs(args):
    ds, inputs = _load(args)
    params = ModelParams.load(args.params)
    if params.spec.kind != "msgs":
        raise UsageError("edge coefficients need MSGS parameters")
    _, art = trainer.predict(params, ds)
    scales = range(len(art.edge_coeffs)) if args.scale is None else [args.scale]
    if args.scale is not None and not 0 <= args.scale < len(art.edge_coeffs):
        raise UsageError(f"--scale must lie in [0, {len(art.edge_coeffs) - 1}]")
    intra = ds.labels[art.src] == ds.labels[art.dst]
    cls = np.where(intra, "intra", "inter")
    rows, summary = [], []
    for s in scales:
        beta = art.edge_coeffs[s]
        rows.extend([int(i), int(j), s, _fmt(float(b)), c] for i, j, b, c in zip(art.src, art.dst, beta, cls))
        for name, mask in (("intra", intra), ("inter", ~intra)):
            b = beta[mask]
            mean = float(b.mean()) if len(b) else float("nan")
            neg = float(np.mean(b < 0)) if len(b) else float("nan")
            summary.append([s, name, int(mask.sum()), _fmt(mean), _fmt(neg)])
            print(f"scale {s} {name}: n={int(mask.sum())} mean_beta={mean:+.4f} negative={neg:.3f}")
    out = _out_dir(args)
    coeffs, summ = out / "edge_coeffs.csv", out / "edge_summary.csv"
    _write_rows(coeffs, ["src", "dst", "scale", "beta", "edge_class"], rows)
    _write_rows(summ, ["scale", "edge_class", "count", "mean_beta", "negative_fraction"], summary)
    return dict(inputs, params=Path(args.params)), [coeffs, summ]


# -- verify ----------------------------------------------------------------------


def _verify_checks(seed: int, graphs: int):
    """Yield ``(name, status, deviation, threshold, note)`` rows."""
    rng = np.random.default_rng(seed)
    sbms = []
    for t in range(graphs):
        n = int(rng.integers(20, 61))
        ds = datagen.generate_sbm(SbmConfig(num_nodes=n, p_in=0.3, p_out=0.1, feature_dim=2, seed=seed * 1000 + t))
        sbms.append(ds.graph)
    decomps = [spectral.eig_sym(laplacian(g)) for g in sbms]

    dev = max(float(np.max(np.abs(d.reconstruct() - laplacian(g)))) for g, d in zip(sbms, decomps))
    yield "eig_reconstruction", dev < 1e-8, dev, 1e-8, "jacobi solver"
    dev = max(float(np.max(np.abs(d.eigenvalues - np.linalg.eigvalsh(laplacian(g))))) for g, d in zip(sbms, decomps))
    yield "eig_vs_lapack", dev < 1e-8, dev, 1e-8, ""

    dev = 0.0
    for d in decomps:
        x = rng.standard_normal(d.size)
        dev = max(dev, float(np.max(np.abs(spectral.inverse_gft(d, spectral.gft(d, x)) - x))))
    yield "gft_round_trip", dev < 1e-10, dev, 1e-10, ""

    dev = 0.0
    for g, d in zip(sbms, decomps):
        op = 2 * np.eye(g.num_nodes) - laplacian(g)
        x = rng.standard_normal(d.size)
        for k in range(1, 7):
            y = x.copy()
            for _ in range(k):
                y = op @ y
            dev = max(dev, float(np.max(np.abs(spectral.spectral_filter_apply(d, spectral.Gcn(k), x) - y))))
    yield "filter_vs_dense_power", dev < 1e-8, dev, 1e-8, "(2 - lambda)^K, K <= 6"

    dev = 0.0
    for d in decomps:
        for _ in range(5):
            dev = max(dev, spectral.verify_convolution_theorem(d, rng.standard_normal(d.size), rng.standard_normal(d.size)))
    yield "convolution_theorem", dev < 1e-10, dev, 1e-10, ""

    dev, worst_k = 0.0, 0
    for g in sbms:
        rep = spectral.verify_oversmoothing_limit(g, np.abs(rng.standard_normal(g.num_nodes)) + 0.1)
        dev = max(dev, rep.limit_error if rep.converged else np.inf)
        worst_k = max(worst_k, rep.k_converged or 0)
    yield "oversmoothing_limit", dev < 1e-6, dev, 1e-6, f"slowest convergence at K={worst_k}"

    # lambda_max < 2 strictly needs an odd cycle; bipartite graphs attain 2
    for name, g in (("triangle_plus_tail", build_graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])),
                    ("even_cycle", build_graph(6, [(i, (i + 1) % 6) for i in range(6)]))):
        top = float(spectral.eig_sym(laplacian(g)).eigenvalues[-1])
        gap = 2.0 - top
        if _is_bipartite(g):
            yield f"lambda_max_strict[{name}]", None, gap, 0.0, "skipped: bipartite graph attains lambda = 2"
        else:
            yield f"lambda_max_strict[{name}]", gap > 1e-9, gap, 0.0, "gap 2 - lambda_max"

    lattice = ring_lattice(400, 4)
    x = rng.standard_normal((400, 32))
    frac = float(np.mean(spectral.pair_distance_ratios(lattice, x) < 1))
    yield "distance_contraction", frac >= 0.95, frac, 0.95, "fraction of edges whose distance shrinks"
    frac = float(np.mean(spectral.pair_distance_ratios(lattice, x, 1.0, -0.9) > 1))
    yield "high_pass_expansion", frac >= 0.95, frac, 0.95, "alpha=1 beta=-0.9"

    grid = spectral.lambda_grid()
    dev = 0.0
    for _ in range(25):
        terms = _reachable_terms(rng, int(rng.integers(1, 6)))
        spec = spectral.fit_msgs_params_to_polynomial(terms)
        target = sum(c1 * (grid - c2) ** k for k, (c1, c2) in enumerate(terms))
        dev = max(dev, float(np.max(np.abs(spectral.response_closed_form(spec, grid).amplitudes - target))))
    yield "polynomial_fit", dev < 1e-8, dev, 1e-8, "25 reachable targets"

    from . import autodiff as ad
    from .models import ModelSpec, init_params, record_forward

    g = sbms[0]
    n = g.num_nodes
    labels = rng.integers(0, 2, n)
    feats = rng.standard_normal((n, 4))
    params = init_params(ModelSpec("msgs", 4, 4, 2, 2), seed)
    ctx = GraphContext.from_graph(g)

    def loss_fn(tape):
        logits, _ = record_forward(tape, params, ctx, feats)
        return ad.cross_entropy_with_softmax(logits, labels)

    rep = finite_difference_check(loss_fn, params.tensors, max_entries=20, seed=seed)
    yield "msgs_gradient", rep.passed, rep.max_rel_error, rep.tol, f"{rep.checked} entries"


def _is_bipartite(g) -> bool:
    colour = -np.ones(g.num_nodes, int)
    for start in range(g.num_nodes):
        if colour[start] >= 0:
            continue
        colour[start], stack = 0, [start]
        while stack:
            i = stack.pop()
            for j in g.neighbors(i):
                if colour[j] < 0:
                    colour[j] = 1 - colour[i]
                    stack.append(j)
                elif colour[j] == colour[i]:
                    return False
    return True


def _reachable_terms(rng, k_max: int):
    """Random ``(c1, c2)`` terms drawn from in-box (alpha, beta, gamma)."""
    terms = [(float(rng.normal()), 0.0)]
    for k in range(1, k_max + 1):
        alpha = float(rng.uniform(0.1, 1.0))
        beta = float(rng.choice([-1, 1]) * rng.uniform(0.1, 0.95))
        gamma = float(rng.normal())
        terms.append((gamma * (-beta) ** k, (alpha + beta) / beta))
    return terms


def cmd_verify(args):
    rows, failed = [], 0
    for name, ok, dev, thr, note in _verify_checks(args.seed, args.graphs):
        status = "skip" if ok is None else ("pass" if ok else "fail")
        failed += status == "fail"
        rows.append([name, status, f"{dev:.3e}", f"{thr:g}", note])
        print(f"{status.upper():4s} {name:32s} deviation={dev:.3e} threshold={thr:g} {note}")
    out = _out_dir(args) / "verify.csv"
    _write_rows(out, ["check", "status", "deviation", "threshold", "note"], rows)
    if failed:
        raise FloatingPointError(f"{failed} check(s) failed")
    return {}, [out]


# -- parser ----------------------------------------------------------------------


def _add_data_flags(p, labels_help="label CSV"):
    p.add_argument("--data", help="directory holding edges.txt, features.csv, labels.csv")
    p.add_argument("--prefix", default="", help="file-name prefix inside --data (default: none)")
    p.add_argument("--edges", help="edge-list file (overrides --data)")
    p.add_argument("--features", help="feature CSV (overrides --data)")
    p.add_argument("--labels", help=f"{labels_help} (overrides --data)")


def _add_split_flags(p):
    p.add_argument("--split", type=float_list, default=[0.1, 0.1, 0.8],
                   help="train,val,test ratios (default: %(default)s)")
    p.add_argument("--split-seed", type=int, default=0, help="seed of the split (default: %(default)s)")


def _add_train_flags(p, model=True):
    d = trainer.TrainConfig()
    if model:
        p.add_argument("--model", choices=("msgs", "gcn", "sgc", "fagcn", "rfagnn"), default=d.model,
                       help="model kind (default: %(default)s)")
    else:
        p.set_defaults(model="msgs")
    p.add_argument("--lr", type=float, default=d.lr, help="learning rate (default: %(default)s)")
    p.add_argument("--weight-decay", type=float, default=d.weight_decay, help="decoupled L2 factor (default: %(default)s)")
    p.add_argument("--dropout", type=float, default=d.dropout, help="dropout rate (default: %(default)s)")
    p.add_argument("--hidden", type=int, default=d.hidden, help="hidden units (default: %(default)s)")
    p.add_argument("--layers", type=int, default=d.layers, help="propagation depth K (default: %(default)s)")
    p.add_argument("--epochs", type=int, default=d.epochs, help="training epochs (default: %(default)s)")
    p.add_argument("--eps", type=float, default=d.eps, help="FAGCN residual weight (default: %(default)s)")
    p.add_argument("--positive-class", type=int, default=d.positive_class,
                   help="class treated as positive for precision/recall/F1 (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msgs-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING", help="logging level (default: %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat 'key = value' file; command-line flags override it")
        p.add_argument("--seed", type=int, default=0, help="seed for every random draw (default: %(default)s)")
        p.add_argument("--out", default=".", help="output directory (default: %(default)s)")
        p.set_defaults(func=func)
        return p

    p = command("generate", cmd_generate, "sample an SBM dataset")
    p.add_argument("--nodes", type=int, default=1000, help="number of nodes (default: %(default)s)")
    p.add_argument("--classes", type=int, default=2, help="number of classes (default: %(default)s)")
    p.add_argument("--proportions", type=float_list, default=None, help="class proportions (default: balanced)")
    p.add_argument("--p-in", type=probability, default=0.004, help="intra-class edge probability (default: %(default)s)")
    p.add_argument("--p-out", type=probability, default=0.016, help="inter-class edge probability (default: %(default)s)")
    p.add_argument("--feature-dim", type=int, default=16, help="feature dimension (default: %(default)s)")
    p.add_argument("--mu", type=float, default=1.0, help="class-mean separation (default: %(default)s)")
    p.add_argument("--sigma", type=float, default=1.0, help="feature noise std (default: %(default)s)")
    p.add_argument("--max-attempts", type=int, default=100, help="connectivity retries (default: %(default)s)")
    p.add_argument("--allow-disconnected", action="store_true", help="skip the connectivity retry loop")
    p.add_argument("--prefix", default="", help="output file-name prefix (default: none)")

    p = command("train", cmd_train, "train one model on one seed")
    _add_data_flags(p)
    _add_split_flags(p)
    _add_train_flags(p)
    p.add_argument("--ablation", choices=[a.value for a in Ablation], default=None,
                   help="MSGS ablation variant (default: full model)")

    p = command("spectrum", cmd_spectrum, "export a frequency-response curve")
    p.add_argument("--family", choices=FAMILIES, help="closed-form filter family")
    p.add_argument("--k", type=int, default=2, help="filter order K (default: %(default)s)")
    p.add_argument("--eps", type=float, default=0.3, help="FAGCN epsilon (default: %(default)s)")
    p.add_argument("--alpha", type=float, default=1.0, help="RFA-GNN alpha (default: %(default)s)")
    p.add_argument("--beta", type=float, default=0.5, help="RFA-GNN beta (default: %(default)s)")
    p.add_argument("--alphas", type=float_list, help="MSGS per-scale alphas, K+1 values")
    p.add_argument("--betas", type=float_list, help="MSGS per-scale betas, K+1 values")
    p.add_argument("--gammas", type=float_list, help="MSGS per-scale gammas, K+1 values")
    p.add_argument("--from-params", help="trained MSGS params.json; the equivalent filter is exported")
    _add_data_flags(p, "label CSV (unused)")
    p.add_argument("--points", type=int, default=spectral.DEFAULT_GRID_POINTS, help="grid size (default: %(default)s)")
    p.add_argument("--lambda-min", type=float, default=0.0, help="grid start (default: %(default)s)")
    p.add_argument("--lambda-max", type=float, default=2.0, help="grid end (default: %(default)s)")

    p = command("oversmooth", cmd_oversmooth, "limit-direction convergence report plus depth sweep")
    _add_data_flags(p, "label CSV (enables the depth sweep)")
    _add_split_flags(p)
    _add_train_flags(p, model=False)
    p.add_argument("--nodes", type=int, default=None, help="node count when only an edge list is given")
    p.add_argument("--signals", type=int, default=5, help="random signals for the limit check (default: %(default)s)")
    p.add_argument("--k-max", type=int, default=500, help="maximum propagation steps (default: %(default)s)")
    p.add_argument("--tol", type=float, default=1e-6, help="limit tolerance, max-norm (default: %(default)s)")
    p.add_argument("--kinds", type=lambda s: [v for v in s.split(",") if v], default=["gcn", "msgs"],
                   help="model kinds in the sweep (default: gcn,msgs)")
    p.add_argument("--k-list", type=int_list, default=[2, 4, 8, 16, 32], help="depths (default: 2,4,8,16,32)")
    p.add_argument("--seeds", type=int_list, default=list(trainer.DEFAULT_SEEDS), help="seeds (default: 0,1,2,3,4)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default: %(default)s)")

    p = command("ablation", cmd_ablation, "MSGS against its three ablation variants")
    _add_data_flags(p)
    _add_split_flags(p)
    _add_train_flags(p, model=False)
    p.add_argument("--seeds", type=int_list, default=list(trainer.DEFAULT_SEEDS), help="seeds (default: 0,1,2,3,4)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default: %(default)s)")

    p = command("edge-coeffs", cmd_edge_coeffs, "export learned signed edge coefficients")
    _add_data_flags(p)
    p.add_argument("--params", required=True, help="trained MSGS params.json")
    p.add_argument("--scale", type=int, default=None, help="export a single scale (default: all)")

    p = command("verify", cmd_verify, "numerical checks of the spectral results")
    p.add_argument("--graphs", type=int, default=5, help="random SBM graphs to test (default: %(default)s)")
    return parser


def _apply_config_file(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = read_config_file(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "config", "func"):
            raise UsageError(f"{args.config}: unknown key {key!r} for '{args.command}'")
        if action.nargs == 0:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        try:
            value = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{args.config}: bad value for {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{args.config}: {key}={value!r} not in {sorted(action.choices)}")
        defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _manifest(args, inputs, outputs, duration) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {
        "subcommand": args.command,
        "config": config,
        "seed": args.seed,
        "inputs": {str(k): {"path": str(p), "sha256": sha256(p)} for k, p in sorted(inputs.items())},
        "outputs": {str(p): sha256(p) for p in outputs},
        "duration_seconds": round(duration, 3),
    }


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        inputs, outputs = args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    manifest = _manifest(args, inputs, outputs, time.perf_counter() - start)
    path = Path(args.out) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
