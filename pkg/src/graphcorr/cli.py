"""Command-line surface: simulate, learn, graph, distance, largenet, predict.

Every command writes only inside its --out directory, always ends by
writing a manifest with content hashes of its inputs, and is byte
reproducible for a fixed seed.  Exit codes: 2 bad input, 3 chain
diverged, 4 I/O failure.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import dataset as ds_mod
from . import figures, graphdist, graphmodel, largenet, manifest, modelcheck, sampler
from .config import chain_config_from, effective_config_dict, load_config
from .errors import BadInput, ChainDiverged, GraphCorrError
from .reference import TOY_SIGMA, WINE_REFERENCE

EXIT_BAD_INPUT = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _require_file(path):
    if not os.path.isfile(path):
        raise BadInput(f"no such file: {path}")
    return path


def _out_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _apply_threads(threads):
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


# ---------------------------------------------------------------- simulate


def cmd_simulate(args):
    started = time.monotonic()
    out = _out_dir(args.out)
    cfgmap = load_config(args.config) if args.config else {}
    sim = cfgmap.get("simulate", {})
    preset = args.preset or sim.get("preset")
    n = args.n or int(sim.get("n", 0))
    if n <= 0:
        raise BadInput("simulate needs --n (or [simulate] n in the config)")
    seed = args.seed if args.seed is not None else int(sim.get("seed", 0))
    inputs = {}
    if preset == "toy":
        sigma = TOY_SIGMA
    elif args.sigma:
        _require_file(args.sigma)
        sigma = np.loadtxt(args.sigma, delimiter=args.delimiter if args.delimiter != "," else None)
        inputs["sigma"] = args.sigma
    else:
        raise BadInput("simulate needs --preset toy or --sigma FILE")
    raw = ds_mod.simulate(sigma, n, seed)
    if args.noise_variance:
        raw = ds_mod.add_measurement_noise(
            raw, args.noise_column - 1, args.noise_variance, seed + 1
        )
    data_path = os.path.join(out, "data.csv")
    ds_mod.write_delimited(raw, data_path)
    if args.config:
        inputs["config"] = args.config
    manifest.write_manifest(
        out,
        "simulate",
        {
            "preset": preset,
            "n": n,
            "noise_column": args.noise_column,
            "noise_variance": args.noise_variance,
        },
        seed,
        inputs,
        ["data.csv"],
        started,
    )
    print(f"simulated {raw.n_rows} rows x {raw.n_cols} columns -> {data_path}")
    return 0


# ------------------------------------------------------------------- learn


def _load_standardized(args):
    raw = ds_mod.load_delimited(_require_file(args.data), delimiter=args.delimiter)
    if args.subsample:
        raw = ds_mod.subsample_rows(raw, args.subsample, args.subsample_seed or 0)
    std = ds_mod.standardize(raw)
    std, removed = ds_mod.prune_dependent_rows(std)
    return std, removed


def _hpd_report_text(trace, mass=0.95):
    pairs = trace.pairs()
    post = trace.corr[trace.burn_in:]
    lines = [f"# 95% HPD intervals over {post.shape[0]} post-burn-in iterations"]
    for idx, (i, j) in enumerate(pairs):
        lo, hi = sampler.hpd_interval(post[:, idx], mass)
        lines.append(f"S[{i + 1},{j + 1}] mean={post[:, idx].mean():.6f} hpd=[{lo:.6f}, {hi:.6f}]")
    rho_samples = _partial_samples(trace)
    for idx, (i, j) in enumerate(pairs):
        lo, hi = sampler.hpd_interval(rho_samples[:, idx], mass)
        lines.append(
            f"rho[{i + 1},{j + 1}] mean={rho_samples[:, idx].mean():.6f} hpd=[{lo:.6f}, {hi:.6f}]"
        )
    if trace.gamma is not None:
        g = trace.gamma[trace.burn_in:]
        for c in range(trace.p):
            lo, hi = sampler.hpd_interval(g[:, c], mass)
            lines.append(f"gamma[{c + 1}] mean={g[:, c].mean():.6f} hpd=[{lo:.6f}, {hi:.6f}]")
    lines.append(
        f"accept_corr={trace.accept_corr} of {trace.n_iter - 1} "
        f"accept_graph_pairs={trace.accept_graph}"
    )
    return "\n".join(lines) + "\n"


def _partial_samples(trace):
    post = trace.corr[trace.burn_in:]
    pairs = trace.pairs()
    out = np.empty_like(post)
    for t in range(post.shape[0]):
        s = np.eye(trace.p)
        for idx, (i, j) in enumerate(pairs):
            s[i, j] = s[j, i] = post[t, idx]
        try:
            psi = np.linalg.inv(s)
        except np.linalg.LinAlgError:
            psi = np.linalg.pinv(s)
        rho = graphmodel.partial_from_precision(psi)
        for idx, (i, j) in enumerate(pairs):
            out[t, idx] = rho[i, j]
    return out


def cmd_learn(args):
    started = time.monotonic()
    out = _out_dir(args.out)
    cfgmap = load_config(args.config) if args.config else {}
    cfg = chain_config_from(
        cfgmap,
        overrides={
            "seed": args.seed,
            "n_iter": args.iters,
            "burn_in": args.burn_in,
        },
    )
    std, removed = _load_standardized(args)
    trace = sampler.run_chain(std, cfg)
    artifacts = []

    trace_path = os.path.join(out, "trace.txt")
    sampler.save_trace(trace, trace_path)
    artifacts.append("trace.txt")

    graph = graphmodel.credible_graph(trace, threshold=args.threshold)
    artifacts.append(_rel(_write_text(os.path.join(out, "credible_graph_edges.txt"), graph.to_edge_list_text()), out))
    artifacts.append(_rel(_write_text(os.path.join(out, "credible_graph.dot"), graph.to_dot_text()), out))
    artifacts.append(_rel(_write_text(os.path.join(out, "credible_graph.json"), graph.to_json_text()), out))
    artifacts.append(_rel(_write_text(os.path.join(out, "hpd_report.txt"), _hpd_report_text(trace)), out))
    if removed:
        artifacts.append(_rel(_write_text(
            os.path.join(out, "pruned_rows.txt"),
            "\n".join(str(i) for i in removed) + "\n",
        ), out))

    figures.save_trace_figure(trace, os.path.join(out, "trace.png"))
    figures.save_corr_marginals_figure(trace, os.path.join(out, "corr_marginals.png"))
    artifacts += ["trace.png", "corr_marginals.png"]

    inputs = {"data": args.data}
    if args.config:
        inputs["config"] = args.config
    manifest.write_manifest(
        out, "learn", effective_config_dict(cfg), cfg.seed, inputs, artifacts, started
    )
    print(
        f"chain of {trace.n_iter} iterations done; "
        f"{len(graph.edge_list())} credible edges -> {out}"
    )
    return 0


def _rel(path, out):
    return os.path.relpath(path, out)


# ------------------------------------------------------------------- graph


def cmd_graph(args):
    started = time.monotonic()
    out = _out_dir(args.out)
    trace = sampler.load_trace(_require_file(args.trace))
    graph = graphmodel.credible_graph(trace, threshold=args.threshold)
    artifacts = [
        _rel(_write_text(os.path.join(out, "credible_graph_edges.txt"), graph.to_edge_list_text()), out),
        _rel(_write_text(os.path.join(out, "credible_graph.dot"), graph.to_dot_text()), out),
        _rel(_write_text(os.path.join(out, "credible_graph.json"), graph.to_json_text()), out),
    ]
    manifest.write_manifest(
        out, "graph", {"threshold": args.threshold}, 0, {"trace": args.trace}, artifacts, started
    )
    print(f"{len(graph.edge_list())} credible edges -> {out}")
    return 0


# ---------------------------------------------------------------- distance


def cmd_distance(args):
    started = time.monotonic()
    out = _out_dir(args.out)
    tr1 = sampler.load_trace(_require_file(args.trace1))
    tr2 = sampler.load_trace(_require_file(args.trace2))
    report = graphdist.delta(tr1, tr2, strict_lengths=args.strict_lengths)
    artifacts = [
        _rel(_write_text(os.path.join(out, "distance_report.json"), report.to_json_text()), out),
        _rel(_write_text(os.path.join(out, "distance_report.txt"), report.to_key_value_text()), out),
    ]
    t, s1, s2 = graphdist.band_data(tr1, tr2, report.scale_s, args.strict_lengths)
    band_lines = ["iteration,scaled_chain1,scaled_chain2"]
    band_lines += [f"{int(i)},{repr(float(a))},{repr(float(b))}" for i, a, b in zip(t, s1, s2)]
    artifacts.append(_rel(_write_text(os.path.join(out, "band_data.txt"), "\n".join(band_lines) + "\n"), out))
    figures.save_band_figure(t, s1, s2, report.hellinger, os.path.join(out, "band.png"))
    artifacts.append("band.png")
    manifest.write_manifest(
        out,
        "distance",
        {"strict_lengths": bool(args.strict_lengths)},
        0,
        {"trace1": args.trace1, "trace2": args.trace2},
        artifacts,
        started,
    )
    print(report.to_key_value_text(), end="")
    return 0


# ---------------------------------------------------------------- largenet


def cmd_largenet(args):
    started = time.monotonic()
    out = _out_dir(args.out)
    rel = largenet.load_relevance_triples(_require_file(args.scores))
    classes = None
    if args.classes:
        classes = _load_classes(_require_file(args.classes), rel.item_labels)
        rel.item_classes = classes
    graph = largenet.build_large_graph(rel, threshold=args.threshold, form=args.form)
    artifacts = [
        _rel(_write_text(os.path.join(out, "large_graph_edges.txt"), graph.to_edge_list_text()), out),
        _rel(_write_text(os.path.join(out, "large_graph.dot"), graph.to_dot_text()), out),
        _rel(_write_text(os.path.join(out, "large_graph.json"), graph.to_json_text()), out),
    ]
    if classes is not None:
        ranks = largenet.rank_rows(rel)
        rho = largenet.partial_from_rankcorr(largenet.spearman_matrix(ranks))
        ratios = largenet.class_variance_ratio(rho, classes, form=args.form)
        table = ["class\tintra_inter_variance_ratio"]
        table += [f"{c}\t{ratios[c]!r}" for c in sorted(ratios)]
        artifacts.append(_rel(_write_text(os.path.join(out, "class_table.txt"), "\n".join(table) + "\n"), out))
        figures.save_class_ratio_figure(ratios, os.path.join(out, "class_ratios.png"))
        artifacts.append("class_ratios.png")
    inputs = {"scores": args.scores}
    if args.classes:
        inputs["classes"] = args.classes
    manifest.write_manifest(
        out,
        "largenet",
        {"threshold": args.threshold, "form": args.form},
        0,
        inputs,
        artifacts,
        started,
    )
    print(f"nodes={graph.n_nodes} edges={graph.n_edges}")
    return 0


def _load_classes(path, item_labels):
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise BadInput(f"line {lineno}: expected 'item class'")
            mapping[parts[0]] = parts[1]
    missing = [lab for lab in item_labels if lab not in mapping]
    if missing:
        raise BadInput(f"classes missing for items: {missing[:5]}")
    return [mapping[lab] for lab in item_labels]


# ----------------------------------------------------------------- predict


def _parse_cols(text):
    try:
        return [int(tok) - 1 for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise BadInput(f"bad column list {text!r}") from None


def cmd_predict(args):
    started = time.monotonic()
    out = _out_dir(args.out)
    cfgmap = load_config(args.config) if args.config else {}
    cfg = chain_config_from(
        cfgmap,
        overrides={"seed": args.seed, "n_iter": args.iters, "burn_in": args.burn_in},
    )
    pred_cfg = cfgmap.get("predict", {})
    prop_sd_cell = args.prop_sd_cell or float(pred_cfg.get("prop_sd_cell", 0.2))
    block = args.block or pred_cfg.get("block", "joint")

    train_raw = ds_mod.load_delimited(_require_file(args.train), delimiter=args.delimiter)
    test_raw = ds_mod.load_delimited(_require_file(args.test), delimiter=args.delimiter)
    if train_raw.n_cols != test_raw.n_cols:
        raise BadInput(
            f"train has {train_raw.n_cols} columns, test has {test_raw.n_cols}"
        )
    train = ds_mod.standardize(train_raw)
    test = ds_mod.standardize(test_raw)
    known = _parse_cols(args.known)
    unknown = _parse_cols(args.unknown)
    task = modelcheck.PredictionTask(
        train=train,
        known_cols=known,
        unknown_cols=unknown,
        known_values=test.values[:, known],
    )
    if args.mode == "conditional":
        learn_trace = sampler.run_chain(train, cfg)
        sigma_modal = modelcheck.modal_correlation(learn_trace)
        result = modelcheck.predict_conditional(
            task, sigma_modal, cfg, prop_sd_cell=prop_sd_cell, block=block
        )
    else:
        result = modelcheck.joint_predict(task, cfg, prop_sd_cell=prop_sd_cell)

    artifacts = []
    names = train.column_names
    table = ["column\tpredicted_mean\tpredicted_sd\tempirical_mean\tempirical_sd"]
    for col in unknown:
        samples = result.column_samples(col)
        fname = f"predictive_samples_{names[col]}.txt"
        _write_text(
            os.path.join(out, fname),
            "\n".join(repr(float(v)) for v in samples) + "\n",
        )
        artifacts.append(fname)
        emp = test.values[:, col]
        table.append(
            f"{names[col]}\t{samples.mean()!r}\t{samples.std()!r}\t{emp.mean()!r}\t{emp.std()!r}"
        )
        figures.save_predictive_figure(
            samples, emp, names[col], os.path.join(out, f"predictive_{names[col]}.png")
        )
        artifacts.append(f"predictive_{names[col]}.png")
    artifacts.append(_rel(_write_text(os.path.join(out, "comparison_table.txt"), "\n".join(table) + "\n"), out))
    if result.corr_samples is not None:
        corr_lines = [" ".join(repr(float(v)) for v in row) for row in result.corr_samples]
        artifacts.append(_rel(_write_text(os.path.join(out, "corr_samples.txt"), "\n".join(corr_lines) + "\n"), out))
    manifest.write_manifest(
        out,
        "predict",
        dict(effective_config_dict(cfg), mode=args.mode, prop_sd_cell=prop_sd_cell, block=block),
        cfg.seed,
        {"train": args.train, "test": args.test},
        artifacts,
        started,
    )
    print(f"predicted columns {[names[c] for c in unknown]} -> {out}")
    return 0


# --------------------------------------------------------------- reference


def cmd_reference(args):
    print("reference distance values for the red/white wine comparison:")
    for key, val in WINE_REFERENCE.items():
        print(f"  {key} = {val}")
    return 0


# ------------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graphcorr",
        description=(
            "Bayesian learning of correlation structure and graphical models, "
            "and distances between learnt models"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--config", default=None, help="key=value config file")

    p = sub.add_parser("simulate", help="simulate a dataset with a chosen correlation")
    common(p)
    p.add_argument("--preset", choices=["toy"], default=None)
    p.add_argument("--sigma", default=None, help="matrix file (rows of numbers)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--noise-column", type=int, default=0, help="1-based column for added noise")
    p.add_argument("--noise-variance", type=float, default=0.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="learn correlation matrix and credible graph")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--subsample-seed", type=int, default=None, dest="subsample_seed")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("graph", help="rebuild credible-graph exports from a trace")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("distance", help="distance report between two traces")
    common(p)
    p.add_argument("--trace1", required=True)
    p.add_argument("--trace2", required=True)
    p.add_argument("--strict-lengths", action="store_true", dest="strict_lengths")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("largenet", help="closed-form graph for a large network")
    common(p)
    p.add_argument("--scores", required=True, help="sparse 'item feature score' file")
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--form", choices=["single_term", "two_term"], default="single_term")
    p.add_argument("--classes", default=None, help="'item class' file for the summary table")
    p.set_defaults(func=cmd_largenet)

    p = sub.add_parser("predict", help="posterior-predictive check of held-out columns")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--known", required=True, help="1-based column list, e.g. 1,5")
    p.add_argument("--unknown", required=True, help="1-based column list, e.g. 2,3,4")
    p.add_argument("--mode", choices=["conditional", "joint"], default="conditional")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    p.add_argument("--prop-sd-cell", type=float, default=None, dest="prop_sd_cell")
    p.add_argument("--block", choices=["joint", "column"], default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("reference", help="print the wine benchmark reference values")
    p.set_defaults(func=cmd_reference)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(getattr(args, "threads", None))
    try:
        return args.func(args)
    except ChainDiverged as exc:
        print(f"error: chain diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (BadInput, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except GraphCorrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
