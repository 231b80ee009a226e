"""Command-line entry point: ``overdict gen|graph|cluster|recover|eval|run|sweep``.

Exit codes: 0 success, 2 configuration error, 3 a ``run`` whose gates failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import csvio
from .clustering import dictionary_learn
from .corr_graph import CorrelationGraph, build_graph, default_threshold
from .errors import ConfigError, OverdictError, RegimeNotApplicable
from .evaluation import match_dictionaries, verify_corr_graph
from .harness import (
    ExperimentConfig,
    expand_grid,
    load_config,
    run_experiment,
    sweep,
)
from ._rng import derive_seed
from .model import (
    CoefficientMatrix,
    Dictionary,
    GroundTruth,
    coherence_stats,
    generate_coefficients,
    generate_dictionary,
    synthesize,
)
from .sparse_recovery import recover_coeff

# flag name -> config key
_FLAGS = {
    "d": "d", "r": "r", "s": "s", "n": "n", "m": "m", "M": "M", "mu0": "mu0", "mu1": "mu1",
    "rho": "rho", "eps_dict": "eps_dict", "eps_coeff": "eps_coeff", "alpha": "alpha", "delta": "delta",
    "value_model": "value_model", "stages": "stages", "dictionary": "dictionary", "seed": "seed",
    "max_edges": "max_edges", "perturb": "perturb", "sample_multiplier": "sample_multiplier",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key=value config file (flags override it)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    for name in ("d", "r", "s", "n"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--m", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--mu0", type=float)
    p.add_argument("--mu1", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps-dict", type=float)
    p.add_argument("--eps-coeff", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--sample-multiplier", type=float)
    p.add_argument("--value-model", choices=["bernoulli", "uniform"])
    p.add_argument("--dictionary", choices=["gaussian", "orthonormal", "hadamard"])
    p.add_argument("--stages", help="comma-separated subset of cluster,postprocess ('' for none)")
    p.add_argument("--max-edges", type=int)
    p.add_argument("--perturb", type=float)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="overdict", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gen": "draw a synthetic instance (A.csv, X.csv, supports.csv, Y.csv)",
        "graph": "build the correlation graph of Y.csv (graph.csv)",
        "cluster": "first-stage dictionary estimate (Abar.csv, provenance.csv)",
        "recover": "second-stage refit from Abar.csv (Ahat.csv, Xhat.csv)",
        "eval": "match an estimate against A.csv; check graph.csv against the truth",
        "run": "full seeded experiment with report.csv",
        "sweep": "grid of experiments, one report row each",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _add_common(p)
        if name == "eval":
            p.add_argument("--estimate", type=Path, help="estimate matrix (default Ahat.csv, else Abar.csv)")
        if name == "sweep":
            p.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2,...",
                           help="values to sweep; repeatable, Cartesian product")
            p.add_argument("--workers", type=int, default=1)
    return parser


def config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for flag, key in _FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if args.config is not None:
        return load_config(args.config, **{k: str(v) for k, v in overrides.items()})
    return ExperimentConfig.from_mapping(overrides)


def _threshold(args, cfg: ExperimentConfig, out: Path) -> float:
    if cfg.rho is not None:
        return cfg.rho
    a_path = out / "A.csv"
    if not a_path.exists():
        raise ConfigError("no --rho given and no A.csv to measure mu0 from")
    mu0_hat, _ = coherence_stats(csvio.read_matrix(a_path))
    return default_threshold(cfg.params(), mu0_hat)


def cmd_gen(args, cfg, out):
    params = cfg.params()
    A = generate_dictionary(params, derive_seed(cfg.seed, 0), method=cfg.dictionary)
    X = generate_coefficients(params, cfg.n, derive_seed(cfg.seed, 1))
    Y = synthesize(A, X)
    csvio.write_matrix(out / "A.csv", A)
    csvio.write_matrix(out / "X.csv", X)
    csvio.write_supports(out / "supports.csv", X.supports)
    csvio.write_matrix(out / "Y.csv", Y.samples)
    mu0_hat, mu1_hat = coherence_stats(A)
    print(f"mu0_hat={mu0_hat:.6g} mu1_hat={mu1_hat:.6g}")
    return 0


def cmd_graph(args, cfg, out):
    Y = csvio.read_matrix(out / "Y.csv")
    rho = _threshold(args, cfg, out)
    G = build_graph(Y, rho)
    csvio.write_edges(out / "graph.csv", G.n, rho, G.edge_list)
    print(f"n={G.n} rho={rho:.6g} edges={G.num_edges}")
    return 0


def _load_graph(out: Path, Y, rho):
    path = out / "graph.csv"
    if path.exists():
        n, stored_rho, edges = csvio.read_edges(path)
        if n == Y.shape[1] and stored_rho == rho:
            return CorrelationGraph.from_edges(n, rho, edges)
    return build_graph(Y, rho)


def cmd_cluster(args, cfg, out):
    Y = csvio.read_matrix(out / "Y.csv")
    rho = _threshold(args, cfg, out)
    if cfg.eps_dict is None:
        raise ConfigError("cluster needs --eps-dict")
    G = _load_graph(out, Y, rho)
    est = dictionary_learn(Y, rho, cfg.eps_dict, seed=derive_seed(cfg.seed, 2),
                           max_atoms=cfg.max_atoms or cfg.r, graph=G, max_edges=cfg.max_edges)
    csvio.write_matrix(out / "Abar.csv", est.atoms)
    csvio.write_table(out / "provenance.csv", ("atom_index", "anchor_i", "anchor_j", "cluster_size"),
                      est.provenance_rows())
    print(f"atoms={est.num_atoms} edges_examined={est.edges_examined}")
    return 0


def cmd_recover(args, cfg, out):
    Y = csvio.read_matrix(out / "Y.csv")
    Abar = csvio.read_matrix(out / "Abar.csv")
    Ahat, Xhat = recover_coeff(Y, Abar, cfg.s, cfg.eps_coeff or 0.0)
    csvio.write_matrix(out / "Ahat.csv", Ahat)
    csvio.write_matrix(out / "Xhat.csv", Xhat)
    print(f"atoms={Ahat.r}")
    return 0


def cmd_eval(args, cfg, out):
    A = csvio.read_matrix(out / "A.csv")
    est_path = args.estimate or next((out / f for f in ("Ahat.csv", "Abar.csv") if (out / f).exists()), None)
    if est_path is not None:
        match = match_dictionaries(A, csvio.read_matrix(est_path))
        csvio.write_table(out / "matching.csv", ("est_index", "true_index", "sign", "error"), match.rows())
        print(f"estimate={est_path.name} eps_A={match.eps_A:.6g} mean={match.mean_error:.6g}")
    if (out / "graph.csv").exists() and (out / "X.csv").exists():
        n, rho, edges = csvio.read_edges(out / "graph.csv")
        G = CorrelationGraph.from_edges(n, rho, edges)
        truth = GroundTruth(Dictionary(A), CoefficientMatrix(csvio.read_matrix(out / "X.csv")))
        try:
            report = verify_corr_graph(G, truth, cfg.params())
        except RegimeNotApplicable as exc:
            print(f"graph check skipped: {exc}")
            return 0
        csvio.write_table(out / "violations.csv", ("kind", "i", "j"), report.rows())
        print(f"corr1_violations={len(report.corr1)} corr2_violations={len(report.corr2)}")
    return 0


def cmd_run(args, cfg, out):
    row = run_experiment(cfg, out)
    rec = row.record()
    print(" ".join(f"{k}={rec[k]}" for k in ("status", "recovered_atoms", "eps_A_stage1", "exact_recovery",
                                                "eps_A_stage2")))
    if row.status == ConfigError.status:
        return 2
    return 0 if row.passed else 3


def cmd_sweep(args, cfg, out):
    grid = {}
    for item in args.grid:
        if "=" not in item:
            raise ConfigError(f"--grid expects KEY=V1,V2,..., got {item!r}")
        key, values = item.split("=", 1)
        grid[key.strip()] = [v.strip() for v in values.split(",")]
    configs = expand_grid(cfg, grid) if grid else [cfg]
    rows = sweep(configs, out, workers=args.workers)
    print(f"rows={len(rows)} ok={sum(r.status == 'ok' for r in rows)} report={out / 'report.csv'}")
    return 0


COMMANDS = {
    "gen": cmd_gen, "graph": cmd_graph, "cluster": cmd_cluster, "recover": cmd_recover,
    "eval": cmd_eval, "run": cmd_run, "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OverdictError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
