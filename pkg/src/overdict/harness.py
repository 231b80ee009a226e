"""Seeded end-to-end experiments and parameter sweeps.

A run draws an instance, builds the correlation graph, runs the requested
stages, scores them against the ground truth and (optionally) writes all
matrices plus a one-row ``report.csv`` to an output directory. Wall-clock
timings go to a separate ``timings.csv`` so that reports are byte-for-byte
reproducible.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import csvio
from ._rng import derive_seed
from .clustering import MIN_CLUSTER, dictionary_learn
from .corr_graph import build_graph, default_threshold
from .errors import ConfigError, OverdictError
from .evaluation import (
    coefficients_match,
    match_dictionaries,
    procedure_agreement,
    theoretical_error_bound,
)
from .model import (
    DICTIONARY_METHODS,
    ModelParams,
    ValueModel,
    coherence_stats,
    generate_coefficients,
    generate_dictionary,
    perturb_dictionary,
    synthesize,
)
from .sparse_recovery import recover_coeff, relative_residual

logger = logging.getLogger(__name__)

STAGES = ("cluster", "postprocess")
EXACT_TOL = 1e-9

# sub-stream ids split off the run seed
_DICT, _COEF, _CLUSTER, _AGREE, _PERTURB = range(5)


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 64
    r: int = 128
    s: int = 2
    n: int = 4096
    m: float = 1.0
    M: float = 1.0
    mu0: float = math.inf
    mu1: float = math.inf
    value_model: str = "bernoulli"
    dictionary: str = "gaussian"
    alpha: float = 0.04
    delta: float = 1e-3
    sample_multiplier: float = 10.0
    rho: float | None = None
    eps_dict: float | None = None
    eps_coeff: float | None = None
    seed: int = 0
    stages: tuple[str, ...] = STAGES
    max_atoms: int | None = None
    max_edges: int | None = None
    min_cluster: int = MIN_CLUSTER
    perturb: float | None = None
    agreement_samples: int = 200
    output_dir: str | None = None

    def __post_init__(self):
        stages = self.stages
        if isinstance(stages, str):
            stages = tuple(t for t in stages.replace("+", ",").split(",") if t.strip())
        stages = tuple(t.strip() for t in stages)
        bad = set(stages) - set(STAGES)
        if bad:
            raise ConfigError(f"unknown stage(s) {sorted(bad)}; choose from {STAGES}")
        object.__setattr__(self, "stages", tuple(t for t in STAGES if t in stages))
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if not 0 < self.alpha < 1 / 20:
            raise ConfigError("alpha must lie in (0, 1/20)")
        if self.eps_dict is not None and not 0 < self.eps_dict < 0.5:
            raise ConfigError("eps_dict must lie in (0, 1/2)")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.dictionary not in DICTIONARY_METHODS:
            raise ConfigError(f"dictionary must be one of {DICTIONARY_METHODS}")
        if "postprocess" in self.stages and "cluster" not in self.stages and self.perturb is None:
            raise ConfigError("postprocess without cluster needs perturb=<eps> to initialize from the truth")
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def params(self) -> ModelParams:
        return ModelParams(self.d, self.r, self.s, self.m, self.M, self.mu0, self.mu1,
                           ValueModel.parse(self.value_model))

    @property
    def n_suggest(self) -> int:
        """``c r / (alpha^2 s) log(d / delta)`` with ``c = sample_multiplier``."""
        return math.ceil(self.sample_multiplier * self.r / (self.alpha ** 2 * self.s) * math.log(self.d / self.delta))

    def record(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "stages":
                v = "+".join(v)
            out[f.name] = v
        return out

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for raw_key, raw in mapping.items():
            key = raw_key.strip().replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {raw_key!r}")
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_INT_KEYS = {"d", "r", "s", "n", "seed", "max_atoms", "max_edges", "min_cluster", "agreement_samples"}
_OPTIONAL = {"rho", "eps_dict", "eps_coeff", "max_atoms", "max_edges", "perturb", "output_dir"}


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if key in _OPTIONAL and text.lower() in ("", "none", "auto"):
        return None
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in ("stages", "value_model", "dictionary", "output_dir"):
            return text
        return float(text)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path, **overrides) -> ExperimentConfig:
    mapping = parse_config_text(Path(path).read_text())
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(mapping)


RESULT_FIELDS = (
    "status", "message", "mu0_hat", "mu1_hat", "rho_used", "n_suggest", "num_edges",
    "recovered_atoms", "eps_A_stage1", "eps_A_stage1_mean", "error_bound", "bound_slack",
    "procedure_agreement", "agreement_tp", "agreement_fp", "agreement_tn", "agreement_fn",
    "eps_coeff_used", "exact_recovery", "eps_A_stage2", "residual_stage2",
)
REPORT_FIELDS = tuple(f.name for f in dataclasses.fields(ExperimentConfig)) + RESULT_FIELDS
TIMING_FIELDS = ("generate", "graph", "cluster", "postprocess")


@dataclass
class ReportRow:
    config: ExperimentConfig
    status: str = "ok"
    message: str = ""
    mu0_hat: float | None = None
    mu1_hat: float | None = None
    rho_used: float | None = None
    n_suggest: int | None = None
    num_edges: int | None = None
    recovered_atoms: int | None = None
    eps_A_stage1: float | None = None
    eps_A_stage1_mean: float | None = None
    error_bound: float | None = None
    bound_slack: float | None = None
    procedure_agreement: float | None = None
    agreement_tp: int | None = None
    agreement_fp: int | None = None
    agreement_tn: int | None = None
    agreement_fn: int | None = None
    eps_coeff_used: float | None = None
    exact_recovery: bool | None = None
    eps_A_stage2: float | None = None
    residual_stage2: float | None = None
    wall_time_ms: dict = field(default_factory=dict)

    def record(self) -> dict:
        """Flat, deterministic view of the row (timings excluded)."""
        out = self.config.record()
        out.update({k: getattr(self, k) for k in RESULT_FIELDS})
        return out

    def timing_record(self) -> dict:
        return {k: self.wall_time_ms.get(k) for k in TIMING_FIELDS}

    @property
    def passed(self) -> bool:
        if self.status != "ok":
            return False
        if "cluster" in self.config.stages and self.recovered_atoms != self.config.r:
            return False
        if "postprocess" in self.config.stages and not self.exact_recovery:
            return False
        return True


class _Timer:
    def __init__(self, row: ReportRow, key: str):
        self.row, self.key = row, key

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.row.wall_time_ms[self.key] = round((time.perf_counter() - self.t0) * 1000.0, 3)


def run_experiment(config: ExperimentConfig, out_dir=None) -> ReportRow:
    """Run one seeded experiment; stage failures are recorded in ``status``."""
    row = ReportRow(config, n_suggest=config.n_suggest)
    out = Path(out_dir if out_dir is not None else config.output_dir) if (out_dir or config.output_dir) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    try:
        _run(config, row, out)
    except OverdictError as exc:
        row.status, row.message = exc.status, str(exc)
    except Exception as exc:  # a broken row must not abort a sweep
        logger.exception("run failed")
        row.status, row.message = f"Error:{type(exc).__name__}", str(exc)
    if out is not None:
        csvio.write_table(out / "report.csv", REPORT_FIELDS, [row.record()])
        csvio.write_table(out / "timings.csv", TIMING_FIELDS, [row.timing_record()])
    return row


def _run(config: ExperimentConfig, row: ReportRow, out: Path | None) -> None:
    params = config.params()
    seed = config.seed
    with _Timer(row, "generate"):
        A = generate_dictionary(params, derive_seed(seed, _DICT), method=config.dictionary)
        X = generate_coefficients(params, config.n, derive_seed(seed, _COEF))
        Y = synthesize(A, X)
        row.mu0_hat, row.mu1_hat = coherence_stats(A)
    if out is not None:
        csvio.write_matrix(out / "A.csv", A)
        csvio.write_matrix(out / "X.csv", X)
        csvio.write_supports(out / "supports.csv", X.supports)

    if not config.stages:
        return

    Abar = None
    eps_A1 = None
    if "cluster" in config.stages:
        rho = config.rho if config.rho is not None else default_threshold(params, row.mu0_hat)
        row.rho_used = rho
        with _Timer(row, "graph"):
            G = build_graph(Y, rho)
        row.num_edges = G.num_edges
        if config.agreement_samples > 0 and G.num_edges:
            agree = procedure_agreement(G, Y.ground_truth, config.agreement_samples,
                                        derive_seed(seed, _AGREE), config.min_cluster)
            row.procedure_agreement = agree.rate
            row.agreement_tp, row.agreement_fp, row.agreement_tn, row.agreement_fn = agree.tp, agree.fp, agree.tn, agree.fn
        bound_params = dataclasses.replace(params, mu1=row.mu1_hat)
        row.error_bound = theoretical_error_bound(bound_params, config.alpha)
        eps_dict = config.eps_dict if config.eps_dict is not None else _separation_from_bound(row.error_bound)
        with _Timer(row, "cluster"):
            est = dictionary_learn(Y, rho, eps_dict, seed=derive_seed(seed, _CLUSTER),
                                   max_atoms=config.max_atoms or config.r, graph=G,
                                   min_cluster=config.min_cluster, max_edges=config.max_edges)
        match1 = match_dictionaries(A, est.atoms)
        row.recovered_atoms = est.num_atoms
        row.eps_A_stage1 = match1.eps_A
        row.eps_A_stage1_mean = match1.mean_error
        row.bound_slack = match1.eps_A ** 2 / row.error_bound
        eps_A1 = match1.eps_A
        Abar = est.atoms
        if out is not None:
            csvio.write_matrix(out / "Abar.csv", est.atoms)
            csvio.write_table(out / "provenance.csv", ("atom_index", "anchor_i", "anchor_j", "cluster_size"),
                              est.provenance_rows())
            csvio.write_table(out / "matching_stage1.csv", ("est_index", "true_index", "sign", "error"),
                              match1.rows())

    if "postprocess" in config.stages:
        if Abar is None:
            Abar = perturb_dictionary(A, config.perturb, derive_seed(seed, _PERTURB)).columns
            eps_A1 = match_dictionaries(A, Abar).eps_A
        eps_coeff = config.eps_coeff if config.eps_coeff is not None else params.s * eps_A1
        row.eps_coeff_used = eps_coeff
        with _Timer(row, "postprocess"):
            Ahat, Xhat = recover_coeff(Y, Abar, params.s, eps_coeff)
        match2 = match_dictionaries(A, Ahat)
        row.eps_A_stage2 = match2.eps_A
        row.residual_stage2 = relative_residual(Y, Ahat, Xhat)
        row.exact_recovery = bool(match2.eps_A <= EXACT_TOL and coefficients_match(X, Xhat, match2))
        if out is not None:
            csvio.write_matrix(out / "Ahat.csv", Ahat)
            csvio.write_matrix(out / "Xhat.csv", Xhat)
            csvio.write_table(out / "matching_stage2.csv", ("est_index", "true_index", "sign", "error"),
                              match2.rows())


def _separation_from_bound(bound: float) -> float:
    """Smallest admissible separation: ``eps_dict^2`` just above the error bound."""
    eps = math.sqrt(bound) * 1.01
    if eps >= 0.5:
        raise ConfigError(f"error bound {bound:.4g} leaves no admissible eps_dict < 1/2; set eps_dict explicitly")
    return eps


def expand_grid(base: ExperimentConfig, grid: dict[str, list]) -> list[ExperimentConfig]:
    """Cartesian product of ``grid`` values applied on top of ``base`` (last key varies fastest)."""
    keys = list(grid)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = [k for k in keys if k.replace("-", "_") not in known]
    if unknown:
        raise ConfigError(f"unknown grid key(s) {unknown}")
    out = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        mapping = {k: _coerce(k.replace("-", "_"), v) for k, v in zip(keys, combo)}
        out.append(base.replace(**{k.replace("-", "_"): v for k, v in mapping.items()}))
    return out


def _run_indexed(args):
    index, config, out_dir = args
    sub = Path(out_dir) / f"row_{index:04d}" if out_dir is not None else None
    return run_experiment(config.replace(output_dir=None), sub)


def sweep(grid: list[ExperimentConfig], out_dir=None, workers: int = 1) -> list[ReportRow]:
    """Run every config and write one ``report.csv`` in grid order."""
    if not grid:
        raise ValueError("empty grid")
    jobs = [(k, cfg, out_dir) for k, cfg in enumerate(grid)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_indexed, jobs))
    else:
        rows = [_run_indexed(job) for job in jobs]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csvio.write_table(out / "report.csv", REPORT_FIELDS, [row.record() for row in rows])
        csvio.write_table(out / "timings.csv", TIMING_FIELDS, [row.timing_record() for row in rows])
    return rows

