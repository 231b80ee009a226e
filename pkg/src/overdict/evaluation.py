"""Comparing dictionaries up to permutation and sign, error bounds, and
ground-truth oracles for the correlation-graph and clustering steps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._rng import make_rng
from .clustering import MIN_CLUSTER, unique_intersection_test
from .corr_graph import CorrelationGraph, common_neighbors
from .errors import EmptySample, RegimeNotApplicable
from .model import CoefficientMatrix, GroundTruth, ModelParams, coherence_stats


def _columns(A) -> np.ndarray:
    for attr in ("columns", "atoms"):
        if hasattr(A, attr):
            return np.asarray(getattr(A, attr), dtype=float)
    return np.asarray(A, dtype=float)


@dataclass
class Matching:
    """Optimal sign-aware assignment of estimated atoms to true atoms.

    ``permutation[i]`` is the true atom matched to estimate ``i`` (``-1``
    when estimate ``i`` is left unmatched).
    """

    permutation: np.ndarray
    signs: np.ndarray
    per_atom_error: np.ndarray
    unmatched_true: np.ndarray
    cost: float

    @property
    def matched(self) -> np.ndarray:
        return np.flatnonzero(self.permutation >= 0)

    @property
    def eps_A(self) -> float:
        errs = self.per_atom_error[self.matched]
        return float(errs.max()) if errs.size else math.inf

    @property
    def mean_error(self) -> float:
        errs = self.per_atom_error[self.matched]
        return float(errs.mean()) if errs.size else math.inf

    def rows(self) -> list[dict]:
        return [
            {"est_index": i, "true_index": int(self.permutation[i]), "sign": int(self.signs[i]),
             "error": float(self.per_atom_error[i])}
            for i in range(len(self.permutation))
        ]


def sign_cost(A, Ahat) -> tuple[np.ndarray, np.ndarray]:
    """Cost ``min_z ||z a_i - ahat_j||^2`` for every pair and the minimizing signs.

    Rows index true atoms, columns index estimates.
    """
    A, B = _columns(A), _columns(Ahat)
    aa = np.sum(A * A, axis=0)[:, None]
    bb = np.sum(B * B, axis=0)[None, :]
    ip = A.T @ B
    signs = np.where(ip >= 0, 1, -1)
    cost = np.maximum(aa + bb - 2.0 * np.abs(ip), 0.0)
    return cost, signs


def match_dictionaries(A, Ahat) -> Matching:
    """Minimum-cost permutation and sign matching of ``Ahat`` onto ``A``."""
    A, B = _columns(A), _columns(Ahat)
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape[0]} vs {B.shape[0]}")
    r, k = A.shape[1], B.shape[1]
    cost, signs = sign_cost(A, B)
    rows, cols = linear_sum_assignment(cost)
    perm = np.full(k, -1, dtype=np.intp)
    perm[cols] = rows
    z = np.ones(k, dtype=int)
    z[cols] = signs[rows, cols]
    err = np.full(k, np.nan)
    err[cols] = np.linalg.norm(z[cols] * A[:, rows] - B[:, cols], axis=0)
    unmatched = np.setdiff1d(np.arange(r), rows)
    return Matching(perm, z, err, unmatched, float(cost[rows, cols].sum()))


def theoretical_error_bound(params: ModelParams, alpha: float) -> float:
    """Squared per-atom error bound ``(32 s M^2/m^2)(mu1/sqrt(ds) + mu1^2/d + s^3/r + alpha^2 + alpha/sqrt(s))``.

    ``alpha = 0`` gives the limit value.
    """
    if not 0 <= alpha < 1 / 20:
        raise ValueError("alpha must lie in [0, 1/20)")
    d, r, s, m, M, mu1 = params.d, params.r, params.s, params.m, params.M, params.mu1
    if not math.isfinite(mu1):
        raise ValueError("the bound needs a finite mu1; pass the measured value")
    return 32 * s * M * M / (m * m) * (
        mu1 / math.sqrt(d * s) + mu1 * mu1 / d + s ** 3 / r + alpha * alpha + alpha / math.sqrt(s)
    )


# -- ground-truth oracles --------------------------------------------------

def unique_intersection_oracle(truth: GroundTruth | CoefficientMatrix, i: int, j: int) -> bool:
    """True iff samples ``i`` and ``j`` share exactly one atom."""
    X = truth.coefficients if isinstance(truth, GroundTruth) else truth
    mask = X.mask
    return int(np.count_nonzero(mask[:, i] & mask[:, j])) == 1


@dataclass
class ViolationReport:
    """Pairs contradicting the correlation-graph lemma.

    ``corr1``: pairs sharing exactly one atom but not joined by an edge.
    ``corr2``: edges whose endpoints share no atom.
    """

    corr1: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))
    corr2: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))
    interval: tuple[float, float] = (0.0, 0.0)
    rho: float = 0.0

    @property
    def empty(self) -> bool:
        return len(self.corr1) == 0 and len(self.corr2) == 0

    @property
    def count(self) -> int:
        return len(self.corr1) + len(self.corr2)

    def rows(self) -> list[dict]:
        out = [{"kind": "corr1", "i": int(i), "j": int(j)} for i, j in self.corr1]
        out += [{"kind": "corr2", "i": int(i), "j": int(j)} for i, j in self.corr2]
        return out


def lemma_interval(params: ModelParams, mu0_hat: float) -> tuple[float, float]:
    """Open interval of thresholds for which the lemma's two implications hold."""
    slack = params.s ** 2 * params.M ** 2 * mu0_hat / math.sqrt(params.d)
    return slack, params.m ** 2 - slack


def verify_corr_graph(G: CorrelationGraph, truth: GroundTruth, params: ModelParams,
                      block_size: int = 1024) -> ViolationReport:
    """Scan all sample pairs for violations of the correlation-graph lemma.

    Raises
    ------
    RegimeNotApplicable
        The admissible threshold interval is empty for the measured
        incoherence of the true dictionary.
    """
    mu0_hat, _ = coherence_stats(truth.dictionary)
    lo, hi = lemma_interval(params, mu0_hat)
    if not lo < hi:
        raise RegimeNotApplicable(
            f"threshold interval ({lo:.6g}, {hi:.6g}) is empty for measured mu0 = {mu0_hat:.6g}"
        )
    B = truth.coefficients.mask.astype(np.float32)
    n = G.n
    if B.shape[1] != n:
        raise ValueError("graph and ground truth disagree on the number of samples")
    c1, c2 = [], []
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        shared = B[:, start:stop].T @ B
        edge = G.rows_dense(start, stop)
        upper = np.arange(start, stop)[:, None] < np.arange(n)[None, :]
        for bucket, bad in ((c1, (shared == 1) & ~edge), (c2, (shared == 0) & edge)):
            r, c = np.nonzero(bad & upper)
            bucket.append(np.column_stack([r + start, c]))
    cat = lambda parts: np.concatenate(parts) if parts else np.empty((0, 2), np.int64)
    return ViolationReport(cat(c1), cat(c2), (lo, hi), G.rho)


@dataclass
class AgreementResult:
    """Confusion counts of the unique-intersection test against the oracle (positive = unique)."""

    tp: int
    fp: int
    tn: int
    fn: int
    in_regime: bool

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def rate(self) -> float:
        return (self.tp + self.tn) / self.total

    def row(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def procedure_agreement(G: CorrelationGraph, truth: GroundTruth, sample_count: int, seed=None,
                        min_cluster: int = MIN_CLUSTER) -> AgreementResult:
    """Compare the unique-intersection test with the oracle on random anchor edges.

    Edges whose common neighborhood is smaller than ``min_cluster`` count as
    rejected by the test. ``in_regime`` records whether ``s^3 <= r/1536``.
    """
    edges = G.edge_list
    if sample_count < 1 or len(edges) == 0:
        raise EmptySample("no anchor edges to sample")
    rng = make_rng(seed)
    picks = rng.choice(len(edges), size=min(sample_count, len(edges)), replace=False)
    tp = fp = tn = fn = 0
    for e in picks:
        i, j = (int(v) for v in edges[e])
        shat = common_neighbors(G, i, j)
        verdict = len(shat) >= min_cluster and unique_intersection_test(shat, G, rng, min_cluster)
        truth_val = unique_intersection_oracle(truth, i, j)
        if verdict and truth_val:
            tp += 1
        elif verdict:
            fp += 1
        elif truth_val:
            fn += 1
        else:
            tn += 1
    X = truth.coefficients
    s = int(X.mask[:, 0].sum())
    return AgreementResult(tp, fp, tn, fn, s ** 3 <= X.r / 1536)


def coefficients_match(X, Xhat, matching: Matching) -> bool:
    """Whether ``Xhat`` equals ``X`` after undoing the matched permutation and signs."""
    X = np.asarray(getattr(X, "values", X))
    Xhat = np.asarray(getattr(Xhat, "values", Xhat))
    if len(matching.unmatched_true) or np.any(matching.permutation < 0):
        return False
    aligned = np.zeros_like(X)
    aligned[matching.permutation] = Xhat * matching.signs[:, None]
    return bool(np.array_equal(aligned, X))
