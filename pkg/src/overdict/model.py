"""Generative model ``Y = A X`` and synthetic instances.

The dictionary ``A`` is ``d x r`` with unit-norm, mutually incoherent
columns; each column of the coefficient matrix ``X`` has exactly ``s``
nonzeros on a uniformly random support.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np
import scipy.linalg

from ._rng import make_rng
from .errors import DimensionMismatch, InfeasibleIncoherence, TooLargeToEnumerate

NORM_TOL = 1e-12


class ValueModel(str, enum.Enum):
    """Distribution of the nonzero coefficients."""

    BERNOULLI = "bernoulli"  # +-1 equiprobable
    UNIFORM = "uniform"  # magnitude U[m, M], random sign

    @classmethod
    def parse(cls, value) -> "ValueModel":
        if isinstance(value, cls):
            return value
        aliases = {"bernoullisigned": cls.BERNOULLI, "uniformsymmetric": cls.UNIFORM}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class ModelParams:
    """Sizes and constants of one instance of the model.

    ``mu0`` and ``mu1`` are the declared incoherence and spectral bounds;
    ``inf`` means unconstrained.
    """

    d: int
    r: int
    s: int
    m: float = 1.0
    M: float = 1.0
    mu0: float = math.inf
    mu1: float = math.inf
    value_model: ValueModel = ValueModel.BERNOULLI

    def __post_init__(self):
        object.__setattr__(self, "value_model", ValueModel.parse(self.value_model))
        for name in ("d", "r", "s"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.s > self.r or self.s > self.d:
            raise ValueError(f"need s <= r and s <= d, got s={self.s}, r={self.r}, d={self.d}")
        if not self.m > 0 or self.M < self.m:
            raise ValueError(f"need 0 < m <= M, got m={self.m}, M={self.M}")
        if self.mu0 < 0 or not self.mu1 > 0:
            raise ValueError("mu0 must be nonnegative and mu1 positive")
        if self.value_model is ValueModel.BERNOULLI and not (self.m == 1.0 and self.M == 1.0):
            raise ValueError("bernoulli coefficients require m = M = 1")


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, Dictionary):
        return A.columns
    return np.asarray(A, dtype=float)


@dataclass(frozen=True, eq=False)
class Dictionary:
    """A ``d x r`` matrix whose columns (atoms) have unit l2 norm."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float, order="F", copy=True)
        if cols.ndim != 2:
            raise ValueError("dictionary must be a 2-d array")
        norms = np.linalg.norm(cols, axis=0)
        if cols.size and np.max(np.abs(norms - 1.0)) > NORM_TOL:
            raise ValueError("dictionary columns must have unit l2 norm")
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def normalized(cls, matrix) -> "Dictionary":
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix / np.linalg.norm(matrix, axis=0))

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def r(self) -> int:
        return self.columns.shape[1]

    def check(self, params: ModelParams) -> None:
        """Raise ``ValueError`` if the measured constants exceed the declared ones."""
        mu0_hat, mu1_hat = coherence_stats(self)
        if mu0_hat > params.mu0 + NORM_TOL:
            raise ValueError(f"measured mu0 {mu0_hat:.6g} exceeds declared {params.mu0:.6g}")
        if mu1_hat > params.mu1 + NORM_TOL:
            raise ValueError(f"measured mu1 {mu1_hat:.6g} exceeds declared {params.mu1:.6g}")


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """``r x n`` coefficients; the support of a column is its nonzero pattern."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 2:
            raise ValueError("coefficient matrix must be 2-d")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def r(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @cached_property
    def mask(self) -> np.ndarray:
        return self.values != 0

    @cached_property
    def supports(self) -> list[np.ndarray]:
        """Sorted support index array of every column."""
        rows, cols = np.nonzero(self.mask.T)
        splits = np.searchsorted(rows, np.arange(1, self.n))
        return np.split(cols, splits)

    def support_matrix(self) -> np.ndarray:
        """``n x s`` array of supports; requires equal support sizes."""
        counts = self.mask.sum(axis=0)
        if counts.size and np.any(counts != counts[0]):
            raise ValueError("columns have different support sizes")
        s = int(counts[0]) if counts.size else 0
        return np.nonzero(self.mask.T)[1].reshape(self.n, s)

    def check(self, params: ModelParams) -> None:
        """Raise ``ValueError`` unless every column matches the model's sparsity and value range."""
        counts = self.mask.sum(axis=0)
        if np.any(counts != params.s):
            raise ValueError(f"every column must have exactly s={params.s} nonzeros")
        mags = np.abs(self.values[self.mask])
        if mags.size and (mags.min() < params.m - NORM_TOL or mags.max() > params.M + NORM_TOL):
            raise ValueError("nonzero magnitude outside [m, M]")
        if params.value_model is ValueModel.BERNOULLI and mags.size and np.any(mags != 1.0):
            raise ValueError("bernoulli coefficients must be exactly +-1")


@dataclass(frozen=True)
class GroundTruth:
    dictionary: Dictionary
    coefficients: CoefficientMatrix


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observed ``d x n`` samples, with the generating factors when synthetic."""

    samples: np.ndarray
    ground_truth: GroundTruth | None = field(default=None)

    def __post_init__(self):
        Y = np.array(self.samples, dtype=float, copy=True)
        if Y.ndim != 2:
            raise ValueError("samples must be a 2-d array")
        Y.setflags(write=False)
        object.__setattr__(self, "samples", Y)

    @property
    def d(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    def check(self, params: ModelParams) -> None:
        """Check ``Y = AX`` (when known) and the per-sample norm bound sqrt(2s)*M."""
        if self.ground_truth is not None:
            A = self.ground_truth.dictionary.columns
            X = self.ground_truth.coefficients.values
            if np.max(np.abs(self.samples - A @ X), initial=0.0) > NORM_TOL:
                raise ValueError("samples differ from A @ X")
        bound = math.sqrt(2 * params.s) * params.M
        norms = np.linalg.norm(self.samples, axis=0)
        if norms.size and norms.max() > bound + NORM_TOL:
            raise ValueError(f"sample norm {norms.max():.6g} exceeds sqrt(2s)M = {bound:.6g}")


# -- generation ------------------------------------------------------------

DICTIONARY_METHODS = ("gaussian", "orthonormal", "hadamard")


def _haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def _draw_dictionary(params: ModelParams, method: str, rng: np.random.Generator) -> np.ndarray:
    d, r = params.d, params.r
    if method == "gaussian":
        G = rng.standard_normal((d, r))
        return G / np.linalg.norm(G, axis=0)
    if method == "orthonormal":
        if r > d:
            raise ValueError("orthonormal dictionaries need r <= d")
        return _haar_orthogonal(d, rng)[:, :r]
    if method == "hadamard":
        # identity and normalized Hadamard bases: every cross inner product is +-1/sqrt(d)
        if d & (d - 1) or r > 2 * d:
            raise ValueError("hadamard dictionaries need d a power of two and r <= 2d")
        B = np.hstack([np.eye(d), scipy.linalg.hadamard(d) / math.sqrt(d)])
        keep = np.sort(np.concatenate([np.arange(d), d + rng.permutation(d)[: r - d]])) if r > d else rng.permutation(d)[:r]
        B = B[:, keep]
        B = _haar_orthogonal(d, rng) @ B
        B = B[:, rng.permutation(r)] * rng.choice([-1.0, 1.0], size=r)
        return B / np.linalg.norm(B, axis=0)
    raise ValueError(f"unknown dictionary method {method!r}; expected one of {DICTIONARY_METHODS}")


def generate_dictionary(params: ModelParams, seed, method: str = "gaussian",
                        max_attempts: int = 200) -> Dictionary:
    """Draw a unit-norm dictionary meeting the declared ``mu0`` and ``mu1``.

    ``gaussian`` normalizes i.i.d. Gaussian columns and rejects whole draws
    until the measured constants fit, ``orthonormal`` takes columns of a Haar
    random orthogonal matrix (``r <= d``), and ``hadamard`` randomly rotates
    the union of the identity and Hadamard bases (coherence ``1/sqrt(d)``).

    Raises
    ------
    InfeasibleIncoherence
        No draw met the declared constants within ``max_attempts``.
    """
    if params.d < 2 or params.r < 2:
        raise ValueError("need d >= 2 and r >= 2")
    rng = make_rng(seed)
    attempts = max_attempts if method == "gaussian" else 1
    best = (math.inf, math.inf)
    for _ in range(attempts):
        cols = _draw_dictionary(params, method, rng)
        mu0_hat, mu1_hat = coherence_stats(cols)
        if mu0_hat <= params.mu0 + NORM_TOL and mu1_hat <= params.mu1 + NORM_TOL:
            return Dictionary(cols)
        if (mu0_hat, mu1_hat) < best:
            best = (mu0_hat, mu1_hat)
    raise InfeasibleIncoherence(
        f"no {method} dictionary with mu0 <= {params.mu0:.6g}, mu1 <= {params.mu1:.6g} "
        f"after {attempts} attempts; best mu0 = {best[0]:.6g}, mu1 = {best[1]:.6g}",
        best_mu0=best[0], best_mu1=best[1],
    )


def generate_coefficients(params: ModelParams, n: int, seed) -> CoefficientMatrix:
    """Draw an ``r x n`` matrix with exactly ``s`` nonzeros per column."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    r, s = params.r, params.s
    # uniform s-subsets: the s smallest of r i.i.d. keys
    keys = rng.random((n, r))
    support = np.argpartition(keys, s - 1, axis=1)[:, :s] if s < r else np.tile(np.arange(r), (n, 1))
    signs = rng.integers(0, 2, size=(n, s)) * 2.0 - 1.0
    if params.value_model is ValueModel.BERNOULLI:
        vals = signs
    else:
        vals = signs * rng.uniform(params.m, params.M, size=(n, s))
    X = np.zeros((r, n))
    X[support, np.arange(n)[:, None]] = vals
    return CoefficientMatrix(X)


def synthesize(A: Dictionary, X: CoefficientMatrix) -> SampleSet:
    """Form ``Y = A X`` and attach the factors as ground truth."""
    if A.r != X.r:
        raise DimensionMismatch(f"dictionary has {A.r} atoms but coefficients have {X.r} rows")
    return SampleSet(A.columns @ X.values, GroundTruth(A, X))


def perturb_dictionary(A, eps: float, seed) -> Dictionary:
    """Rotate every atom by a random direction so that ``||a_i' - a_i|| = eps`` exactly."""
    if not 0 <= eps <= 2:
        raise ValueError("eps must lie in [0, 2]")
    A = _as_matrix(A)
    # own sub-stream: a Gaussian dictionary drawn from the same integer seed
    # would otherwise be parallel to its own perturbation directions
    rng = make_rng(seed, 0x9E37)
    U = rng.standard_normal(A.shape)
    U -= A * np.sum(A * U, axis=0)
    U /= np.linalg.norm(U, axis=0)
    theta = 2.0 * math.asin(eps / 2.0)
    return Dictionary.normalized(math.cos(theta) * A + math.sin(theta) * U)


# -- measured constants ----------------------------------------------------

def coherence_stats(A) -> tuple[float, float]:
    """Measured ``(mu0, mu1)``: max off-diagonal |<a_i, a_j>| * sqrt(d) and ||A||_2 * sqrt(d/r)."""
    A = _as_matrix(A)
    d, r = A.shape
    G = np.abs(A.T @ A)
    np.fill_diagonal(G, 0.0)
    mu0_hat = float(G.max(initial=0.0)) * math.sqrt(d)
    mu1_hat = float(np.linalg.norm(A, 2)) * math.sqrt(d / r)
    return mu0_hat, mu1_hat


def rip_constant(A, k: int, max_subsets: int = 10**6, chunk: int = 50_000) -> float:
    """Exact restricted isometry constant of order ``k`` by enumerating all supports.

    For each ``k``-subset ``S`` the extreme eigenvalues of ``A_S^T A_S`` are
    the squared extreme singular values of ``A_S``.
    """
    A = _as_matrix(A)
    d, r = A.shape
    if not 1 <= k <= min(d, r):
        raise ValueError(f"need 1 <= k <= min(d, r), got k={k}")
    total = math.comb(r, k)
    if total > max_subsets:
        raise TooLargeToEnumerate(f"C({r}, {k}) = {total} supports exceeds {max_subsets}")
    G = A.T @ A
    delta = 0.0
    flat = np.fromiter((i for c in combinations(range(r), k) for i in c), dtype=np.intp, count=total * k)
    subsets = flat.reshape(total, k)
    for start in range(0, total, chunk):
        idx = subsets[start:start + chunk]
        lam = np.linalg.eigvalsh(G[idx[:, :, None], idx[:, None, :]])
        delta = max(delta, float(np.max(1.0 - lam[:, 0])), float(np.max(lam[:, -1] - 1.0)))
    return delta
