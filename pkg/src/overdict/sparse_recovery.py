"""Second stage: sparse-code every sample against an approximate dictionary,
round the codes to {-1, 0, 1} and refit the dictionary by least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, IllConditionedSupport, SingularGram
from .model import CoefficientMatrix, Dictionary, SampleSet

MAX_CONDITION = 1e8
# relative reconstruction residual above which a refit is flagged as failed
FAILURE_RESIDUAL = 1e-8


@dataclass
class SparseCodeResult:
    xhat: np.ndarray
    support: np.ndarray
    residual_norm: float


def _dictionary_matrix(Abar) -> np.ndarray:
    if isinstance(Abar, Dictionary):
        return Abar.columns
    atoms = getattr(Abar, "atoms", None)  # DictionaryEstimate
    return np.asarray(atoms if atoms is not None else Abar, dtype=float)


def _samples(Y) -> np.ndarray:
    return Y.samples if isinstance(Y, SampleSet) else np.asarray(Y, dtype=float)


def omp(Abar, Y, s: int, eps_coeff: float = 0.0, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal matching pursuit on every column of ``Y`` at once.

    Each column takes at most ``s`` greedy steps and stops early once its
    residual norm is ``<= eps_coeff``; coefficients on the chosen support
    are the least-squares fit. Returns ``(Xhat, residual_norms)``.

    Raises
    ------
    IllConditionedSupport
        A selected sub-dictionary has condition number above 1e8.
    """
    A = _dictionary_matrix(Abar)
    Y = np.atleast_2d(_samples(Y))
    d, r = A.shape
    if Y.shape[0] != d:
        raise DimensionMismatch(f"samples have dimension {Y.shape[0]}, dictionary {d}")
    if s > d or s > r or s < 1:
        raise ValueError(f"need 1 <= s <= min(d, r), got s={s}")
    norms = np.linalg.norm(A, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-6:
        raise ValueError("dictionary columns must have unit norm (within 1e-6)")

    n = Y.shape[1]
    X = np.zeros((r, n))
    res_norms = np.zeros(n)
    for start in range(0, n, chunk):
        Yc = Y[:, start:start + chunk]
        X[:, start:start + chunk], res_norms[start:start + chunk] = _omp_block(A, Yc, s, eps_coeff)
    return X, res_norms


def _omp_block(A, Y, s, eps_coeff):
    d, r = A.shape
    n = Y.shape[1]
    cols = np.arange(n)
    support = np.zeros((n, s), dtype=np.intp)
    size = np.zeros(n, dtype=np.intp)
    coef = np.zeros((n, s))
    residual = Y.copy()
    for t in range(s):
        active = np.linalg.norm(residual, axis=0) > eps_coeff
        if not active.any():
            break
        act = cols[active]
        corr = np.abs(A.T @ residual[:, act])
        if t:
            corr[support[act, :t].T, np.arange(act.size)] = -np.inf
        support[act, t] = np.argmax(corr, axis=0)
        size[act] = t + 1
        AS = A[:, support[act, :t + 1]].transpose(1, 0, 2)  # (k, d, t+1)
        U, sv, Vt = np.linalg.svd(AS, full_matrices=False)
        cond = sv[:, 0] / np.maximum(sv[:, -1], np.finfo(float).tiny)
        if np.any(cond > MAX_CONDITION):
            raise IllConditionedSupport(f"selected support has condition number {cond.max():.3g} > {MAX_CONDITION:g}")
        proj = np.einsum("kdt,dk->kt", U, Y[:, act]) / sv
        c = np.einsum("kts,kt->ks", Vt, proj)
        coef[act, :t + 1] = c
        residual[:, act] = Y[:, act] - np.einsum("kdt,kt->dk", AS, c)
    X = np.zeros((r, n))
    for t in range(s):
        used = size > t
        X[support[used, t], cols[used]] = coef[used, t]
    res_norms = np.linalg.norm(Y - A @ X, axis=0)
    return X, res_norms


def sparse_code(Abar, y, s: int, eps_coeff: float = 0.0) -> SparseCodeResult:
    """Sparse code of a single sample ``y`` by OMP with at most ``s`` atoms."""
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    X, res = omp(Abar, y, s, eps_coeff)
    xhat = X[:, 0]
    return SparseCodeResult(xhat, np.flatnonzero(xhat), float(res[0]))


def threshold_signs(Xhat) -> np.ndarray:
    """Round to {-1, 0, 1}: magnitudes below 1/2 become 0, the rest keep their sign."""
    Xhat = np.asarray(getattr(Xhat, "values", Xhat), dtype=float)
    return np.where(np.abs(Xhat) < 0.5, 0.0, np.sign(Xhat))


def gram_spectrum(X) -> tuple[float, float]:
    """Smallest and largest eigenvalue of ``X X^T``."""
    X = np.asarray(getattr(X, "values", X), dtype=float)
    lam = np.linalg.eigvalsh(X @ X.T)
    return float(lam[0]), float(lam[-1])


def well_posed(X, s: int) -> bool:
    """Whether ``sigma_min(X X^T) >= n s / (4 r)``."""
    X = np.asarray(getattr(X, "values", X), dtype=float)
    r, n = X.shape
    return gram_spectrum(X)[0] >= n * s / (4.0 * r)


def reestimate_dictionary(Y, Xhat) -> Dictionary:
    """Least-squares dictionary ``Y Xhat^T (Xhat Xhat^T)^{-1}`` with normalized columns.

    Raises
    ------
    SingularGram
        ``Xhat Xhat^T`` is numerically singular (``sigma_min < 1e-10 sigma_max``).
    """
    Ys = _samples(Y)
    X = np.asarray(getattr(Xhat, "values", Xhat), dtype=float)
    if X.shape[1] != Ys.shape[1]:
        raise DimensionMismatch(f"{X.shape[1]} coefficient columns for {Ys.shape[1]} samples")
    gram = X @ X.T
    lo, hi = gram_spectrum(X)
    if hi <= 0 or lo < 1e-10 * hi:
        raise SingularGram(f"coefficient Gram matrix is singular (eigenvalues {lo:.3g}..{hi:.3g})")
    At = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), X @ Ys.T)
    return Dictionary.normalized(At.T)


def recover_coeff(Y, Abar, s: int, eps_coeff: float = 0.0) -> tuple[Dictionary, CoefficientMatrix]:
    """Sparse coding, sign rounding and dictionary refit; returns ``(Ahat, Xhat)``."""
    Xraw, _ = omp(Abar, Y, s, eps_coeff)
    Xhat = threshold_signs(Xraw)
    Ahat = reestimate_dictionary(Y, Xhat)
    return Ahat, CoefficientMatrix(Xhat)


def relative_residual(Y, A, X) -> float:
    """``max_i ||y_i - A x_i|| / max_i ||y_i||``."""
    Ys = _samples(Y)
    A = _dictionary_matrix(A)
    X = np.asarray(getattr(X, "values", X), dtype=float)
    scale = np.linalg.norm(Ys, axis=0).max(initial=0.0) or 1.0
    return float(np.linalg.norm(Ys - A @ X, axis=0).max(initial=0.0) / scale)
