"""First stage: recover approximate atoms from cliques of the correlation graph.

For each anchor edge the common neighborhood ``Shat`` is tested for a
unique intersection by pairing its members and counting how many pairs are
themselves edges. Accepted neighborhoods give an atom estimate as the top
eigenvector of ``sum_{y in Shat} y y^T``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng
from .corr_graph import CorrelationGraph, build_graph, common_neighbors
from .errors import ClusterTooSmall, DegenerateSpectrumWarning, EmptyCluster, NoAtomsRecovered
from .model import SampleSet

logger = logging.getLogger(__name__)

MIN_CLUSTER = 4
# edge-pair fraction a good neighborhood must strictly exceed
ACCEPT_NUM, ACCEPT_DEN = 61, 64


@dataclass
class AnchorCandidate:
    anchor_pair: tuple[int, int]
    shat: np.ndarray
    accepted: bool
    estimate: np.ndarray | None = None


@dataclass
class AtomProvenance:
    anchor_i: int
    anchor_j: int
    cluster_size: int


@dataclass
class DictionaryEstimate:
    """Atoms recovered by :func:`dictionary_learn`, one unit vector per column."""

    atoms: np.ndarray
    provenance: list[AtomProvenance] = field(default_factory=list)
    edges_examined: int = 0
    clusters_accepted: int = 0

    @property
    def num_atoms(self) -> int:
        return self.atoms.shape[1]

    def provenance_rows(self) -> list[dict]:
        return [
            {"atom_index": k, "anchor_i": p.anchor_i, "anchor_j": p.anchor_j, "cluster_size": p.cluster_size}
            for k, p in enumerate(self.provenance)
        ]


def _samples(Y) -> np.ndarray:
    return Y.samples if isinstance(Y, SampleSet) else np.asarray(Y, dtype=float)


def paired_edge_count(shat, G: CorrelationGraph, seed=None) -> tuple[int, int]:
    """Shuffle ``shat``, split it into disjoint pairs and count pairs that are edges.

    Returns ``(edge_pairs, num_pairs)``. With an odd count the last element
    after shuffling (a uniformly chosen one) is left out.
    """
    rng = make_rng(seed)
    perm = rng.permutation(np.asarray(shat, dtype=np.int64))
    half = len(perm) // 2
    hits = G.has_edges(perm[0:2 * half:2], perm[1:2 * half:2])
    return int(np.count_nonzero(hits)), half


def unique_intersection_test(shat, G: CorrelationGraph, seed=None, min_cluster: int = MIN_CLUSTER) -> bool:
    """True iff more than 61/64 of a random pairing of ``shat`` are edges of ``G``."""
    if len(shat) < min_cluster:
        raise ClusterTooSmall(f"|Shat| = {len(shat)} < {min_cluster}")
    hits, pairs = paired_edge_count(shat, G, seed)
    return ACCEPT_DEN * hits > ACCEPT_NUM * pairs


def estimate_element(shat, Y) -> np.ndarray:
    """Top eigenvector of ``sum_{k in shat} y_k y_k^T``, with its first nonzero entry positive.

    Emits :class:`DegenerateSpectrumWarning` when the two leading eigenvalues
    agree to within 1e-10 (relative to the largest, floored at 1).
    """
    idx = np.asarray(shat, dtype=np.int64)
    if idx.size == 0:
        raise EmptyCluster("cannot estimate an atom from an empty cluster")
    Ys = _samples(Y)[:, idx]
    L = Ys @ Ys.T
    lam, vecs = np.linalg.eigh(L)
    u = vecs[:, -1]
    if lam.size > 1 and lam[-1] - lam[-2] <= 1e-10 * max(lam[-1], 1.0):
        warnings.warn(
            f"leading eigenvalues {lam[-1]:.6g} and {lam[-2]:.6g} coincide", DegenerateSpectrumWarning, stacklevel=2
        )
    nz = np.flatnonzero(np.abs(u) > 1e-12)
    if nz.size and u[nz[0]] < 0:
        u = -u
    return u / np.linalg.norm(u)


def sign_distance(a: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``min_z ||z a - b||`` for unit ``a`` against every unit column ``b`` of ``B``."""
    c = np.abs(B.T @ a)
    return np.sqrt(np.maximum(2.0 - 2.0 * c, 0.0))


def examine_anchor(G: CorrelationGraph, Y, i: int, j: int, seed=None,
                   min_cluster: int = MIN_CLUSTER) -> AnchorCandidate:
    """Run the unique-intersection test on anchor edge ``(i, j)``; estimate an atom if it passes.

    Neighborhoods smaller than ``min_cluster`` are reported as rejected.
    """
    i, j = int(i), int(j)
    shat = common_neighbors(G, i, j)
    if len(shat) < min_cluster or not unique_intersection_test(shat, G, seed, min_cluster):
        return AnchorCandidate((i, j), shat, False)
    return AnchorCandidate((i, j), shat, True, estimate_element(shat, Y))


def dictionary_learn(Y, rho: float, eps_dict: float, seed=None, max_atoms: int | None = None,
                     graph: CorrelationGraph | None = None, min_cluster: int = MIN_CLUSTER,
                     max_edges: int | None = None) -> DictionaryEstimate:
    """Estimate dictionary atoms by clustering the correlation graph.

    Edges are visited in a seeded random order. A candidate atom is kept
    only if its sign-aware distance to every stored atom exceeds
    ``2 * eps_dict``.

    Parameters
    ----------
    Y : SampleSet or ndarray
        ``d x n`` samples.
    rho : float
        Correlation threshold; ignored when ``graph`` is given.
    eps_dict : float
        Separation parameter, ``0 < eps_dict < 1/2``.
    max_atoms : int, optional
        Stop as soon as this many atoms are stored.
    graph : CorrelationGraph, optional
        Precomputed graph of ``Y``.
    min_cluster : int
        Anchor edges with fewer common neighbors are skipped.
    max_edges : int, optional
        Cap on the number of anchor edges examined.

    Raises
    ------
    NoAtomsRecovered
        The loop ended without accepting any cluster.
    """
    if not 0 < eps_dict < 0.5:
        raise ValueError("eps_dict must lie in (0, 1/2)")
    Ys = _samples(Y)
    G = graph if graph is not None else build_graph(Ys, rho)
    rng = make_rng(seed)
    edges = G.edge_list
    order = rng.permutation(len(edges))
    if max_edges is not None:
        order = order[:max_edges]

    d = Ys.shape[0]
    atoms = np.empty((d, 0))
    prov: list[AtomProvenance] = []
    examined = accepted = 0
    for e in order:
        if max_atoms is not None and len(prov) >= max_atoms:
            break
        examined += 1
        cand = examine_anchor(G, Ys, *edges[e], rng, min_cluster)
        if not cand.accepted:
            continue
        accepted += 1
        a = cand.estimate
        if atoms.shape[1] and sign_distance(a, atoms).min() <= 2.0 * eps_dict:
            continue
        atoms = np.column_stack([atoms, a])
        prov.append(AtomProvenance(*cand.anchor_pair, len(cand.shat)))
    logger.debug("examined %d anchor edges, accepted %d clusters, kept %d atoms", examined, accepted, len(prov))
    if not prov:
        raise NoAtomsRecovered(f"no cluster accepted after {examined} anchor edges")
    return DictionaryEstimate(atoms, prov, examined, accepted)

