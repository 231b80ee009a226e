import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from overdict.corr_graph import CorrelationGraph, build_graph
from overdict.errors import EmptySample, RegimeNotApplicable
from overdict.evaluation import (
    coefficients_match,
    match_dictionaries,
    procedure_agreement,
    theoretical_error_bound,
    unique_intersection_oracle,
    verify_corr_graph,
)
from overdict.model import (
    CoefficientMatrix,
    Dictionary,
    GroundTruth,
    ModelParams,
    generate_coefficients,
    generate_dictionary,
    synthesize,
)


def brute_force_cost(A, B):
    r = A.shape[1]
    # signs are optimal per pair, so enumerate permutations with the best sign per column
    cost = np.maximum(2 - 2 * np.abs(A.T @ B), 0)
    return min(sum(cost[p[j], j] for j in range(r)) for p in itertools.permutations(range(r)))


def random_unit(rng, d, r):
    M = rng.standard_normal((d, r))
    return M / np.linalg.norm(M, axis=0)


def test_identity_matching():
    A = generate_dictionary(ModelParams(d=6, r=8, s=1), 0)
    m = match_dictionaries(A, A)
    assert m.permutation.tolist() == list(range(8))
    assert np.all(m.signs == 1) and m.eps_A < 1e-12


def test_reversed_negated_matching():
    A = generate_dictionary(ModelParams(d=6, r=8, s=1), 0).columns
    m = match_dictionaries(A, -A[:, ::-1])
    assert m.permutation.tolist() == list(range(7, -1, -1))
    assert np.all(m.signs == -1) and m.eps_A < 1e-12


@given(seed=st.integers(0, 2**32))
def test_matching_brute_force(seed):
    rng = np.random.default_rng(seed)
    A, B = random_unit(rng, 4, 6), random_unit(rng, 4, 6)
    m = match_dictionaries(A, B)
    assert m.cost == pytest.approx(brute_force_cost(A, B), abs=1e-10)
    assert np.allclose(m.per_atom_error ** 2, np.sum((m.signs * A[:, m.permutation] - B) ** 2, axis=0))


def test_fewer_estimates_than_atoms():
    A = generate_dictionary(ModelParams(d=6, r=8, s=1), 0).columns
    m = match_dictionaries(A, A[:, [5, 2]])
    assert m.permutation.tolist() == [5, 2]
    assert sorted(m.unmatched_true.tolist()) == [0, 1, 3, 4, 6, 7]


def test_bound_arithmetic():
    p = ModelParams(d=10000, r=10**6, s=1, mu1=1.0)
    assert theoretical_error_bound(p, 0.01) == pytest.approx(32 * (0.01 + 0.0001 + 1e-6 + 0.0001 + 0.01), rel=1e-12)
    assert theoretical_error_bound(p, 0.01) == pytest.approx(0.6465, abs=1e-4)  # exact value 0.646432


def test_bound_alpha_zero_and_monotone():
    p = ModelParams(d=400, r=1000, s=2, mu1=1.5)
    assert theoretical_error_bound(p, 0.0) == pytest.approx(32 * 2 * (1.5 / math.sqrt(800) + 2.25 / 400 + 8 / 1000))
    vals = [theoretical_error_bound(ModelParams(d=400, r=1000, s=s, mu1=1.5), 0.02) for s in range(1, 6)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        theoretical_error_bound(p, 0.05)
    with pytest.raises(ValueError):
        theoretical_error_bound(ModelParams(d=4, r=4, s=1), 0.01)


def support_matrix(*supports, r=8):
    X = np.zeros((r, len(supports)))
    for k, sup in enumerate(supports):
        X[list(sup), k] = 1
    return CoefficientMatrix(X)


def test_unique_intersection_oracle():
    X = support_matrix({1, 2, 3}, {3, 4, 5}, {1, 2, 3}, {6, 7, 0})
    assert unique_intersection_oracle(X, 0, 1)
    assert not unique_intersection_oracle(X, 0, 2)
    assert not unique_intersection_oracle(X, 0, 3)


def test_corr2_violations_below_interval():
    # two samples with disjoint supports but strongly correlated atoms
    A = Dictionary.normalized(np.array([[1.0, 0.9, 0.0], [0.0, math.sqrt(0.19), 1.0], [0.0, 0.0, 0.0]]) + 0.0)
    p = ModelParams(d=3, r=3, s=1, mu0=math.inf)
    X = support_matrix({0}, {1}, r=3)
    truth = GroundTruth(A, X)
    # measured coherence is large, so the lemma interval is empty
    with pytest.raises(RegimeNotApplicable):
        verify_corr_graph(build_graph(synthesize(A, X), 1e-4), truth, p)


def test_corr2_violation_reported():
    d = 1024
    p = ModelParams(d=d, r=2048, s=2)
    A = generate_dictionary(p, 1, method="hadamard")
    X = generate_coefficients(p, 300, 2)
    Y = synthesize(A, X)
    G = build_graph(Y, 1e-4)
    report = verify_corr_graph(G, Y.ground_truth, p)
    assert len(report.corr2) > 0 and len(report.corr1) == 0
    for i, j in report.corr2:
        assert not (X.mask[:, i] & X.mask[:, j]).any() and G.has_edge(i, j)


def test_single_sample_vacuous():
    p = ModelParams(d=1024, r=1024, s=1)
    A = generate_dictionary(p, 0, method="orthonormal")
    X = generate_coefficients(p, 1, 0)
    G = build_graph(synthesize(A, X), 0.5)
    assert verify_corr_graph(G, GroundTruth(A, X), p).empty


def test_agreement_all_unique():
    # four samples all built on atom 0 plus distinct second atoms: every pair shares exactly atom 0
    r = 12
    X = support_matrix(*[{0, k} for k in range(1, 11)], r=r)
    A = generate_dictionary(ModelParams(d=1024, r=r, s=2), 0, method="orthonormal")
    G = build_graph(synthesize(A, X), 0.5)
    res = procedure_agreement(G, GroundTruth(A, X), 20, seed=0)
    assert res.rate == 1.0 and res.tp == res.total


def test_agreement_empty_sample():
    G = CorrelationGraph.from_edges(3, 1.0, np.empty((0, 2), int))
    with pytest.raises(EmptySample):
        procedure_agreement(G, GroundTruth(Dictionary(np.eye(3)), support_matrix({0}, {1}, {2}, r=3)), 10)


def test_coefficients_match_permuted():
    X = np.array([[1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    A = np.eye(3)
    perm = [2, 0, 1]
    signs = np.array([1.0, -1.0, 1.0])
    Ahat = A[:, perm] * signs
    Xhat = X[perm] * signs[:, None]
    m = match_dictionaries(A, Ahat)
    assert coefficients_match(X, Xhat, m)
    Xhat[0, 0] = 0
    assert not coefficients_match(X, Xhat, m)
