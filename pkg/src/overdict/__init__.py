"""Overcomplete dictionary learning by correlation-graph clustering,
with sparse-regression cleanup for exact recovery."""

from .clustering import DictionaryEstimate, dictionary_learn, estimate_element, unique_intersection_test
from .corr_graph import CorrelationGraph, build_graph, common_neighbors, default_threshold
from .evaluation import (
    Matching,
    match_dictionaries,
    procedure_agreement,
    theoretical_error_bound,
    unique_intersection_oracle,
    verify_corr_graph,
)
from .model import (
    CoefficientMatrix,
    Dictionary,
    GroundTruth,
    ModelParams,
    SampleSet,
    ValueModel,
    coherence_stats,
    generate_coefficients,
    generate_dictionary,
    perturb_dictionary,
    rip_constant,
    synthesize,
)
from .sparse_recovery import recover_coeff, reestimate_dictionary, sparse_code, threshold_signs

__version__ = "0.1.0"
