# The correlation graph joins samples whose inner product exceeds rho.
# With enough incoherence an edge means the two samples share an atom.
import numpy as np

from overdict import ModelParams, build_graph, coherence_stats, default_threshold, verify_corr_graph
from overdict import generate_coefficients, generate_dictionary, synthesize
from overdict.errors import InvalidRegime

# at d=1024 the frame has coherence 1/32 and the default threshold is 3/8
params = ModelParams(d=1024, r=2048, s=2)
A = generate_dictionary(params, seed=3, method="hadamard")
Y = synthesize(A, generate_coefficients(params, n=3000, seed=4))
mu0, _ = coherence_stats(A)
rho = default_threshold(params, mu0)
G = build_graph(Y, rho)
report = verify_corr_graph(G, Y.ground_truth, params)
print("rho=%.3f edges=%d violations=%d interval=(%.3f, %.3f)" % (rho, G.num_edges, report.count, *report.interval))

# at d=64 the same formula has no room left for s=2
try:
    default_threshold(ModelParams(d=64, r=128, s=2), 1.0)
except InvalidRegime as exc:
    print("d=64:", exc)

# a hand-picked threshold still gives a useful graph there
small = ModelParams(d=64, r=128, s=2)
A = generate_dictionary(small, seed=5, method="hadamard")
X = generate_coefficients(small, n=4096, seed=6)
G = build_graph(synthesize(A, X), 0.55)
shared = np.array([np.count_nonzero(X.mask[:, i] & X.mask[:, j]) for i, j in G.edge_list[:5000]])
print("rho=0.55: %d edges, fraction sharing no atom %.4f" % (G.num_edges, np.mean(shared == 0)))
