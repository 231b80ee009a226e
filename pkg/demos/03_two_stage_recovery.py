# Full pipeline: cluster the correlation graph to get rough atoms,
# then sparse-code, round to signs and refit for an exact dictionary.
import time

from overdict import (
    ModelParams,
    dictionary_learn,
    generate_coefficients,
    generate_dictionary,
    match_dictionaries,
    recover_coeff,
    synthesize,
)
from overdict.evaluation import coefficients_match

params = ModelParams(d=64, r=128, s=2)
A = generate_dictionary(params, seed=10, method="hadamard")
X = generate_coefficients(params, n=8192, seed=11)
Y = synthesize(A, X)

t0 = time.perf_counter()
est = dictionary_learn(Y, rho=0.55, eps_dict=0.3, seed=12, max_atoms=128, max_edges=50_000)
stage1 = match_dictionaries(A, est.atoms)
print("stage 1: %d atoms after %d anchor edges, eps_A=%.3f (%.1fs)"
      % (est.num_atoms, est.edges_examined, stage1.eps_A, time.perf_counter() - t0))

Ahat, Xhat = recover_coeff(Y, est.atoms, s=2, eps_coeff=2 * stage1.eps_A)
stage2 = match_dictionaries(A, Ahat)
print("stage 2: eps_A=%.2e, coefficients exact: %s" % (stage2.eps_A, coefficients_match(X, Xhat, stage2)))

# error shrinks as n grows
for n in (2048, 4096, 8192):
    Yn = synthesize(A, generate_coefficients(params, n=n, seed=13))
    e = dictionary_learn(Yn, 0.55, 0.3, seed=14, max_atoms=128, max_edges=50_000)
    print("n=%5d atoms=%3d eps_A=%.3f" % (n, e.num_atoms, match_dictionaries(A, e.atoms).eps_A))
