# Drawing a synthetic overcomplete instance and looking at its constants.
import math

import numpy as np

from overdict import ModelParams, coherence_stats, generate_coefficients, generate_dictionary, rip_constant, synthesize

params = ModelParams(d=64, r=128, s=2)

# Gaussian columns are the default; at d=64 they are fairly coherent
gauss = generate_dictionary(params, seed=1)
print("gaussian  mu0_hat=%.3f mu1_hat=%.3f" % coherence_stats(gauss))

# identity plus Hadamard, randomly rotated: every off-diagonal |<a_i, a_j>| is 0 or 1/8
frame = generate_dictionary(params, seed=1, method="hadamard")
print("hadamard  mu0_hat=%.3f mu1_hat=%.3f" % coherence_stats(frame))

X = generate_coefficients(params, n=2000, seed=2)
Y = synthesize(frame, X)
print("Y is", Y.samples.shape, "and each column uses", int(X.mask[:, 0].sum()), "atoms")

# the sample norm never exceeds sqrt(2s) M
print("largest ||y|| = %.3f, bound %.3f" % (np.linalg.norm(Y.samples, axis=0).max(), math.sqrt(4)))

# coefficient covariance is close to (s/r) I
C = X.values @ X.values.T / X.n
print("max |XX^T/n - (s/r)I| = %.4f" % np.abs(C - 2 / 128 * np.eye(128)).max())

# exact RIP constant on a smaller dictionary, by enumerating every support
small = generate_dictionary(ModelParams(d=32, r=48, s=2), seed=0)
mu0, _ = coherence_stats(small)
print("delta_4 = %.3f, coherence bound %.3f" % (rip_constant(small, 4), 4 * mu0 / math.sqrt(32)))
