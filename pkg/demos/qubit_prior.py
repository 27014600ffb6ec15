"""
Uniform samples of the Bloch ball
=================================

The primitive prior on qubit states is flat in the Bloch vector.  In the
three angles it becomes ``|sin(2 t1)^3 sin(2 t2)|``, and HMC in those angles
never leaves the physical region.
"""

import numpy as np

from hmcstate import hmc, parameterization as par
from hmcstate.diagnostics import integrated_autocorr_time
from hmcstate.targets import primitive_qubit_target

target = primitive_qubit_target("tetrahedron")
cfg = hmc.HmcConfig.for_samples(10_000, burn_in=500, seed=1)
samples = hmc.run_chain(target, cfg)
print(f"acceptance rate: {samples.acceptance_rate:.3f}")

# %%
# Bloch vectors and the tetrahedron probabilities stored with each point
b = np.array([par.bloch_from_angles(t) for t in samples.points])
print("mean Bloch vector:", np.round(b.mean(axis=0), 4))
print(f"E[r^2] = {np.mean(np.sum(b**2, axis=1)):.4f}  (uniform ball: 0.6)")
print("first probability rows:\n", np.round(samples.probs[:3], 4))

# %%
# The z marginal of a uniform ball is (3/4)(1 - z^2).
hist, edges = np.histogram(b[:, 2], bins=10, range=(-1, 1), density=True)
mid = 0.5 * (edges[1:] + edges[:-1])
for m, h in zip(mid, hist):
    print(f"z={m:+.1f}  sample {h:.3f}  exact {0.75 * (1 - m * m):.3f}")

# %%
# Successive points are nearly independent.
print("integrated autocorrelation time of x:",
      round(integrated_autocorr_time(b[:, 0]), 2))
