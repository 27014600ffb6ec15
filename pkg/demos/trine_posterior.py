"""
Trine posterior on the equatorial disk
======================================

Three-outcome trine data fix only the x-y part of the Bloch vector, so the
reconstruction lives on the disk ``z = 0`` with measure ``|sin 2 t2|``.
Here the data are 8, 5 and 11 counts.
"""

import numpy as np

from hmcstate import hmc
from hmcstate.targets import POMS, SPACES, trine_posterior_target

counts = [8, 5, 11]
target = trine_posterior_target(counts)
s = hmc.run_chain(target, hmc.HmcConfig.for_samples(20_000, burn_in=500, seed=4))
xy = np.array([SPACES["equatorial"].bloch(t)[:2] for t in s.points])
print(f"acceptance {s.acceptance_rate:.3f}")
print("posterior mean (x, y):", np.round(xy.mean(axis=0), 4))

# %%
# Brute-force check on a grid over the disk
n = 800
g = (np.arange(n) + 0.5) / n * 2 - 1
x, y = np.meshgrid(g, g, indexing="ij")
inside = x**2 + y**2 <= 1
p = POMS["trine"].offset[:, None] + POMS["trine"].directions[:, :2] @ np.vstack([x[inside], y[inside]])
logw = np.asarray(counts, float) @ np.log(np.clip(p, 1e-300, None))
w = np.exp(logw - logw.max())
print("grid mean (x, y):     ",
      np.round([np.sum(w * x[inside]) / w.sum(), np.sum(w * y[inside]) / w.sum()], 4))

# %%
# Posterior mean probabilities versus relative frequencies
print("mean p:", np.round(s.probs.mean(axis=0), 4), " frequencies:",
      np.round(np.array(counts) / sum(counts), 4))
