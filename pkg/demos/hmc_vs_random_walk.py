"""
HMC against a random-walk baseline
==================================

Same target (uniform Bloch ball in angle coordinates), same number of
kept points.  The random walk is tuned to about 60% acceptance; HMC runs
with its defaults.
"""

import numpy as np

from hmcstate import hmc, parameterization as par
from hmcstate.diagnostics import autocorrelation, integrated_autocorr_time
from hmcstate.targets import primitive_qubit_target

target = primitive_qubit_target()
cfg = hmc.HmcConfig.for_samples(10_000, burn_in=500, seed=9)

h = hmc.run_chain(target, cfg)
scale = hmc.tune_rw_step(target, goal=0.6, seed=9)
r = hmc.rw_metropolis_chain(target, scale, cfg)

x_h = np.array([par.bloch_from_angles(t)[0] for t in h.points])
x_r = np.array([par.bloch_from_angles(t)[0] for t in r.points])

print(f"HMC:         acceptance {h.acceptance_rate:.3f}, IAT(x) {integrated_autocorr_time(x_h):.2f}")
print(f"random walk: acceptance {r.acceptance_rate:.3f} (step {scale:.3f}), "
      f"IAT(x) {integrated_autocorr_time(x_r):.2f}")

# %%
# Autocorrelation of x at a few lags
lags = [1, 2, 5, 10, 20, 50]
acf_h, acf_r = autocorrelation(x_h, 50), autocorrelation(x_r, 50)
for k in lags:
    print(f"lag {k:3d}:  HMC {acf_h[k]:+.3f}   random walk {acf_r[k]:+.3f}")
