"""Write a symmetric matching family as a product of two exponentials.

alpha(k) = exp(i h1(k)) exp(i h2(k)) with h1, h2 periodic, self-adjoint and
time-reversal symmetric.  The log yields a contraction beta(t, k) of alpha to
the identity, sampled here at a few slices.
"""

import numpy as np

from blochgauge import beta_family, homotopy_from_beta, make_matching, reconstruct, two_step_log, validate_matching
from blochgauge.linalg import max_opnorm

alpha = make_matching("factorized", {"dim": 2, "N": 64, "m": 4, "symmetry": "fermionic", "wind": [0, 0], "amp": 1.5, "seed": 1})
phases = np.angle(np.linalg.eigvals(alpha.samples))
print(f"largest eigenphase {np.max(np.abs(phases)):.3f}  (pi = {np.pi:.3f})")

log = two_step_log(alpha, allow_principal=False)
print("route:", log.info["route"], " reconstruction error", f"{max_opnorm(reconstruct(log) - alpha.samples):.1e}")
for i, res in enumerate(log.step_residuals(), start=1):
    print(f"  h{i}: hermiticity {res['hermiticity']:.1e}  trs {res['trs']:.1e}")

beta = beta_family(log)
print("beta:", {k: f"{v:.1e}" for k, v in beta.report().items()})
path = homotopy_from_beta(beta, 5)
for t, fam in zip(np.linspace(0, 1, len(path)), path):
    print(f"  t = {t:.2f}  valid matching family: {validate_matching(fam).passed}")
