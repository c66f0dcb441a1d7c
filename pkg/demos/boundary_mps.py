"""Infinite boundary MPS: bond entropy vs bond dimension after 100 rows.

In the area-law regime the entropy saturates with chi.  Near the transition
it keeps growing roughly like ln chi.  chi=128 at h_I=0.08 takes several
minutes, so it is left out here.
"""

import numpy as np

from kickedtn.boundary_mps import entropy_slope_vs_log_chi, evolve_imps
from kickedtn.transfer import ModelParams

for h_I, chis in ((0.3, (8, 16, 32)), (0.08, (8, 16, 32))):
    p = ModelParams(2, h_R=np.pi / 6, h_I=h_I)
    S = []
    for chi in chis:
        run = evolve_imps(p, chi, 100, seed=0)
        S.append(run.entropy)
        print(f"h_I={h_I}: chi={chi:3d}  S={run.entropy:.4f}  max truncation {run.max_trunc_err:.1e}")
    slope, se = entropy_slope_vs_log_chi(chis, S)
    print(f"   dS/dln(chi) = {slope:.3f} +- {se:.3f}")
