"""Mean-field gap against exact sector gaps.

The single-site theory gives an L-independent gap.  It tracks the exact value
at strong fields and misses the gap closing at weak ones, where the sweep
flags its points as unreliable.
"""

import numpy as np

from kickedtn.experiments.ensembles import sector_gap
from kickedtn.meanfield import mf_gap_sweep
from kickedtn.transfer import ModelParams

base = ModelParams(10, h_R=np.pi / 6)
grid = np.round(np.linspace(0.0, 1.0, 11), 3)
rows = mf_gap_sweep(base, grid, n_restarts=6, seed=0)
print(" h_I   MF gap   exact L=8  exact L=10  exact L=12  flags")
for r in rows:
    exact = [sector_gap(base.replace(L=L, h_I=r.h_I)) for L in (8, 10, 12)]
    flags = ("unreliable " if r.unreliable else "") + ("switch" if r.branch_switch else "")
    mf = "   n/a " if r.gap is None else f"{r.gap:7.4f}"
    print(f"{r.h_I:4.1f}  {mf}  " + "  ".join(f"{g:9.4f}" for g in exact) + f"   {flags}")
