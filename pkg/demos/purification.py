"""A reference qubit entangled with two orthogonal rows purifies once T^t separates them."""

import numpy as np

from kickedtn.diagnostics import purify_reference
from kickedtn.hilbert import build_sector_basis, lift, random_orthogonal_pair
from kickedtn.transfer import ModelParams

L = 10
basis = build_sector_basis(L, 0, "even")
a, b = random_orthogonal_pair(basis, seed=3)
for h_I in (0.01, 0.1, 0.4):
    tr = purify_reference(ModelParams(L, h_I=h_I), lift(a), lift(b), t_max=400,
                          eps_list=(1e-3,), stop_early=True)
    t_eps = tr.t_eps[1e-3]
    shown = ", ".join(f"{s:.3f}" for s in tr.S_ref[:6])
    print(f"h_I={h_I:4.2f}: S_ref(t=0..5) = [{shown}]  t_eps = {t_eps if t_eps is None else round(t_eps, 1)}")
print(f"ln 2 = {np.log(2):.3f}")
