"""Row-to-row contraction of the kicked-Ising tensor network.

Transfer-matrix construction, symmetry-resolved spectra, entanglement and
purification diagnostics, mean-field theory and infinite-MPS evolution.
"""

from .hilbert import (RowState, SectorBasis, all_sectors, build_sector_basis, lift, make_rng,
                      product_state, project, random_orthogonal_pair, random_product_state,
                      random_sector_state, random_ti_product_state)
from .transfer import (ModelParams, apply_T, apply_T_array, build_dense_T, build_mpo,
                       contract_mpo_ring, overlap_via_powers, sample_disorder, spin_sum_oracle)
from .spectral import (eig_full, edge_metrics, fit_edge, leading_eigs, pairing_check,
                       radial_density, spectral_gap)
from .diagnostics import (entropy_renyi, entropy_vn, evolve, leading_state_observables,
                          mutual_information, purify_reference)
from .meanfield import build_Tm, build_Tm_limit, mf_gap_sweep, solve_fixed_point
from .boundary_mps import (UniformMps, apply_mpo_step, entropy_of_bond, evolve_imps,
                           run_imps_sweep)

__version__ = "0.1.0"
