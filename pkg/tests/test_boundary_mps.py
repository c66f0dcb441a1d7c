import numpy as np
import pytest

from kickedtn import diagnostics as dg
from kickedtn.boundary_mps import (UniformMps, apply_mpo_step, canonicalize, entropy_of_bond,
                                   entropy_slope_vs_log_chi, evolve_imps, local_expectation, local_z,
                                   product_mps, random_product_mps, run_imps_sweep)
from kickedtn.hilbert import make_rng, product_state, random_bloch_angles
from kickedtn.transfer import PAULI_X, PAULI_Z, ModelParams, build_mpo, single_site_unitary


def test_decoupled_mpo_keeps_product_form():
    p = ModelParams(2, J=0.0, h_I=0.3)
    mps = product_mps(1.1, 0.4)
    new, rec = apply_mpo_step(mps, build_mpo(p), chi_max=8)
    assert new.chi == 1 and rec.trunc_err < 1e-14
    site = new.gamma.reshape(2)
    ref = single_site_unitary(p) @ mps.gamma.reshape(2)
    overlap = abs(np.vdot(ref, site)) / (np.linalg.norm(ref) * np.linalg.norm(site))
    assert abs(overlap - 1) < 1e-12


def test_entropy_edge_cases():
    assert entropy_of_bond(product_mps(0.3, 0.0)) == 0.0
    d = 8
    flat = UniformMps(np.zeros((d, 2, d), complex), np.full(d, 1 / np.sqrt(d)), True)
    assert abs(entropy_of_bond(flat) - np.log(d)) < 1e-14
    with pytest.raises(ValueError):
        entropy_of_bond(UniformMps(flat.gamma, flat.schmidt, False))
    run = evolve_imps(ModelParams(2, h_I=0.3), 16, 0, seed=2)
    assert run.entropy == 0.0


def test_canonical_form_each_step():
    p = ModelParams(2, h_I=0.3)
    run = evolve_imps(p, 16, 15, seed=1)
    for rec in run.records:
        assert rec.canon_residual < 1e-8
    s = run.final.schmidt
    assert np.all(s >= 0) and np.all(np.diff(s) <= 1e-15)
    assert abs((s ** 2).sum() - 1) < 1e-10


def test_bond_dimension_cap():
    run = evolve_imps(ModelParams(2, h_I=0.1), 8, 10, seed=0)
    assert max(r.chi for r in run.records) <= 8
    assert run.records[-1].chi == 8


def test_truncation_error_shrinks_with_chi():
    p = ModelParams(2, h_I=0.15)
    errs = [evolve_imps(p, chi, 12, seed=3).max_trunc_err for chi in (4, 8, 16)]
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[0] > 0


def test_area_law_truncation_small():
    run = evolve_imps(ModelParams(2, h_I=0.3), 64, 30, seed=0)
    assert run.max_trunc_err < 1e-8


def test_canonicalize_is_gauge_invariant():
    p = ModelParams(2, h_I=0.3)
    mps = evolve_imps(p, 8, 6, seed=4).final
    rng = np.random.default_rng(0)
    G = rng.standard_normal((mps.chi, mps.chi)) + 1j * rng.standard_normal((mps.chi, mps.chi))
    # insert G G^-1 on every bond: same state, non-canonical tensors
    B = mps.right_tensor()
    Bg = np.einsum("ab,bsc,cd->asd", np.linalg.inv(G), B, G)
    again, err, _ = canonicalize(Bg, np.ones(mps.chi))
    assert err < 1e-12
    assert np.allclose(again.schmidt, mps.schmidt, atol=1e-9)
    for op in (PAULI_Z, PAULI_X):
        assert abs(local_expectation(again, op) - local_expectation(mps, op)) < 1e-9


def test_local_z_matches_exact_ring():
    p_inf = ModelParams(2, h_I=0.3)
    theta, phi = random_bloch_angles(make_rng(5))
    L = 14
    p = ModelParams(L, h_I=0.3)
    traj = dg.evolve(p, product_state(L, theta, phi), 3)
    assert abs(local_z(product_mps(theta, phi)) - np.cos(theta)) < 1e-12
    mps = product_mps(theta, phi)
    mpo = build_mpo(p_inf)
    for t in range(1, 4):
        mps, _ = apply_mpo_step(mps, mpo, 64)
        psi = traj.states[t].amplitudes.reshape(2, -1)
        exact = float((np.abs(psi[0]) ** 2).sum() - (np.abs(psi[1]) ** 2).sum())
        assert abs(local_z(mps) - exact) < 1e-3


def test_random_product_mps_deterministic():
    a, b = random_product_mps(9), random_product_mps(9)
    assert np.array_equal(a.gamma, b.gamma)


def test_non_canonical_input_rejected():
    mps = UniformMps(np.ones((1, 2, 1), complex), np.ones(1), False)
    with pytest.raises(ValueError):
        apply_mpo_step(mps, build_mpo(ModelParams(2)), 4)


def test_slope_regression():
    chis = [16, 32, 64, 128]
    S = [0.5 * np.log(c) + 0.1 for c in chis]
    slope, se = entropy_slope_vs_log_chi(chis, S)
    assert abs(slope - 0.5) < 1e-12 and se < 1e-12
    assert entropy_slope_vs_log_chi([4, 8], [1.0, 2.0])[1] == np.inf


def test_sweep_rows():
    rows = run_imps_sweep(ModelParams(2), [4, 8], 5, h_I_values=[0.3, 0.5], seed=0)
    assert [(r.h_I, r.chi) for r in rows] == [(0.3, 4), (0.3, 8), (0.5, 4), (0.5, 8)]
    assert all(r.ok and r.t == 5 and r.S_chi >= 0 for r in rows)
