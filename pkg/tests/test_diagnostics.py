import numpy as np
import pytest

from kickedtn import diagnostics as dg
from kickedtn.hilbert import RowState, build_sector_basis, random_orthogonal_pair, random_ti_product_state
from kickedtn.spectral import eig_full
from kickedtn.transfer import ModelParams, build_dense_T


def haar_state(L, rng):
    v = rng.standard_normal(2**L) + 1j * rng.standard_normal(2**L)
    return v / np.linalg.norm(v)


def page_value(m, n):
    """Mean entanglement of a Haar state on C^m x C^n, m <= n."""
    return sum(1.0 / k for k in range(n + 1, m * n + 1)) - (m - 1) / (2 * n)


def ghz(L):
    v = np.zeros(2**L, complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def test_product_state_has_zero_entropy():
    psi = random_ti_product_state(8, 3)
    assert abs(dg.entropy_vn(psi)) < 1e-12
    assert dg.mutual_information(psi, [0], [4]) < 1e-12


def test_bell_pair_entropy():
    v = np.array([1, 0, 0, 1], complex) / np.sqrt(2)
    assert abs(dg.entropy_vn(v) - np.log(2)) < 1e-14


def test_page_value_at_l10():
    rng = np.random.default_rng(17)
    vals = [dg.entropy_vn(haar_state(10, rng)) for _ in range(100)]
    assert abs(np.mean(vals) - page_value(32, 32)) / page_value(32, 32) < 0.02


def test_renyi_flat_spectrum():
    # two Bell pairs straddling the cut give a flat rank-4 Schmidt spectrum
    bell = np.array([1, 0, 0, 1], complex) / np.sqrt(2)
    psi = np.kron(bell, bell).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(-1)
    for n in (0.5, 2.0, 3.0):
        assert abs(dg.entropy_renyi(psi, n) - 2 * np.log(2)) < 1e-12
    assert abs(dg.entropy_vn(psi) - 2 * np.log(2)) < 1e-12


def test_renyi_approaches_von_neumann():
    psi = haar_state(8, np.random.default_rng(2))
    s = dg.entropy_vn(psi)
    lo, hi = dg.entropy_renyi(psi, 1.0001), dg.entropy_renyi(psi, 0.9999)
    assert lo <= s <= hi
    assert hi - lo < 1e-3


def test_ghz_mutual_information():
    assert abs(dg.mutual_information(ghz(6)) - np.log(2)) < 1e-12
    assert abs(dg.mutual_information(ghz(12)) - np.log(2)) < 1e-12


def test_complementary_regions_agree():
    psi = haar_state(8, np.random.default_rng(5))
    assert abs(dg.entropy_vn(psi, [2, 3, 4]) - dg.entropy_vn(psi, [5, 6, 7, 0, 1])) < 1e-10
    # a region wrapping around the ring is contiguous
    assert dg.entropy_vn(psi, [7, 0, 1]) > 0


def test_input_validation():
    psi = haar_state(6, np.random.default_rng(1))
    with pytest.raises(ValueError):
        dg.entropy_vn(2 * psi)
    with pytest.raises(ValueError):
        dg.entropy_renyi(psi, 1)
    with pytest.raises(ValueError):
        dg.entropy_renyi(psi, -1)
    with pytest.raises(ValueError):
        dg.entropy_vn(psi, [0, 2])
    with pytest.raises(ValueError):
        dg.mutual_information(psi, [0, 1], [1, 2])
    with pytest.raises(ValueError):
        dg.antipodal_regions(8)
    with pytest.raises(ValueError):
        dg.full_amplitudes(np.ones(5))


def test_sector_state_is_lifted():
    b = build_sector_basis(6, 0, "even")
    psi = random_ti_product_state(6, 1)
    from kickedtn.hilbert import project
    s = project(psi, b)
    assert abs(dg.entropy_vn(s) - dg.entropy_vn(psi)) < 1e-12


def test_evolve_matches_dense_power():
    p = ModelParams(8, h_I=0.3)
    psi = random_ti_product_state(8, 0)
    traj = dg.evolve(p, psi, 5)
    ref = np.linalg.matrix_power(build_dense_T(p), 5) @ psi.amplitudes
    assert abs(traj.log_norms[-1] - np.log(np.linalg.norm(ref))) < 1e-10
    assert np.abs(traj.final.amplitudes - ref / np.linalg.norm(ref)).max() < 1e-10
    assert traj.times == [0, 1, 2, 3, 4, 5]


def test_evolve_record_every():
    p = ModelParams(6, h_I=0.3)
    traj = dg.evolve(p, random_ti_product_state(6, 0), 7, record_every=3)
    assert traj.times == [0, 3, 6, 7]
    with pytest.raises(ValueError):
        dg.evolve(p, random_ti_product_state(6, 0), -1)


def test_global_scale_only_shifts_log_norm():
    p = ModelParams(8, h_I=0.3)
    psi = random_ti_product_state(8, 4)
    a = dg.evolve(p, psi, 6)
    c = 2.5 * np.exp(0.3j)
    b = dg.evolve(p, psi, 6, scale=c)
    for m, sa, sb in zip(a.times, a.states, b.states):
        assert abs(dg.entropy_vn(sa) - dg.entropy_vn(sb)) < 1e-12
        assert abs(abs(np.vdot(sa.amplitudes, sb.amplitudes)) - 1) < 1e-12
    assert abs((b.log_norms[-1] - a.log_norms[-1]) - 6 * np.log(abs(c))) < 1e-10


def test_unitary_evolution_scrambles():
    p = ModelParams(12, h_I=0.0)
    traj = dg.evolve(p, random_ti_product_state(12, 0), 48, record_every=48)
    assert dg.entropy_vn(traj.final) > 0.9 * (6 * np.log(2) - 0.5)
    assert abs(traj.log_norms[-1]) < 1e-10


def test_entanglement_report_row():
    psi = RowState(ghz(6), 6)
    row = dg.entanglement_report(psi, 3, renyi=[2]).as_row()
    assert row["t"] == 3
    assert abs(row["S_half"] - np.log(2)) < 1e-12
    assert abs(row["S_n2"] - np.log(2)) < 1e-12
    assert abs(row["I_AB"] - np.log(2)) < 1e-12
    assert "I_AB" not in dg.entanglement_report(RowState(ghz(8), 8)).as_row()


def test_purification_starts_maximally_mixed():
    p = ModelParams(8, h_I=0.3)
    a, b = random_orthogonal_pair(build_sector_basis(8, 0, "even"), 2)
    tr = dg.purify_reference(p, a, b, 4)
    assert abs(tr.S_ref[0] - np.log(2)) < 1e-12
    assert np.all(tr.S_ref <= np.log(2) + 1e-12)
    assert np.allclose([np.trace(r).real for r in tr.rho_ref], 1)


def test_purification_unitary_never_purifies():
    p = ModelParams(8, h_I=0.0)
    a, b = random_orthogonal_pair(build_sector_basis(8, 0, "even"), 1)
    tr = dg.purify_reference(p, a, b, 20)
    assert np.abs(tr.S_ref - np.log(2)).max() < 1e-10
    assert tr.t_eps[1e-3] is None


def test_purification_stop_early_and_crossing():
    p = ModelParams(8, h_I=0.6)
    a, b = random_orthogonal_pair(build_sector_basis(8, 0, "even"), 3)
    full = dg.purify_reference(p, a, b, 60, eps_list=(1e-3, 0.5))
    short = dg.purify_reference(p, a, b, 60, eps_list=(1e-3, 0.5), stop_early=True)
    t1, t2 = full.t_eps[1e-3], full.t_eps[0.5]
    assert t1 is not None and t2 is not None and t1 <= t2
    assert short.times[-1] < 60
    assert short.t_eps == full.t_eps


def test_purification_rejects_overlapping_inputs():
    p = ModelParams(6, h_I=0.3)
    a = random_ti_product_state(6, 0)
    with pytest.raises(ValueError):
        dg.purify_reference(p, a, a, 3)


def test_leading_state_of_decoupled_model_is_product():
    p = ModelParams(6, J=0.0, h_I=0.3)
    spec = eig_full(build_dense_T(p), p)
    reps = dg.leading_state_observables(spec, renyi=[2])
    assert len(reps) == 1 and not reps[0].flagged
    assert reps[0].S_vN["half"] < 1e-10


def test_leading_state_in_sector():
    p = ModelParams(8, h_I=0.5)
    b = build_sector_basis(8, 0, "even")
    spec = eig_full(build_dense_T(p, b), p)
    reps = dg.leading_state_observables(spec, b)
    assert 0 <= reps[0].S_vN["half"] <= 4 * np.log(2)
    with pytest.raises(ValueError):
        dg.leading_state_observables(eig_full(build_dense_T(p, b), p, vectors=False), b)
