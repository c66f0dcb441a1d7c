import itertools

import numpy as np
import pytest

from kickedtn.hilbert import build_sector_basis
from kickedtn.spectral import (EdgeFitError, EdgeProfile, SpectrumResult, deformed_haar_spectrum, edge_metrics,
                               eig_full, erfc_profile, fit_edge, leading_eigs, log_abs_det_error,
                               pairing_check, radial_density, spectral_gap)
from kickedtn.transfer import ModelParams, build_dense_T, single_site_unitary


def u0_log_mags(p):
    mags = np.sort(np.abs(np.linalg.eigvals(single_site_unitary(p))))[::-1]
    return np.log(mags)


def synthetic_profile(rho_e=0.1, w=0.02, amp=50.0, lo=-0.2, hi=0.3, n=251, shift=0.0):
    edges = np.linspace(lo, hi, n + 1) + shift
    centers = 0.5 * (edges[1:] + edges[:-1])
    return EdgeProfile(edges, erfc_profile(centers, amp, rho_e + shift, w), 1, 1.0)


def test_unitary_full_space_on_circle():
    p = ModelParams(6, h_I=0.0)
    spec = eig_full(build_dense_T(p), p, vectors=False)
    assert np.abs(spec.rho).max() < 1e-10
    assert spectral_gap(spec) < 1e-10


def test_decoupled_eigenvalues_are_products():
    p = ModelParams(4, J=0.0, h_I=0.3)
    u = np.linalg.eigvals(single_site_unitary(p))
    prods = np.array([np.prod(c) for c in itertools.product(u, repeat=4)])
    spec = eig_full(build_dense_T(p), p, vectors=False)
    got = np.sort_complex(np.round(spec.eigenvalues, 10))
    want = np.sort_complex(np.round(prods, 10))
    assert np.abs(got - want).max() < 1e-9


def test_sorted_by_magnitude():
    p = ModelParams(6, h_I=0.3)
    spec = eig_full(build_dense_T(p), p)
    assert np.all(np.diff(spec.rho) <= 1e-12)


def test_biorthogonality_and_reconstruction_small_sector():
    p = ModelParams(8, h_I=0.3)
    b = build_sector_basis(8, 0, "even")
    T = build_dense_T(p, b)
    spec = eig_full(T, p, label=b.label)
    assert spec.biorthogonality_error() < 1e-8
    assert spec.reconstruction_error(T) < 1e-7
    assert log_abs_det_error(T, spec) < 1e-8


def test_dense_guard():
    with pytest.raises(MemoryError):
        eig_full(np.eye(8), max_dim=4)


def test_leading_eigs_matches_dense():
    p = ModelParams(12, h_I=0.4)
    b = build_sector_basis(12, 0, "even")
    lead = leading_eigs(p, b, m=2)
    ref = eig_full(build_dense_T(p, b), p, vectors=False)
    assert lead.converged
    assert np.abs(lead.rho - ref.rho[:2]).max() < 1e-6


def test_power_mode_matches_subspace():
    p = ModelParams(8, h_I=0.5)
    b = build_sector_basis(8, 0, "even")
    a = leading_eigs(p, b, m=1, mode="power", max_iter=5000)
    c = leading_eigs(p, b, m=1)
    assert abs(a.rho[0] - c.rho[0]) < 1e-6
    with pytest.raises(ValueError):
        leading_eigs(p, b, m=2, mode="power")


def test_unitary_leading_eigs_flagged():
    p = ModelParams(8, h_I=0.0)
    lead = leading_eigs(p, build_sector_basis(8, 0, "even"), m=2, max_iter=200)
    assert not lead.converged
    assert np.all(np.isfinite(lead.residuals))


def test_decoupled_leading_log_magnitude():
    p = ModelParams(6, J=0.0, h_I=0.3)
    a, _ = u0_log_mags(p)
    lead = leading_eigs(p, None, m=1, mode="power", max_iter=5000)
    assert abs(lead.rho[0] - 6 * a) < 1e-8


def test_decoupled_gap_one_site_flipped():
    p = ModelParams(6, J=0.0, h_I=0.3)
    a, b = u0_log_mags(p)
    spec = eig_full(build_dense_T(p), p, vectors=False)
    assert abs(spectral_gap(spec) - (a - b)) < 1e-12
    # the first excited level is L-fold degenerate; the multiplet variant still sees one leader
    assert abs(spectral_gap(spec, multiplet=True) - (a - b)) < 1e-12


def test_multiplet_gap_skips_degenerate_leaders():
    lam = np.array([2.0, -2.0, 1.0, 0.5])
    assert spectral_gap(lam) < 1e-15
    assert abs(spectral_gap(lam, multiplet=True) - np.log(2)) < 1e-15
    with pytest.raises(ValueError):
        spectral_gap(np.array([1.0]))


def test_radial_density_unitary_is_delta():
    p = ModelParams(6, h_I=0.0)
    spec = eig_full(build_dense_T(p), p, vectors=False)
    prof = radial_density([spec])
    assert len(prof.density) == 1
    assert abs(prof.integral() - 64) < 1e-9
    assert prof.bin_edges[0] < 0 < prof.bin_edges[-1]


def test_radial_density_duplicate_spectra():
    p = ModelParams(6, h_I=0.2)
    spec = eig_full(build_dense_T(p), p, vectors=False)
    one = radial_density([spec], bins=30)
    two = radial_density([spec, spec], bins=30)
    assert np.allclose(one.density, two.density)
    assert np.allclose(one.bin_edges, two.bin_edges)
    full = radial_density([spec], bins=30, norm_target=128)
    assert abs(full.integral() - 128) < 1e-9


def test_radial_density_empty():
    with pytest.raises(ValueError):
        radial_density([])


def test_fit_recovers_synthetic_erfc():
    fit = fit_edge(synthetic_profile())
    assert abs(fit.rho_e - 0.10) < 0.001
    assert abs(fit.w - 0.02) < 0.0002
    assert fit.residual < 1e-3


def test_fit_is_shift_equivariant():
    a = fit_edge(synthetic_profile())
    b = fit_edge(synthetic_profile(shift=0.037))
    assert abs((b.rho_e - a.rho_e) - 0.037) < 1e-6
    assert abs(b.w - a.w) < 1e-6


def test_tail_weight_closed_form():
    prof = synthetic_profile(n=1001)
    m = edge_metrics(prof)
    assert abs(m.N_beyond - m.N_model) / m.N_model < 0.02
    assert abs(m.N_model - 50 * 0.02 / np.sqrt(np.pi)) / m.N_model < 0.02


def test_isolated_leader_offset():
    prof = synthetic_profile()
    fit = fit_edge(prof)
    spectra = [np.exp(np.array([-0.1, 0.0, fit.rho_e + 0.05])), np.exp(np.array([0.0, fit.rho_e + 0.07]))]
    m = edge_metrics(prof, fit, spectra)
    assert np.allclose(m.rho0_minus_rho_e, [0.05, 0.07])


def test_two_annuli_rejected():
    edges = np.linspace(-0.2, 0.6, 321)
    c = 0.5 * (edges[1:] + edges[:-1])
    y = erfc_profile(c, 50, 0.1, 0.02) + np.exp(-((c - 0.4) / 0.03) ** 2) * 30
    with pytest.raises(EdgeFitError):
        fit_edge(EdgeProfile(edges, y, 1, 1.0))


def test_too_few_bins_rejected():
    with pytest.raises(EdgeFitError):
        fit_edge(synthetic_profile(n=6))


@pytest.mark.parametrize("h_I", [0.1, 0.3])
def test_pairing_at_quarter_pi(h_I):
    p = ModelParams(6, h_I=h_I)
    spec = eig_full(build_dense_T(p), p, vectors=False)
    pc = pairing_check(spec, p.J, 6)
    assert pc.status == "ok"
    assert pc.multiset_deviation < 1e-8
    assert pc.phase_deviation < 1e-8


def test_pairing_not_applicable():
    p = ModelParams(6, J=0.3, h_I=0.1)
    spec = eig_full(build_dense_T(p), p, vectors=False)
    assert pairing_check(spec, 0.3, 6).status == "not-applicable"
    q = ModelParams(6, h_I=0.1, boundary="open")
    assert pairing_check(eig_full(build_dense_T(q), q, vectors=False), q.J, 6).status == "not-applicable"


def test_pairing_trivial_in_unitary_limit():
    p = ModelParams(6, h_I=0.0)
    pc = pairing_check(eig_full(build_dense_T(p), p, vectors=False), p.J, 6)
    assert pc.multiset_deviation < 1e-10


def test_deformed_haar_determinant():
    lam = deformed_haar_spectrum(6, 0.2, seed=4)
    # det of the deformation is exp(h_I * total magnetization summed over all states) = 1
    assert abs(np.log(np.abs(lam)).sum()) < 1e-9
    assert np.array_equal(lam, deformed_haar_spectrum(6, 0.2, seed=4))


def test_spectrum_result_from_arrays():
    s = SpectrumResult(np.array([2.0, 1j]))
    assert s.dim == 2
    assert np.allclose(s.rho, [np.log(2), 0])
    assert np.allclose(s.phi, [0, np.pi / 2])
