import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kickedtn.hilbert import (RowState, all_sectors, bitstring, build_sector_basis, lift, make_rng,
                              product_state, project, random_orthogonal_pair, random_product_state,
                              random_sector_state, random_ti_product_state, reflection_matrix,
                              translation_matrix)


def brute_force_dim(L, k, parity):
    """Rank of the sector projector built from explicit permutation matrices."""
    n = 1 << L
    T = translation_matrix(L).toarray()
    R = reflection_matrix(L).toarray()
    P = sum(np.exp(-2j * np.pi * k * m / L) * np.linalg.matrix_power(T, m) for m in range(L)) / L
    if parity != "none":
        sign = 1 if parity == "even" else -1
        P = P @ (np.eye(n) + sign * R) / 2
    return int(round(np.trace(P).real))


def test_l2_even_sector_by_hand():
    b = build_sector_basis(2, 0, "even")
    assert b.dim == 3
    vecs = b.dense_isometry()
    expected = {0: [1, 0, 0, 0], 1: [0, 1 / np.sqrt(2), 1 / np.sqrt(2), 0], 3: [0, 0, 0, 1]}
    for rep, col in zip(b.representatives, vecs.T):
        assert np.allclose(col, expected[int(rep)])


@pytest.mark.parametrize("L", [3, 4, 5, 6])
def test_dims_match_brute_force_projector(L):
    for b in all_sectors(L):
        assert b.dim == brute_force_dim(L, b.momentum_k, b.reflection_parity)


@pytest.mark.parametrize("L", range(2, 13))
def test_completeness(L):
    assert sum(b.dim for b in all_sectors(L)) == 2**L


@pytest.mark.parametrize("L", [2, 4, 5, 8])
def test_lifted_bases_orthonormal(L):
    for b in all_sectors(L):
        if b.dim == 0:
            continue
        B = b.dense_isometry()
        assert np.abs(B.conj().T @ B - np.eye(b.dim)).max() < 1e-12


@pytest.mark.parametrize("L", [4, 6, 8])
def test_translation_commutes_with_sector_projector(L):
    T = translation_matrix(L).toarray()
    for b in all_sectors(L):
        B = b.dense_isometry()
        P = B @ B.conj().T
        assert np.linalg.norm(T @ P - P @ T, 2) < 1e-10


def test_sector_is_momentum_eigenspace():
    L = 6
    T = translation_matrix(L).toarray()
    for b in all_sectors(L):
        B = b.dense_isometry()
        # site j -> j+1 acts on momentum-k vectors as the phase e^{2 pi i k / L}
        phase = np.exp(2j * np.pi * b.momentum_k / L)
        assert np.abs(T @ B - phase * B).max() < 1e-12


def test_invalid_sector_arguments():
    with pytest.raises(ValueError):
        build_sector_basis(6, 1, "even")
    with pytest.raises(ValueError):
        build_sector_basis(6, 6, "none")
    with pytest.raises(ValueError):
        build_sector_basis(1, 0, "even")
    with pytest.raises(ValueError):
        build_sector_basis(25, 0, "even")
    with pytest.raises(ValueError):
        build_sector_basis(4, 0, "bogus")
    # k = L/2 carries a reflection parity
    assert build_sector_basis(6, 3, "odd").dim > 0


def test_lift_of_l2_representative_01():
    b = build_sector_basis(2, 0, "even")
    idx = int(np.flatnonzero(b.representatives == 0b01)[0])
    e = np.zeros(b.dim, complex)
    e[idx] = 1
    full = lift(RowState(e, 2, b))
    assert np.allclose(full.amplitudes, [0, 1 / np.sqrt(2), 1 / np.sqrt(2), 0])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_lift_project_roundtrip(seed):
    b = build_sector_basis(6, 0, "even")
    s = random_sector_state(b, seed)
    full = lift(s)
    assert abs(full.norm() - 1) < 1e-12
    back = project(full, b)
    assert np.abs(back.amplitudes - s.amplitudes).max() < 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(3, 8))
@settings(max_examples=20, deadline=None)
def test_ti_product_state_lies_in_zero_plus(seed, L):
    psi = random_ti_product_state(L, seed)
    assert abs(psi.norm() - 1) < 1e-12
    zp = project(psi, build_sector_basis(L, 0, "even"))
    assert abs(zp.norm() - 1) < 1e-12
    for k in range(1, L):
        parity = "odd" if 2 * k == L else "none"
        assert project(psi, build_sector_basis(L, k, parity)).zero
    assert project(psi, build_sector_basis(L, 0, "odd")).zero


def test_product_state_poles_and_determinism():
    up = product_state(4, 0.0, 1.3)
    assert np.allclose(up.amplitudes, np.eye(16)[0])
    a = random_ti_product_state(8, 123)
    b = random_ti_product_state(8, 123)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert not np.array_equal(a.amplitudes, random_ti_product_state(8, 124).amplitudes)


def test_random_product_state_is_a_product():
    psi = random_product_state(6, 5)
    assert abs(psi.norm() - 1) < 1e-12
    # every bipartition has Schmidt rank one
    m = psi.amplitudes.reshape(8, 8)
    s = np.linalg.svd(m, compute_uv=False)
    assert s[1] < 1e-12


def test_orthogonal_pair_and_norms():
    b = build_sector_basis(8, 0, "even")
    for seed in range(10):
        a, c = random_orthogonal_pair(b, seed)
        assert abs(np.vdot(a.amplitudes, c.amplitudes)) < 1e-12
        assert abs(a.norm() - 1) < 1e-12 and abs(c.norm() - 1) < 1e-12
    with pytest.raises(ValueError):
        random_orthogonal_pair(build_sector_basis(2, 1, "odd"), 0)


def test_overlap_statistics_of_random_sector_states():
    b = build_sector_basis(8, 0, "even")
    vals = np.array([abs(np.vdot(random_sector_state(b, 2 * i).amplitudes,
                                 random_sector_state(b, 2 * i + 1).amplitudes)) ** 2
                     for i in range(1000)])
    # |<a|b>|^2 for independent complex Gaussian unit vectors: mean 1/dim, std ~ 1/dim
    assert abs(vals.mean() - 1 / b.dim) < 3 * vals.std(ddof=1) / np.sqrt(len(vals))


def test_normalize_tracks_log_norm_and_rejects_zero():
    s = RowState(np.array([3.0, 4.0], complex), 1)
    s.normalize()
    assert abs(s.norm() - 1) < 1e-12
    assert abs(s.log_norm - np.log(5)) < 1e-14
    with pytest.raises(FloatingPointError):
        RowState(np.zeros(4, complex), 2).normalize()


def test_philox_seed_reproducible():
    assert np.array_equal(make_rng(7).random(5), make_rng(7).random(5))


def test_bit_convention_site_zero_is_most_significant():
    assert bitstring(0b100, 3) == "100"
    # translation moves site 0 content to site 1
    T = translation_matrix(3).toarray()
    e = np.zeros(8)
    e[0b100] = 1
    assert (T @ e)[0b010] == 1


def test_small_sector_dimensions_enumerated():
    # count orbits under translation+reflection without repeated elements vanishing
    L = 4
    seen = set()
    count = 0
    for bits in itertools.product("01", repeat=L):
        s = "".join(bits)
        orbit = {s[i:] + s[:i] for i in range(L)}
        orbit |= {o[::-1] for o in orbit}
        key = min(orbit)
        if key not in seen:
            seen.add(key)
            count += 1
    assert build_sector_basis(4, 0, "even").dim == count
