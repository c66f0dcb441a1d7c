"""Row Hilbert space of L qubits: computational basis, symmetry sectors, states.

Bit convention: site ``j`` of a row is stored in bit ``L - 1 - j`` of the
integer label, so the label read in binary (most significant bit first) is the
bitstring ``s_0 s_1 ... s_{L-1}``.  This matches ``np.kron`` ordering, where
site 0 is the slowest index.

Translation moves the content of site ``j`` to site ``j + 1 (mod L)``.
Reflection maps site ``j`` to ``L - 1 - j``; on the ring it fixes the bond
between sites ``L - 1`` and ``0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

PARITIES = ("even", "odd", "none")
L_MAX = 24
ZERO_TOL = 1e-14


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def translate_bits(s: np.ndarray, L: int, shift: int = 1) -> np.ndarray:
    """Translate every label in ``s`` by ``shift`` sites (site j -> j + shift)."""
    shift %= L
    if shift == 0:
        return s.copy()
    mask = (1 << L) - 1
    return ((s >> shift) | (s << (L - shift))) & mask


def reflect_bits(s: np.ndarray, L: int) -> np.ndarray:
    """Reverse the bit order of every label (site j -> L - 1 - j)."""
    out = np.zeros_like(s)
    for b in range(L):
        out |= ((s >> b) & 1) << (L - 1 - b)
    return out


def bitstring(s: int, L: int) -> str:
    return format(int(s), f"0{L}b")


def translation_matrix(L: int) -> sp.csr_matrix:
    """Permutation matrix of a one-site translation on the full 2^L space."""
    n = 1 << L
    s = np.arange(n, dtype=np.int64)
    return sp.csr_matrix((np.ones(n), (translate_bits(s, L), s)), shape=(n, n))


def reflection_matrix(L: int) -> sp.csr_matrix:
    n = 1 << L
    s = np.arange(n, dtype=np.int64)
    return sp.csr_matrix((np.ones(n), (reflect_bits(s, L), s)), shape=(n, n))


def _orbit_minima(L: int, with_reflection: bool) -> np.ndarray:
    s = np.arange(1 << L, dtype=np.int64)
    best = s.copy()
    images = [s]
    if with_reflection:
        images.append(reflect_bits(s, L))
    for img in images:
        t = img
        for _ in range(L):
            np.minimum(best, t, out=best)
            t = translate_bits(t, L)
    return best


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Orthonormal basis of a (momentum, reflection parity) block.

    Basis vectors are ``P |r>`` normalized, where ``r`` runs over orbit
    representatives (smallest label in the orbit) and ``P`` is the group
    projector with the sector's characters.  Only representatives and norms
    are stored; the ``2^L x dim`` isometry is built on first use.
    """

    L: int
    momentum_k: int
    reflection_parity: str
    representatives: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.representatives)

    @property
    def label(self) -> str:
        sign = {"even": "+", "odd": "-", "none": ""}[self.reflection_parity]
        return f"{self.momentum_k}{sign}"

    def _group_terms(self):
        """Yield (image labels, coefficients) of the unnormalized projector."""
        L, k = self.L, self.momentum_k
        reps = self.representatives
        reflections = [(reps, 1.0)]
        if self.reflection_parity != "none":
            sign = 1.0 if self.reflection_parity == "even" else -1.0
            reflections.append((reflect_bits(reps, L), sign))
        for base, sign in reflections:
            t = base
            for ell in range(L):
                phase = sign * np.exp(-2j * np.pi * k * ell / L)
                yield t, phase
                t = translate_bits(t, L)

    def _unnormalized(self) -> sp.csc_matrix:
        rows, cols, vals = [], [], []
        col = np.arange(self.dim)
        for img, coef in self._group_terms():
            rows.append(img)
            cols.append(col)
            vals.append(np.full(self.dim, coef, dtype=complex))
        if not rows:
            return sp.csc_matrix((1 << self.L, 0), dtype=complex)
        B = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(1 << self.L, self.dim),
        ).tocsc()
        B.sum_duplicates()
        return B

    @cached_property
    def isometry(self) -> sp.csc_matrix:
        """Sparse ``2^L x dim`` matrix whose columns are the basis vectors."""
        B = self._unnormalized() @ sp.diags(1.0 / self.norms)
        B = B.tocsc()
        B.eliminate_zeros()
        return B

    def dense_isometry(self) -> np.ndarray:
        return self.isometry.toarray()


def _check_sector_args(L: int, k: int, parity: str) -> None:
    if not 2 <= L <= L_MAX:
        raise ValueError(f"L={L} outside supported range [2, {L_MAX}]")
    if not 0 <= k < L:
        raise ValueError(f"momentum k={k} outside [0, {L})")
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")
    if parity != "none" and not (k == 0 or 2 * k == L):
        raise ValueError(
            f"reflection parity {parity!r} only defined for k=0 or k=L/2 (got k={k}, L={L})"
        )


def build_sector_basis(L: int, k: int = 0, parity: str = "even") -> SectorBasis:
    """Basis of the momentum-``k`` sector with the given reflection parity.

    ``parity='none'`` gives the full momentum-``k`` block.  Representatives are
    lexicographically smallest bitstrings of each translation (+ reflection,
    when a parity is requested) orbit; orbits whose projection vanishes in the
    sector are dropped.
    """
    _check_sector_args(L, k, parity)
    with_refl = parity != "none"
    minima = _orbit_minima(L, with_refl)
    candidates = np.flatnonzero(minima == np.arange(1 << L)).astype(np.int64)

    probe = SectorBasis(L, k, parity, candidates, np.ones(len(candidates)))
    B = probe._unnormalized()
    norms = np.sqrt(np.asarray(abs(B).power(2).sum(axis=0)).ravel())
    keep = norms > 1e-8
    return SectorBasis(L, k, parity, candidates[keep], norms[keep])


def all_sectors(L: int) -> list[SectorBasis]:
    """Every (k, parity) block; dims sum to 2^L."""
    out = []
    for k in range(L):
        if k == 0 or 2 * k == L:
            out += [build_sector_basis(L, k, "even"), build_sector_basis(L, k, "odd")]
        else:
            out.append(build_sector_basis(L, k, "none"))
    return out


@dataclass
class RowState:
    """Amplitude vector of a row, in the full space (``basis=None``) or a sector.

    ``log_norm`` accumulates the logarithms of the norms divided out during
    non-unitary evolution, so the unnormalized vector is
    ``exp(log_norm) * amplitudes``.
    """

    amplitudes: np.ndarray
    L: int
    basis: SectorBasis | None = None
    log_norm: float = 0.0
    zero: bool = False

    @property
    def in_sector(self) -> bool:
        return self.basis is not None

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> RowState:
        nrm = self.norm()
        if nrm < ZERO_TOL or not np.isfinite(nrm):
            raise FloatingPointError(f"cannot normalize state with norm {nrm}")
        self.amplitudes = self.amplitudes / nrm
        self.log_norm += float(np.log(nrm))
        if not np.isfinite(self.log_norm):
            raise FloatingPointError("log-norm accumulator overflowed")
        return self

    def copy(self) -> RowState:
        return RowState(self.amplitudes.copy(), self.L, self.basis, self.log_norm, self.zero)


def lift(state: RowState) -> RowState:
    """Embed a sector state into the full ``2^L`` space."""
    if state.basis is None:
        raise TypeError("state already lives in the full space")
    amps = state.basis.isometry @ state.amplitudes
    return RowState(np.asarray(amps), state.L, None, state.log_norm, state.zero)


def project(state: RowState, basis: SectorBasis) -> RowState:
    """Component of a full-space state inside ``basis``.

    If the projected norm is below 1e-14 the returned state has ``zero=True``
    and the caller decides what to do.
    """
    if state.basis is not None:
        raise TypeError("project expects a full-space state")
    if basis.L != state.L:
        raise ValueError("basis and state have different L")
    amps = np.asarray(basis.isometry.conj().T @ state.amplitudes)
    out = RowState(amps, state.L, basis, state.log_norm)
    out.zero = bool(np.linalg.norm(amps) < ZERO_TOL)
    return out


def product_state(L: int, theta: float, phi: float) -> RowState:
    """Translation-invariant product state [cos(t/2)|0> + e^{i p} sin(t/2)|1>]^{(x)L}."""
    site = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    psi = np.ones(1, dtype=complex)
    for _ in range(L):
        psi = np.kron(psi, site)
    return RowState(psi, L)


def random_bloch_angles(rng: np.random.Generator) -> tuple[float, float]:
    """Haar-uniform point on the Bloch sphere as (theta, phi)."""
    cos_t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * np.pi)
    return float(np.arccos(cos_t)), float(phi)


def random_ti_product_state(L: int, seed: int) -> RowState:
    theta, phi = random_bloch_angles(make_rng(seed))
    return product_state(L, theta, phi)


def _complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def random_sector_state(basis: SectorBasis, seed: int) -> RowState:
    rng = make_rng(seed)
    v = _complex_gaussian(rng, basis.dim)
    return RowState(v / np.linalg.norm(v), basis.L, basis)


def random_orthogonal_pair(basis: SectorBasis, seed: int) -> tuple[RowState, RowState]:
    """Two random sector states made orthogonal by Gram-Schmidt."""
    if basis.dim < 2:
        raise ValueError(f"sector {basis.label} has dim {basis.dim} < 2")
    rng = make_rng(seed)
    a = _complex_gaussian(rng, basis.dim)
    b = _complex_gaussian(rng, basis.dim)
    a /= np.linalg.norm(a)
    b -= np.vdot(a, b) * a
    b -= np.vdot(a, b) * a
    b /= np.linalg.norm(b)
    return RowState(a, basis.L, basis), RowState(b, basis.L, basis)


def random_product_state(L: int, seed: int) -> RowState:
    """Product state with an independent Haar-random Bloch vector on every site."""
    rng = make_rng(seed)
    psi = np.ones(1, dtype=complex)
    for _ in range(L):
        theta, phi = random_bloch_angles(rng)
        psi = np.kron(psi, [np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    return RowState(psi, L)
