"""Kicked-Ising row transfer matrix.

    T = exp(-i g sum_j X_j) exp(-i J sum_j Z_j Z_{j+1} - i sum_j h_j Z_j)

with complex field ``h_j = h_R,j + i h_I``.  Spin convention: ``s = +1`` is
``|0>`` (Z eigenvalue +1), ``s = -1`` is ``|1>``.  Under periodic boundaries
``Z_L == Z_0``; under open boundaries the wrap bond is dropped and all on-site
terms are kept.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import NamedTuple

import numpy as np

from .hilbert import RowState, SectorBasis, lift, make_rng, project

BOUNDARIES = ("periodic", "open")
MAX_FULL_DIM = 2**14
MAX_SECTOR_DIM = 2**15

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Everything that fixes T.  ``h_R_sites`` overrides ``h_R`` site by site."""

    L: int
    J: float = np.pi / 4
    g: float = -np.pi / 4
    h_R: float = np.pi / 6
    h_I: float = 0.0
    boundary: str = "periodic"
    h_R_sites: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.h_R_sites is not None:
            object.__setattr__(self, "h_R_sites", tuple(float(x) for x in self.h_R_sites))
            if len(self.h_R_sites) != self.L:
                raise ValueError("h_R_sites must have length L")

    @property
    def h(self) -> complex:
        return complex(self.h_R, self.h_I)

    @property
    def translation_invariant(self) -> bool:
        return self.h_R_sites is None and self.boundary == "periodic"

    def site_fields(self) -> np.ndarray:
        """Complex field on every site."""
        if self.h_R_sites is None:
            return np.full(self.L, self.h, dtype=complex)
        return np.asarray(self.h_R_sites, dtype=float) + 1j * self.h_I

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)

    def to_config(self) -> dict[str, str]:
        """Flat key/value block; floats in repr form so they round-trip exactly."""
        out = {
            "L": str(self.L),
            "J": repr(float(self.J)),
            "g": repr(float(self.g)),
            "h_R": repr(float(self.h_R)),
            "h_I": repr(float(self.h_I)),
            "boundary": self.boundary,
        }
        if self.h_R_sites is not None:
            out["h_R_sites"] = ",".join(repr(x) for x in self.h_R_sites)
        return out

    @classmethod
    def from_config(cls, block) -> ModelParams:
        kw = {"L": int(block["L"])}
        for key in ("J", "g", "h_R", "h_I"):
            if key in block:
                kw[key] = _parse_float(block[key])
        if "boundary" in block:
            kw["boundary"] = _parse_boundary(block["boundary"])
        if block.get("h_R_sites"):
            kw["h_R_sites"] = tuple(float(x) for x in str(block["h_R_sites"]).split(","))
        return cls(**kw)


def _parse_boundary(value: str) -> str:
    value = str(value).strip().lower()
    return {"pbc": "periodic", "obc": "open"}.get(value, value)


def _parse_float(value) -> float:
    """Accept plain floats and simple multiples of pi such as ``pi/6``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().replace(" ", "")
    if "pi" not in text:
        return float(text)
    sign = -1.0 if text.startswith("-") else 1.0
    text = text.lstrip("+-")
    num, _, den = text.partition("/")
    coef = num.replace("pi", "").rstrip("*") or "1"
    return sign * float(coef) * np.pi / (float(den) if den else 1.0)


def field_from_bloch(theta: float, phi: float) -> complex:
    """Complex field of the product-state overlap for Bloch angles (theta, phi)."""
    if not 0.0 < theta < np.pi:
        raise ValueError(f"theta={theta} at or beyond a pole: imaginary field diverges")
    h_R = -phi / 2
    h_I = -0.5 * np.log(np.tan(theta / 2))
    if not np.isfinite(h_I):
        raise ValueError("imaginary field diverges")
    return complex(h_R, h_I)


def kick_matrix(g: float) -> np.ndarray:
    """exp(-i g X)."""
    return np.cos(g) * IDENTITY - 1j * np.sin(g) * PAULI_X


def field_matrix(h: complex) -> np.ndarray:
    """exp(-i h Z) for complex h."""
    return np.diag([np.exp(-1j * h), np.exp(1j * h)])


def single_site_unitary(params: ModelParams, h: complex | None = None) -> np.ndarray:
    """U_0 = exp(-i g X) exp(-i h Z) (non-unitary for complex h)."""
    return kick_matrix(params.g) @ field_matrix(params.h if h is None else h)


def spins_of(labels: np.ndarray, L: int) -> np.ndarray:
    """(..., L) array of +-1 spins for integer labels (site 0 = most significant bit)."""
    labels = np.asarray(labels, dtype=np.int64)
    shifts = np.arange(L - 1, -1, -1, dtype=np.int64)
    bits = (labels[..., None] >> shifts) & 1
    return 1 - 2 * bits.astype(np.int8)


def _bond_pairs(L: int, boundary: str) -> list[tuple[int, int]]:
    pairs = [(j, j + 1) for j in range(L - 1)]
    if boundary == "periodic":
        pairs.append((L - 1, 0))
    return pairs


def _diag_exponent(spins: np.ndarray, params: ModelParams) -> np.ndarray:
    """-i J sum s s' - i sum h s, vectorized over leading axes of ``spins``."""
    zz = np.zeros(spins.shape[:-1])
    for a, b in _bond_pairs(params.L, params.boundary):
        zz = zz + spins[..., a].astype(float) * spins[..., b]
    hs = spins.astype(float) @ params.site_fields()
    return -1j * params.J * zz - 1j * hs


@lru_cache(maxsize=16)
def diagonal_phases(params: ModelParams) -> np.ndarray:
    """Diagonal of exp(-i J sum ZZ - i sum h Z) over all 2^L labels."""
    L = params.L
    n = 1 << L
    labels = np.arange(n, dtype=np.int64)
    zz = np.zeros(n)
    hs = np.zeros(n, dtype=complex)
    fields = params.site_fields()
    prev = None
    first = None
    for j in range(L):
        s = (1 - 2 * ((labels >> (L - 1 - j)) & 1)).astype(float)
        hs += fields[j] * s
        if prev is not None:
            zz += prev * s
        else:
            first = s
        prev = s
    if params.boundary == "periodic":
        zz += prev * first
    d = np.exp(-1j * params.J * zz - 1j * hs)
    d.setflags(write=False)
    return d


def _apply_kick(psi: np.ndarray, L: int, g: float) -> np.ndarray:
    c, s = np.cos(g), -1j * np.sin(g)
    for j in range(L):
        x = psi.reshape(1 << j, 2, -1)
        a0 = x[:, 0, :].copy()
        a1 = x[:, 1, :]
        x[:, 0, :] = c * a0 + s * a1
        x[:, 1, :] = s * a0 + c * a1
    return psi


def apply_T_array(params: ModelParams, psi: np.ndarray) -> np.ndarray:
    """Matrix-free T @ psi on the full space; trailing axes are batch axes.

    Diagonal phase pass followed by L single-site kicks, O(L 2^L) per vector.
    """
    n = 1 << params.L
    if psi.shape[0] != n:
        raise ValueError(f"expected leading dimension {n}, got {psi.shape[0]}")
    d = diagonal_phases(params)
    # in-place kicks need a C-contiguous buffer so reshape returns views
    out = np.ascontiguousarray(d.reshape((n,) + (1,) * (psi.ndim - 1)) * psi, dtype=complex)
    out = _apply_kick(out, params.L, params.g)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("amplitude overflow in apply_T; renormalize between steps")
    return out


def apply_T(params: ModelParams, state: RowState) -> RowState:
    """T |state>, keeping the state's basis (sector states go through the full space)."""
    if state.L != params.L:
        raise ValueError("state and params disagree on L")
    if state.basis is None:
        return RowState(apply_T_array(params, state.amplitudes), state.L, None, state.log_norm)
    if not params.translation_invariant:
        raise ValueError("sector evolution requires translation-invariant periodic params")
    full = apply_T_array(params, lift(state).amplitudes)
    return project(RowState(full, state.L, None, state.log_norm), state.basis)


def apply_T_sector(params: ModelParams, basis: SectorBasis, x: np.ndarray) -> np.ndarray:
    """T restricted to a sector, acting on coefficient arrays (dim,) or (dim, m)."""
    B = basis.isometry
    return np.asarray(B.conj().T @ apply_T_array(params, np.asarray(B @ x)))


def build_dense_T(
    params: ModelParams,
    basis: SectorBasis | None = None,
    max_full_dim: int = MAX_FULL_DIM,
    max_sector_dim: int = MAX_SECTOR_DIM,
) -> np.ndarray:
    """Dense matrix of T on the full space or restricted to ``basis``."""
    n = 1 << params.L
    if basis is None:
        if n > max_full_dim:
            raise MemoryError(f"full dimension {n} exceeds guard {max_full_dim}")
        K = reduce(np.kron, [kick_matrix(params.g)] * params.L)
        return K * diagonal_phases(params)[None, :]
    if basis.L != params.L:
        raise ValueError("basis and params disagree on L")
    if basis.dim > max_sector_dim:
        raise MemoryError(f"sector dimension {basis.dim} exceeds guard {max_sector_dim}")
    if not params.translation_invariant:
        raise ValueError("sector restriction requires translation-invariant periodic params")
    # T maps the sector into itself and distinct orbits have disjoint support, so
    # coefficient a of T|b> is (T|b>)[rep_a] / <rep_a|a>; the kick part of
    # <rep|T|s> depends only on the Hamming distance between rep and s.
    B = basis.isometry.tocsr()
    reps = basis.representatives
    at_rep = np.asarray(B[reps, np.arange(basis.dim)]).ravel()
    DB = B.multiply(diagonal_phases(params)[:, None]).tocsr()
    c, sn = np.cos(params.g), -1j * np.sin(params.g)
    table = np.array([c ** (params.L - d) * sn ** d for d in range(params.L + 1)])
    labels = np.arange(n, dtype=np.int64)
    out = np.empty((basis.dim, basis.dim), dtype=complex)
    rows_per_chunk = max(1, (1 << 22) // n)
    for start in range(0, basis.dim, rows_per_chunk):
        r = reps[start:start + rows_per_chunk]
        K_rows = table[np.bitwise_count(r[:, None] ^ labels[None, :])]
        out[start:start + len(r)] = np.asarray((DB.T @ K_rows.T).T) / at_rep[start:start + len(r), None]
    return out


def _dense_T_sector_reference(params: ModelParams, basis: SectorBasis, batch: int = 256) -> np.ndarray:
    """B^H T B column block by column block (slow path, used as a cross-check)."""
    B = basis.isometry
    out = np.empty((basis.dim, basis.dim), dtype=complex)
    for start in range(0, basis.dim, batch):
        cols = B[:, start:start + batch].toarray()
        out[:, start:start + batch] = B.conj().T @ apply_T_array(params, cols)
    return out


class Overlap(NamedTuple):
    """<psi_f|T^t|psi_i> = mantissa * exp(log_magnitude)."""

    mantissa: complex
    log_magnitude: float
    zero: bool = False

    @property
    def value(self) -> complex:
        if self.zero:
            return 0j
        return self.mantissa * np.exp(self.log_magnitude)


def _full_amplitudes(state: RowState) -> np.ndarray:
    return lift(state).amplitudes if state.basis is not None else state.amplitudes


def overlap_via_powers(params: ModelParams, psi_i: RowState, psi_f: RowState, t: int) -> Overlap:
    """<psi_f|T^t|psi_i> by repeated application with per-step renormalization."""
    if t < 0:
        raise ValueError("t must be non-negative")
    v = np.array(_full_amplitudes(psi_i), dtype=complex)
    f = _full_amplitudes(psi_f)
    log_mag = 0.0
    for step in range(t + 1):
        if step > 0:
            v = apply_T_array(params, v)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            return Overlap(0j, -np.inf, True)
        v /= nrm
        log_mag += np.log(nrm)
    return Overlap(complex(np.vdot(f, v)), float(log_mag))


def _label(s, L: int) -> int:
    if isinstance(s, str):
        if len(s) != L or set(s) - {"0", "1"}:
            raise ValueError(f"bad bitstring {s!r} for L={L}")
        return int(s, 2)
    return int(s)


def transfer_element(params: ModelParams, s_next: np.ndarray, s_prev: np.ndarray) -> np.ndarray:
    """<s'|T|s> for spin arrays of shape (..., L), straight from the spin-sum weights."""
    same = s_next == s_prev
    kick = np.where(same, np.cos(params.g), -1j * np.sin(params.g)).prod(axis=-1)
    return kick * np.exp(_diag_exponent(s_prev, params))


def spin_sum_oracle(params: ModelParams, s_initial, s_final, t: int,
                    max_terms_log2: int = 24, chunk_log2: int = 16) -> complex:
    """<s_f|T^t|s_i> summed explicitly over all intermediate row configurations."""
    L = params.L
    if t < 0:
        raise ValueError("t must be non-negative")
    si = spins_of(np.array(_label(s_initial, L)), L)
    sf = spins_of(np.array(_label(s_final, L)), L)
    if t == 0:
        return complex(np.all(si == sf))
    n_free = L * (t - 1)
    if n_free > max_terms_log2:
        raise MemoryError(f"2^{n_free} intermediate configurations exceed guard 2^{max_terms_log2}")
    if n_free == 0:
        return complex(transfer_element(params, sf, si))
    total = 0j
    chunk = 1 << min(chunk_log2, n_free)
    row_mask = (1 << L) - 1
    for start in range(0, 1 << n_free, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n_free), dtype=np.int64)
        rows = [spins_of((idx >> (L * m)) & row_mask, L) for m in range(t - 1)]
        weight = transfer_element(params, rows[0], si)
        for m in range(1, t - 1):
            weight = weight * transfer_element(params, rows[m], rows[m - 1])
        weight = weight * transfer_element(params, sf, rows[-1])
        total += weight.sum()
    return complex(total)


@dataclass(frozen=True)
class MpoTensor:
    """Local tensor M with T = tr(M^L): ``ops[a, b]`` is a 2x2 site operator."""

    ops: np.ndarray  # (bond_left, bond_right, phys_out, phys_in)
    u0: np.ndarray

    @property
    def bond_dim(self) -> int:
        return self.ops.shape[0]


def build_mpo(params: ModelParams, h: complex | None = None) -> MpoTensor:
    u0 = single_site_unitary(params, h)
    cJ, sJ = np.cos(params.J), np.sin(params.J)
    ops = np.empty((2, 2, 2, 2), dtype=complex)
    ops[0, 0] = cJ * u0
    ops[0, 1] = cJ * u0 @ PAULI_Z
    ops[1, 0] = -1j * sJ * u0 @ PAULI_Z
    ops[1, 1] = -1j * sJ * u0
    return MpoTensor(ops, u0)


def contract_mpo_ring(mpo: MpoTensor, L: int) -> np.ndarray:
    """Dense tr(M^L) over the virtual bond (periodic row)."""
    acc = mpo.ops.copy()
    for _ in range(L - 1):
        D = acc.shape[0]
        n = acc.shape[2]
        acc = np.einsum("abij,bckl->acikjl", acc, mpo.ops).reshape(D, D, 2 * n, 2 * n)
    return np.einsum("aaij->ij", acc)


@dataclass(frozen=True)
class DisorderRealization:
    h_R_sites: tuple[float, ...]
    h_I: float
    seed: int

    @property
    def L(self) -> int:
        return len(self.h_R_sites)

    def params(self, J: float = np.pi / 4, g: float = -np.pi / 4,
               boundary: str = "periodic") -> ModelParams:
        mean = float(np.mean(self.h_R_sites))
        return ModelParams(self.L, J, g, mean, self.h_I, boundary, self.h_R_sites)


def sample_disorder(L: int, mean: float, sigma: float, h_I: float, seed: int) -> DisorderRealization:
    """Per-site real fields drawn i.i.d. from Normal(mean, sigma)."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = make_rng(seed)
    fields = mean + sigma * rng.standard_normal(L)
    return DisorderRealization(tuple(float(x) for x in fields), float(h_I), int(seed))
