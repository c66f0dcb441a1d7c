"""Row-state evolution under T and the entanglement / purification observables.

All entropies use natural logarithms.  Entanglement cuts do not respect the
translation/reflection sectors, so sector states are lifted to the full space
before any bipartition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hilbert import RowState, lift
from .spectral import SpectrumResult
from .transfer import ModelParams, apply_T, apply_T_array

SCHMIDT_FLOOR = 1e-14
NORM_TOL = 1e-8


class EvolutionError(RuntimeError):
    """The evolving state was annihilated by T."""

    def __init__(self, step: int, msg: str = ""):
        super().__init__(msg or f"state annihilated at step {step}")
        self.step = step


@dataclass
class Trajectory:
    times: list[int]
    states: list[RowState]
    log_norms: list[float]

    @property
    def final(self) -> RowState:
        return self.states[-1]


def evolve(params: ModelParams, state: RowState, steps: int, record_every: int = 1,
           scale: complex = 1.0) -> Trajectory:
    """Apply T ``steps`` times, renormalizing after each step.

    ``log_norms[m]`` is ``ln ||T^m psi||`` for the recorded times (relative to
    the input norm).  ``scale`` multiplies T by a constant; it shifts the
    log-norms and nothing else.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    cur = state.copy()
    cur.log_norm = 0.0
    cur.normalize()
    cur.log_norm = 0.0
    times, states, norms = [0], [cur.copy()], [0.0]
    for m in range(1, steps + 1):
        cur = apply_T(params, cur)
        if scale != 1.0:
            cur.amplitudes = cur.amplitudes * scale
        try:
            if cur.zero:
                raise FloatingPointError
            cur.normalize()
        except FloatingPointError:
            raise EvolutionError(m) from None
        if m % record_every == 0 or m == steps:
            times.append(m)
            states.append(cur.copy())
            norms.append(cur.log_norm)
    return Trajectory(times, states, norms)


def full_amplitudes(state: RowState | np.ndarray, L: int | None = None) -> tuple[np.ndarray, int]:
    if isinstance(state, RowState):
        full = lift(state) if state.in_sector else state
        return np.asarray(full.amplitudes), state.L
    psi = np.asarray(state)
    if L is None:
        L = int(round(np.log2(psi.size)))
    if psi.size != 1 << L:
        raise ValueError("vector length is not 2^L")
    return psi, L


def schmidt_probabilities(state, region: Sequence[int], L: int | None = None) -> np.ndarray:
    """Schmidt weights p_k of the bipartition (region | rest)."""
    psi, L = full_amplitudes(state, L)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > NORM_TOL:
        raise ValueError(f"state not normalized (norm {nrm:.3e})")
    A = sorted({int(j) % L for j in region})
    if len(A) != len(list(region)):
        raise ValueError("region has repeated sites")
    rest = [j for j in range(L) if j not in A]
    if not A or not rest:
        return np.ones(1)
    mat = psi.reshape((2,) * L).transpose(A + rest).reshape(1 << len(A), -1)
    s = np.linalg.svd(mat, compute_uv=False)
    p = s * s
    return p[p > SCHMIDT_FLOOR]


def _check_contiguous(region: Sequence[int], L: int) -> None:
    sites = sorted({int(j) % L for j in region})
    if len(sites) in (0, L):
        return
    gaps = sum(1 for a, b in zip(sites, sites[1:] + [sites[0] + L]) if b - a != 1)
    if gaps != 1:
        raise ValueError(f"region {list(region)} is not contiguous on the ring")


def half_cut(L: int) -> list[int]:
    return list(range(L // 2))


def entropy_vn(state, region: Sequence[int] | None = None, L: int | None = None) -> float:
    """Von Neumann entropy of a contiguous region (default: half chain)."""
    _, L = full_amplitudes(state, L)
    region = half_cut(L) if region is None else list(region)
    _check_contiguous(region, L)
    return _vn(schmidt_probabilities(state, region, L))


def _vn(p: np.ndarray) -> float:
    p = p / p.sum()
    return float(-(p * np.log(p)).sum())


def _renyi(p: np.ndarray, n: float) -> float:
    p = p / p.sum()
    return float(np.log((p ** n).sum()) / (1.0 - n))


def entropy_renyi(state, n: float, region: Sequence[int] | None = None, L: int | None = None) -> float:
    if n <= 0:
        raise ValueError("Renyi index must be positive")
    if n == 1:
        raise ValueError("n = 1 is the von Neumann entropy; use entropy_vn")
    _, L = full_amplitudes(state, L)
    region = half_cut(L) if region is None else list(region)
    _check_contiguous(region, L)
    return _renyi(schmidt_probabilities(state, region, L), n)


def region_entropy(state, region: Sequence[int], L: int | None = None) -> float:
    """Von Neumann entropy of an arbitrary (not necessarily contiguous) set of sites."""
    return _vn(schmidt_probabilities(state, region, L))


def antipodal_regions(L: int) -> tuple[list[int], list[int]]:
    """Two blocks of L/6 sites whose centres sit L/2 apart."""
    if L % 6:
        raise ValueError(f"default antipodal geometry needs 6 | L (got L={L})")
    size = L // 6
    A = list(range(size))
    B = [(j + L // 2) % L for j in A]
    return A, B


def mutual_information(state, A: Sequence[int] | None = None, B: Sequence[int] | None = None,
                       L: int | None = None) -> float:
    """I_AB = S_A + S_B - S_AB."""
    _, L = full_amplitudes(state, L)
    if A is None or B is None:
        A, B = antipodal_regions(L)
    A = [int(j) % L for j in A]
    B = [int(j) % L for j in B]
    if set(A) & set(B):
        raise ValueError("regions overlap")
    return (region_entropy(state, A, L) + region_entropy(state, B, L)
            - region_entropy(state, A + B, L))


@dataclass
class EntanglementReport:
    t: float
    S_vN: dict[str, float]
    renyi: dict[float, float] = field(default_factory=dict)
    I_AB: float | None = None
    regions: tuple[list[int], list[int]] | None = None
    flagged: bool = False

    def as_row(self) -> dict:
        row = {"t": self.t}
        row.update({f"S_{k}": v for k, v in self.S_vN.items()})
        row.update({f"S_n{n:g}": v for n, v in self.renyi.items()})
        if self.I_AB is not None:
            row["I_AB"] = self.I_AB
        return row


def entanglement_report(state, t: float = 0.0, renyi: Sequence[float] = (),
                        mutual: bool = True) -> EntanglementReport:
    _, L = full_amplitudes(state)
    cut = half_cut(L)
    rep = EntanglementReport(t, {"half": entropy_vn(state, cut)})
    for n in renyi:
        rep.renyi[float(n)] = entropy_renyi(state, n, cut)
    if mutual and L % 6 == 0:
        A, B = antipodal_regions(L)
        rep.I_AB = mutual_information(state, A, B)
        rep.regions = (A, B)
    return rep


@dataclass
class PurificationTrace:
    times: np.ndarray
    rho_ref: np.ndarray
    S_ref: np.ndarray
    t_eps: dict[float, float | None]


def _entropy_2x2(rho: np.ndarray) -> float:
    ev = np.clip(np.linalg.eigvalsh(rho), 0.0, 1.0)
    ev = ev[ev > SCHMIDT_FLOOR]
    return float(-(ev * np.log(ev)).sum())


def _first_crossing(times: np.ndarray, S: np.ndarray, eps: float) -> float | None:
    """First t with 1 - S(t)/ln2 = eps, linearly interpolated between steps."""
    f = 1.0 - S / np.log(2.0)
    hit = np.flatnonzero(f >= eps)
    if hit.size == 0:
        return None
    i = int(hit[0])
    if i == 0:
        return float(times[0])
    t0, t1, f0, f1 = times[i - 1], times[i], f[i - 1], f[i]
    return float(t0 + (eps - f0) * (t1 - t0) / (f1 - f0))


def purify_reference(params: ModelParams, psi1: RowState, psi2: RowState, t_max: int,
                     eps_list: Sequence[float] = (1e-3,), stop_early: bool = False) -> PurificationTrace:
    """Entropy of a reference qubit maximally entangled with two orthonormal rows.

    Both rows are evolved with the same normalization constant, so the 2x2
    Gram matrix is determined up to a common scale which is removed by
    fixing its trace to one.  ``stop_early`` ends the run once every
    threshold in ``eps_list`` has been crossed.
    """
    target = max(eps_list) if eps_list else None
    a, L = full_amplitudes(psi1)
    b, _ = full_amplitudes(psi2)
    if abs(np.vdot(a, b)) > 1e-10:
        raise ValueError("psi1 and psi2 are not orthogonal")
    X = np.stack([a, b], axis=1).astype(complex)
    X /= np.linalg.norm(X[:, 0])
    times, rhos, ents = [], [], []
    for t in range(t_max + 1):
        if t > 0:
            X = apply_T_array(params, X)
            scale = np.linalg.norm(X)
            if scale < 1e-300 or not np.isfinite(scale):
                raise EvolutionError(t, f"both evolved states annihilated at step {t}")
            X /= scale
        G = X.conj().T @ X
        rho = G.T / np.trace(G).real
        rho = 0.5 * (rho + rho.conj().T)
        times.append(t)
        rhos.append(rho)
        ents.append(_entropy_2x2(rho))
        if stop_early and target is not None and 1.0 - ents[-1] / np.log(2.0) >= max(eps_list):
            break
    times_a, ents_a = np.array(times, float), np.array(ents)
    crossings = {float(e): _first_crossing(times_a, ents_a, e) for e in eps_list}
    return PurificationTrace(times_a, np.array(rhos), ents_a, crossings)


def leading_state_observables(spec: SpectrumResult, basis=None, renyi: Sequence[float] = (),
                              deg_tol: float = 1e-9) -> list[EntanglementReport]:
    """Reports for the normalized leading right eigenvector(s).

    If the leading magnitude is degenerate every member of the multiplet gets
    a report and ``flagged`` is set.
    """
    if spec.right is None:
        raise ValueError("spectrum was computed without eigenvectors")
    rho = spec.rho
    members = np.flatnonzero(np.abs(rho - rho[0]) <= deg_tol)
    reports = []
    for idx in members:
        vec = spec.right[:, idx]
        L = spec.params.L if spec.params is not None else None
        if basis is not None:
            st = RowState(vec / np.linalg.norm(vec), basis.L, basis)
        else:
            if L is None:
                L = int(round(np.log2(vec.size)))
            st = RowState(vec / np.linalg.norm(vec), L)
        rep = entanglement_report(lift(st) if st.in_sector else st, np.inf, renyi)
        rep.flagged = len(members) > 1
        reports.append(rep)
    return reports
