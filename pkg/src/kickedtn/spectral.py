"""Non-Hermitian spectral analysis of the transfer matrix.

Eigenvalues are reported as ``lambda = exp(rho + i phi)``, sorted with the
log-magnitude ``rho`` descending.  Right eigenvectors are unit-normalized and
left eigenvectors are stored as bras (rows) with ``left @ right = identity``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import curve_fit, linear_sum_assignment
from scipy.signal import savgol_filter
from scipy.special import erfc
from scipy.stats import unitary_group

from .hilbert import SectorBasis, make_rng
from .transfer import ModelParams, apply_T_array, apply_T_sector

MAX_EIG_DIM = 4096
COND_MAX = 1e8
DEG_TOL = 1e-9
UNIT_CIRCLE_TOL = 1e-12


class EdgeFitError(RuntimeError):
    """The erfc edge model does not apply to the given histogram."""


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    right: np.ndarray | None = None
    left: np.ndarray | None = None
    label: str = ""
    params: ModelParams | None = None
    degenerate_pairs: list[tuple[int, int]] = field(default_factory=list)
    left_method: str = ""

    @property
    def rho(self) -> np.ndarray:
        return np.log(np.abs(self.eigenvalues))

    @property
    def phi(self) -> np.ndarray:
        return np.angle(self.eigenvalues)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def biorthogonality_error(self) -> float:
        """max |<l_a|r_b> - delta_ab| over pairs not flagged as degenerate."""
        G = self.left @ self.right
        err = np.abs(G - np.eye(self.dim))
        for a, b in self.degenerate_pairs:
            err[a, b] = err[b, a] = 0.0
        return float(err.max())

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left

    def reconstruction_error(self, T: np.ndarray) -> float:
        return float(np.linalg.norm(self.reconstruct() - T) / np.linalg.norm(T))


def _sort_order(eigenvalues: np.ndarray) -> np.ndarray:
    rho = np.log(np.abs(eigenvalues))
    return np.lexsort((np.angle(eigenvalues), -rho))


def _degenerate_pairs(eigenvalues: np.ndarray, tol: float = DEG_TOL) -> list[tuple[int, int]]:
    order = np.argsort(eigenvalues.real)
    pairs = []
    for pos, a in enumerate(order):
        for b in order[pos + 1:]:
            if eigenvalues[b].real - eigenvalues[a].real > tol:
                break
            if abs(eigenvalues[a] - eigenvalues[b]) < tol:
                pairs.append((int(min(a, b)), int(max(a, b))))
    return pairs


def eig_full(T: np.ndarray, params: ModelParams | None = None, label: str = "",
             max_dim: int = MAX_EIG_DIM, cond_max: float = COND_MAX,
             vectors: bool = True) -> SpectrumResult:
    """All eigenvalues with biorthonormal right/left eigenvectors.

    Left vectors come from inverting the right-vector matrix when it is well
    conditioned, otherwise from the adjoint problem matched eigenvalue by
    eigenvalue.  ``vectors=False`` skips both (ensemble statistics only).
    """
    n = T.shape[0]
    if n > max_dim:
        raise MemoryError(f"dimension {n} exceeds dense eigensolver guard {max_dim}")
    if not vectors:
        w = sla.eigvals(T)
        return SpectrumResult(w[_sort_order(w)], label=label, params=params)
    w, R = sla.eig(T, overwrite_a=False, check_finite=True)
    order = _sort_order(w)
    w, R = w[order], R[:, order]
    R = R / np.linalg.norm(R, axis=0)
    if np.linalg.cond(R) < cond_max:
        left = np.linalg.inv(R)
        method = "inverse"
    else:
        wl, Lv = sla.eig(T.conj().T)
        cost = np.abs(wl.conj()[:, None] - w[None, :])
        rows, cols = linear_sum_assignment(cost)
        left = np.empty_like(R)
        for r, c in zip(rows, cols):
            bra = Lv[:, r].conj()
            left[c] = bra / (bra @ R[:, c])
        method = "adjoint"
    return SpectrumResult(w, R, left, label, params, _degenerate_pairs(w), method)


@dataclass
class LeadingEigs:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int

    @property
    def rho(self) -> np.ndarray:
        return np.log(np.abs(self.eigenvalues))


def _operator(params: ModelParams, basis: SectorBasis | None):
    if basis is None:
        return (1 << params.L), lambda x: apply_T_array(params, x)
    return basis.dim, lambda x: apply_T_sector(params, basis, x)


def leading_eigs(params: ModelParams, basis: SectorBasis | None = None, m: int = 1,
                 mode: str = "subspace", tol: float = 1e-9, max_iter: int = 2000,
                 oversample: int | None = None, seed: int = 0,
                 rr_every: int = 5) -> LeadingEigs:
    """Top-``m`` eigenvalues by magnitude using only matrix-free applications of T.

    ``mode='power'`` is plain power iteration (m = 1).  ``mode='subspace'`` is
    block subspace iteration with periodic Rayleigh-Ritz projection.  When the
    residuals do not reach ``tol`` (e.g. a degenerate unit-circle spectrum) the
    best estimate is returned with ``converged=False``.
    """
    dim, A = _operator(params, basis)
    rng = make_rng(seed)
    if mode == "power":
        if m != 1:
            raise ValueError("power mode computes a single eigenpair")
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        lam, res = 0j, np.inf
        for it in range(1, max_iter + 1):
            Av = A(v)
            lam = np.vdot(v, Av)
            res = np.linalg.norm(Av - lam * v)
            if res < tol:
                break
            v = Av / np.linalg.norm(Av)
        return LeadingEigs(np.array([lam]), v[:, None], np.array([res]), bool(res < tol), it)
    if mode != "subspace":
        raise ValueError(f"unknown mode {mode!r}")

    p = min(dim, m + (oversample if oversample is not None else max(m, 6)))
    Q, _ = np.linalg.qr(rng.standard_normal((dim, p)) + 1j * rng.standard_normal((dim, p)))
    theta = np.zeros(m, complex)
    X = Q[:, :m]
    res = np.full(m, np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        Z = A(Q)
        if it % rr_every == 0 or it == max_iter:
            H = Q.conj().T @ Z
            vals, Y = np.linalg.eig(H)
            order = np.argsort(-np.abs(vals))
            vals, Y = vals[order], Y[:, order]
            X = Q @ Y
            X /= np.linalg.norm(X, axis=0)
            AX = A(X[:, :m])
            theta = vals[:m]
            res = np.linalg.norm(AX - X[:, :m] * theta, axis=0)
            if np.all(res < tol):
                break
            Q, _ = np.linalg.qr(A(X))
        else:
            Q, _ = np.linalg.qr(Z)
    return LeadingEigs(theta, X[:, :m], res, bool(np.all(res < tol)), it)


def spectral_gap(spec: SpectrumResult | np.ndarray, multiplet: bool = False,
                 deg_tol: float = DEG_TOL) -> float:
    """rho_0 - rho_1, or with ``multiplet=True`` the gap below the leading multiplet.

    The multiplet groups leading eigenvalues whose magnitudes agree with
    |lambda_0| within ``deg_tol``.
    """
    lam = spec.eigenvalues if isinstance(spec, SpectrumResult) else np.asarray(spec)
    mags = np.sort(np.abs(lam))[::-1]
    if len(mags) < 2:
        raise ValueError("need at least two eigenvalues")
    if not multiplet:
        return float(np.log(mags[0]) - np.log(mags[1]))
    below = np.flatnonzero(mags[0] - mags > deg_tol)
    if len(below) == 0:
        return 0.0
    return float(np.log(mags[0]) - np.log(mags[below[0]]))


def log_abs_det_error(T: np.ndarray, spec: SpectrumResult) -> float:
    """Relative error between |det T| (LU) and exp(sum rho)."""
    _, logabs = np.linalg.slogdet(T)
    return float(abs(np.expm1(logabs - spec.rho.sum())))


# --- radial density and the erfc edge -------------------------------------------------

@dataclass
class EdgeProfile:
    """Ensemble-mean histogram of eigenvalue log-magnitudes.

    ``density`` integrates to ``norm_target`` (the analyzed space dimension).
    Fit outputs are filled in by :func:`fit_edge` / :func:`edge_metrics`.
    """

    bin_edges: np.ndarray
    density: np.ndarray
    n_spectra: int
    norm_target: float
    normalization: str = "sector"
    rho0_values: np.ndarray | None = None
    rho_e: float | None = None
    w: float | None = None
    amplitude: float | None = None
    fit_residual: float | None = None
    N_beyond: float | None = None
    rho0_minus_rho_e: float | None = None
    # bin holding eigenvalues pinned to the unit circle (rho = 0 exactly), if any
    unit_circle_bin: int | None = None

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def bin_widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def integral(self) -> float:
        return float(np.sum(self.density * self.bin_widths))


def _rho_of(item) -> np.ndarray:
    if isinstance(item, SpectrumResult):
        return item.rho
    return np.log(np.abs(np.asarray(item)))


def radial_density(spectra: Iterable, bins="fd", range: tuple[float, float] | None = None,
                   normalization: str = "sector", norm_target: float | None = None) -> EdgeProfile:
    """Histogram n(rho) averaged over an ensemble of spectra.

    ``spectra`` holds SpectrumResult objects or raw eigenvalue arrays.  The
    density is normalized so that its integral equals the mean spectrum size,
    or ``norm_target`` when given (e.g. 2^L for full-space normalization).
    """
    rhos = [_rho_of(s) for s in spectra]
    if not rhos:
        raise ValueError("empty ensemble")
    pooled = np.concatenate(rhos)
    target = float(np.mean([len(r) for r in rhos])) if norm_target is None else float(norm_target)
    lo, hi = (pooled.min(), pooled.max()) if range is None else range
    if isinstance(bins, str) and hi - lo < 1e-9:
        # degenerate ring: one bin around the common value
        center = 0.5 * (lo + hi)
        edges = np.array([center - 0.5e-3, center + 0.5e-3])
    elif isinstance(bins, str):
        edges = np.histogram_bin_edges(pooled, bins=bins, range=(lo, hi))
    else:
        edges = np.histogram_bin_edges(pooled, bins=bins, range=(lo, hi))
    counts, edges = np.histogram(pooled, bins=edges)
    density = counts / (len(rhos) * np.diff(edges))
    density *= target / max(float(np.mean([len(r) for r in rhos])), 1.0)
    rho0 = np.array([r.max() for r in rhos])
    spike = None
    if np.any(np.abs(pooled) < UNIT_CIRCLE_TOL) and edges[0] <= 0.0 <= edges[-1]:
        spike = int(np.clip(np.searchsorted(edges, 0.0, side="right") - 1, 0, len(edges) - 2))
    return EdgeProfile(edges, density, len(rhos), target, normalization, rho0, unit_circle_bin=spike)


def erfc_profile(rho: np.ndarray, amplitude: float, rho_e: float, w: float) -> np.ndarray:
    """amplitude * erfc((rho - rho_e) / w); amplitude is n(rho_e)."""
    return amplitude * erfc((np.asarray(rho) - rho_e) / w)


@dataclass
class EdgeFit:
    rho_e: float
    w: float
    amplitude: float
    residual: float
    flank: slice
    window: int


def fit_edge(profile: EdgeProfile, window: int = 7, annulus_tol: float = 0.25) -> EdgeFit:
    """Locate the outer spectral edge and fit its erfc width.

    The edge location is the inflection point of the outer flank of n(rho),
    found from local quadratic fits over ``window`` bins (steepest descent of
    the smoothed density, refined parabolically).  The width and amplitude
    come from a least-squares fit of ``n(rho_e) erfc((rho - rho_e)/w)`` over
    the flank, which runs from the density peak nearest the edge to the last
    nonzero bin.  The reported residual is the flank RMS deviation divided by
    the flank maximum.

    At J = n pi/4 paired eigenvalues can sit exactly on the unit circle and
    pile up in the bin containing rho = 0.  That bin and its smoothing
    neighbourhood are excluded from the peak search, so the flank starts at
    the bulk maximum rather than at this isolated spike.
    """
    y = np.asarray(profile.density, float)
    x = profile.bin_centers
    dx = profile.bin_widths
    if not np.allclose(dx, dx[0], rtol=1e-6):
        raise EdgeFitError("edge fit needs uniform bins")
    dx = float(dx[0])
    if len(y) < window + 2:
        raise EdgeFitError(f"histogram has {len(y)} bins, fewer than window+2")
    sm = savgol_filter(y, window, 2, mode="interp")
    d1 = savgol_filter(y, window, 2, deriv=1, delta=dx, mode="interp")
    nonzero = np.flatnonzero(y > 0)
    last = int(nonzero[-1])

    is_max = np.r_[sm[0] >= sm[1], (sm[1:-1] >= sm[:-2]) & (sm[1:-1] >= sm[2:]), sm[-1] >= sm[-2]]
    search = np.zeros(len(y), bool)
    search[:last + 1] = True
    if profile.unit_circle_bin is not None:
        start = profile.unit_circle_bin + window // 2 + 1
        if start < last - 4:
            search[:start] = False
    tall = is_max & search & (sm >= 0.5 * sm[search].max())
    if not tall.any():
        raise EdgeFitError("no density peak found")
    peak = int(np.flatnonzero(tall)[-1])
    if last - peak < 4:
        raise EdgeFitError("outer flank too short")

    seg = d1[peak:last + 1]
    i = peak + int(np.argmin(seg))
    if i <= peak or i >= last or d1[i] >= 0:
        raise EdgeFitError("no inflection on the outer flank")
    denom = d1[i - 1] - 2 * d1[i] + d1[i + 1]
    shift = 0.5 * (d1[i - 1] - d1[i + 1]) / denom if denom > 0 else 0.0
    rho_e = float(x[i] + np.clip(shift, -0.5, 0.5) * dx)

    # a second rise beyond the inflection means a fractured (multi-annulus) spectrum
    beyond = d1[i:last + 1]
    if beyond.size and beyond.max() > annulus_tol * abs(d1[i]):
        raise EdgeFitError("density rises again beyond the edge: erfc model does not apply")

    flank = slice(peak, last + 1)
    xf, yf = x[flank], y[flank]
    amp0 = float(np.interp(rho_e, x, sm))
    w0 = max(2 * amp0 / (np.sqrt(np.pi) * abs(d1[i])), dx)
    try:
        (amp, w), _ = curve_fit(lambda r, a, ww: erfc_profile(r, a, rho_e, ww), xf, yf,
                                p0=(amp0, w0), bounds=([0, 1e-12], [np.inf, np.inf]))
    except RuntimeError as exc:
        raise EdgeFitError(f"erfc least squares failed: {exc}") from exc
    resid = float(np.sqrt(np.mean((yf - erfc_profile(xf, amp, rho_e, w)) ** 2)) / yf.max())
    profile.rho_e, profile.w, profile.amplitude, profile.fit_residual = rho_e, float(w), float(amp), resid
    return EdgeFit(rho_e, float(w), float(amp), resid, flank, window)


@dataclass
class EdgeMetrics:
    N_beyond: float
    N_model: float
    rho0_minus_rho_e: np.ndarray

    @property
    def mean_rho0_minus_rho_e(self) -> float:
        return float(np.mean(self.rho0_minus_rho_e))


def edge_metrics(profile: EdgeProfile, fit: EdgeFit | None = None,
                 spectra: Sequence | None = None) -> EdgeMetrics:
    """Weight beyond the edge and the leading-eigenvalue offset rho_0 - rho_e.

    ``N_beyond`` integrates the histogram above rho_e (partial bin included);
    ``N_model`` is the closed-form tail of the fitted erfc, n(rho_e) w / sqrt(pi).
    """
    if fit is None:
        fit = fit_edge(profile)
    edges = profile.bin_edges
    frac = np.clip((edges[1:] - fit.rho_e) / np.diff(edges), 0.0, 1.0)
    N = float(np.sum(profile.density * np.diff(edges) * frac))
    N_model = fit.amplitude * fit.w / np.sqrt(np.pi)
    if spectra is not None:
        rho0 = np.array([_rho_of(s).max() for s in spectra])
    elif profile.rho0_values is not None:
        rho0 = np.asarray(profile.rho0_values)
    else:
        rho0 = np.array([])
    gaps = rho0 - fit.rho_e
    profile.N_beyond = N
    profile.rho0_minus_rho_e = float(np.mean(gaps)) if gaps.size else None
    return EdgeMetrics(N, float(N_model), gaps)


# --- eigenvalue pairing at J = n pi / 4 ---------------------------------------------

@dataclass
class PairingCheck:
    applicable: bool
    n: int | None = None
    multiset_deviation: float = float("nan")
    phase_deviation: float = float("nan")

    @property
    def status(self) -> str:
        return "ok" if self.applicable else "not-applicable"


def pairing_check(spec: SpectrumResult | np.ndarray, J: float, L: int) -> PairingCheck:
    """Check lambda_a lambda_b = i^(-nL) pairing, i.e. rho -> -rho symmetry, for J = n pi/4."""
    n_real = 4 * J / np.pi
    n = int(round(n_real))
    if abs(n_real - n) > 1e-9:
        return PairingCheck(False)
    # the identity relies on the closed ring of couplings
    if isinstance(spec, SpectrumResult) and spec.params is not None and spec.params.boundary == "open":
        return PairingCheck(False)
    lam = spec.eigenvalues if isinstance(spec, SpectrumResult) else np.asarray(spec)
    rho = np.sort(np.log(np.abs(lam)))
    multiset = float(np.max(np.abs(rho - np.sort(-rho))))
    target = np.exp(-0.5j * np.pi * n * L)
    partners = target / lam
    dist = np.abs(partners[:, None] - lam[None, :]).min(axis=1) / np.abs(partners)
    return PairingCheck(True, n, multiset, float(dist.max()))


def deformed_haar_spectrum(L: int, h_I: float, seed: int) -> np.ndarray:
    """Eigenvalues of zeta U with zeta = exp(h_I sum Z) and U Haar-random on 2^L."""
    n = 1 << L
    rng = make_rng(seed)
    U = unitary_group.rvs(n, random_state=rng)
    labels = np.arange(n)
    mag = np.array([bin(s).count("1") for s in labels])
    zeta = np.exp(h_I * (L - 2 * mag))
    return np.linalg.eigvals(zeta[:, None] * U)
