"""Uniform (infinite) MPS evolved by the bond-dimension-2 transfer MPO.

The state is stored in Vidal form ``... Gamma Lambda Gamma Lambda ...`` with a
single site tensor ``Gamma[a, s, b]`` and bond weights ``Lambda``.  Because T
is not unitary, every MPO application destroys the canonical form; it is
restored from the dominant left/right fixed points of the MPS transfer
operator and the bond is then truncated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as sla

from .hilbert import make_rng, random_bloch_angles
from .transfer import PAULI_Z, ModelParams, MpoTensor, build_mpo

SCHMIDT_FLOOR = 1e-14
ENV_TOL = 1e-10
CANON_TOL = 1e-8
MAX_PASSES = 4


class EnvironmentError_(RuntimeError):
    """Fixed point of the MPS transfer operator could not be found."""

    def __init__(self, msg: str, residual: float = np.nan):
        super().__init__(msg)
        self.residual = residual


@dataclass
class UniformMps:
    gamma: np.ndarray
    schmidt: np.ndarray
    canonical: bool = False

    @property
    def chi(self) -> int:
        return len(self.schmidt)

    def right_tensor(self) -> np.ndarray:
        """B = Gamma Lambda (right-normalized in canonical form)."""
        return self.gamma * self.schmidt[None, None, :]

    def left_tensor(self) -> np.ndarray:
        return self.schmidt[:, None, None] * self.gamma

    def canonical_residual(self) -> float:
        B = self.right_tensor()
        A = self.left_tensor()
        eye = np.eye(self.chi)
        r = np.einsum("asb,csb->ac", B, B.conj())
        l = np.einsum("asb,asc->bc", A.conj(), A)
        return float(max(np.abs(r - eye).max(), np.abs(l - eye).max()))


def product_mps(theta: float, phi: float) -> UniformMps:
    site = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    return UniformMps(site.reshape(1, 2, 1).astype(complex), np.ones(1), True)


def random_product_mps(seed: int) -> UniformMps:
    """Same Bloch-angle distribution as the finite-size random product states."""
    return product_mps(*random_bloch_angles(make_rng(seed)))


def _dominant_fixed_point(apply, D: int, tol: float, v0: np.ndarray | None = None):
    """Leading eigenpair of a linear map on D x D matrices, returned Hermitian PSD."""
    if D == 1:
        x = np.ones((1, 1), complex)
        eta = apply(x)[0, 0]
        return eta, x.real.astype(complex), 0.0
    n = D * D
    op = sla.LinearOperator((n, n), matvec=lambda v: apply(v.reshape(D, D)).ravel(), dtype=complex)
    start = (np.eye(D) if v0 is None else v0).ravel().astype(complex)
    try:
        vals, vecs = sla.eigs(op, k=1, which="LM", v0=start, tol=tol, maxiter=20 * n + 1000)
    except sla.ArpackNoConvergence as exc:
        raise EnvironmentError_("environment eigensolver did not converge") from exc
    eta = vals[0]
    X = vecs[:, 0].reshape(D, D)
    X = X / (np.trace(X) / abs(np.trace(X)))
    X = 0.5 * (X + X.conj().T)
    if np.trace(X).real < 0:
        X = -X
    res = np.linalg.norm(apply(X) - eta * X) / max(np.linalg.norm(X) * abs(eta), 1e-300)
    return eta, X, float(res)


def _sqrt_factor(X: np.ndarray):
    """X = F F^dagger with small eigenvalues dropped; returns (F, F^+)."""
    w, U = np.linalg.eigh(X)
    keep = w > SCHMIDT_FLOOR * max(w.max(), 1e-300)
    w, U = w[keep], U[:, keep]
    sw = np.sqrt(w)
    return U * sw, (U / sw).conj().T


def canonicalize(gamma: np.ndarray, lam: np.ndarray, chi_max: int | None = None,
                 tol: float = ENV_TOL) -> tuple[UniformMps, float, float]:
    """Bring (Gamma, Lambda) to canonical form, optionally truncating the bond.

    Returns the new MPS, the discarded Schmidt weight and the environment
    residual of the eigen-solves.
    """
    D = gamma.shape[0]
    B = gamma * lam[None, None, :]
    A = lam[:, None, None] * gamma

    def right_map(R):
        return np.einsum("asb,bc,dsc->ad", B, R, B.conj(), optimize=True)

    def left_map(Lm):
        return np.einsum("asb,ac,csd->bd", A.conj(), Lm, A, optimize=True)

    eta_r, R, res_r = _dominant_fixed_point(right_map, D, tol)
    eta_l, Lm, res_l = _dominant_fixed_point(left_map, D, tol)
    if max(res_r, res_l) > 1e3 * tol:
        raise EnvironmentError_("environment fixed point inaccurate", max(res_r, res_l))
    X, Xinv = _sqrt_factor(R)          # R = X X^dagger
    Yd, Ydinv = _sqrt_factor(Lm.T)     # L^T = Yd Yd^dagger, Y = Yd^T
    Y, Yinv = Yd.T, Ydinv.T
    core = Y @ np.diag(lam) @ X
    U, s, Vh = np.linalg.svd(core, full_matrices=False)
    # the floor applies to Schmidt weights s^2, as for the finite-size entropies
    keep = s * s > SCHMIDT_FLOOR * s[0] ** 2
    total = float((s ** 2).sum())
    n_keep = int(keep.sum())
    if chi_max is not None:
        n_keep = min(n_keep, chi_max)
    discarded = float((s[n_keep:] ** 2).sum() / total)
    U, s, Vh = U[:, :n_keep], s[:n_keep], Vh[:n_keep]
    new_gamma = np.einsum("ij,jsk,kl->isl", Vh @ Xinv, gamma, Yinv @ U, optimize=True)
    s = s / np.linalg.norm(s)
    mps = UniformMps(new_gamma, s)
    # fix the scale so that the right transfer operator has unit fixed-point eigenvalue
    Bn = mps.right_tensor()
    eta = np.einsum("asb,asb->", Bn, Bn.conj()).real / mps.chi
    mps.gamma = mps.gamma / np.sqrt(eta)
    mps.canonical = True
    return mps, discarded, max(res_r, res_l)


@dataclass
class StepRecord:
    t: int
    chi: int
    entropy: float
    trunc_err: float
    env_residual: float
    canon_residual: float


def apply_mpo(mps: UniformMps, mpo: MpoTensor) -> tuple[np.ndarray, np.ndarray]:
    """Absorb the MPO into the site tensor; bond dimension grows to 2 chi."""
    g = np.einsum("mnts,asb->amtbn", mpo.ops, mps.gamma)
    D = mps.chi * 2
    g = g.reshape(D, 2, D)
    lam = np.repeat(mps.schmidt, 2)
    return g, lam


def apply_mpo_step(mps: UniformMps, mpo: MpoTensor, chi_max: int,
                   tol: float = ENV_TOL) -> tuple[UniformMps, StepRecord]:
    if not mps.canonical:
        raise ValueError("apply_mpo_step expects a canonical MPS")
    g, lam = apply_mpo(mps, mpo)
    new, err, res = canonicalize(g, lam, chi_max, tol)
    canon = new.canonical_residual()
    # truncation (and round-off amplified by small Schmidt values) leaves the
    # fixed-point conditions slightly violated; a few more passes restore them
    for _ in range(MAX_PASSES):
        if canon <= CANON_TOL and err == 0:
            break
        new, extra, res2 = canonicalize(new.gamma, new.schmidt, None, tol)
        err += extra
        res = max(res, res2)
        canon = new.canonical_residual()
        if canon <= CANON_TOL:
            break
    if canon > CANON_TOL:
        raise EnvironmentError_(f"canonical form residual {canon:.2e}", canon)
    return new, StepRecord(0, new.chi, entropy_of_bond(new), err, res, canon)


def entropy_of_bond(mps: UniformMps) -> float:
    if not mps.canonical:
        raise ValueError("entropy_of_bond needs a canonical MPS")
    p = mps.schmidt ** 2
    p = p[p > SCHMIDT_FLOOR]
    return float(-(p * np.log(p)).sum())


def local_expectation(mps: UniformMps, op: np.ndarray) -> complex:
    """<O> on one site of a canonical uniform MPS."""
    theta = mps.schmidt[:, None, None] * mps.right_tensor()
    val = np.einsum("asb,st,atb->", theta.conj(), op, theta)
    nrm = np.einsum("asb,asb->", theta.conj(), theta)
    return complex(val / nrm)


def local_z(mps: UniformMps) -> float:
    return float(local_expectation(mps, PAULI_Z).real)


@dataclass
class ImpsRun:
    params: ModelParams
    chi_max: int
    records: list[StepRecord] = field(default_factory=list)
    final: UniformMps | None = None

    @property
    def entropy(self) -> float:
        return self.records[-1].entropy if self.records else 0.0

    @property
    def max_trunc_err(self) -> float:
        return max((r.trunc_err for r in self.records), default=0.0)


def evolve_imps(params: ModelParams, chi_max: int, t_steps: int, seed: int = 0,
                initial: UniformMps | None = None, tol: float = ENV_TOL) -> ImpsRun:
    mpo = build_mpo(params)
    mps = initial if initial is not None else random_product_mps(seed)
    run = ImpsRun(params, chi_max)
    run.records.append(StepRecord(0, mps.chi, entropy_of_bond(mps), 0.0, 0.0, mps.canonical_residual()))
    for t in range(1, t_steps + 1):
        mps, rec = apply_mpo_step(mps, mpo, chi_max, tol)
        rec.t = t
        run.records.append(rec)
    run.final = mps
    return run


@dataclass
class ImpsRow:
    h_I: float
    chi: int
    t: int
    S_chi: float
    trunc_err: float
    env_residual: float
    ok: bool = True
    error: str = ""


def run_imps_sweep(params: ModelParams, chi_list, t_steps: int, h_I_values=None,
                   seed: int = 0) -> list[ImpsRow]:
    """S_chi after ``t_steps`` for every (h_I, chi); failures are recorded per point."""
    h_I_values = [params.h_I] if h_I_values is None else list(h_I_values)
    rows = []
    for h_I in h_I_values:
        p = params.replace(h_I=float(h_I))
        for chi in chi_list:
            try:
                run = evolve_imps(p, int(chi), t_steps, seed)
            except (EnvironmentError_, np.linalg.LinAlgError) as exc:
                rows.append(ImpsRow(float(h_I), int(chi), t_steps, np.nan, np.nan, np.nan, False, str(exc)))
                continue
            rows.append(ImpsRow(float(h_I), int(chi), t_steps, run.entropy, run.max_trunc_err,
                                max(r.env_residual for r in run.records)))
    return rows


def entropy_slope_vs_log_chi(chis, entropies) -> tuple[float, float]:
    """OLS slope of S_chi on ln chi and its standard error."""
    x = np.log(np.asarray(chis, float))
    y = np.asarray(entropies, float)
    X = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 2
    if dof <= 0:
        return float(coef[0]), np.inf
    s2 = float(resid @ resid) / dof
    se = np.sqrt(s2 / ((x - x.mean()) ** 2).sum())
    return float(coef[0]), float(se)
