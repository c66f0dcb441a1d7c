"""Self-consistent single-site mean-field theory for the leading eigenstates of T.

Neighbouring sites are replaced by a product of right/left single-qubit states
``|r>``, ``<l|`` with ``<l|r> = 1``.  Contracting the bond-dimension-2 MPO with
that ansatz leaves a 2x2 effective transfer matrix

    T_m = e^{-iJ}/2 U0 +- (e^{2iJ} a U0 - 2i sin(2J) b U0 Z) / (2 sqrt(e^{2iJ} a^2 - 2i sin(2J) b^2))

with ``a = <l|U0|r>`` and ``b = <l|U0 Z|r>``.  The sign selects which
eigenvalue of the contracted bond matrix survives the ``L -> infinity`` limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import make_rng
from .transfer import PAULI_Z, ModelParams, build_mpo, single_site_unitary


class BranchPointError(ArithmeticError):
    """Square-root argument of the mean-field transfer matrix vanishes."""


class FixedPointError(RuntimeError):
    pass


def _radicand(J: float, a: complex, b: complex) -> complex:
    return np.exp(2j * J) * a * a - 2j * np.sin(2 * J) * b * b


def build_Tm(params: ModelParams, expectations, branch_sign: int = 1) -> np.ndarray:
    """Closed-form mean-field transfer matrix for expectations (<U0>, <U0 Z>)."""
    a, b = complex(expectations[0]), complex(expectations[1])
    J = params.J
    D = _radicand(J, a, b)
    if abs(D) <= 1e-14 * max(abs(a) ** 2 + abs(b) ** 2, 1e-300):
        raise BranchPointError("square-root argument vanishes")
    root = np.sqrt(D)
    u0 = single_site_unitary(params)
    num = np.exp(2j * J) * a * u0 - 2j * np.sin(2 * J) * b * (u0 @ PAULI_Z)
    return np.exp(-1j * J) / 2 * u0 + branch_sign * num / (2 * root)


def bond_matrix(params: ModelParams, expectations) -> np.ndarray:
    """<l|M|r>: the MPO bond matrix with each operator entry replaced by its expectation."""
    a, b = complex(expectations[0]), complex(expectations[1])
    cJ, sJ = np.cos(params.J), np.sin(params.J)
    return np.array([[cJ * a, cJ * b], [-1j * sJ * b, -1j * sJ * a]])


def build_Tm_limit(params: ModelParams, expectations, power: int | None = None,
                   eigen_index: int | None = None) -> tuple[np.ndarray, int]:
    """T_m as tr(M [<M>/lambda]^(L-1)) in the long-row limit.

    With ``power=None`` the limit is taken exactly: the bracket becomes the
    spectral projector of the bond matrix onto its eigenvalue of largest
    magnitude (or onto ``eigen_index`` when given).  Otherwise the matrix power
    is evaluated for ``L - 1 = power``.  Returns the operator and the sign of
    the closed-form branch it corresponds to.
    """
    mpo = build_mpo(params)
    Mbar = bond_matrix(params, expectations)
    vals, R = np.linalg.eig(Mbar)
    idx = int(np.argmax(np.abs(vals))) if eigen_index is None else eigen_index
    lam = vals[idx]
    if power is None:
        Linv = np.linalg.inv(R)
        P = np.outer(R[:, idx], Linv[idx])
    else:
        P = np.linalg.matrix_power(Mbar / lam, power)
    Tm = np.einsum("abij,ba->ij", mpo.ops, P)
    a = complex(expectations[0])
    root = np.sqrt(_radicand(params.J, a, complex(expectations[1])))
    plus = (a * np.exp(-1j * params.J) + root) / 2
    minus = (a * np.exp(-1j * params.J) - root) / 2
    branch = 1 if abs(lam - plus) <= abs(lam - minus) else -1
    return Tm, branch


def _leading_pair(Tm: np.ndarray):
    """Eigenvalues (by magnitude) and the leading right/left pair, ||r|| = 1, <l|r> = 1."""
    vals, R = np.linalg.eig(Tm)
    order = np.argsort(-np.abs(vals))
    vals, R = vals[order], R[:, order] / np.linalg.norm(R[:, order], axis=0)
    r = R[:, 0]
    if abs(np.linalg.det(R)) > 1e-12:
        l = np.linalg.inv(R)[0]
    else:
        # defective T_m: take the left eigenvector from the transposed problem
        vl, Lv = np.linalg.eig(Tm.T)
        l = Lv[:, int(np.argmax(np.abs(vl)))]
    return vals, r, l / (l @ r)


@dataclass
class MeanFieldState:
    r_m: np.ndarray
    l_m: np.ndarray
    expectations: np.ndarray
    lambda_m: complex
    branch_sign: int


@dataclass
class MeanFieldResult:
    state: MeanFieldState
    Tm: np.ndarray
    eigenvalues: np.ndarray
    gap: float
    iterations: int
    residual: float
    converged: bool
    damped: bool = False
    history: list = field(default_factory=list, repr=False)
    branch_consistent: bool = True

    @property
    def lambda0(self) -> complex:
        return complex(self.eigenvalues[0])

    @property
    def lambda1(self) -> complex:
        return complex(self.eigenvalues[1])


def choose_branch(params: ModelParams, expectations) -> tuple[np.ndarray, int, np.ndarray]:
    """The branch whose T_m has the larger leading eigenvalue magnitude."""
    best = None
    for sign in (1, -1):
        Tm = build_Tm(params, expectations, sign)
        vals = np.linalg.eigvals(Tm)
        lead = np.abs(vals).max()
        if best is None or lead > best[0]:
            best = (lead, Tm, sign)
    return best[1], best[2], best[0]


def iteration_map(params: ModelParams, expectations, branch: int | None = None):
    """One full update: expectations -> T_m -> leading (r, l) -> new expectations.

    ``branch=None`` picks the sign maximizing the leading eigenvalue; a fixed
    ``branch`` of +1/-1 skips that choice.
    """
    if branch is None:
        Tm, sign, _ = choose_branch(params, expectations)
    else:
        Tm, sign = build_Tm(params, expectations, branch), branch
    vals, r, l = _leading_pair(Tm)
    u0 = single_site_unitary(params)
    new = np.array([l @ u0 @ r, l @ u0 @ PAULI_Z @ r])
    return new, Tm, sign, vals, r, l


def random_expectations(params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Expectations of a random (r, l) pair with <l|r> = 1."""
    r = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    r /= np.linalg.norm(r)
    l = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    l = l / (l @ r)
    u0 = single_site_unitary(params)
    return np.array([l @ u0 @ r, l @ u0 @ PAULI_Z @ r])


def solve_fixed_point(params: ModelParams, init_seed: int = 0, max_iter: int = 500,
                      tol: float = 1e-10, init=None, branch: int | None = None) -> MeanFieldResult:
    """Iterate the mean-field map to a self-consistent T_m.

    On a detected 2-cycle the update is damped by 0.5 and iteration continues;
    if that still fails to converge a :class:`FixedPointError` is raised.
    With a fixed ``branch`` the result records whether the other sign would
    have given a larger leading eigenvalue (``branch_consistent``).
    """
    x = np.asarray(init, complex) if init is not None else random_expectations(params, make_rng(init_seed))
    damping = 1.0
    prev = None
    history = []
    for it in range(1, max_iter + 1):
        new, Tm, sign, vals, r, l = iteration_map(params, x, branch)
        step = float(np.max(np.abs(new - x)))
        history.append(step)
        if step < tol:
            x = new
            break
        if damping == 1.0 and prev is not None and it > 20:
            if np.max(np.abs(new - prev)) < 1e-3 * step:
                damping = 0.5
        prev = x
        x = damping * new + (1 - damping) * x
    else:
        raise FixedPointError(f"no convergence after {max_iter} iterations (last step {step:.3e})")
    # residual of the full map at the returned point
    check, Tm, sign, vals, r, l = iteration_map(params, x, branch)
    residual = float(np.max(np.abs(check - x)))
    other = np.abs(np.linalg.eigvals(build_Tm(params, x, -sign))).max()
    consistent = bool(other <= np.abs(vals).max() * (1 + 1e-12))
    mags = np.abs(vals)
    gap = float(np.log(mags[0]) - np.log(mags[1])) if mags[1] > 0 else np.inf
    state = MeanFieldState(r, l, x, complex(vals[0]), sign)
    return MeanFieldResult(state, Tm, vals, gap, it, residual, residual < tol,
                           damping < 1.0, history, consistent)


@dataclass
class SweepRow:
    h_I: float
    gap: float | None
    lambda0: complex | None
    lambda1: complex | None
    branch: int | None
    iterations: int | None
    residual: float | None
    converged: bool
    n_converged: int
    unreliable: bool
    branch_switch: bool = False
    branch_consistent: bool = True


def _best_of(p: ModelParams, seeds, max_iter: int, tol: float, branch: int | None):
    best, n_ok = None, 0
    for s in seeds:
        try:
            res = solve_fixed_point(p, s, max_iter, tol, branch=branch)
        except (FixedPointError, BranchPointError):
            continue
        if not res.converged:
            continue
        n_ok += 1
        if best is None or abs(res.lambda0) > abs(best.lambda0):
            best = res
    return best, n_ok


def mf_gap_sweep(params: ModelParams, h_I_values, n_restarts: int = 8, seed: int = 0,
                 max_iter: int = 500, tol: float = 1e-10,
                 reliable_above: float = 0.2) -> list[SweepRow]:
    """Mean-field gap over a grid of h_I, keeping the fixed point with largest |lambda_0|.

    Points with ``h_I < reliable_above`` are flagged ``unreliable``: there the
    exact spectrum is gapless while the mean-field gap stays finite.  When no
    restart reaches a fixed point obeying the branch rule, the + branch is
    held fixed and the point is reported with ``branch_consistent=False``.
    """
    rows: list[SweepRow] = []
    ss = np.random.SeedSequence(seed)
    for h_I, child in zip(h_I_values, ss.spawn(len(h_I_values))):
        p = params.replace(h_I=float(h_I))
        seeds = [int(sub.generate_state(1, np.uint64)[0]) for sub in child.spawn(n_restarts)]
        best, n_ok = _best_of(p, seeds, max_iter, tol, None)
        if best is None:
            # no sign-maximizing fixed point: hold the + branch and flag the point
            best, n_ok = _best_of(p, seeds, max_iter, tol, 1)
        if best is None:
            rows.append(SweepRow(float(h_I), None, None, None, None, None, None, False, 0,
                                 True))
            continue
        switch = bool(rows and rows[-1].branch is not None and rows[-1].branch != best.state.branch_sign)
        rows.append(SweepRow(float(h_I), best.gap, best.lambda0, best.lambda1, best.state.branch_sign,
                             best.iterations, best.residual, True, n_ok,
                             h_I < reliable_above or not best.branch_consistent, switch,
                             best.branch_consistent))
    return rows
