"""Single-point workers and ensemble averages used by the runner and the tests.

Every worker is a plain function of (params, seed, sample, ...) so it can be
shipped to a process pool.  Initial states and disorder draws depend only on
(seed, L, sample), never on h_I: the same states are reused across the h_I
grid, which keeps curves comparable point to point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import diagnostics as dg
from ..hilbert import (build_sector_basis, lift, make_rng, random_orthogonal_pair, random_product_state,
                       random_ti_product_state)
from ..spectral import eig_full, spectral_gap
from ..transfer import ModelParams, build_dense_T, sample_disorder
from .config import Disorder
from .parallel import (STREAM_DISORDER, STREAM_PAIR, STREAM_STATE, derive_seed, parallel_map)


def realize(base: ModelParams, L: int, h_I: float, disorder: Disorder | None, seed: int,
            sample: int) -> ModelParams:
    """Model parameters for one ensemble member."""
    p = base.replace(L=L, h_I=float(h_I), h_R_sites=None)
    if disorder is None or disorder.kind == "none":
        return p
    dseed = derive_seed(seed, L, sample, STREAM_DISORDER)
    real = sample_disorder(L, disorder.mean, disorder.sigma, h_I, dseed)
    return p.replace(h_R=float(np.mean(real.h_R_sites)), h_R_sites=real.h_R_sites)


def initial_state(params: ModelParams, seed: int, sample: int):
    s = derive_seed(seed, params.L, sample, STREAM_STATE)
    if params.h_R_sites is None:
        return random_ti_product_state(params.L, s)
    return random_product_state(params.L, s)


def entropy_point(params: ModelParams, seed: int, sample: int, t: int,
                  renyi=(), mutual: bool = False) -> dict:
    """Observables of T^t|psi_i> for one random product initial state."""
    traj = dg.evolve(params, initial_state(params, seed, sample), t, record_every=max(t, 1))
    psi = traj.final
    out = {"S_half": dg.entropy_vn(psi), "log_norm": traj.log_norms[-1]}
    for n in renyi:
        out[f"S_n{n:g}"] = dg.entropy_renyi(psi, n)
    if mutual:
        out["I_AB"] = dg.mutual_information(psi)
    return out


def purification_point(params: ModelParams, seed: int, sample: int, t_max: int,
                       eps=(1e-3,), sector=(0, "even"), stop_early: bool = False) -> dict:
    basis = build_sector_basis(params.L, *sector)
    a, b = random_orthogonal_pair(basis, derive_seed(seed, params.L, sample, STREAM_PAIR))
    trace = dg.purify_reference(params, lift(a), lift(b), t_max, eps, stop_early)
    out = {"S_ref_final": float(trace.S_ref[-1])}
    for e, te in trace.t_eps.items():
        out[f"t_eps_{e:g}"] = np.nan if te is None else te
    out["S_ref"] = trace.S_ref
    return out


def sector_gap(params: ModelParams, sector=(0, "even")) -> float:
    basis = None if sector is None else build_sector_basis(params.L, *sector)
    spec = eig_full(build_dense_T(params, basis), params, vectors=False)
    return spectral_gap(spec)


def edge_draw(L: int, h_I: float, mean: float, sigma: float, seed: int, sample: int,
              sector=(0, "even"), base: ModelParams | None = None) -> np.ndarray:
    """Eigenvalues of T for one translation-invariant draw h_R ~ Normal(mean, sigma)."""
    rng_seed = derive_seed(seed, L, sample, STREAM_DISORDER)
    h_R = mean + sigma * make_rng(rng_seed).standard_normal()
    base = base or ModelParams(L)
    p = base.replace(L=L, h_R=float(h_R), h_I=float(h_I), h_R_sites=None)
    basis = None if sector is None else build_sector_basis(L, *sector)
    return eig_full(build_dense_T(p, basis), p, vectors=False).eigenvalues


@dataclass
class PointStats:
    L: int
    h_I: float
    key: str
    mean: float
    stderr: float
    n: int
    values: np.ndarray

    def as_row(self) -> dict:
        return {"L": self.L, "h_I": self.h_I, "observable": self.key, "mean": self.mean,
                "stderr": self.stderr, "n": self.n}


def summarize(values, L: int, h_I: float, key: str) -> PointStats:
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], float)
    n = len(v)
    mean = float(v.mean()) if n else np.nan
    se = float(v.std(ddof=1) / np.sqrt(n)) if n > 1 else np.nan
    return PointStats(L, float(h_I), key, mean, se, n, v)


def entropy_ensemble(base: ModelParams, Ls, h_I_values, n_samples: int, seed: int = 0,
                     t_factor: int = 4, t: int | None = None, renyi=(), mutual: bool = False,
                     disorder: Disorder | None = None, workers: int = 1):
    """Per-sample rows and per-point means of S_{L/2} (and optional S_n, I_AB).

    Returns ``(rows, stats, failures)``.  Each sample uses a fresh disorder
    realization when ``disorder`` is given.
    """
    tasks = []
    for L in Ls:
        steps = t if t is not None else t_factor * L
        for h_I in h_I_values:
            for k in range(n_samples):
                p = realize(base, L, h_I, disorder, seed, k)
                tasks.append(((L, float(h_I), k), (p, seed, k, steps, tuple(renyi), mutual)))
    outcomes = parallel_map(entropy_point, tasks, workers)
    rows, failures = [], []
    for o in outcomes:
        L, h_I, k = o.key
        if not o.ok:
            failures.append({"L": L, "h_I": h_I, "sample": k, "error": o.error})
            continue
        rows.append({"L": L, "h_I": h_I, "sample": k, **o.value})
    stats = []
    keys = [k for k in (rows[0] if rows else {}) if k not in ("L", "h_I", "sample")]
    for L in Ls:
        for h_I in h_I_values:
            sel = [r for r in rows if r["L"] == L and r["h_I"] == float(h_I)]
            for key in keys:
                stats.append(summarize([r[key] for r in sel], L, h_I, key))
    return rows, stats, failures


def disorder_average(base: ModelParams, Ls, h_I_values, n_samples: int, disorder: Disorder,
                     seed: int = 0, workers: int = 1, t_factor: int = 4):
    """Disorder-averaged S_{L/2}: mean and standard error per (L, h_I)."""
    if n_samples < 2:
        raise ValueError("disorder averaging needs n_samples >= 2")
    return entropy_ensemble(base, Ls, h_I_values, n_samples, seed, t_factor,
                            disorder=disorder, workers=workers)


def stat_lookup(stats, L: int, h_I: float, key: str) -> PointStats:
    for s in stats:
        if s.L == L and abs(s.h_I - h_I) < 1e-12 and s.key == key:
            return s
    raise KeyError((L, h_I, key))
