"""Finite-size scaling collapse of |S_L(h) - S_L(h_c)| = f[(h - h_c) L^(1/nu)]."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import LSQUnivariateSpline
from scipy.optimize import minimize

from ..hilbert import make_rng


class CollapseError(ValueError):
    pass


@dataclass
class CollapseFit:
    h_Ic: float
    nu: float
    cost: float
    h_Ic_err: float = np.nan
    nu_err: float = np.nan
    bootstrap: list[tuple[float, float]] = field(default_factory=list, repr=False)


@dataclass
class Series:
    """Mean S_{L/2} on an h_I grid for one L, with optional per-sample data for bootstrap."""

    L: int
    h: np.ndarray
    S: np.ndarray
    samples: np.ndarray | None = None   # shape (n_samples, len(h))

    def __post_init__(self):
        self.h = np.asarray(self.h, float)
        self.S = np.asarray(self.S, float)
        order = np.argsort(self.h)
        self.h, self.S = self.h[order], self.S[order]
        if self.samples is not None:
            self.samples = np.asarray(self.samples, float)[:, order]


def _rescaled(series: list[Series], hc: float, nu: float):
    xs, ys, tags = [], [], []
    for i, s in enumerate(series):
        if not s.h[0] <= hc <= s.h[-1]:
            return None
        Sc = np.interp(hc, s.h, s.S)
        xs.append((s.h - hc) * s.L ** (1.0 / nu))
        ys.append(np.abs(s.S - Sc))
        tags.append(np.full(len(s.h), i))
    return xs, ys, tags


def _side_cost(xs, ys, side: int, n_knots: int) -> tuple[float, float, int]:
    """Spline master curve through the points with sign(x) == side inside the common window.

    Returns (residual sum of squares, total sum of squares, points used).
    Knots are spaced uniformly over the window so the cost varies smoothly
    with (h_c, nu).
    """
    xi = [x[np.sign(x) == side] for x in xs]
    yi = [y[np.sign(x) == side] for x, y in zip(xs, ys)]
    if any(len(a) < 2 for a in xi):
        return 0.0, 0.0, 0
    lo = max(a.min() for a in xi)
    hi = min(a.max() for a in xi)
    if hi <= lo:
        return 0.0, 0.0, 0
    x, y = np.concatenate(xi), np.concatenate(yi)
    win = (x >= lo) & (x <= hi)
    x, y = x[win], y[win]
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    # the spline needs strictly increasing abscissae
    x = x + np.arange(len(x)) * 1e-12 * max(1.0, np.abs(x).max())
    nk = min(n_knots, max(0, len(x) // 3 - 1))
    knots = np.linspace(lo, hi, nk + 2)[1:-1]
    k = min(3, len(x) - 1 - nk)
    if k < 1:
        return 0.0, 0.0, 0
    try:
        spl = LSQUnivariateSpline(x, y, knots, k=k)
    except ValueError:
        return 0.0, 0.0, 0
    r = y - spl(x)
    return float(r @ r), float(((y - y.mean()) ** 2).sum()), len(x)


def collapse_cost(series: list[Series], hc: float, nu: float, n_knots: int = 3) -> float:
    """Residual variance of the rescaled points about a spline master curve, over their total variance.

    The two signs of x get separate splines because ``f`` is built from an
    absolute value and has a kink at zero.
    """
    if nu <= 0:
        return np.inf
    res = _rescaled(series, hc, nu)
    if res is None:
        return np.inf
    xs, ys, _ = res
    rss = tss = 0.0
    used = 0
    for side in (-1, 1):
        a, b, n = _side_cost(xs, ys, side, n_knots)
        rss += a
        tss += b
        used += n
    if used < 2 * len(series) or tss <= 0:
        return np.inf
    return rss / tss


def _optimize(series: list[Series], hc_range, nu_range, grid: int = 21) -> tuple[float, float, float]:
    hcs = np.linspace(*hc_range, grid)
    nus = np.linspace(*nu_range, grid)
    best = (np.inf, None, None)
    for hc in hcs:
        for nu in nus:
            c = collapse_cost(series, hc, nu)
            if c < best[0]:
                best = (c, hc, nu)
    if best[1] is None:
        raise CollapseError("no (h_c, nu) in the search box gives overlapping rescaled data")
    res = minimize(lambda p: collapse_cost(series, p[0], p[1]), x0=[best[1], best[2]],
                   method="Nelder-Mead", options={"xatol": 1e-5, "fatol": 1e-10, "maxiter": 400})
    if np.isfinite(res.fun) and res.fun <= best[0]:
        return float(res.fun), float(res.x[0]), float(res.x[1])
    return best[0], float(best[1]), float(best[2])


def scaling_collapse(series: list[Series], hc_range=(0.02, 0.4), nu_range=(0.3, 2.0),
                     n_bootstrap: int = 0, seed: int = 0, grid: int = 21) -> CollapseFit:
    """Fit (h_c, nu) by a coarse grid followed by Nelder-Mead.

    With ``n_bootstrap > 0`` and per-sample data on every series, the
    samples are resampled with replacement and the fit repeated; the
    standard deviations of the refits are the error bars.
    """
    if len(series) < 3:
        raise CollapseError("need at least three system sizes")
    series = sorted(series, key=lambda s: s.L)
    cost, hc, nu = _optimize(series, hc_range, nu_range, grid)
    fit = CollapseFit(hc, nu, cost)
    if n_bootstrap and all(s.samples is not None for s in series):
        rng = make_rng(seed)
        for _ in range(n_bootstrap):
            boot = []
            for s in series:
                idx = rng.integers(0, len(s.samples), len(s.samples))
                boot.append(Series(s.L, s.h, s.samples[idx].mean(axis=0)))
            try:
                _, bh, bn = _optimize(boot, hc_range, nu_range, grid=11)
            except CollapseError:
                continue
            fit.bootstrap.append((bh, bn))
        if fit.bootstrap:
            arr = np.array(fit.bootstrap)
            fit.h_Ic_err, fit.nu_err = (float(v) for v in arr.std(axis=0, ddof=1))
    return fit


def synthetic_series(Ls, h_grid, hc: float, nu: float, f=None, offset=None) -> list[Series]:
    """Data that collapse exactly with the given (h_c, nu)."""
    f = f or (lambda x: np.tanh(x) + 0.3 * x)
    out = []
    for L in Ls:
        base = 0.0 if offset is None else offset(L)
        h = np.asarray(h_grid, float)
        out.append(Series(L, h, base + f((h - hc) * L ** (1.0 / nu))))
    return out
