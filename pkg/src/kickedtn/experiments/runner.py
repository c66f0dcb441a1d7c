"""Config -> computation -> CSV / JSON / SVG files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..boundary_mps import run_imps_sweep
from ..hilbert import RowState, make_rng
from ..meanfield import mf_gap_sweep
from ..spectral import EdgeFitError, edge_metrics, erfc_profile, fit_edge, radial_density
from ..transfer import ModelParams, overlap_via_powers, spin_sum_oracle
from . import ensembles as ens
from .collapse import CollapseError, Series, scaling_collapse
from .config import ConfigError, ExperimentConfig, dump_config
from .io import manifest, write_csv, write_json
from .parallel import STREAM_STATE, derive_seed, parallel_map
from .svg import line_plot


@dataclass
class RunResult:
    out_dir: Path
    outputs: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 2 if self.failures else 0


def _curves(stats, key: str, Ls):
    out = []
    for L in Ls:
        pts = sorted((s.h_I, s.mean) for s in stats if s.L == L and s.key == key)
        out.append({"x": [p[0] for p in pts], "y": [p[1] for p in pts], "label": f"L={L}"})
    return out


def _entropy_like(cfg: ExperimentConfig, res: RunResult, mutual: bool):
    t = cfg.t_steps
    rows, stats, fails = ens.entropy_ensemble(cfg.base, cfg.L, cfg.h_I, cfg.n_samples, cfg.seed,
                                              t=t, renyi=cfg.renyi, mutual=mutual,
                                              disorder=cfg.disorder, workers=cfg.workers)
    res.failures += fails
    res.outputs.append(str(write_csv(res.out_dir / "samples.csv", rows)))
    res.outputs.append(str(write_csv(res.out_dir / "ensemble_mean.csv", [s.as_row() for s in stats])))
    key = "I_AB" if mutual else "S_half"
    res.outputs.append(str(line_plot(res.out_dir / f"{key}.svg", _curves(stats, key, cfg.L),
                                     "h_I", key, f"{key} vs h_I")))
    res.summary = {f"{s.key}[L={s.L},h_I={s.h_I:g}]": s.mean for s in stats}


def _purification(cfg: ExperimentConfig, res: RunResult):
    tasks = []
    for L in cfg.L:
        t_max = cfg.t_steps if cfg.t_steps is not None else L // 2
        for h_I in cfg.h_I:
            for k in range(cfg.n_samples):
                p = ens.realize(cfg.base, L, h_I, cfg.disorder, cfg.seed, k)
                tasks.append(((L, float(h_I), k), (p, cfg.seed, k, t_max, tuple(cfg.eps), cfg.sector or (0, "even"))))
    outs = parallel_map(ens.purification_point, tasks, cfg.workers)
    rows, traces = [], []
    for o in outs:
        L, h_I, k = o.key
        if not o.ok:
            res.failures.append({"L": L, "h_I": h_I, "sample": k, "error": o.error})
            continue
        S = o.value.pop("S_ref")
        rows.append({"L": L, "h_I": h_I, "sample": k, **o.value})
        traces += [{"L": L, "h_I": h_I, "sample": k, "t": t, "S_ref": s} for t, s in enumerate(S)]
    res.outputs.append(str(write_csv(res.out_dir / "purification.csv", rows)))
    res.outputs.append(str(write_csv(res.out_dir / "S_ref_traces.csv", traces)))
    stats = []
    for L in cfg.L:
        for h_I in cfg.h_I:
            sel = [r for r in rows if r["L"] == L and r["h_I"] == float(h_I)]
            for key in [k for k in (sel[0] if sel else {}) if k not in ("L", "h_I", "sample")]:
                stats.append(ens.summarize([r[key] for r in sel], L, h_I, key))
    res.outputs.append(str(write_csv(res.out_dir / "ensemble_mean.csv", [s.as_row() for s in stats])))
    res.outputs.append(str(line_plot(res.out_dir / "S_ref.svg", _curves(stats, "S_ref_final", cfg.L),
                                     "h_I", "S_ref", "reference entropy at t_max")))


def _gap_point(p: ModelParams, sector):
    return ens.sector_gap(p, sector)


def _spectrum_gap(cfg: ExperimentConfig, res: RunResult):
    tasks = []
    for L in cfg.L:
        for h_I in cfg.h_I:
            for k in range(cfg.n_samples if cfg.disorder.kind != "none" else 1):
                p = ens.realize(cfg.base, L, h_I, cfg.disorder, cfg.seed, k)
                tasks.append(((L, float(h_I), k), (p, cfg.sector)))
    outs = parallel_map(_gap_point, tasks, cfg.workers)
    rows = []
    for o in outs:
        L, h_I, k = o.key
        if o.ok:
            rows.append({"L": L, "h_I": h_I, "sample": k, "gap": o.value})
        else:
            res.failures.append({"L": L, "h_I": h_I, "sample": k, "error": o.error})
    stats = [ens.summarize([r["gap"] for r in rows if r["L"] == L and r["h_I"] == float(h)], L, h, "gap")
             for L in cfg.L for h in cfg.h_I]
    res.outputs.append(str(write_csv(res.out_dir / "gap_samples.csv", rows)))
    res.outputs.append(str(write_csv(res.out_dir / "gap.csv", [s.as_row() for s in stats])))
    res.outputs.append(str(line_plot(res.out_dir / "gap.svg", _curves(stats, "gap", cfg.L), "h_I",
                                     "spectral gap", "rho_0 - rho_1")))


def _edge(cfg: ExperimentConfig, res: RunResult):
    mean = cfg.disorder.mean if cfg.disorder.kind == "hR_normal" else cfg.base.h_R
    sigma = cfg.disorder.sigma if cfg.disorder.kind == "hR_normal" else 0.0
    rows, series = [], []
    for L in cfg.L:
        for h_I in cfg.h_I:
            tasks = [((L, h_I, k), (L, h_I, mean, sigma, cfg.seed, k, cfg.sector, cfg.base))
                     for k in range(cfg.n_samples)]
            outs = parallel_map(ens.edge_draw, tasks, cfg.workers)
            spectra = [o.value for o in outs if o.ok]
            res.failures += [{"L": L, "h_I": h_I, "sample": o.key[2], "error": o.error} for o in outs if not o.ok]
            if not spectra:
                continue
            prof = radial_density(spectra)
            row = {"L": L, "h_I": h_I, "n_draws": len(spectra)}
            try:
                fit = fit_edge(prof)
                m = edge_metrics(prof, fit)
                row.update(rho_e=fit.rho_e, w=fit.w, amplitude=fit.amplitude, residual=fit.residual,
                           N_beyond=m.N_beyond, N_model=m.N_model, rho0_minus_rho_e=m.mean_rho0_minus_rho_e)
                xs = (prof.bin_centers - fit.rho_e) / fit.w
                series.append({"x": xs, "y": prof.density / (2 * fit.amplitude), "label": f"L={L} h_I={h_I:g}",
                               "style": "points"})
            except EdgeFitError as exc:
                res.failures.append({"L": L, "h_I": h_I, "error": f"EdgeFitError: {exc}"})
            rows.append(row)
            write_csv(res.out_dir / f"density_L{L}_hI{h_I:g}.csv",
                      [{"rho": c, "n": d} for c, d in zip(prof.bin_centers, prof.density)])
    res.outputs.append(str(write_csv(res.out_dir / "edge_fits.csv", rows)))
    if series:
        u = np.linspace(-4, 4, 200)
        series.append({"x": u, "y": erfc_profile(u, 0.5, 0.0, 1.0), "label": "erfc", "style": "dashed"})
        res.outputs.append(str(line_plot(res.out_dir / "edge_collapse.svg", series,
                                         "(rho - rho_e) / w", "n / n_bulk", "radial density")))


def _meanfield(cfg: ExperimentConfig, res: RunResult):
    mf = mf_gap_sweep(cfg.base, cfg.h_I, cfg.restarts, cfg.seed)
    rows = []
    for r in mf:
        row = {"h_I": r.h_I, "gap_mf": r.gap, "lambda0": r.lambda0, "lambda1": r.lambda1, "branch": r.branch,
               "iterations": r.iterations, "residual": r.residual, "converged": r.converged,
               "unreliable": r.unreliable, "branch_switch": r.branch_switch,
               "branch_consistent": r.branch_consistent}
        for L in cfg.L:
            try:
                row[f"gap_exact_L{L}"] = ens.sector_gap(cfg.base.replace(L=L, h_I=r.h_I), cfg.sector)
            except Exception as exc:  # recorded, sweep continues
                res.failures.append({"L": L, "h_I": r.h_I, "error": f"{type(exc).__name__}: {exc}"})
        rows.append(row)
    res.outputs.append(str(write_csv(res.out_dir / "meanfield.csv", rows)))
    series = [{"x": [r["h_I"] for r in rows], "y": [np.nan if r["gap_mf"] is None else r["gap_mf"] for r in rows],
               "label": "mean field", "style": "line"}]
    for L in cfg.L:
        series.append({"x": [r["h_I"] for r in rows], "y": [r.get(f"gap_exact_L{L}", np.nan) for r in rows],
                       "label": f"exact L={L}", "style": "points"})
    res.outputs.append(str(line_plot(res.out_dir / "meanfield.svg", series, "h_I", "gap")))


def _imps(cfg: ExperimentConfig, res: RunResult):
    t_steps = cfg.t_steps if cfg.t_steps is not None else 100
    rows = run_imps_sweep(cfg.base, cfg.chi, t_steps, cfg.h_I, seed=derive_seed(cfg.seed, 0, 0, STREAM_STATE))
    out = []
    for r in rows:
        out.append({"h_I": r.h_I, "chi": r.chi, "t": r.t, "S_chi": r.S_chi, "trunc_err": r.trunc_err,
                    "env_residual": r.env_residual})
        if not r.ok:
            res.failures.append({"h_I": r.h_I, "chi": r.chi, "error": r.error})
    res.outputs.append(str(write_csv(res.out_dir / "imps.csv", out)))
    series = []
    for chi in cfg.chi:
        pts = [(r["h_I"], r["S_chi"]) for r in out if r["chi"] == chi]
        series.append({"x": [p[0] for p in pts], "y": [p[1] for p in pts], "label": f"chi={chi}"})
    res.outputs.append(str(line_plot(res.out_dir / "imps.svg", series, "h_I", "S_chi")))


def _collapse(cfg: ExperimentConfig, res: RunResult):
    rows, stats, fails = ens.entropy_ensemble(cfg.base, cfg.L, cfg.h_I, cfg.n_samples, cfg.seed,
                                              t=cfg.t_steps, disorder=cfg.disorder, workers=cfg.workers)
    res.failures += fails
    res.outputs.append(str(write_csv(res.out_dir / "samples.csv", rows)))
    res.outputs.append(str(write_csv(res.out_dir / "ensemble_mean.csv", [s.as_row() for s in stats])))
    series = []
    for L in cfg.L:
        samples = np.array([[r["S_half"] for r in rows if r["L"] == L and r["sample"] == k]
                            for k in range(cfg.n_samples)])
        mean = [ens.stat_lookup(stats, L, h, "S_half").mean for h in cfg.h_I]
        ok = samples.ndim == 2 and samples.shape[1] == len(cfg.h_I)
        series.append(Series(L, cfg.h_I, mean, samples if ok else None))
    try:
        fit = scaling_collapse(series, n_bootstrap=cfg.bootstrap, seed=cfg.seed)
    except CollapseError as exc:
        res.failures.append({"error": f"CollapseError: {exc}"})
        return
    res.summary = {"h_Ic": fit.h_Ic, "nu": fit.nu, "cost": fit.cost, "h_Ic_err": fit.h_Ic_err, "nu_err": fit.nu_err}
    res.outputs.append(str(write_json(res.out_dir / "collapse.json", res.summary)))
    plot = []
    for s in series:
        Sc = np.interp(fit.h_Ic, s.h, s.S)
        plot.append({"x": (s.h - fit.h_Ic) * s.L ** (1 / fit.nu), "y": np.abs(s.S - Sc), "label": f"L={s.L}",
                     "style": "points"})
    res.outputs.append(str(line_plot(res.out_dir / "collapse.svg", plot, "(h_I - h_c) L^(1/nu)",
                                     "|S - S_c|", f"h_c={fit.h_Ic:.3f} nu={fit.nu:.2f}")))


def oracle_rows(base: ModelParams, Ls, h_I_values, max_work: int = 16, seed: int = 0) -> list[dict]:
    """Matrix-power overlaps vs the explicit spin sum for every (L, t) with L (t-1) <= max_work."""
    rng = make_rng(seed)
    rows = []
    for L in Ls:
        t = 1
        while L * (t - 1) <= max_work:
            for h_I in h_I_values:
                p = base.replace(L=L, h_I=float(h_I), h_R_sites=None)
                si = int(rng.integers(0, 1 << L))
                sf = int(rng.integers(0, 1 << L))
                ov = spin_sum_oracle(p, si, sf, t)
                ref = _basis_overlap(p, si, sf, t)
                err = abs(ov - ref) / max(abs(ref), 1e-300)
                rows.append({"L": L, "t": t, "h_I": float(h_I), "s_i": si, "s_f": sf, "oracle": ov, "powers": ref,
                             "rel_err": err, "pass": bool(err < 1e-9)})
            t += 1
    return rows


def _basis_overlap(p: ModelParams, si: int, sf: int, t: int) -> complex:
    L = p.L
    a = np.zeros(1 << L, complex)
    a[si] = 1.0
    b = np.zeros(1 << L, complex)
    b[sf] = 1.0
    return overlap_via_powers(p, RowState(a, L), RowState(b, L), t).value


def _oracle(cfg: ExperimentConfig, res: RunResult):
    rows = oracle_rows(cfg.base, cfg.L, cfg.h_I or [0.0, 0.3], seed=cfg.seed)
    res.outputs.append(str(write_csv(res.out_dir / "oracle.csv", rows)))
    bad = [r for r in rows if not r["pass"]]
    res.failures += [{"L": r["L"], "t": r["t"], "h_I": r["h_I"], "error": f"rel_err {r['rel_err']:.2e}"} for r in bad]
    res.summary = {"checked": len(rows), "failed": len(bad),
                   "max_rel_err": max((r["rel_err"] for r in rows), default=0.0)}


DISPATCH = {
    "entropy_sweep": lambda c, r: _entropy_like(c, r, mutual=False),
    "mutual_info": lambda c, r: _entropy_like(c, r, mutual=True),
    "purification": _purification,
    "spectrum_gap": _spectrum_gap,
    "edge_profile": _edge,
    "meanfield_compare": _meanfield,
    "imps_sweep": _imps,
    "collapse": _collapse,
    "oracle_check": _oracle,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunResult:
    """Validate, run and persist one experiment; always writes manifest.json."""
    cfg.validate()
    if cfg.kind in ("mutual_info",) and any(L % 6 for L in cfg.L):
        raise ConfigError("antipodal mutual information needs 6 | L for every L")
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = RunResult(out)
    dump = dump_config(cfg)
    (out / "config.ini").write_text(dump)
    DISPATCH[cfg.kind](cfg, res)
    write_json(out / "manifest.json", manifest(dump, cfg.resolved(), res.outputs, res.failures,
                                               {"summary": res.summary}))
    return res
