"""Command line entry point: ``kickedtn <subcommand> ...``.

Exit codes: 0 success, 1 validation error, 2 partial failure (see manifest.json).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiments.config import ConfigError, Disorder, ExperimentConfig, load_config, parse_sector
from .experiments.io import write_csv, write_json
from .experiments.runner import run_experiment
from .transfer import ModelParams, _parse_boundary, _parse_float

log = logging.getLogger("kickedtn")


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors: exit 1, keeping 2 for partial failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    from .experiments.config import _floats as parse
    return parse(text)


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--sector", default=None, help="k,parity (e.g. 0,even or 0,+); 'full' for no reduction")
    p.add_argument("--boundary", choices=["pbc", "obc"], default=None)


def _model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", default="10", help="system size(s), comma separated")
    p.add_argument("--h-I", dest="h_I", default="0.3", help="h_I values, list or start:stop:num")
    p.add_argument("--h-R", dest="h_R", default="pi/6")
    p.add_argument("--J", default="pi/4")
    p.add_argument("--g", default="-pi/4")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kickedtn", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run an experiment config file")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("oracle", help="matrix powers vs explicit spin sums")
    _model(p)
    p.set_defaults(L="2,3,4", h_I="0,0.3")
    _common(p)

    p = sub.add_parser("spectrum", help="full spectrum of T in a sector")
    _model(p)
    _common(p)

    p = sub.add_parser("edge", help="radial density and erfc edge fit over an h_R ensemble")
    _model(p)
    p.set_defaults(L="10,12", h_I="0.01")
    p.add_argument("--n-draws", type=int, default=100)
    p.add_argument("--sigma", default="pi/60")
    _common(p)

    p = sub.add_parser("evolve", help="entanglement time series of one trajectory")
    _model(p)
    p.add_argument("--t", type=int, default=None, help="steps (default 4L)")
    p.add_argument("--renyi", default="0.5")
    _common(p)

    p = sub.add_parser("purify", help="reference-qubit purification")
    _model(p)
    p.add_argument("--t", type=int, default=None, help="steps (default L/2)")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--eps", default="1e-3")
    _common(p)

    p = sub.add_parser("meanfield", help="mean-field gap sweep vs exact sector gaps")
    _model(p)
    p.set_defaults(L="10", h_I="0:1:11")
    p.add_argument("--restarts", type=int, default=8)
    _common(p)

    p = sub.add_parser("imps", help="infinite-MPS entropy vs bond dimension")
    _model(p)
    p.add_argument("--chi", default="16,32,64")
    p.add_argument("--t", type=int, default=100)
    _common(p)

    p = sub.add_parser("collapse", help="finite-size scaling collapse of the disordered model")
    _model(p)
    p.set_defaults(L="8,10,12", h_I="0.02:0.4:12")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--sigma", default="pi/6")
    p.add_argument("--bootstrap", type=int, default=20)
    _common(p)

    p = sub.add_parser("plot", help="SVG plot of a result CSV")
    p.add_argument("csv")
    p.add_argument("--x", default=None)
    p.add_argument("--y", default=None)
    p.add_argument("--group", default=None)
    p.add_argument("--out", default=None)
    return ap


def _base(args) -> ModelParams:
    L = _ints(args.L)[0]
    return ModelParams(L, _parse_float(args.J), _parse_float(args.g), _parse_float(args.h_R), 0.0,
                       _parse_boundary(args.boundary or "pbc"))


def _cfg(args, kind: str, **kw) -> ExperimentConfig:
    sector = (0, "even") if args.sector is None else parse_sector(args.sector)
    base = _base(args)
    if base.boundary == "open" and sector is not None:
        log.info("open boundary breaks translation symmetry: using the full space")
        sector = None
    cfg = ExperimentConfig(kind=kind, base=base, h_I=_floats(args.h_I), L=_ints(args.L),
                           seed=args.seed or 0, sector=sector,
                           out_dir=args.out_dir or f"results/{kind}", workers=args.workers or 1, **kw)
    return cfg.validate()


def _report(res) -> int:
    for k, v in res.summary.items():
        print(f"{k}: {v}")
    if res.failures:
        print(f"{len(res.failures)} point(s) failed; see {res.out_dir / 'manifest.json'}", file=sys.stderr)
    print(f"results in {res.out_dir}")
    return res.exit_code


def _spectrum(args) -> int:
    from .hilbert import build_sector_basis
    from .spectral import eig_full, pairing_check, spectral_gap
    from .transfer import build_dense_T

    cfg = _cfg(args, "spectrum_gap")
    out = Path(cfg.out_dir)
    rows, summary = [], {}
    for L in cfg.L:
        for h_I in cfg.h_I:
            p = cfg.base.replace(L=L, h_I=h_I)
            basis = None if cfg.sector is None else build_sector_basis(L, *cfg.sector)
            spec = eig_full(build_dense_T(p, basis), p, label=basis.label if basis else "full", vectors=False)
            pc = pairing_check(spec, p.J, L)
            summary[f"L={L},h_I={h_I:g}"] = {"dim": spec.dim, "gap": spectral_gap(spec),
                                             "rho0": float(spec.rho[0]),
                                             "pairing_deviation": pc.multiset_deviation}
            rows += [{"L": L, "h_I": h_I, "index": i, "re": z.real, "im": z.imag, "rho": r, "phi": f}
                     for i, (z, r, f) in enumerate(zip(spec.eigenvalues, spec.rho, spec.phi))]
    write_csv(out / "eigenvalues.csv", rows)
    write_json(out / "spectrum.json", {"params": cfg.resolved(), "summary": summary})
    for k, v in summary.items():
        print(k, v)
    print(f"results in {out}")
    return 0


def _evolve(args) -> int:
    from . import diagnostics as dg
    from .experiments.ensembles import initial_state

    cfg = _cfg(args, "entropy_sweep")
    out = Path(cfg.out_dir)
    renyi = _floats(args.renyi)
    for L in cfg.L:
        for h_I in cfg.h_I:
            p = cfg.base.replace(L=L, h_I=h_I)
            t = args.t if args.t is not None else 4 * L
            traj = dg.evolve(p, initial_state(p, cfg.seed, 0), t)
            rows = []
            for m, st, ln in zip(traj.times, traj.states, traj.log_norms):
                rep = dg.entanglement_report(st, m, renyi, mutual=L % 6 == 0)
                rows.append({**rep.as_row(), "log_norm": ln})
            path = write_csv(out / f"trajectory_L{L}_hI{h_I:g}.csv", rows)
            print(f"L={L} h_I={h_I:g}: S_half(t={t}) = {rows[-1]['S_half']:.6f}  -> {path}")
    write_json(out / "evolve.json", {"params": cfg.resolved(), "seed": cfg.seed})
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "plot":
            from .experiments.svg import plot_csv
            print(plot_csv(args.csv, args.x, args.y, args.group, args.out))
            return 0
        if args.command == "run":
            cfg = load_config(args.config)
            cfg = cfg.with_overrides(seed=args.seed, workers=args.workers, out_dir=args.out_dir)
            if args.sector is not None:
                cfg.sector = parse_sector(args.sector)
            if args.boundary is not None:
                cfg.base = cfg.base.replace(boundary=_parse_boundary(args.boundary))
            return _report(run_experiment(cfg.validate()))
        if args.command == "spectrum":
            return _spectrum(args)
        if args.command == "evolve":
            return _evolve(args)
        if args.command == "oracle":
            return _report(run_experiment(_cfg(args, "oracle_check")))
        if args.command == "edge":
            cfg = _cfg(args, "edge_profile", n_samples=args.n_draws,
                       disorder=Disorder("hR_normal", _parse_float(args.h_R), _parse_float(args.sigma)))
            return _report(run_experiment(cfg))
        if args.command == "purify":
            cfg = _cfg(args, "purification", n_samples=args.pairs, t_steps=args.t, eps=_floats(args.eps))
            return _report(run_experiment(cfg))
        if args.command == "meanfield":
            return _report(run_experiment(_cfg(args, "meanfield_compare", restarts=args.restarts)))
        if args.command == "imps":
            return _report(run_experiment(_cfg(args, "imps_sweep", chi=_ints(args.chi), t_steps=args.t)))
        if args.command == "collapse":
            cfg = _cfg(args, "collapse", n_samples=args.samples, bootstrap=args.bootstrap,
                       disorder=Disorder("hR_normal", _parse_float(args.h_R), _parse_float(args.sigma)))
            cfg.sector = None
            return _report(run_experiment(cfg))
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
