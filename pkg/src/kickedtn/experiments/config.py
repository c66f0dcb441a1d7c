"""Flat key=value experiment configs (INI sections), validated and fully resolved."""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..hilbert import _check_sector_args
from ..transfer import ModelParams, _parse_float

KINDS = ("entropy_sweep", "mutual_info", "purification", "spectrum_gap", "edge_profile",
         "meanfield_compare", "imps_sweep", "collapse", "oracle_check")


class ConfigError(ValueError):
    pass


@dataclass
class Disorder:
    kind: str = "none"          # none | hR_normal
    mean: float = np.pi / 6
    sigma: float = 0.0

    def validate(self) -> None:
        if self.kind not in ("none", "hR_normal"):
            raise ConfigError(f"unknown disorder kind {self.kind!r}")
        if self.sigma < 0:
            raise ConfigError("disorder sigma must be >= 0")


@dataclass
class ExperimentConfig:
    kind: str
    base: ModelParams
    h_I: list[float]
    L: list[int]
    n_samples: int = 20
    seed: int = 0
    disorder: Disorder = field(default_factory=Disorder)
    sector: tuple[int, str] | None = (0, "even")
    out_dir: str = "results"
    workers: int = 1
    # kind-specific knobs; missing ones fall back to protocol defaults
    t_steps: int | None = None
    chi: list[int] = field(default_factory=lambda: [16, 32, 64])
    renyi: list[float] = field(default_factory=list)
    eps: list[float] = field(default_factory=lambda: [1e-3])
    restarts: int = 8
    bootstrap: int = 50

    def validate(self) -> ExperimentConfig:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if not self.L:
            raise ConfigError("empty L list")
        if not self.h_I and self.kind != "oracle_check":
            raise ConfigError("empty h_I grid")
        if any(L < 2 for L in self.L):
            raise ConfigError("L must be >= 2")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.t_steps is not None and self.t_steps < 0:
            raise ConfigError("t_steps must be >= 0")
        self.disorder.validate()
        if self.sector is not None:
            for L in self.L:
                try:
                    _check_sector_args(L, *self.sector)
                except ValueError as exc:
                    raise ConfigError(f"sector {self.sector}: {exc}") from None
        if self.kind == "collapse" and len(self.L) < 3:
            raise ConfigError("scaling collapse needs at least three system sizes")
        return self

    def resolved(self) -> dict:
        d = asdict(self)
        d["base"] = self.base.to_config()
        d["sector"] = None if self.sector is None else f"{self.sector[0]},{self.sector[1]}"
        return d

    def with_overrides(self, **kw) -> ExperimentConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        # start:stop:num, inclusive
        a, b, n = text.split(":")
        return [float(x) for x in np.linspace(_parse_float(a), _parse_float(b), int(n))]
    return [_parse_float(x) for x in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def parse_sector(text: str | None) -> tuple[int, str] | None:
    if text is None:
        return None
    text = text.strip()
    if text.lower() in ("", "none", "full"):
        return None
    k, _, parity = text.partition(",")
    parity = {"+": "even", "-": "odd", "": "none"}.get(parity.strip(), parity.strip())
    return int(k), parity


def new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys such as L and h_R are case-sensitive
    return cp


def load_config(path: str | Path) -> ExperimentConfig:
    cp = new_parser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config {path}")
    return config_from_parser(cp)


def config_from_parser(cp: configparser.ConfigParser) -> ExperimentConfig:
    try:
        exp = cp["experiment"]
    except KeyError:
        raise ConfigError("missing [experiment] section") from None
    model = dict(cp["model"]) if cp.has_section("model") else {}
    sweep = cp["sweep"] if cp.has_section("sweep") else {}
    ens = cp["ensemble"] if cp.has_section("ensemble") else {}
    L_list = _ints(sweep.get("L", model.get("L", "")))
    if not L_list:
        raise ConfigError("no system size given ([sweep] L or [model] L)")
    model.setdefault("L", str(L_list[0]))
    try:
        base = ModelParams.from_config(model)
        cfg = ExperimentConfig(
            kind=exp.get("kind", "").strip(),
            base=base,
            h_I=_floats(sweep.get("h_I", "")),
            L=L_list,
            n_samples=int(ens.get("n_samples", 20)),
            seed=int(ens.get("seed", 0)),
            disorder=Disorder(ens.get("disorder", "none").strip(),
                              _parse_float(ens.get("mean", "pi/6")),
                              _parse_float(ens.get("sigma", "0"))),
            sector=parse_sector(exp.get("sector", "0,even")),
            out_dir=exp.get("out_dir", "results"),
            workers=int(exp.get("workers", 1)),
            t_steps=int(sweep["t"]) if "t" in sweep else None,
            chi=_ints(sweep.get("chi", "16 32 64")),
            renyi=_floats(sweep.get("renyi", "")),
            eps=_floats(sweep.get("eps", "1e-3")),
            restarts=int(ens.get("restarts", 8)),
            bootstrap=int(ens.get("bootstrap", 50)),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def dump_config(cfg: ExperimentConfig) -> str:
    """Resolved config in the same INI layout, every default made explicit."""
    cp = new_parser()
    cp["experiment"] = {"kind": cfg.kind, "sector": "full" if cfg.sector is None else f"{cfg.sector[0]},{cfg.sector[1]}",
                        "out_dir": cfg.out_dir, "workers": str(cfg.workers)}
    model = cfg.base.to_config()
    model.pop("L")
    cp["model"] = model
    sweep = {"L": " ".join(map(str, cfg.L)), "h_I": " ".join(repr(float(x)) for x in cfg.h_I),
             "chi": " ".join(map(str, cfg.chi)), "renyi": " ".join(repr(float(x)) for x in cfg.renyi),
             "eps": " ".join(repr(float(x)) for x in cfg.eps)}
    if cfg.t_steps is not None:
        sweep["t"] = str(cfg.t_steps)
    cp["sweep"] = sweep
    cp["ensemble"] = {"n_samples": str(cfg.n_samples), "seed": str(cfg.seed),
                      "disorder": cfg.disorder.kind, "mean": repr(float(cfg.disorder.mean)),
                      "sigma": repr(float(cfg.disorder.sigma)), "restarts": str(cfg.restarts),
                      "bootstrap": str(cfg.bootstrap)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
