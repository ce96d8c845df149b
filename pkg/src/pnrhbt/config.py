"""Experiment config files (TOML).

Schema (``schema_version = 1``)::

    seed = 2011                      # optional; --seed overrides
    [source]                         # or several [sources.<name>] tables
    kind = "poisson" | "thermal" | "mix"
    mu = 2.8                         # poisson/thermal; mix with g2
    g2 = 1.2                         # mix only, alternatively mu_s + mu_n
    [detector]                       # both detectors unless [detector2]
    eta, v1_volts, sigma1_volts, sigma0_volts, n_max
    quench = "linear" | { v_sat_volts = 0.33 }
    [disc]                           # both discriminators unless [disc2]
    kind = "threshold", v_t_volts    | kind = "window", v_lo_volts, v_hi_volts
    [experiment]
    split, n_pulses, max_delay, shards
    [sweep]
    mode = "window" | "threshold" | "voltage" | "montecarlo"
    fixed = 7                        # detector-1 photon number or volts
    settings = [...]                 # detector-2 grid
    [avalanche]
    v_min_volts, v_max_volts, step_volts

A bare preset name (``fml``, ``lnt``, ``lat``, ``trio``) may be given
instead of a path.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .detector_model import DetectorParams, Discriminator, Linear, Saturating, Threshold, Window
from .hbt_engine import ConfigError, ExperimentConfig
from .source_models import ParameterError, SourceSpec

SCHEMA_VERSION = 1
PRESETS = ("fml", "lnt", "lat", "trio")
SWEEP_MODES = ("window", "threshold", "voltage", "montecarlo")


@dataclass
class SweepSpec:
    mode: str = "threshold"
    fixed: float = 7
    settings: list = field(default_factory=lambda: list(range(1, 8)))


@dataclass
class RunConfig:
    sources: dict[str, SourceSpec]
    det1: DetectorParams = field(default_factory=DetectorParams)
    det2: DetectorParams = field(default_factory=DetectorParams)
    disc1: Discriminator = field(default_factory=lambda: Threshold(0.065))
    disc2: Discriminator = field(default_factory=lambda: Threshold(0.065))
    split: float = 0.5
    n_pulses: int = 1_000_000
    max_delay: int = 10
    shards: int = 1
    seed: int | None = None
    sweep: SweepSpec = field(default_factory=SweepSpec)
    v_min: float = 0.0
    v_max: float = 0.75
    v_step: float = 0.001
    path: str = ""

    def experiment(self, name: str, **overrides) -> ExperimentConfig:
        cfg = ExperimentConfig(
            source=self.sources[name],
            det1=self.det1,
            det2=self.det2,
            disc1=self.disc1,
            disc2=self.disc2,
            split=self.split,
            n_pulses=self.n_pulses,
            max_delay=self.max_delay,
            seed=self.seed if self.seed is not None else 0,
            shards=self.shards,
        )
        cfg = dataclasses.replace(cfg, **overrides)
        cfg.validate()
        return cfg

    def voltage_grid(self) -> np.ndarray:
        n = int(round((self.v_max - self.v_min) / self.v_step)) + 1
        if n < 2:
            raise ConfigError("avalanche grid needs at least two points")
        return self.v_min + self.v_step * np.arange(n)


def parse_source(d: dict) -> SourceSpec:
    kind = d.get("kind")
    if kind == "poisson":
        return SourceSpec.poisson(_num(d, "mu"))
    if kind == "thermal":
        return SourceSpec.thermal(_num(d, "mu"))
    if kind == "mix":
        if "g2" in d:
            return SourceSpec.from_mu_g2(_num(d, "mu"), _num(d, "g2"))
        return SourceSpec.mix(_num(d, "mu_s"), _num(d, "mu_n"))
    raise ConfigError(f"source kind must be poisson, thermal or mix, got {kind!r}")


def parse_detector(d: dict) -> DetectorParams:
    quench = d.get("quench", "linear")
    if quench == "linear":
        q = Linear()
    elif isinstance(quench, dict) and "v_sat_volts" in quench:
        q = Saturating(float(quench["v_sat_volts"]))
    else:
        raise ConfigError(f"quench must be 'linear' or {{v_sat_volts = ...}}, got {quench!r}")
    defaults = DetectorParams()
    sigma1 = float(d.get("sigma1_volts", defaults.sigma1))
    return DetectorParams(
        eta=float(d.get("eta", defaults.eta)),
        v1=float(d.get("v1_volts", defaults.v1)),
        sigma1=sigma1,
        sigma0=float(d["sigma0_volts"]) if "sigma0_volts" in d else sigma1 / 2,
        n_max=int(d.get("n_max", defaults.n_max)),
        quench=q,
    )


def parse_disc(d: dict) -> Discriminator:
    kind = d.get("kind", "threshold")
    if kind == "threshold":
        return Threshold(_num(d, "v_t_volts"))
    if kind == "window":
        return Window(_num(d, "v_lo_volts"), _num(d, "v_hi_volts"))
    raise ConfigError(f"disc kind must be threshold or window, got {kind!r}")


def _num(d: dict, key: str) -> float:
    if key not in d:
        raise ConfigError(f"missing key {key!r}")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key!r} must be a number, got {v!r}")
    return float(v)


def from_dict(raw: dict, path: str = "") -> RunConfig:
    """Build a :class:`RunConfig`, turning any domain error into :class:`ConfigError`."""
    try:
        return _from_dict(raw, path)
    except ConfigError:
        raise
    except (ParameterError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def _from_dict(raw: dict, path: str) -> RunConfig:
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    if "sources" in raw:
        sources = {name: parse_source(s) for name, s in raw["sources"].items()}
    elif "source" in raw:
        stem = path.removeprefix("preset:")
        sources = {Path(stem).stem or "source": parse_source(raw["source"])}
    else:
        raise ConfigError("config needs a [source] or [sources.<name>] block")
    if not sources:
        raise ConfigError("no sources defined")
    det1 = parse_detector(raw.get("detector", {}))
    det2 = parse_detector(raw["detector2"]) if "detector2" in raw else det1
    disc1 = parse_disc(raw["disc"]) if "disc" in raw else Threshold(0.065)
    disc2 = parse_disc(raw["disc2"]) if "disc2" in raw else disc1
    exp = raw.get("experiment", {})
    sw = raw.get("sweep", {})
    mode = sw.get("mode", "threshold")
    if mode not in SWEEP_MODES:
        raise ConfigError(f"sweep mode must be one of {SWEEP_MODES}, got {mode!r}")
    sweep = SweepSpec(mode, sw.get("fixed", 7), list(sw.get("settings", range(1, 8))))
    av = raw.get("avalanche", {})
    seed = raw.get("seed")
    if seed is not None and not (isinstance(seed, int) and 0 <= seed < 2**64):
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    cfg = RunConfig(
        sources=sources,
        det1=det1,
        det2=det2,
        disc1=disc1,
        disc2=disc2,
        split=float(exp.get("split", 0.5)),
        n_pulses=int(exp.get("n_pulses", 1_000_000)),
        max_delay=int(exp.get("max_delay", 10)),
        shards=int(exp.get("shards", 1)),
        seed=seed,
        sweep=sweep,
        v_min=float(av.get("v_min_volts", 0.0)),
        v_max=float(av.get("v_max_volts", 0.75)),
        v_step=float(av.get("step_volts", 0.001)),
        path=path,
    )
    # surface experiment invariants at load time
    cfg.experiment(next(iter(sources)))
    return cfg


def load_raw(path_or_preset: str) -> tuple[dict, str]:
    p = Path(path_or_preset)
    if not p.exists() and path_or_preset in PRESETS:
        text = resources.files("pnrhbt.presets").joinpath(f"{path_or_preset}.toml").read_text()
        label = f"preset:{path_or_preset}"
    else:
        try:
            text = p.read_text()
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {p}") from exc
        label = str(p)
    try:
        return tomllib.loads(text), label
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{label}: {exc}") from exc


def load(path_or_preset: str) -> RunConfig:
    raw, label = load_raw(path_or_preset)
    return from_dict(raw, label)
