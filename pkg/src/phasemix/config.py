"""Run configuration: loading, normalization, validation and digest.

A config is a JSON or YAML mapping.  Sub-specifications (states, measurement
models, mixing, DSP) are plain mappings with a ``kind`` key; they are
normalized (defaults filled in, numbers cast to float) so that two configs
that mean the same thing have the same digest.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .analysis.report import DEFAULT_SIGNIFICANCE, critical_z
from .dsp import DemodConfig
from .masquerade import build_masquerade_state
from .measurement import HD, RD, Explicit
from .moments import ComponentStats
from .simulate import Locked, RandomWalk, UniformPerSample
from .states import (ComponentGaussianState, GaussianMixtureState, GaussianState, TwoModeCovariance,
                     basis_change, symmetric_covariance, vacuum_state)


class ConfigError(ValueError):
    """A configuration that fails validation; nothing has been run."""


def _matrix(value, shape, what):
    m = np.asarray(value, dtype=float)
    if m.shape != shape:
        raise ConfigError(f"{what} must have shape {shape}, got {m.shape}")
    return [[float(x) for x in row] for row in m]


def _gaussian(spec):
    cov = TwoModeCovariance(spec["covariance"])
    if spec["basis"] == "sidebands":
        cov = basis_change("sidebands->SA", cov)
    return GaussianState(cov)


# kind -> (defaults, required keys, builder)
STATE_KINDS = {
    "vacuum": ({}, (), lambda s: vacuum_state()),
    "gaussian": ({"basis": "SA"}, ("covariance",), _gaussian),
    "symmetric": ({"gamma": 0.0, "delta": 0.0}, ("alpha", "beta"),
                  lambda s: GaussianState(symmetric_covariance(s["alpha"], s["beta"], s["gamma"], s["delta"]))),
    "component_gaussian": ({"c": 0.0}, ("s_cos", "s_sin"),
                           lambda s: ComponentGaussianState(ComponentStats.gaussian_from(s["s_cos"], s["s_sin"], s["c"]))),
    "mixture": ({}, ("weights", "components"),
                lambda s: GaussianMixtureState(tuple(s["weights"]), tuple(s["components"]))),
    "masquerade": ({"c": 0.0, "split": None}, ("s_cos", "s_sin"),
                   lambda s: build_masquerade_state(s["s_cos"], s["s_sin"], s["c"], s["split"])),
}

MEASUREMENT_KINDS = {
    "hd": ({"phi": 0.0}, (), lambda s: HD(s["phi"])),
    "rd": ({}, ("detuning",), lambda s: RD(s["detuning"])),
    "explicit": ({}, ("matrix",), lambda s: Explicit(s["matrix"])),
}

MIXING_KINDS = {
    "uniform": ({}, (), lambda s: UniformPerSample()),
    "locked": ({"theta": 0.0}, (), lambda s: Locked(s["theta"])),
    "random_walk": ({"theta0": 0.0}, ("step_stddev",), lambda s: RandomWalk(s["step_stddev"], s["theta0"])),
}

COMPONENT_LEVEL = ("component_gaussian", "masquerade")


def _normalize_value(key, value):
    if key == "covariance":
        return _matrix(value, (4, 4), "covariance")
    if key == "components":
        return [_matrix(v, (4, 4), "mixture component") for v in value]
    if key == "matrix":
        return _matrix(value, (2, 4), "measurement matrix")
    if key == "weights":
        return [float(w) for w in value]
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    raise ConfigError(f"unsupported value for {key!r}: {value!r}")


def normalize_spec(spec, kinds, what):
    """Fill defaults, reject unknown keys and build once to validate."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{what} must be a mapping with a 'kind' key, got {spec!r}")
    kind = spec["kind"]
    if kind not in kinds:
        raise ConfigError(f"unknown {what} kind {kind!r}; choose from {sorted(kinds)}")
    defaults, required, builder = kinds[kind]
    missing = [k for k in required if k not in spec]
    if missing:
        raise ConfigError(f"{what} {kind!r} is missing {missing}")
    unknown = set(spec) - {"kind"} - set(defaults) - set(required)
    if unknown:
        raise ConfigError(f"{what} {kind!r} has unknown keys {sorted(unknown)}")
    out = {"kind": kind}
    for key in sorted(set(defaults) | set(required)):
        out[key] = _normalize_value(key, spec.get(key, defaults.get(key)))
    try:
        builder(out)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {what} {kind!r}: {exc}") from exc
    return out


def build(spec, kinds):
    return kinds[spec["kind"]][2](spec)


def _settings_grid(value, what):
    if isinstance(value, dict):
        unknown = set(value) - {"start", "stop", "num"}
        if unknown or len(value) != 3:
            raise ConfigError(f"{what} grid needs exactly start, stop, num")
        grid = np.linspace(float(value["start"]), float(value["stop"]), int(value["num"]))
    else:
        grid = np.asarray(value, dtype=float).ravel()
    if len(grid) == 0 or not np.all(np.isfinite(grid)):
        raise ConfigError(f"{what} grid must be non-empty and finite")
    return [float(x) for x in grid]


def _count(value, what, minimum=30):
    if isinstance(value, bool) or int(value) != value or int(value) < minimum:
        raise ConfigError(f"{what} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _strict(cls, data, what):
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{what} has unknown keys {sorted(unknown)}")
    return data


@dataclass(frozen=True)
class ScenarioConfig:
    """One beam or state: simulated, phase mixed, analyzed."""

    label: str
    state: dict
    samples: int
    measurement: dict | None = None

    @classmethod
    def from_dict(cls, d):
        d = _strict(cls, d, "scenario")
        state = normalize_spec(d.get("state"), STATE_KINDS, "state")
        meas = d.get("measurement")
        if meas is not None:
            if state["kind"] in COMPONENT_LEVEL:
                raise ConfigError(f"state {state['kind']!r} is given on the components; "
                                  "a measurement model does not apply")
            meas = normalize_spec(meas, MEASUREMENT_KINDS, "measurement")
        elif state["kind"] not in COMPONENT_LEVEL:
            meas = normalize_spec("hd", MEASUREMENT_KINDS, "measurement")
        label = str(d.get("label") or state["kind"])
        return cls(label, state, _count(d.get("samples", 0), f"scenario {label!r} samples"), meas)


@dataclass(frozen=True)
class ScanConfig:
    """Setting scan for covariance reconstruction."""

    label: str
    technique: str
    state: dict
    settings: tuple
    per_point: int

    @classmethod
    def from_dict(cls, d):
        d = _strict(cls, d, "scan")
        technique = d.get("technique")
        if technique not in ("hd", "rd"):
            raise ConfigError(f"scan technique must be 'hd' or 'rd', got {technique!r}")
        state = normalize_spec(d.get("state"), STATE_KINDS, "state")
        if state["kind"] in COMPONENT_LEVEL:
            raise ConfigError("scans need a quadrature-level state, not a component-level one")
        label = str(d.get("label") or f"{technique}_scan")
        settings = tuple(_settings_grid(d.get("settings", []), f"scan {label!r}"))
        return cls(label, technique, state, settings, _count(d.get("per_point", 0), "per_point"))


@dataclass(frozen=True)
class BeamPairConfig:
    """Two beams with correlated quadratures, analyzed alone and combined."""

    label: str
    variance: float
    correlation: float
    samples: int
    measurements: tuple = ({"kind": "hd", "phi": 0.0}, {"kind": "hd", "phi": 0.0})
    combinations: tuple = ("+", "-")

    @classmethod
    def from_dict(cls, d):
        d = _strict(cls, d, "beam pair")
        label = str(d.get("label") or "pair")
        variance, corr = float(d.get("variance", 1.0)), float(d.get("correlation", 0.0))
        if variance - abs(corr) < 1 - 1e-9:
            raise ConfigError(f"beam pair {label!r} is unphysical: variance - |correlation| < 1")
        meas = tuple(normalize_spec(m, MEASUREMENT_KINDS, "measurement")
                     for m in d.get("measurements", cls.measurements))
        if len(meas) != 2:
            raise ConfigError("a beam pair needs exactly two measurement models")
        combos = tuple(d.get("combinations", cls.combinations))
        if not set(combos) <= {"+", "-"}:
            raise ConfigError("combinations must be '+' and/or '-'")
        return cls(label, variance, corr, _count(d.get("samples", 0), "beam pair samples"), meas, combos)


@dataclass(frozen=True)
class DspOptions:
    """Route samples through the raw-current chain with white background noise."""

    analysis_frequency: float = 21e6
    window_length: float = 10e-6
    lowpass_bandwidth: float = 600e3
    sample_rate: float = 100e6
    noise_std: float = 0.0
    background_windows: int = 20000

    @classmethod
    def from_dict(cls, d):
        d = _strict(cls, d, "dsp")
        opts = cls(**{k: (int(v) if k == "background_windows" else float(v)) for k, v in d.items()})
        try:
            opts.demod()
        except ValueError as exc:
            raise ConfigError(f"invalid dsp options: {exc}") from exc
        if opts.noise_std < 0:
            raise ConfigError("noise_std must be nonnegative")
        _count(opts.background_windows, "background_windows")
        return opts

    def demod(self) -> DemodConfig:
        return DemodConfig(self.analysis_frequency, self.window_length, self.lowpass_bandwidth,
                           self.sample_rate)


@dataclass(frozen=True)
class AnalysisOptions:
    max_order: int = 14
    bootstrap_rounds: int = 200
    significance: float = DEFAULT_SIGNIFICANCE
    n_batches: int | None = None
    shapiro: bool = True
    fit: bool = False
    fit_nodes: int = 64

    @classmethod
    def from_dict(cls, d):
        d = _strict(cls, d, "analysis")
        opts = replace(cls(), **d)
        opts.check()
        return opts

    def check(self):
        if not (isinstance(self.max_order, int) and 4 <= self.max_order <= 14 and self.max_order % 2 == 0):
            raise ConfigError(f"max_order must be an even integer in [4, 14], got {self.max_order!r}")
        if not (isinstance(self.bootstrap_rounds, int) and self.bootstrap_rounds >= 2):
            raise ConfigError("bootstrap_rounds must be an integer >= 2")
        try:
            critical_z(float(self.significance))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.n_batches is not None and (not isinstance(self.n_batches, int) or self.n_batches < 2):
            raise ConfigError("n_batches must be an integer >= 2 or null")
        if not (isinstance(self.fit_nodes, int) and self.fit_nodes >= 8):
            raise ConfigError("fit_nodes must be an integer >= 8")


@dataclass(frozen=True)
class OutputOptions:
    out_dir: str = "run"
    format: str = "binary"
    write_datasets: bool = True
    histogram_bins: int = 101

    @classmethod
    def from_dict(cls, d):
        d = _strict(cls, d, "output")
        opts = replace(cls(), **d)
        opts.check()
        return opts

    def check(self):
        if self.format not in ("binary", "text"):
            raise ConfigError(f"output format must be 'binary' or 'text', got {self.format!r}")
        if not (isinstance(self.histogram_bins, int) and self.histogram_bins >= 3):
            raise ConfigError("histogram_bins must be an integer >= 3")


# Fields that cannot change any result and so stay out of the digest.
NON_SEMANTIC = ("output", "workers")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    scenarios: tuple = ()
    scans: tuple = ()
    beam_pairs: tuple = ()
    mixing: dict = field(default_factory=lambda: {"kind": "uniform"})
    dsp: DspOptions | None = None
    analysis: AnalysisOptions = AnalysisOptions()
    output: OutputOptions = OutputOptions()
    workers: int = 1

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        d = _strict(cls, d, "config")
        seed = d.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
        workers = d.get("workers", 1)
        if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
            raise ConfigError("workers must be a positive integer")
        cfg = cls(
            seed=seed,
            scenarios=tuple(ScenarioConfig.from_dict(s) for s in d.get("scenarios", [])),
            scans=tuple(ScanConfig.from_dict(s) for s in d.get("scans", [])),
            beam_pairs=tuple(BeamPairConfig.from_dict(s) for s in d.get("beam_pairs", [])),
            mixing=normalize_spec(d.get("mixing", "uniform"), MIXING_KINDS, "mixing"),
            dsp=DspOptions.from_dict(d["dsp"]) if d.get("dsp") is not None else None,
            analysis=AnalysisOptions.from_dict(d.get("analysis", {})),
            output=OutputOptions.from_dict(d.get("output", {})),
            workers=workers,
        )
        cfg.validate()
        return cfg

    def validate(self):
        if not (self.scenarios or self.scans or self.beam_pairs):
            raise ConfigError("config defines no scenarios, scans or beam pairs")
        labels = [s.label for s in self.scenarios + self.scans + self.beam_pairs]
        dupes = sorted({x for x in labels if labels.count(x) > 1})
        if dupes:
            raise ConfigError(f"duplicate labels {dupes}")
        bad = [x for x in labels if not x.replace("_", "").replace("-", "").replace(".", "").isalnum()]
        if bad:
            raise ConfigError(f"labels must be file-name safe (letters, digits, _ - .): {bad}")
        need = 2 * self.analysis.max_order
        for s in self.scenarios:
            if s.samples < need:
                raise ConfigError(f"scenario {s.label!r} needs at least {need} samples for order "
                                  f"{self.analysis.max_order}")
            if self.analysis.n_batches and s.samples // self.analysis.n_batches < 30:
                raise ConfigError(f"scenario {s.label!r} is too short for {self.analysis.n_batches} batches")
        self.analysis.check()
        self.output.check()

    def to_dict(self) -> dict:
        return asdict(self)

    def semantic_dict(self) -> dict:
        d = self.to_dict()
        for key in NON_SEMANTIC:
            d.pop(key)
        return d

    @property
    def digest(self) -> str:
        """sha256 of the canonical JSON of every field that can change a result."""
        text = json.dumps(_canonical(self.semantic_dict()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, seed=None, out_dir=None, fmt=None, max_order=None,
                       significance=None, workers=None) -> "RunConfig":
        analysis = self.analysis
        if max_order is not None:
            analysis = replace(analysis, max_order=max_order)
        if significance is not None:
            analysis = replace(analysis, significance=significance)
        output = self.output
        if out_dir is not None:
            output = replace(output, out_dir=str(out_dir))
        if fmt is not None:
            output = replace(output, format=fmt)
        cfg = replace(self, seed=self.seed if seed is None else seed, analysis=analysis, output=output,
                      workers=self.workers if workers is None else workers)
        if cfg.seed < 0:
            raise ConfigError("seed must be nonnegative")
        cfg.validate()
        return cfg


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ConfigError("config contains a non-finite number")
        return obj
    return obj


def load_config(path) -> RunConfig:
    """Read a JSON or YAML run configuration and validate it completely."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return RunConfig.from_dict(data or {})
