"""simulate -> (optional DSP) -> analyze -> report, as one reproducible run.

Every file a run writes carries the master seed and the config digest, and
nothing time- or host-dependent, so a rerun with the same config and seed
reproduces the outputs byte for byte at any ``workers`` setting.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .analysis import (fit_phase_mixed_gaussian, gaussianity_report, infer_asymmetry,
                       mixed_gaussian_goodness_of_fit, reconstruct_symmetric_covariance)
from .analysis.estimators import combine_two_beams
from .analysis.reconstruct import PARAMETERS, scan_models
from .config import (MEASUREMENT_KINDS, MIXING_KINDS, STATE_KINDS, AnalysisOptions, RunConfig, build)
from .dataset import Dataset, write_dataset
from .dsp import synthesize_and_demodulate
from .simulate import (detuning_scan, hd_phase_scan, phase_mix, predicted_scan_variance,
                       sample_beam_pair, sample_components, simulate_stream)
from .states import correlated_beam_pair

INCOMPLETE_MARKER = "INCOMPLETE.json"
SUMMARY = "summary.json"

# spawn-key prefixes for seeds derived from the master seed
KEY_SCENARIO, KEY_SCAN, KEY_PAIR, KEY_BOOTSTRAP, KEY_BACKGROUND, KEY_RECONSTRUCT = range(1, 7)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def derive_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1)[0])


def jsonable(obj):
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


class RunWriter:
    """Writes files under ``out_dir`` with provenance and keeps their hashes."""

    def __init__(self, out_dir, seed: int, digest: str):
        self.root = Path(out_dir)
        self.seed = seed
        self.digest = digest
        self.files = {}
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / INCOMPLETE_MARKER).unlink(missing_ok=True)

    @property
    def provenance(self):
        return {"seed": self.seed, "config_digest": self.digest}

    def _path(self, rel):
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _record(self, rel, data: bytes):
        self.files[str(rel)] = hashlib.sha256(data).hexdigest()

    def json(self, rel, payload: dict):
        data = dumps({**self.provenance, **payload}).encode()
        self._path(rel).write_bytes(data)
        self._record(rel, data)

    def table(self, rel, columns, rows, note: str = ""):
        buf = io.StringIO()
        buf.write(f"# seed={self.seed} config_digest={self.digest}\n")
        if note:
            buf.write(f"# {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        data = buf.getvalue().encode()
        self._path(rel).write_bytes(data)
        self._record(rel, data)

    def dataset(self, rel, ds: Dataset, fmt: str):
        path = self._path(rel)
        write_dataset(ds, path, fmt)
        self._record(rel, path.read_bytes())

    def mark_incomplete(self, stage: str, exc: BaseException):
        payload = {**self.provenance, "complete": False, "failed_stage": stage,
                   "error": f"{type(exc).__name__}: {exc}", "partial_outputs": sorted(self.files)}
        (self.root / INCOMPLETE_MARKER).write_text(dumps(payload))


@contextmanager
def stage(name: str, writer: RunWriter | None = None):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        if writer is not None:
            writer.mark_incomplete(name, exc)
        raise PipelineError(name, exc) from exc


@dataclass
class RunResult:
    out_dir: Path
    summary: dict
    reports: dict

    @property
    def passed(self) -> bool:
        return self.summary["passed"]


# --- analysis of one stream -----------------------------------------------------


def analyze_stream(x, label: str, opts: AnalysisOptions, seed: int, workers: int = 1,
                   background_variance: float = 0.0) -> dict:
    """Gaussianity report, asymmetry estimate and optional mixed-Gaussian fit."""
    rep = gaussianity_report(x, opts.max_order, opts.bootstrap_rounds, seed, opts.significance,
                             opts.n_batches, opts.shapiro, label, workers, background_variance)
    out = {"label": label, "report": rep.to_dict(), "passed": rep.passed,
           "asymmetry": asdict(infer_asymmetry(rep)), "background_variance": background_variance}
    if opts.fit:
        fit = fit_phase_mixed_gaussian(x, nodes=opts.fit_nodes)
        gof = mixed_gaussian_goodness_of_fit(x, fit, bootstrap_rounds=opts.bootstrap_rounds, seed=seed,
                                             significance=opts.significance)
        out["fit"] = {**asdict(fit), "goodness_of_fit": asdict(gof)}
    return out


def ratio_rows(label: str, report: dict):
    for order, r in report["ratios"].items():
        yield [label, int(order), r["value"], r["std_error"], r["reference"], r["z"], r["passed"]]


RATIO_COLUMNS = ["label", "order", "value", "std_error", "gaussian_reference", "z", "passed"]


def histogram_rows(x, bins: int, mean: float, variance: float):
    s = math.sqrt(variance)
    counts, edges = np.histogram(x, bins=bins, range=(mean - 6 * s, mean + 6 * s))
    width = edges[1] - edges[0]
    centres = 0.5 * (edges[:-1] + edges[1:])
    gauss = np.exp(-0.5 * (centres - mean) ** 2 / variance) / math.sqrt(2 * math.pi * variance)
    density = counts / (len(x) * width)
    return [[edges[i], edges[i + 1], int(counts[i]), density[i], gauss[i]] for i in range(bins)]


HISTOGRAM_COLUMNS = ["bin_left", "bin_right", "count", "density", "gaussian_density"]


# --- stages ---------------------------------------------------------------------------


def _scenario_stream(sc, cfg: RunConfig, seed: int):
    state = build(sc.state, STATE_KINDS)
    M = build(sc.measurement, MEASUREMENT_KINDS) if sc.measurement else None
    mixing = build(cfg.mixing, MIXING_KINDS)
    if cfg.dsp is None:
        return simulate_stream(state, M, sc.samples, seed, mixing, cfg.workers), 0.0
    demod = cfg.dsp.demod()
    pairs = sample_components(state, M, sc.samples, seed, cfg.workers)
    pairs = synthesize_and_demodulate(pairs, demod, cfg.dsp.noise_std, seed)
    stream = phase_mix(pairs, mixing, seed, workers=cfg.workers)
    background = 0.0
    if cfg.dsp.noise_std > 0:
        # electronic background measured separately, as with the signal blocked
        zeros = np.zeros((cfg.dsp.background_windows, 2))
        bg = synthesize_and_demodulate(zeros, demod, cfg.dsp.noise_std, derive_seed(seed, KEY_BACKGROUND))
        background = float(np.mean(bg ** 2))
    return stream, background


def _dataset_name(label, fmt):
    return f"datasets/{label}.{'pmd' if fmt == 'binary' else 'txt'}"


def run_pipeline(config: RunConfig, out_dir=None, analyze: bool = True) -> RunResult:
    """Run every scenario, scan and beam pair of ``config`` and write the report bundle.

    With ``analyze=False`` only the datasets are written (the ``simulate`` and
    ``scan`` subcommands).

    Raises :class:`PipelineError` naming the failed stage; the partial outputs
    are listed in ``INCOMPLETE.json`` in the output directory.
    """
    with stage("validate"):
        config.validate()
    cfg = config
    digest = cfg.digest
    writer = RunWriter(out_dir or cfg.output.out_dir, cfg.seed, digest)
    opts, fmt = cfg.analysis, cfg.output.format
    results, ratio_table, verdicts = {}, [], {}

    def record(label, x, analysis):
        results[label] = analysis
        verdicts[label] = analysis["passed"]
        ratio_table.extend(ratio_rows(label, analysis["report"]))
        writer.json(f"reports/{label}.json", analysis)
        rep = analysis["report"]
        writer.table(f"tables/histogram_{label}.csv", HISTOGRAM_COLUMNS,
                     histogram_rows(x, cfg.output.histogram_bins, rep["mean"], rep["variance"] +
                                    analysis["background_variance"]),
                     note=f"gaussian overlay: mean={rep['mean']!r} variance="
                          f"{rep['variance'] + analysis['background_variance']!r}")

    for i, sc in enumerate(cfg.scenarios):
        seed = derive_seed(cfg.seed, KEY_SCENARIO, i)
        with stage(f"simulate:{sc.label}", writer):
            x, background = _scenario_stream(sc, cfg, seed)
            if cfg.output.write_datasets or not analyze:
                demod = cfg.dsp.demod() if cfg.dsp else None
                ds = Dataset.single(
                    x, beam=sc.label, technique=(sc.measurement or {"kind": "components"})["kind"],
                    seed=seed, demod=demod.to_dict() if demod else None,
                    filter_taps=demod.taps.tolist() if demod else None,
                    metadata={**writer.provenance, "state": sc.state, "measurement": sc.measurement,
                              "mixing": cfg.mixing, "background_variance": background})
                writer.dataset(_dataset_name(sc.label, fmt), ds, fmt)
        if not analyze:
            continue
        with stage(f"analyze:{sc.label}", writer):
            record(sc.label, x, analyze_stream(x, sc.label, opts, derive_seed(cfg.seed, KEY_BOOTSTRAP, i),
                                               cfg.workers, background))

    for i, bp in enumerate(cfg.beam_pairs):
        seed = derive_seed(cfg.seed, KEY_PAIR, i)
        with stage(f"simulate:{bp.label}", writer):
            models = tuple(build(m, MEASUREMENT_KINDS) for m in bp.measurements)
            a, b = sample_beam_pair(correlated_beam_pair(bp.variance, bp.correlation), models, bp.samples,
                                    seed, build(cfg.mixing, MIXING_KINDS), cfg.workers)
            streams = {f"{bp.label}.a": a, f"{bp.label}.b": b}
            for sign in bp.combinations:
                streams[f"{bp.label}.{'sum' if sign == '+' else 'diff'}"] = combine_two_beams(a, b, sign)
            if cfg.output.write_datasets or not analyze:
                for name in (f"{bp.label}.a", f"{bp.label}.b"):
                    ds = Dataset.single(streams[name], beam=name, technique=bp.measurements[0]["kind"],
                                        seed=seed, metadata={**writer.provenance, "pair": asdict(bp)})
                    writer.dataset(_dataset_name(name, fmt), ds, fmt)
        if not analyze:
            continue
        with stage(f"analyze:{bp.label}", writer):
            for j, (name, x) in enumerate(streams.items()):
                record(name, x, analyze_stream(x, name, opts, derive_seed(cfg.seed, KEY_BOOTSTRAP, 1000 + i, j),
                                               cfg.workers))

    reconstructions = {}
    for i, sc in enumerate(cfg.scans):
        seed = derive_seed(cfg.seed, KEY_SCAN, i)
        with stage(f"scan:{sc.label}", writer):
            state = build(sc.state, STATE_KINDS)
            mixing = build(cfg.mixing, MIXING_KINDS)
            scan_fn = detuning_scan if sc.technique == "rd" else hd_phase_scan
            ds = scan_fn(state, sc.settings, sc.per_point, mixing, seed, beam=sc.label, workers=cfg.workers)
            ds.header["metadata"].update(writer.provenance)
            if cfg.output.write_datasets or not analyze:
                writer.dataset(_dataset_name(sc.label, fmt), ds, fmt)
        if not analyze:
            continue
        with stage(f"reconstruct:{sc.label}", writer):
            rec = reconstruct_symmetric_covariance(ds, sc.technique, bootstrap_rounds=opts.bootstrap_rounds,
                                                   seed=derive_seed(cfg.seed, KEY_RECONSTRUCT, i))
            models = scan_models(sc.settings, sc.technique)
            truth = predicted_scan_variance(state, models)
            payload = {"label": sc.label, "technique": sc.technique, "reconstruction": rec.to_dict()}
            if sc.state["kind"] == "symmetric":
                payload["true_params"] = {p: sc.state[p] for p in PARAMETERS}
                payload["pulls"] = {p: (rec.params[p] - sc.state[p]) / rec.std_errors[p]
                                    for p in rec.fitted}
            reconstructions[sc.label] = payload
            writer.json(f"reports/{sc.label}.json", payload)
            writer.table(f"tables/noise_vs_setting_{sc.label}.csv",
                         [ds.header["setting_axis"], "measured_variance", "std_error", "fitted_variance",
                          "true_variance"],
                         zip(sc.settings, rec.per_point_variance, rec.per_point_se, rec.predicted_variance, truth))

    with stage("report", writer):
        if ratio_table:
            writer.table("tables/moment_ratios.csv", RATIO_COLUMNS, ratio_table)
        summary = {
            **writer.provenance,
            "complete": True,
            "analyzed": analyze,
            "config": cfg.semantic_dict(),
            "verdicts": verdicts,
            "passed": all(verdicts.values()),
            "reconstructions": {k: {"params": v["reconstruction"]["params"],
                                    "inaccessible": v["reconstruction"]["inaccessible"]}
                                for k, v in reconstructions.items()},
            "files": dict(sorted(writer.files.items())),
        }
        writer.json(SUMMARY, summary)
    return RunResult(writer.root, summary, {**results, **reconstructions})
