"""Command-line entry point: ``phasemix <subcommand>``.

Exit codes: 0 success, 1 runtime failure, 2 invalid config or input,
3 the run succeeded but a statistical verdict failed.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .analysis import RankDeficientScanError, fit_phase_mixed_gaussian, reconstruct_symmetric_covariance
from .config import AnalysisOptions, ConfigError, load_config
from .dataset import DatasetError, read_dataset
from .pipeline import PipelineError, analyze_stream, dumps, run_pipeline

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID, EXIT_VERDICT = 0, 1, 2, 3


def _common(p, config: bool):
    if config:
        p.add_argument("--config", required=True, help="run configuration (JSON or YAML)")
    else:
        p.add_argument("datasets", nargs="+", type=Path, help="dataset files")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out-dir", type=Path, help="output directory")
    p.add_argument("--format", choices=("binary", "text"), help="dataset format for written datasets")
    p.add_argument("--max-order", type=int, help="highest moment order analyzed")
    p.add_argument("--significance", type=float, help="family-wise significance of the Gaussianity test")
    p.add_argument("--workers", type=int, default=None, help="threads for sampling and bootstrap")
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasemix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("simulate", "simulate the configured scenarios and beam pairs to datasets"),
                       ("scan", "simulate the configured setting scans to datasets"),
                       ("report", "full run: simulate, analyze, reconstruct and write the report bundle")]:
        _common(sub.add_parser(name, help=text), config=True)
    p = sub.add_parser("analyze", help="Gaussianity report for each setting block of datasets")
    _common(p, config=False)
    p.add_argument("--bootstrap-rounds", type=int, default=AnalysisOptions.bootstrap_rounds)
    p.add_argument("--batches", type=int, default=None)
    p = sub.add_parser("fit", help="phase-mixed Gaussian fit for each setting block of datasets")
    _common(p, config=False)
    p.add_argument("--nodes", type=int, default=AnalysisOptions.fit_nodes)
    p = sub.add_parser("reconstruct", help="stationary covariance from an HD or RD scan dataset")
    _common(p, config=False)
    p.add_argument("--technique", choices=("hd", "rd"), help="override the technique in the header")
    p.add_argument("--bootstrap-rounds", type=int, default=AnalysisOptions.bootstrap_rounds)
    return parser


def _say(args, *lines):
    if not args.quiet:
        for line in lines:
            print(line)


def _run_config(args) -> int:
    cfg = load_config(args.config).with_overrides(
        seed=args.seed, out_dir=args.out_dir, fmt=args.format, max_order=args.max_order,
        significance=args.significance, workers=args.workers)
    if args.command == "simulate":
        cfg = replace(cfg, scans=())
    elif args.command == "scan":
        cfg = replace(cfg, scenarios=(), beam_pairs=())
    if not (cfg.scenarios or cfg.scans or cfg.beam_pairs):
        raise ConfigError(f"config has nothing for '{args.command}' to do")
    result = run_pipeline(cfg, analyze=args.command == "report")
    _say(args, f"seed {cfg.seed}, config digest {cfg.digest}", f"outputs in {result.out_dir}")
    for label, passed in result.summary["verdicts"].items():
        _say(args, f"  {label}: {'Gaussian' if passed else 'NON-GAUSSIAN'}")
    for label, rec in result.summary["reconstructions"].items():
        _say(args, f"  {label}: {rec['params']} (inaccessible: {rec['inaccessible'] or 'none'})")
    return EXIT_OK if result.passed else EXIT_VERDICT


def _source(path: Path):
    return {"path": str(path), "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}


def _write(args, path: Path, suffix: str, payload: dict):
    out = (args.out_dir or path.parent) / f"{path.stem}.{suffix}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps(payload))
    _say(args, f"wrote {out}")


def _run_files(args) -> int:
    seed = args.seed or 0
    failed = False
    for path in args.datasets:
        ds = read_dataset(path)
        base = {"seed": seed, "source": _source(path), "beam": ds.header["beam"]}
        if args.command == "reconstruct":
            rec = reconstruct_symmetric_covariance(ds, args.technique, bootstrap_rounds=args.bootstrap_rounds,
                                                   seed=seed)
            _say(args, f"{path.name}: {rec.params} inaccessible={rec.inaccessible} "
                       f"reduced chi2={rec.reduced_chi2:.3f}")
            _write(args, path, "reconstruction", {**base, "reconstruction": rec.to_dict()})
            continue
        background = (ds.header.get("metadata") or {}).get("background_variance", 0.0)
        blocks = {}
        for i, x in enumerate(ds.blocks()):
            label = f"{ds.header['beam']}[{i}]"
            if args.command == "fit":
                fit = fit_phase_mixed_gaussian(x, nodes=args.nodes)
                blocks[i] = {"label": label, "setting": float(ds.settings[i]), **asdict(fit)}
                _say(args, f"{label}: s_cos={fit.s_cos:.4f} s_sin={fit.s_sin:.4f} "
                           f"gain={fit.comparison:.2f} converged={fit.converged}")
            else:
                opts = AnalysisOptions(max_order=args.max_order or AnalysisOptions.max_order,
                                       bootstrap_rounds=args.bootstrap_rounds,
                                       significance=args.significance or AnalysisOptions.significance,
                                       n_batches=args.batches)
                opts.check()
                res = analyze_stream(x, label, opts, seed, args.workers or 1, background)
                failed |= not res["passed"]
                blocks[i] = {"setting": float(ds.settings[i]), **res}
                _say(args, f"{label}: k = {res['report']['k_text']}, "
                           f"{'Gaussian' if res['passed'] else 'NON-GAUSSIAN'}")
        _write(args, path, args.command if args.command == "fit" else "analysis", {**base, "blocks": blocks})
    return EXIT_VERDICT if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("simulate", "scan", "report"):
            return _run_config(args)
        return _run_files(args)
    except (ConfigError, DatasetError, RankDeficientScanError) as exc:
        print(f"phasemix: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PipelineError as exc:
        print(f"phasemix: {exc}", file=sys.stderr)
        return EXIT_INVALID if isinstance(exc.cause, ConfigError) else EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"phasemix: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
