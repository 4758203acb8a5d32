"""Command-line entry point: ``radfid <subcommand> [--config cfg.json] [flags]``.

Flags override keys of the JSON config. Exit status is 0 on success, 2 for an
invalid configuration and 3 when a stage fails; a failed stage leaves a
``.partial`` marker naming it in the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import SUBCOMMANDS, ConfigError, RunConfig
from .pipeline import (PARTIAL_MARKER, Stage, StageError, read_correlation_csv, read_profiles,
                       run_classify, run_correlate, run_extract, run_group, run_phantom,
                       run_preprocess, run_quality, run_report)

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3


def _pairs(items, what):
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"{what} expects NAME=VALUE, got {item!r}")
        out[key] = val
    return out


def _json_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _int_list(text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",")] if text else []
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="JSON run configuration; flags below override it")
    g.add_argument("--out", help="output directory")
    g.add_argument("--seed", type=int, help="master seed for every random stream")
    g.add_argument("--workers", type=int, help="process count for per-case work")
    g.add_argument("--set", action="append", metavar="KEY=JSON",
                   help="override any config key with a JSON value (repeatable)")
    i = common.add_argument_group("inputs")
    i.add_argument("--manifest", help="case manifest (volumes, masks, labels)")
    i.add_argument("--reference", help="reference manifest (quality) or feature CSV (correlate)")
    i.add_argument("--candidate", help="candidate manifest (quality) or feature CSV (correlate)")
    i.add_argument("--features", help="feature CSV to classify")
    i.add_argument("--test-features", help="feature CSV supplying the test rows")
    i.add_argument("--network", action="append", metavar="NAME=PATH",
                   help="network manifest (report) or correlation CSV (group); repeatable")
    i.add_argument("--profiles", help="network profile JSON [{network_id, mean_ssim}]")
    p = common.add_argument_group("parameters")
    p.add_argument("--n-cases", type=int)
    p.add_argument("--phantom", action="append", metavar="KEY=JSON", help="phantom spec field")
    p.add_argument("--degradation", action="append", metavar="NAME=JSON",
                   help="surrogate network as a JSON object of degradation fields")
    p.add_argument("--target-dims", help="e.g. 128,128,64")
    p.add_argument("--target-spacing", help="e.g. 0.5,0.5,1.0 (empty keeps extent)")
    p.add_argument("--stages", help="comma-separated report stages")
    p.add_argument("--n-bins", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--ssim-cutoff", type=float)
    p.add_argument("--group1-rule", choices=("any_low", "majority"))
    p.add_argument("--ml", action="append", metavar="KEY=JSON", help="classifier setting")

    parser = argparse.ArgumentParser(prog="radfid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "phantom": "write a synthetic reference cohort and degraded network cohorts",
        "preprocess": "normalize and resample a manifest onto a common grid",
        "quality": "MAE/MSE/PSNR/SSIM between paired reference and candidate volumes",
        "extract": "186 radiomic features per case",
        "correlate": "per-feature Spearman rho and paired t-test between two feature tables",
        "group": "partition features by which networks preserve them",
        "classify": "PCA + random forest low/high classification",
        "report": "run the pipeline end to end and write summary.json and report.md",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args) -> RunConfig:
    base = RunConfig.from_json(args.config) if args.config else RunConfig()
    o = {"subcommand": args.subcommand}
    for key in ("out", "seed", "workers", "manifest", "reference", "candidate", "features",
                "test_features", "profiles", "n_cases", "n_bins", "tau", "ssim_cutoff",
                "group1_rule"):
        val = getattr(args, key)
        if val is not None:
            o[key] = val
    if args.network:
        o["networks"] = _pairs(args.network, "--network")
    if args.phantom:
        o["phantom"] = {**base.phantom, **{k: _json_value(v) for k, v in
                                           _pairs(args.phantom, "--phantom").items()}}
    if args.degradation:
        # an explicit list of networks replaces the configured one
        o["degradations"] = {k: _json_value(v) for k, v in
                             _pairs(args.degradation, "--degradation").items()}
    if args.ml:
        o["ml"] = {**base.ml, **{k: _json_value(v) for k, v in _pairs(args.ml, "--ml").items()}}
    if args.target_dims is not None:
        o["target_dims"] = _int_list(args.target_dims)
    if args.target_spacing is not None:
        o["target_spacing_mm"] = _float_list(args.target_spacing)
    if args.stages is not None:
        o["stages"] = [s for s in args.stages.split(",") if s]
    for k, v in _pairs(args.set, "--set").items():
        o[k] = _json_value(v)
    return base.merged(o)


def _require(cfg: RunConfig, stage: str, *keys):
    missing = [k for k in keys if not getattr(cfg, k)]
    if missing:
        raise ConfigError(f"[{stage}] missing required setting(s): {', '.join(missing)}")


def execute(cfg: RunConfig) -> dict:
    """Run one subcommand; returns a small dict of produced paths."""
    out = Path(cfg.out)
    cmd = cfg.subcommand
    if cmd == "phantom":
        with Stage("phantom"):
            files = run_phantom(cfg, out)
        return {k: str(v) for k, v in files.items()}
    if cmd == "preprocess":
        _require(cfg, cmd, "manifest")
        with Stage(cmd):
            p = run_preprocess(cfg.manifest, out, cfg.target_dims, cfg.target_spacing_mm,
                               cfg.workers)
        return {"manifest": str(p)}
    if cmd == "quality":
        _require(cfg, cmd, "reference", "candidate")
        with Stage(cmd):
            s = run_quality(cfg.reference, cfg.candidate, out / "quality.csv", cfg.ssim_config(),
                            cfg.workers)
        return {"quality": str(out / "quality.csv"), "mean_ssim": s["ssim"]["mean"]}
    if cmd == "extract":
        _require(cfg, cmd, "manifest")
        with Stage(cmd):
            run_extract(cfg.manifest, out / "features.csv", cfg.n_bins, cfg.workers)
        return {"features": str(out / "features.csv")}
    if cmd == "correlate":
        _require(cfg, cmd, "reference", "candidate")
        with Stage(cmd):
            run_correlate(cfg.reference, cfg.candidate, out / "correlation.csv")
        return {"correlation": str(out / "correlation.csv")}
    if cmd == "group":
        _require(cfg, cmd, "networks", "profiles")
        with Stage(cmd):
            profiles = read_profiles(cfg.profiles, cfg.ssim_cutoff)
            tables = {p.network_id: read_correlation_csv(cfg.networks[p.network_id], p.network_id)
                      for p in profiles if p.network_id in cfg.networks}
            run_group(tables, profiles, out / "groups.json", out / "group_summary.csv",
                      cfg.tau, cfg.group1_rule)
        return {"groups": str(out / "groups.json"), "summary": str(out / "group_summary.csv")}
    if cmd == "classify":
        _require(cfg, cmd, "features", "manifest")
        with Stage(cmd):
            run_classify(cfg.features, cfg.manifest, out / "classification.json",
                         out / "roc.csv", cfg.eval_config(), cfg.test_features or None)
        return {"report": str(out / "classification.json"), "roc": str(out / "roc.csv")}
    if cmd == "report":
        _require(cfg, "extract", "manifest")
        run_report(cfg, out)
        return {"summary": str(out / "summary.json"), "report": str(out / "report.md")}
    raise ConfigError(f"unknown subcommand {cmd!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        cfg = config_from_args(args)
    except ConfigError as e:
        print(f"radfid: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    marker = out / PARTIAL_MARKER
    try:
        result = execute(cfg)
    except ConfigError as e:
        print(f"radfid: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as e:
        out.mkdir(parents=True, exist_ok=True)
        marker.write_text(f"{e.stage}: {e.message}\n")
        print(f"radfid: stage failure {e}", file=sys.stderr)
        return EXIT_STAGE
    if marker.exists():
        marker.unlink()
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
