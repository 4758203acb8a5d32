"""Pipeline stages behind the CLI and the end-to-end report.

Every stage writes deterministic CSV/JSON (numbers at 9 significant digits,
no timestamps, paths relative to the output directory). Per-case work can
fan out over a process pool; results are collected in input order, so the
worker count never changes an output byte.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Dict, List

import jsonschema
import numpy as np

from .config import RunConfig
from .fidelity import (GROUPS, CorrelationRecord, CorrelationTable, NetworkProfile,
                       assign_groups, correlate_cohorts)
from .metrics import SsimConfig, quality_report
from .ml.evaluate import Dataset, EvalConfig, config_dict, evaluate
from .phantom import degrade, generate_cohort, write_cohort
from .preprocess import standardize
from .radiomics import FEATURE_IDS, extract_all
from .tables import FeatureTable, fmt
from .volume import (CaseRecord, Manifest, load_case, read_manifest, write_manifest,
                     write_mask, write_volume)

SCHEMA_VERSION = 1
PARTIAL_MARKER = ".partial"


class StageError(RuntimeError):
    """A stage failed; the CLI exits with status 3."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


def summary_schema() -> dict:
    text = resources.files("radfid").joinpath("schemas/summary.schema.json").read_text()
    return json.loads(text)


# --- helpers ---------------------------------------------------------------

def num(x):
    """JSON-safe number at 9 significant digits; NaN becomes null, infinities strings."""
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.9g}") + 0.0


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False) + "\n")
    return path


def pmap(fn, items, workers: int = 1) -> list:
    """Order-preserving map, optionally over a process pool."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def mean_sd(values):
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    if np.any(np.isinf(v)):
        return (float(v.mean()) if np.all(v == v[0]) else math.inf), math.nan
    return float(v.mean()), (float(v.std(ddof=1)) if v.size > 1 else 0.0)


def pm(mean, sd) -> str:
    return f"{fmt(mean)}±{fmt(sd)}"


# --- phantom ---------------------------------------------------------------

def run_phantom(cfg: RunConfig, out: Path) -> Dict[str, Path]:
    """Reference cohort plus one degraded copy per configured network."""
    cases = generate_cohort(cfg.phantom_spec(), cfg.n_cases)
    files = {"reference": write_cohort(cases, out / "reference")}
    for name, spec in cfg.degrade_specs().items():
        vols = [degrade(c.volume, c.mask, spec, i) for i, c in enumerate(cases)]
        files[name] = write_cohort(cases, out / "networks" / name, vols)
    write_json({"phantom": cfg.phantom_spec().to_dict(),
                "degradations": {k: v.to_dict() for k, v in cfg.degrade_specs().items()},
                "n_cases": cfg.n_cases,
                "labels": {c.case_id: c.label for c in cases}}, out / "cohort.json")
    return files


# --- preprocess ------------------------------------------------------------

def _preprocess_one(args):
    case, out_dir, dims, spacing = args
    vol, mask = load_case(case)
    if not spacing:
        spacing = [s * n / d for s, n, d in zip(vol.spacing_mm, vol.dims, dims)]
    v2, m2 = standardize(vol, mask, dims, spacing)
    vp = out_dir / "volumes" / f"{case.case_id}.json"
    mp = out_dir / "masks" / f"{case.case_id}.json"
    write_volume(v2, vp)
    write_mask(m2, mp)
    return CaseRecord(case.case_id, vp, mp, case.label)


def run_preprocess(manifest_path, out_dir, dims, spacing=(), workers=1) -> Path:
    """Min-max normalize and resample every case of a manifest to one grid.

    An empty `spacing` keeps each volume's physical extent.
    """
    out_dir = Path(out_dir)
    man = read_manifest(manifest_path)
    jobs = [(c, out_dir, list(dims), list(spacing)) for c in man]
    records = pmap(_preprocess_one, jobs, workers)
    write_manifest(records, out_dir / "manifest.csv")
    return out_dir / "manifest.csv"


# --- quality ---------------------------------------------------------------

QUALITY_COLUMNS = ("case_id", "mae", "mse", "psnr_db", "ssim")


def _quality_one(args):
    ref_case, cand_case, ssim_cfg = args
    ref, _ = load_case(ref_case)
    cand, _ = load_case(cand_case)
    q = quality_report(ref, cand, ssim_cfg)
    return (q.mae, q.mse, q.psnr_db, q.ssim)


def _paired(ref_manifest, cand_manifest):
    ref = read_manifest(ref_manifest)
    cand = read_manifest(cand_manifest).by_id()
    missing = [c for c in ref.case_ids if c not in cand]
    if missing or len(cand) != len(ref):
        extra = sorted(set(cand) - set(ref.case_ids))
        raise ValueError(f"case-set mismatch: missing {missing[:10]}, unexpected {extra[:10]}")
    return [(c, cand[c.case_id]) for c in ref]


def run_quality(ref_manifest, cand_manifest, out_csv, ssim_cfg: SsimConfig = SsimConfig(),
                workers=1) -> dict:
    """Per-case MAE/MSE/PSNR/SSIM plus a mean±SD row. Returns the summary."""
    pairs = _paired(ref_manifest, cand_manifest)
    rows = pmap(_quality_one, [(r, c, ssim_cfg) for r, c in pairs], workers)
    summary = {}
    for k, name in enumerate(QUALITY_COLUMNS[1:]):
        m, s = mean_sd([r[k] for r in rows])
        summary[name] = {"mean": m, "sd": s}
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(QUALITY_COLUMNS)
        for (case, _), r in zip(pairs, rows):
            w.writerow([case.case_id] + [fmt(x) for x in r])
        w.writerow(["mean±sd"] + [pm(summary[n]["mean"], summary[n]["sd"])
                                  for n in QUALITY_COLUMNS[1:]])
    return summary


# --- extract ---------------------------------------------------------------

def _extract_one(args):
    case, n_bins = args
    vol, mask = load_case(case)
    return extract_all(vol, mask, n_bins).values


def run_extract(manifest_path, out_csv, n_bins=32, workers=1) -> FeatureTable:
    man = read_manifest(manifest_path)
    if len(man) == 0:
        raise ValueError(f"manifest {manifest_path} lists no cases")
    rows = pmap(_extract_one, [(c, n_bins) for c in man], workers)
    table = FeatureTable(man.case_ids, list(FEATURE_IDS), np.array(rows))
    table.write_csv(out_csv)
    return table


# --- correlate / group -----------------------------------------------------

CORRELATION_COLUMNS = ("feature_id", "rho", "abs_rho", "p_value", "n", "band")


def write_correlation_csv(table: CorrelationTable, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CORRELATION_COLUMNS)
        for r in table:
            w.writerow([r.feature_id, fmt(r.rho), fmt(r.abs_rho), fmt(r.p_value), r.n, r.band])
    return path


def read_correlation_csv(path, name: str = "") -> CorrelationTable:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CORRELATION_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(CORRELATION_COLUMNS)}")
        recs = [CorrelationRecord(r["feature_id"], float(r["rho"]), float(r["abs_rho"]),
                                  float(r["p_value"]), int(r["n"]), r["band"]) for r in reader]
    return CorrelationTable(recs, name)


def run_correlate(ref_csv, cand_csv, out_csv, name: str = "") -> CorrelationTable:
    table = correlate_cohorts(FeatureTable.read_csv(ref_csv), FeatureTable.read_csv(cand_csv), name)
    write_correlation_csv(table, out_csv)
    return table


def read_profiles(path, ssim_cutoff: float) -> List[NetworkProfile]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("networks", data)
    if isinstance(data, dict):  # {"net": mean_ssim}
        data = [{"network_id": k, "mean_ssim": v} for k, v in data.items()]
    return [NetworkProfile(str(d["network_id"]), float(d["mean_ssim"]), ssim_cutoff) for d in data]


def run_group(tables: Dict[str, CorrelationTable], profiles: List[NetworkProfile], out_json,
              out_csv, tau=0.5, group1_rule="any_low"):
    ga = assign_groups(tables, profiles, tau, group1_rule)
    sizes = ga.sizes()
    write_json({
        "tau": num(tau),
        "group1_rule": group1_rule,
        "networks": [{"network_id": p.network_id, "mean_ssim": num(p.mean_ssim),
                      "high_performance": p.high_performance} for p in profiles],
        "sizes": sizes,
        "summary": {n: {g: {"mean": num(m), "sd": num(s)} for g, (m, s) in ga.summary[n].items()}
                    for n in ga.networks},
        "groups": ga.groups,
    }, out_json)
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "n_features"] + ga.networks)
        for g in GROUPS:
            w.writerow([g, sizes[g]] + [pm(*ga.summary[n][g]) for n in ga.networks])
    return ga


# --- classify --------------------------------------------------------------

def dataset_from(table: FeatureTable, manifest: Manifest) -> Dataset:
    labels = {c.case_id: c.label_value for c in manifest}
    missing = [c for c in table.case_ids if labels.get(c) is None]
    if missing:
        raise ValueError(f"no low/high label for cases {missing[:10]}")
    y = [labels[c] for c in table.case_ids]
    return Dataset(table.case_ids, table.values, y, table.feature_ids)


def run_classify(features_csv, manifest_path, out_json, out_roc, eval_cfg: EvalConfig,
                 test_features_csv=None):
    man = read_manifest(manifest_path)
    train = dataset_from(FeatureTable.read_csv(features_csv), man)
    test = None
    if test_features_csv:
        t = FeatureTable.read_csv(test_features_csv)
        if t.feature_ids != train.feature_ids:
            raise ValueError("train and test feature tables have different columns")
        test = dataset_from(t, man)
    rep = evaluate(train, eval_cfg, test)
    body = {"accuracy_mean": num(rep.accuracy_mean), "accuracy_sd": num(rep.accuracy_sd),
            "auc_mean": num(rep.auc_mean), "auc_sd": num(rep.auc_sd),
            "repeats": [{k: (num(v) if isinstance(v, float) else v) for k, v in r.items()}
                        for r in rep.repeats],
            "config": config_dict(eval_cfg)}
    write_json(body, out_json)
    out_roc = Path(out_roc)
    out_roc.parent.mkdir(parents=True, exist_ok=True)
    with out_roc.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr", "threshold"])
        for p in rep.roc:
            w.writerow([fmt(p[0]), fmt(p[1]), fmt(p[2])])
    return rep


# --- report ----------------------------------------------------------------

class Stage:
    """Context manager tagging any failure inside with the stage name."""

    def __init__(self, name, done=None):
        self.name = name
        self.done = [] if done is None else done

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if ev is None:
            self.done.append(self.name)
            return False
        if isinstance(ev, StageError):
            return False
        raise StageError(self.name, str(ev)) from ev


def run_report(cfg: RunConfig, out: Path) -> dict:
    """Run the requested stages over a reference manifest and network manifests."""
    out = Path(out)
    if not cfg.manifest:
        raise StageError("extract", "missing manifest: no reference manifest configured")
    nets = dict(sorted(cfg.networks.items()))
    manifests = {"reference": Path(cfg.manifest), **{k: Path(v) for k, v in nets.items()}}
    done: List[str] = []
    files: Dict[str, str] = {}
    rel = lambda p: Path(p).relative_to(out).as_posix()  # noqa: E731
    summary = {"schema_version": SCHEMA_VERSION,
               "config": {k: v for k, v in cfg.to_dict().items() if k not in ("out", "workers")},
               "stages": done, "files": files}

    if "preprocess" in cfg.stages:
        with Stage("preprocess", done):
            for name, m in list(manifests.items()):
                p = run_preprocess(m, out / "preprocessed" / name, cfg.target_dims,
                                   cfg.target_spacing_mm, cfg.workers)
                manifests[name] = p
                files[f"preprocess.{name}"] = rel(p)

    profiles = []
    if "quality" in cfg.stages and nets:
        with Stage("quality", done):
            summary["quality"] = {}
            for name in nets:
                p = out / "quality" / f"{name}.csv"
                q = run_quality(manifests["reference"], manifests[name], p, cfg.ssim_config(),
                                cfg.workers)
                files[f"quality.{name}"] = rel(p)
                summary["quality"][name] = {k: {"mean": num(v["mean"]), "sd": num(v["sd"])}
                                            for k, v in q.items()}
                profiles.append(NetworkProfile(name, q["ssim"]["mean"], cfg.ssim_cutoff))
            summary["profiles"] = [{"network_id": p.network_id, "mean_ssim": num(p.mean_ssim),
                                    "high_performance": p.high_performance} for p in profiles]

    tables: Dict[str, Path] = {}
    if "extract" in cfg.stages:
        with Stage("extract", done):
            for name, m in manifests.items():
                p = out / "features" / f"{name}.csv"
                run_extract(m, p, cfg.n_bins, cfg.workers)
                tables[name] = p
                files[f"features.{name}"] = rel(p)

    corr: Dict[str, CorrelationTable] = {}
    if "correlate" in cfg.stages and nets:
        with Stage("correlate", done):
            if not tables:
                raise ValueError("correlate needs the extract stage")
            summary["correlation"] = {}
            for name in nets:
                p = out / "correlation" / f"{name}.csv"
                corr[name] = run_correlate(tables["reference"], tables[name], p, name)
                files[f"correlation.{name}"] = rel(p)
                bands = {b: 0 for b in ("poor", "moderate", "good", "excellent")}
                for r in corr[name]:
                    bands[r.band] += 1
                summary["correlation"][name] = {
                    "mean_abs_rho": num(np.mean([r.abs_rho for r in corr[name]])),
                    "bands": bands}

    if "group" in cfg.stages and nets:
        with Stage("group", done):
            if not corr or not profiles:
                raise ValueError("group needs the quality and correlate stages")
            gj, gc = out / "groups.json", out / "group_summary.csv"
            ga = run_group(corr, profiles, gj, gc, cfg.tau, cfg.group1_rule)
            files["groups"], files["group_summary"] = rel(gj), rel(gc)
            summary["groups"] = {
                "sizes": ga.sizes(),
                "summary": {n: {g: {"mean": num(m), "sd": num(s)} for g, (m, s) in
                                ga.summary[n].items()} for n in ga.networks}}

    if "classify" in cfg.stages:
        with Stage("classify", done):
            if not tables:
                raise ValueError("classify needs the extract stage")
            summary["classification"] = {}
            ecfg = cfg.eval_config()
            for name, p in tables.items():
                pj, pr = out / "classify" / f"{name}.json", out / "classify" / f"{name}_roc.csv"
                rep = run_classify(p, manifests["reference"], pj, pr, ecfg)
                files[f"classify.{name}"], files[f"roc.{name}"] = rel(pj), rel(pr)
                summary["classification"][name] = {
                    "accuracy_mean": num(rep.accuracy_mean), "accuracy_sd": num(rep.accuracy_sd),
                    "auc_mean": num(rep.auc_mean), "auc_sd": num(rep.auc_sd)}

    with Stage("report"):
        md = out / "report.md"
        files["report"] = rel(md)
        md.write_text(render_markdown(summary))
        jsonschema.validate(summary, summary_schema())
        write_json(summary, out / "summary.json")
    return summary


def _cell(d):
    if d is None:
        return "n/a"
    m, s = d["mean"], d["sd"]
    m = math.nan if m is None else float(m)
    s = math.nan if s is None else float(s)
    return f"{m:.4g} ± {s:.3g}"


def render_markdown(summary: dict, now=None) -> str:
    """Human-readable report; the timestamp in the header is the only volatile line."""
    now = now or _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%d %H:%M:%SZ")
    lines = ["# Radiomic fidelity report", "", f"Generated: {now}", "",
             f"Stages run: {', '.join(summary['stages']) or 'none'}", ""]
    if "quality" in summary:
        lines += ["## Image quality (mean ± SD over cases)", "",
                  "| network | MAE | MSE | PSNR (dB) | SSIM | high performance |",
                  "|---|---|---|---|---|---|"]
        hp = {p["network_id"]: p["high_performance"] for p in summary.get("profiles", [])}
        for name, q in summary["quality"].items():
            lines.append(f"| {name} | {_cell(q['mae'])} | {_cell(q['mse'])} | "
                         f"{_cell(q['psnr_db'])} | {_cell(q['ssim'])} | {'yes' if hp.get(name) else 'no'} |")
        lines.append("")
    if "correlation" in summary:
        lines += ["## Feature agreement with the reference", "",
                  "| network | mean abs rho | poor | moderate | good | excellent |",
                  "|---|---|---|---|---|---|"]
        for name, c in summary["correlation"].items():
            b = c["bands"]
            lines.append(f"| {name} | {c['mean_abs_rho']:.4g} | {b['poor']} | {b['moderate']} | "
                         f"{b['good']} | {b['excellent']} |")
        lines.append("")
    if "groups" in summary:
        nets = list(summary["groups"]["summary"])
        lines += ["## Feature groups (abs rho, mean ± SD)", "",
                  "| group | features | " + " | ".join(nets) + " |",
                  "|---|---|" + "---|" * len(nets)]
        for g in GROUPS:
            cells = [_cell(summary["groups"]["summary"][n][g]) for n in nets]
            lines.append(f"| {g} | {summary['groups']['sizes'][g]} | " + " | ".join(cells) + " |")
        lines.append("")
    if "classification" in summary:
        lines += ["## Outcome classification (mean ± SD over repeats)", "",
                  "| features | accuracy | AUC |", "|---|---|---|"]
        for name, c in summary["classification"].items():
            acc = {"mean": c["accuracy_mean"], "sd": c["accuracy_sd"]}
            auc = {"mean": c["auc_mean"], "sd": c["auc_sd"]}
            lines.append(f"| {name} | {_cell(acc)} | {_cell(auc)} |")
        lines.append("")
    lines += ["## Files", ""] + [f"- `{k}`: {v}" for k, v in summary["files"].items()] + [""]
    return "\n".join(lines)
