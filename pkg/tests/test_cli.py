import csv
import json

import jsonschema
import pytest

from radfid.cli import main
from radfid.config import ConfigError, RunConfig
from radfid.pipeline import render_markdown, summary_schema

SMALL_PHANTOM = ["--phantom", "dims=[32,32,16]", "--phantom", "gland_semi_axes=[12,10,6]",
                 "--phantom", "lesion_radius=[1.5,2.5]"]
FAST_ML = ["--ml", "n_trees=10", "--ml", "repeats=2"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def cohort(tmp_path_factory):
    out = tmp_path_factory.mktemp("cohort")
    code = run("phantom", "--out", out, "--n-cases", 24, "--seed", 9, *SMALL_PHANTOM,
               "--degradation", "ident={}", "--degradation", 'noisy={"noise_sigma": 0.1}')
    assert code == 0
    return out


@pytest.fixture(scope="module")
def report(cohort, tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    code = run("report", "--out", out, "--manifest", cohort / "reference" / "manifest.csv",
               "--network", f"ident={cohort / 'networks/ident/manifest.csv'}",
               "--network", f"noisy={cohort / 'networks/noisy/manifest.csv'}", *FAST_ML)
    assert code == 0
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- configuration -------------------------------------------------------------

def test_config_roundtrip(tmp_path):
    cfg = RunConfig(tau=0.6, networks={"a": "x.csv"}, ml={"n_trees": 5})
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    (tmp_path / "c.json").write_text(cfg.to_json())
    assert RunConfig.from_json(tmp_path / "c.json") == cfg


@pytest.mark.parametrize("bad", [{"tau": 1.5}, {"no_such_key": 1}, {"n_bins": "many"},
                                 {"phantom": {"seed": 3}}, {"stages": ["paint"]},
                                 {"degradations": {"x": {"gamma": 0}}}])
def test_invalid_config_values(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_invalid_config_exits_2(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"tau": 2.0}))
    assert run("extract", "--config", tmp_path / "c.json", "--out", tmp_path) == 2
    (tmp_path / "broken.json").write_text("{")
    assert run("extract", "--config", tmp_path / "broken.json") == 2
    assert run("extract", "--n-bins", "x") == 2
    assert run("paint") == 2
    assert not (tmp_path / ".partial").exists()


def test_flags_override_config(tmp_path):
    from radfid.cli import build_parser, config_from_args
    (tmp_path / "c.json").write_text(json.dumps({"tau": 0.3, "seed": 1, "ml": {"n_trees": 7}}))
    args = build_parser().parse_args(["group", "--config", str(tmp_path / "c.json"), "--tau",
                                      "0.7", "--ml", "repeats=2", "--set", "n_bins=16"])
    cfg = config_from_args(args)
    assert (cfg.tau, cfg.seed, cfg.n_bins) == (0.7, 1, 16)
    assert cfg.ml == {"n_trees": 7, "repeats": 2}


# -- single subcommands --------------------------------------------------------

def test_phantom_layout(cohort):
    meta = json.loads((cohort / "cohort.json").read_text())
    assert meta["n_cases"] == 24 and set(meta["degradations"]) == {"ident", "noisy"}
    labels = list(meta["labels"].values())
    assert labels.count("high") >= 6 and labels.count("low") >= 6
    for name in ("reference", "networks/ident", "networks/noisy"):
        assert (cohort / name / "manifest.csv").exists()


def test_identity_network_copies_reference_bytes(cohort):
    a = sorted((cohort / "reference" / "volumes").glob("*.raw"))
    b = sorted((cohort / "networks" / "ident" / "volumes").glob("*.raw"))
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]


def test_quality_extract_correlate_group_classify(cohort, tmp_path):
    ref = cohort / "reference" / "manifest.csv"
    noisy = cohort / "networks" / "noisy" / "manifest.csv"
    assert run("quality", "--out", tmp_path / "q", "--reference", ref, "--candidate", noisy) == 0
    rows = read_csv(tmp_path / "q" / "quality.csv")
    assert len(rows) == 25 and rows[-1]["case_id"] == "mean±sd"
    assert all(0 < float(r["ssim"]) < 1 for r in rows[:-1])

    assert run("extract", "--out", tmp_path / "fr", "--manifest", ref) == 0
    assert run("extract", "--out", tmp_path / "fn", "--manifest", noisy) == 0
    feats = read_csv(tmp_path / "fr" / "features.csv")
    assert len(feats) == 24 and len(feats[0]) == 187

    assert run("correlate", "--out", tmp_path / "c", "--reference", tmp_path / "fr/features.csv",
               "--candidate", tmp_path / "fn/features.csv") == 0
    corr = read_csv(tmp_path / "c" / "correlation.csv")
    assert len(corr) == 186
    assert set(r["band"] for r in corr) <= {"poor", "moderate", "good", "excellent"}

    (tmp_path / "profiles.json").write_text(json.dumps({"noisy": 0.3}))
    assert run("group", "--out", tmp_path / "g", "--network",
               f"noisy={tmp_path / 'c/correlation.csv'}", "--profiles",
               tmp_path / "profiles.json") == 0
    g = json.loads((tmp_path / "g" / "groups.json").read_text())
    assert sum(g["sizes"].values()) == 186 and g["sizes"]["group2"] == 0
    assert read_csv(tmp_path / "g" / "group_summary.csv")[0]["group"] == "group1"

    assert run("classify", "--out", tmp_path / "k", "--features", tmp_path / "fr/features.csv",
               "--manifest", ref, *FAST_ML) == 0
    k = json.loads((tmp_path / "k" / "classification.json").read_text())
    assert 0 <= k["accuracy_mean"] <= 1 and len(k["repeats"]) == 2
    roc = read_csv(tmp_path / "k" / "roc.csv")
    assert roc[0] == {"fpr": "0", "tpr": "0", "threshold": "inf"}


def test_preprocess_subcommand(cohort, tmp_path):
    code = run("preprocess", "--out", tmp_path, "--manifest",
               cohort / "reference" / "manifest.csv", "--target-dims", "16,16,8")
    assert code == 0
    hdr = json.loads(next((tmp_path / "volumes").glob("*.json")).read_text())
    assert hdr["dims"] == [16, 16, 8] and hdr["spacing_mm"] == [2.0, 2.0, 2.0]


# -- failures ------------------------------------------------------------------

def test_missing_manifest_is_an_extract_failure(tmp_path, capsys):
    code = run("extract", "--out", tmp_path, "--manifest", tmp_path / "none.csv")
    assert code == 3
    assert (tmp_path / ".partial").read_text().startswith("extract:")
    assert "extract" in capsys.readouterr().err


def test_missing_required_input_exits_2(tmp_path, capsys):
    assert run("report", "--out", tmp_path) == 2
    assert "[extract]" in capsys.readouterr().err


def test_stage_failure_marker_cleared_on_success(cohort, tmp_path):
    ref = cohort / "reference" / "manifest.csv"
    rows = ref.read_text().splitlines()
    # paths in a manifest are relative to it, so keep the copy beside the original
    short = cohort / "reference" / "short.csv"
    short.write_text("\n".join(rows[:5]) + "\n")
    assert run("quality", "--out", tmp_path, "--reference", ref, "--candidate", short) == 3
    assert (tmp_path / ".partial").read_text().startswith("quality:")
    short.unlink()
    assert run("quality", "--out", tmp_path, "--reference", ref, "--candidate", ref) == 0
    assert not (tmp_path / ".partial").exists()


# -- end-to-end report ---------------------------------------------------------

def test_report_summary_is_schema_valid_and_complete(report):
    summary = json.loads((report / "summary.json").read_text())
    jsonschema.validate(summary, summary_schema())
    assert summary["stages"] == ["quality", "extract", "correlate", "group", "classify"]
    for rel in summary["files"].values():
        assert (report / rel).is_file(), rel
    assert "out" not in summary["config"] and "workers" not in summary["config"]
    assert not (report / ".partial").exists()


def test_identity_network_preserves_every_feature(report):
    summary = json.loads((report / "summary.json").read_text())
    assert summary["quality"]["ident"]["ssim"]["mean"] == 1.0
    assert summary["quality"]["ident"]["psnr_db"]["mean"] == "inf"
    ident = read_csv(report / "correlation" / "ident.csv")
    noisy = {r["feature_id"]: float(r["abs_rho"]) for r in read_csv(report / "correlation/noisy.csv")}
    groups = json.loads((report / "groups.json").read_text())["groups"]
    ref = read_csv(report / "features" / "reference.csv")
    for r in ident:
        f = r["feature_id"]
        if float(r["abs_rho"]) == 1.0:
            assert r["band"] == "excellent" and groups[f] != "group3"
            # kept by the only other network too, so kept by all of them
            assert (groups[f] == "group1") == (noisy[f] >= 0.5)
        else:
            # only features constant across the cohort fall short of rho = 1
            assert len({row[f] for row in ref}) == 1


def test_report_markdown(report):
    text = (report / "report.md").read_text()
    assert text.startswith("# Radiomic fidelity report")
    summary = json.loads((report / "summary.json").read_text())
    assert render_markdown(summary, now="X") == render_markdown(summary, now="X")
    for name in ("ident", "noisy", "reference"):
        assert name in text
