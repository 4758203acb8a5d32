"""
The whole pipeline from the command line
========================================

Equivalent shell session::

    radfid phantom --out run/cohort --n-cases 20
    radfid report --out run/report --manifest run/cohort/reference/manifest.csv \\
        --network mild_blur=run/cohort/networks/mild_blur/manifest.csv ...

Here the same calls go through ``radfid.cli.main`` in a temporary directory.
"""

import json
import tempfile
from pathlib import Path

from radfid.cli import main

run = Path(tempfile.mkdtemp()) / "run"

# reference cohort plus the three default surrogate networks
assert main(["phantom", "--out", str(run / "cohort"), "--n-cases", "20"]) == 0

nets = sorted(p.name for p in (run / "cohort" / "networks").iterdir())
argv = ["report", "--out", str(run / "report"),
        "--manifest", str(run / "cohort" / "reference" / "manifest.csv")]
for n in nets:
    argv += ["--network", f"{n}={run / 'cohort' / 'networks' / n / 'manifest.csv'}"]
assert main(argv) == 0

summary = json.loads((run / "report" / "summary.json").read_text())
for n in nets:
    print(n, "SSIM", summary["quality"][n]["ssim"]["mean"],
          "mean |rho|", summary["correlation"][n]["mean_abs_rho"])
print("groups:", summary["groups"]["sizes"])
print((run / "report" / "report.md").read_text())
