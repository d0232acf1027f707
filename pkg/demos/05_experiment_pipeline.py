"""End-to-end pipeline: a TOML experiment config, the reproducible artifact
directory, and figures rendered from the CSV by the decoupled plots package.

Run:  python demos/05_experiment_pipeline.py      (about two minutes)
"""

import json
import tempfile
from pathlib import Path

from dynising.harness import run_experiment

CONFIG = """
[experiment]
name = "pipeline-demo"
replicas = 16

[[step]]
kind = "arm-table"
name = "arms"
beta = 0.21972
n = [2, 4, 8]
trials = 4000

[[step]]
kind = "sweep"
name = "sweep"
beta = 0.21972
n = [4, 8]
times = [0.0, 0.5, 2.0]
trials = 2000

[[step]]
kind = "qm"
name = "qm"
beta = 0.21972
t = 0.0
triples = [[1, 2, 4]]
trials = 4000
"""

workdir = Path(tempfile.mkdtemp(prefix="dynising-demo-"))
config = workdir / "experiment.toml"
config.write_text(CONFIG)
out = workdir / "artifacts"

manifest = run_experiment(config, out, seed=2024)
print("manifest:")
print(json.dumps({k: manifest[k] for k in ("name", "seed", "replicas", "config_sha256")}, indent=2))
print("\nresults.csv head:")
for line in (out / "results.csv").read_text().splitlines()[:6]:
    print(" ", line)

try:
    from dynising_plots.core import FigureSpec, render
except ImportError:
    print("\n(dynising-plots not installed; skipping figures -- "
          "pip install -e plots/ --no-build-isolation)")
else:
    csv_path = out / "results.csv"
    for kind, name in (("sweep-curves", "sweep.png"), ("arm-loglog", "arms.svg"),
                       ("qm-ratios", "qm.png")):
        series = render(FigureSpec(kind, [csv_path], out / name))
        print(f"rendered {out / name}")
    series = render(FigureSpec("scaled-sweep", [csv_path, csv_path], out / "scaled.png"))
    print(f"rendered {out / 'scaled.png'}")
print("\nartifacts in", out)
