"""
Full lifecycle through the command line
=======================================

Runs the installed CLI end to end in a scratch directory:
simulate -> calibrate -> route -> evaluate -> add-config.
Every command is a plain subprocess, exactly what a shell user would type.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

root = Path(tempfile.mkdtemp(prefix="cli-demo-"))
sim = root / "sim"


def cli(*args: str) -> str:
    cmd = [sys.executable, "-m", "routeiq", *args]
    print("$ routeiq " + " ".join(args))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(proc.returncode)
    return proc.stdout


# 1. Simulate a world and write its matrix, embeddings and prices.
out = cli("simulate", "--configs", "8", "--queries", "150", "--dim", "8",
          "--out", str(sim))
print(out)

# 2. Calibrate a snapshot from those files.
out = cli("calibrate",
          "--matrix", str(sim / "matrix.ldjson"),
          "--embeddings", str(sim / "embeddings.ldjson"),
          "--prices", str(sim / "prices.json"),
          "--epochs", "60",
          "--out", str(root / "snapshot.json"))
print(out)

# 3. Route a few stored queries at two preference weights.
for w1 in ("0.2", "0.9"):
    out = cli("route", "--snapshot", str(root / "snapshot.json"),
              "--embeddings", str(sim / "embeddings.ldjson"),
              "--w1", w1, "--queries", "q000000,q000001,q000002")
    for line in out.strip().splitlines():
        rec = json.loads(line)
        print(f"  w1={w1}: {rec['query_id']} -> {rec['config_id']}")

# 4. Evaluate the sweep: JSON report plus a CSV of curve points.
out = cli("evaluate", "--snapshot", str(root / "snapshot.json"),
          "--matrix", str(sim / "matrix.ldjson"),
          "--embeddings", str(sim / "embeddings.ldjson"),
          "--cpt", "90", "--cpt", "50",
          "--out", str(root / "report.json"),
          "--csv", str(root / "curve.csv"))
print(out)
report = json.loads((root / "report.json").read_text())
print(f"  hypervolume {report['hypervolume']:.4f}, cpt {report['cpt']}")

# 5. Onboard a new configuration from a response log. The log would come
# from actually running the new model; here we fabricate one.
log = root / "responses.ldjson"
with open(log, "w") as fh:
    for j in range(150):
        fh.write(json.dumps({
            "query_id": f"q{j:06d}", "correct": int(j % 3 != 0),
            "reasoning_tokens": 900, "completion_tokens": 80,
        }) + "\n")
out = cli("add-config", "--snapshot", str(root / "snapshot.json"),
          "--out", str(root / "snapshot2.json"),
          "--embeddings", str(sim / "embeddings.ldjson"),
          "--config", "contender@4096", "--price", "3e-6",
          "--responses", str(log),
          "--transcript", str(root / "transcript.ldjson"))
print(out)

probed = len((root / "transcript.ldjson").read_text().splitlines())
print(f"onboarded with {probed} probes instead of 150 full evaluations")
print(f"\nartifacts under {root}")
