# %% [markdown]
# # Scenario files and reports
# Every shipped scenario runs through the same entry point. Reports are
# plain JSON, validated against the bundled schema, with floats written to
# 17 significant digits.

# %%
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from qagi_lab.harness import load_report, run_scenario

ROOT = Path(__file__).resolve().parents[1]
out = Path(tempfile.mkdtemp())

for path in sorted((ROOT / "scenarios").glob("*.json")):
    rep = run_scenario(path, out_dir=out, steps=5 if "cagi" in path.stem else None)
    keys = ", ".join(list(rep.summary)[:4])
    print(f"{rep.kind:15s} {rep.scenario_id:22s} {len(rep.records):3d} records  [{keys}]")

# %% [markdown]
# Reloading a report gives back the same structure.

# %%
rep = load_report(out / "chsh-singlet" / "report.json")
print(json.dumps(rep.summary, indent=2)[:300])

# %% [markdown]
# The same runs from the shell. Exit code 3 means the planning budget was
# exceeded, 2 a scenario error.

# %%
cmd = [sys.executable, "-m", "qagi_lab.harness.cli", "aixi", "--scenario",
       str(ROOT / "scenarios" / "bandit_cagi.json"), "--steps", "5", "--format", "csv", "--out", str(out)]
done = subprocess.run(cmd, capture_output=True, text=True)
print("exit", done.returncode)
print((out / "bandit-cagi" / "trace.csv").read_text())
