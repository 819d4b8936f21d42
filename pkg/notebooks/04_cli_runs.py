"""
Runs from the command line
==========================

The same experiments through the ``nondecomp`` entry point. Each run writes
trace.csv, summary.json and plot.svg; compare and drift add a combined table
and plot. Equivalent shell commands:

    nondecomp run --seed 1 --algo dspade --measure min --synth-p 0.05 --out runs/cli/dspade
    nondecomp compare --config a.toml --config b.toml --out runs/cli/cmp
    nondecomp drift --config a.toml --config b.toml --out runs/cli/drift
"""
import json
from pathlib import Path

from nondecomp.cli import main

root = Path("runs/cli")
root.mkdir(parents=True, exist_ok=True)

main(["run", "--seed", "1", "--algo", "dspade", "--measure", "min", "--synth-p", "0.05",
      "--synth-d", "20", "--iters", "300", "--stratified", "--out", str(root / "dspade")])
summary = json.loads((root / "dspade" / "summary.json").read_text())
print({k: summary[k] for k in ("final_test_metric", "best_test_metric", "first_stable_iter")})

# %%
# Config files hold any key; flags override them.

common = """seed = 2
measure = "kld"
synth_d = 10
synth_delta_mu = 1.5
eta = 0.05
stratified = true
iters = 600
eval_every = 20
"""
(root / "nested.toml").write_text(common + 'algo = "dnemsis"\nwarm_start_iters = 300\n'
                                  'dual_reward = "zero_one"\n')
(root / "ce.toml").write_text(common + 'algo = "ce"\n')
cfgs = ["--config", str(root / "nested.toml"), "--config", str(root / "ce.toml")]

main(["compare", *cfgs, "--x", "samples", "--out", str(root / "cmp")])
print((root / "cmp" / "table.csv").read_text().splitlines()[-1])

main(["drift", *cfgs, "--out", str(root / "drift")])
print((root / "drift" / "drift.csv").read_text())
