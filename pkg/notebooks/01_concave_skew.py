"""
Min(TPR, TNR) on skewed data
============================

Two Gaussian classes, 5% positives, 100 features. A network trained on
cross-entropy mostly learns the majority class; the primal-dual trainer keeps
re-weighting toward whichever class rate is currently worse.
"""
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nondecomp.data import SyntheticSpec, gen_two_gaussians, split
from nondecomp.measures import ConcaveLink
from nondecomp.netcore import NetworkConfig
from nondecomp.optimizers import TrainConfig, ce_train, dspade_train, stability_report

out = Path("runs/notebooks")
out.mkdir(parents=True, exist_ok=True)

ds = gen_two_gaussians(SyntheticSpec(n=4000, d=100, p=0.05, delta_mu=3.0, seed=1))
train, test = split(ds, 0.75, seed=2)
print(f"train {len(train)} rows, {train.n_pos} positive; test {len(test)} rows")

# one hidden layer of 16 relu units, same init for both trainers
net = NetworkConfig(100, (16, 1), "relu", 7)
link = ConcaveLink("min_tpr_tnr")
cfg = TrainConfig(eta=0.05, batch_size=64, iters=500, seed=3, eval_every=10, stratified=True)

_, t_dspade = dspade_train(train, net, link, cfg, test)
_, t_ce = ce_train(train, net, cfg, test, measure=link)

# %%
# Test min(TPR, TNR) against minibatch iterations.

fig, ax = plt.subplots(figsize=(6, 3.5))
for name, tr in (("dspade", t_dspade), ("cross-entropy", t_ce)):
    ax.plot([r.iter for r in tr.records], [r.test_metric for r in tr.records], label=name)
ax.set_xlabel("minibatch iterations")
ax.set_ylabel("test min(TPR, TNR)")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(out / "01_min_tpr_tnr.png", dpi=120)

print("final test min(TPR,TNR): dspade %.3f  ce %.3f"
      % (t_dspade.records[-1].test_metric, t_ce.records[-1].test_metric))

# %%
# The duals put all weight on whichever class rate is currently lower. Once
# the two rates meet they keep alternating between the classes.

alpha = np.array([r.alpha for r in t_dspade.records])
print("fraction of evaluations with all weight on positives:", np.mean(alpha == 1.0))

# %%
# Gradient norms: the running minimum over the last tenth of the run is far
# below the one over the first tenth.

rep = stability_report(t_dspade, epsilon=0.1)
print("first decile min %.3g, last decile min %.3g, ratio %.3f, first hit of 0.1: %s"
      % (rep.first_decile_min, rep.last_decile_min, rep.decile_ratio, rep.first_hit))

fig, ax = plt.subplots(figsize=(6, 3.5))
ax.semilogy(t_dspade.grad_norms, lw=0.5, alpha=0.5, label="gradient norm")
ax.semilogy(rep.running_min, label="running min")
ax.set_xlabel("iteration")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(out / "01_grad_norms.png", dpi=120)
