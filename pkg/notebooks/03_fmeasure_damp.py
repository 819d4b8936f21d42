"""
F1 with a frozen feature layer
==============================

F1 is a ratio of two linear functions of (TPR, TNR). The alternating trainer
pretrains a network on cross-entropy, freezes everything below a narrow
feature layer and then alternates between reading off the current F1 level on
a batch and ascending the level's cost-weighted objective on the top layer.
Baselines: cross-entropy at threshold 0, and the same network with a
threshold tuned for F1 on held-out data.
"""
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from nondecomp.data import SyntheticSpec, gen_two_gaussians, split
from nondecomp.measures import fbeta_coeffs
from nondecomp.netcore import scores
from nondecomp.optimizers import (TrainConfig, ce_train, damp_net, damp_train, evaluate,
                                  plugin_tune)

out = Path("runs/notebooks")
out.mkdir(parents=True, exist_ok=True)

# heavily overlapping classes, 25% positive
ds = gen_two_gaussians(SyntheticSpec(n=4000, d=10, p=0.25, delta_mu=0.5, seed=1))
train, test = split(ds, 0.75, seed=2)
fit, val = split(train, 0.8, seed=3)
net, n_lower = damp_net(10, (16,), 8, seed=7)
f1 = fbeta_coeffs(1.0, train.p_hat)

cfg = TrainConfig(stepper="adam", eta=0.01, batch_size=64, iters=100, inner_iters=5, seed=3,
                  eval_every=5, pretrain_epochs=5, dual_reward="zero_one")
model, trace = damp_train(train, net, n_lower, f1, cfg, test)

budget = TrainConfig(stepper="adam", eta=0.01, batch_size=64, seed=3,
                     iters=5 * (len(train) // 64) + 600)
m_ce, _ = ce_train(train, net, budget)
m_pl, _ = ce_train(fit, net, budget)
th = plugin_tune(m_pl, val, f1)

print("test F1: damp %.3f" % trace.records[-1].test_metric)
print("test F1: plugin %.3f (threshold %.3f)" % (evaluate(f1, scores(m_pl, test.X), test.y, th), th))
print("test F1: ce at 0 %.3f" % evaluate(f1, scores(m_ce, test.X), test.y))

# %%
# Level sequence and test F1 per outer step. With full batches the level
# never decreases; with minibatches it is a noisy estimate.

fig, ax = plt.subplots(figsize=(6, 3.5))
ax.plot(range(1, len(trace.levels) + 1), trace.levels, label="level (batch F1)")
ax.plot([r.iter / (cfg.inner_iters + 1) for r in trace.records],
        [r.test_metric for r in trace.records], "o", ms=3, label="test F1")
ax.set_xlabel("outer step")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig(out / "03_damp_levels.png", dpi=120)

cfg_full = TrainConfig(eta=0.1, iters=200, inner_iters=5, seed=3, eval_every=50,
                       full_batch=True)
_, t_full = damp_train(train, net, n_lower, f1, cfg_full)
print("full-batch levels: %.4f -> %.4f" % (t_full.levels[0], t_full.levels[-1]))
