# Mining closed causal rules and comparing pruning strategies
import numpy as np

from causal_rules import Dataset, MiningConfig, mine
from causal_rules.miner import rules_csv

rng = np.random.default_rng(3)
n = 20_000
s = rng.random((n, 2)) < [0.5, 0.3]
drugs = rng.random((n, 4)) < [0.4, 0.3, 0.5, 0.97]    # the last drug is nearly universal
risk = 0.25 - 0.10 * drugs[:, 0] - 0.08 * drugs[:, 1] + 0.05 * s[:, 0]
y = rng.random(n) < risk
ds = Dataset(
    ["old", "male", "d1", "d2", "d3", "d4", "event"],
    ["subpopulation"] * 2 + ["intervention"] * 4 + ["outcome"],
    np.column_stack([s, drugs, y]),
)

# Effects are additive here, so effect-based pruning loses nothing
for mode in ("apriori", "posp", "posp+ecrp"):
    cfg = MiningConfig(min_support=0.01, min_effect=0.03, pruning=mode)
    rules, stats = mine(ds, cfg)
    print(f"{mode:>10}: evaluated {stats.evaluated:3d}, pruned by support {stats.pruned_support:3d}, "
          f"by effect {stats.pruned_ecrp:3d}, rules {len(rules)}")

rules, _ = mine(ds, MiningConfig(min_support=0.01, min_effect=0.03))
print(rules_csv(rules, ds.names))
