# Covariate roles and the six ATT estimators on synthetic scenarios
from causal_rules import METHODS, ScenarioSpec, analytic_att, classify, estimate, generate, make_context

# Scenario III: Z drives both treatment and outcome, so the raw contrast has the wrong sign
ds = generate(ScenarioSpec("III", n=50_000, seed=1))
x, y = ds.index("X"), ds.index("Y")
cls = classify(ds, x, y)
print(cls.report(ds.names))

ctx = make_context(ds, x, classification=cls)
print("true ATT", analytic_att("III"))
for m in METHODS:
    est = estimate(ctx, m, seed=1)
    print(f"{m:>5} {est.att:+.4f}")

# Scenario V mixes a confounder, an indirect variable and a direct variable
ds = generate(ScenarioSpec("V", n=50_000, seed=2))
cls = classify(ds, ds.index("X"), ds.index("Y"), alpha=0.01)
print({ds.names[i]: c.value for i, c in cls.categories.items()})

# Stratifying the outcome test on X alone makes U look like a confounder
naive = classify(ds, ds.index("X"), ds.index("Y"), alpha=0.01, conditioning="treatment")
print({ds.names[i]: c.value for i, c in naive.categories.items()})
