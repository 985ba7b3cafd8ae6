# Loading a binary table and counting itemsets
import json
import os
import tempfile

import numpy as np

from causal_rules import Dataset, count_where, load_csv, support, write_csv

# A tiny cohort: two comorbidities, two drugs, one outcome
rng = np.random.default_rng(0)
n = 1000
diabetes = rng.random(n) < 0.3
obesity = rng.random(n) < 0.4
statin = rng.random(n) < 0.2 + 0.3 * diabetes
metformin = rng.random(n) < 0.1 + 0.6 * diabetes
stroke = rng.random(n) < 0.10 + 0.08 * diabetes - 0.04 * statin

ds = Dataset(
    ["diabetes", "obesity", "statin", "metformin", "stroke"],
    ["subpopulation", "subpopulation", "intervention", "intervention", "outcome"],
    np.column_stack([diabetes, obesity, statin, metformin, stroke]),
)
print(ds.summary())

# Support is the share of rows where every listed item is true
d, s = ds.items(["diabetes", "statin"])
print("support(diabetes, statin) =", support(ds, (d, s)))

# count_where also takes items that must be false
print("diabetics not on a statin:", count_where(ds, (d,), (s,)))

# Round trip through CSV plus a roles file
tmp = tempfile.mkdtemp()
write_csv(ds, os.path.join(tmp, "cohort.csv"), os.path.join(tmp, "roles.json"))
print(json.load(open(os.path.join(tmp, "roles.json"))))
back = load_csv(os.path.join(tmp, "cohort.csv"), os.path.join(tmp, "roles.json"))
print("identical after reload:", back == ds, back.fingerprint()[:16])
