"""Synthetic bias scenarios with known ATT, bootstrap, and the scenario-by-method table.

Five scenarios, each adding one source of bias:

=====  ========================  ===================  ===========
id     items                     bias                 true ATT
=====  ========================  ===================  ===========
I      V, X, Y                   direct effect        -0.15
II     U, X, Y                   indirect effect      -0.15
III    Z, X, Y                   confounding          -0.15
IV     Z, U, X, Y                conf. + indirect     -0.15*0.2/0.36
V      Z, U, V, X, Y             conf. + both         -0.15*0.2/0.36
=====  ========================  ===================  ===========
"""

from __future__ import annotations

import enum
import io
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classify import CovariateClassification, classify
from .data import Dataset, ItemRole
from .errors import AllReplicatesInestimable
from .estimators import (
    DEFAULT_CALIPER,
    DEFAULT_MIN_CELL,
    METHODS,
    EstimationContext,
    estimate_arrays,
)


class Scenario(str, enum.Enum):
    I_DIRECT = "I"
    II_INDIRECT = "II"
    III_CONFOUNDING = "III"
    IV_CONF_INDIRECT = "IV"
    V_CONF_DIRECT_INDIRECT = "V"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        numeric = {"1": "I", "2": "II", "3": "III", "4": "IV", "5": "V"}
        key = str(value).strip().upper()
        key = numeric.get(key, key)
        for s in cls:
            if s.value == key or s.name == key:
                return s
        raise ValueError(f"unknown scenario {value!r}")


# treated share that has the disease X actually treats (Z) in IV and V
_Z_SHARE_TREATED = 0.2 / 0.36

_TRUE_ATT = {
    Scenario.I_DIRECT: -0.15,
    Scenario.II_INDIRECT: -0.15,
    Scenario.III_CONFOUNDING: -0.15,
    Scenario.IV_CONF_INDIRECT: -0.15 * _Z_SHARE_TREATED,
    Scenario.V_CONF_DIRECT_INDIRECT: -0.15 * _Z_SHARE_TREATED,
}

_ITEMS = {
    Scenario.I_DIRECT: ("V", "X", "Y"),
    Scenario.II_INDIRECT: ("U", "X", "Y"),
    Scenario.III_CONFOUNDING: ("Z", "X", "Y"),
    Scenario.IV_CONF_INDIRECT: ("Z", "U", "X", "Y"),
    Scenario.V_CONF_DIRECT_INDIRECT: ("Z", "U", "V", "X", "Y"),
}

# the causal-graph category of each covariate by construction
TRUE_CATEGORIES = {
    Scenario.I_DIRECT: {"V": "V"},
    Scenario.II_INDIRECT: {"U": "U"},
    Scenario.III_CONFOUNDING: {"Z": "Z"},
    Scenario.IV_CONF_INDIRECT: {"Z": "Z", "U": "U"},
    Scenario.V_CONF_DIRECT_INDIRECT: {"Z": "Z", "U": "U", "V": "V"},
}


@dataclass(frozen=True)
class ScenarioSpec:
    id: Scenario
    n: int = 5000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "id", Scenario.parse(self.id))
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def true_att(self) -> float:
        return _TRUE_ATT[self.id]


def analytic_att(spec) -> float:
    """Closed-form ATT of a scenario (accepts a ScenarioSpec or scenario id)."""
    sid = spec.id if isinstance(spec, ScenarioSpec) else Scenario.parse(spec)
    return _TRUE_ATT[sid]


def _bern(rng, p, n):
    return rng.random(n) < p


def generate(spec: ScenarioSpec) -> Dataset:
    """Draw ``spec.n`` rows from the scenario's generating law."""
    sid, n = spec.id, spec.n
    rng = np.random.default_rng(spec.seed)
    cols = {}
    if sid is Scenario.I_DIRECT:
        v = _bern(rng, 0.20, n)
        x = _bern(rng, 0.30, n)
        py = np.where(x, 0.10, 0.25) + 0.05 * v
        cols = {"V": v, "X": x}
    elif sid is Scenario.II_INDIRECT:
        u = _bern(rng, 0.20, n)
        x = _bern(rng, np.where(u, 0.95, 0.30), n)
        py = np.where(x, 0.10, 0.25)
        cols = {"U": u, "X": x}
    elif sid is Scenario.III_CONFOUNDING:
        z = _bern(rng, 0.20, n)
        x = _bern(rng, np.where(z, 0.95, 0.0), n)
        py = np.where(z, np.where(x, 0.10, 0.25), 0.05)
        cols = {"Z": z, "X": x}
    else:
        z = _bern(rng, 0.20, n)
        u = _bern(rng, 0.20, n)
        if sid is Scenario.V_CONF_DIRECT_INDIRECT:
            v = _bern(rng, 0.20, n)
        x = _bern(rng, np.where(z | u, 0.95, 0.0), n)
        py = np.where(z, np.where(x, 0.10, 0.25), 0.05)
        cols = {"Z": z, "U": u, "X": x}
        if sid is Scenario.V_CONF_DIRECT_INDIRECT:
            py = py + 0.05 * v
            cols["V"] = v
    cols["Y"] = _bern(rng, py, n)
    names = _ITEMS[sid]
    roles = [
        ItemRole.INTERVENTION if c == "X" else ItemRole.OUTCOME if c == "Y" else ItemRole.COVARIATE
        for c in names
    ]
    return Dataset(names, roles, np.column_stack([cols[c] for c in names]))


def true_classification(ds: Dataset, scenario) -> CovariateClassification:
    """Classification implied by the scenario's construction."""
    cats = TRUE_CATEGORIES[Scenario.parse(scenario)]
    return CovariateClassification.from_categories({ds.index(k): v for k, v in cats.items()})


@dataclass(frozen=True)
class BootstrapResult:
    replicates: int
    estimates: np.ndarray
    inestimable: int
    ci_low: float
    ci_high: float
    point: float
    significant: bool

    def to_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "inestimable": self.inestimable,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "point": self.point,
            "significant": self.significant,
            "estimates": self.estimates.tolist(),
        }


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for one replicate; independent of scheduling order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def bootstrap(
    ctx: EstimationContext,
    method: str,
    replicates: int = 500,
    seed: int = 0,
    *,
    caliper: float = DEFAULT_CALIPER,
    min_cell: int = DEFAULT_MIN_CELL,
    threads: int = 1,
) -> BootstrapResult:
    """Percentile bootstrap of an estimator over the context rows.

    Each replicate resamples the context rows with replacement and reruns the
    whole estimator, so PSM refits its propensity model and rematches every
    time. The covariate classification of ``ctx`` is held fixed.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    t, y, W = ctx.arrays()
    m = t.size

    def one(r):
        rng = replicate_rng(seed, r)
        idx = rng.integers(0, m, m)
        est = estimate_arrays(method, t[idx], y[idx], W[idx], caliper=caliper,
                              min_cell=min_cell, rng=rng)
        return est.att if est.estimable else None

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(replicates)))
    else:
        results = [one(r) for r in range(replicates)]
    vals = np.array([v for v in results if v is not None], dtype=float)
    if vals.size == 0:
        raise AllReplicatesInestimable(f"all {replicates} bootstrap replicates were inestimable")
    lo, hi = np.percentile(vals, [2.5, 97.5])
    return BootstrapResult(
        replicates=replicates,
        estimates=vals,
        inestimable=replicates - vals.size,
        ci_low=float(lo),
        ci_high=float(hi),
        point=float(vals.mean()),
        significant=bool(lo > 0 or hi < 0),
    )


def scenario_context(ds: Dataset, scenario=None, classification="all",
                     alpha: float = 0.05) -> EstimationContext:
    """Context for ``X -> Y`` on scenario data.

    ``classification`` is ``"all"`` (every covariate in the adjustment set,
    as if the classifier could not tell U from Z), ``"inferred"`` (classifier
    on the data), ``"true"`` (the scenario's construction) or a
    :class:`CovariateClassification`.
    """
    x, y = ds.index("X"), ds.index("Y")
    if isinstance(classification, CovariateClassification):
        cls = classification
    elif classification == "all":
        cov = [i for i in range(ds.width) if i not in (x, y)]
        cls = CovariateClassification.from_categories({i: "Z" for i in cov})
    elif classification == "true":
        cls = true_classification(ds, scenario)
    elif classification == "inferred":
        cls = classify(ds, x, y, alpha=alpha)
    else:
        raise ValueError(f"unknown classification mode {classification!r}")
    return EstimationContext(ds, x, y, (), (), cls)


@dataclass
class Table4Report:
    """Mean ATT per scenario and method, averaged over seeds."""

    n: int
    seeds: int
    methods: tuple
    mean: dict = field(default_factory=dict)       # (scenario, method) -> float
    sd: dict = field(default_factory=dict)
    estimable: dict = field(default_factory=dict)  # (scenario, method) -> count
    truth: dict = field(default_factory=dict)      # scenario -> float

    def cell(self, scenario, method) -> float:
        return self.mean[(Scenario.parse(scenario), method)]

    def deviation(self, scenario, method) -> float:
        s = Scenario.parse(scenario)
        return self.mean[(s, method)] - self.truth[s]

    def rows(self):
        for s in Scenario:
            if s not in self.truth:
                continue
            yield s, [self.mean[(s, m)] for m in self.methods]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "true_att"] + list(self.methods)
                   + [f"{m}_deviation" for m in self.methods])
        for s, vals in self.rows():
            devs = [v - self.truth[s] for v in vals]
            w.writerow([s.value, f"{self.truth[s]:.6g}"] + [f"{v:.6g}" for v in vals]
                       + [f"{d:.6g}" for d in devs])
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'':6}{'truth':>9}" + "".join(f"{m.upper():>9}" for m in self.methods)
        lines = [head, "-" * len(head)]
        for s, vals in self.rows():
            cells = "".join("       NA" if np.isnan(v) else f"{v:+9.3f}" for v in vals)
            lines.append(f"{s.value + '.':6}{self.truth[s]:+9.4f}{cells}")
        lines.append(f"(n={self.n}, mean over {self.seeds} seeds)")
        return "\n".join(lines) + "\n"


def table4_run(
    n: int = 5000,
    seeds: int = 10,
    *,
    methods=METHODS,
    scenarios=tuple(Scenario),
    classification: str = "all",
    alpha: float = 0.05,
    caliper: float = DEFAULT_CALIPER,
    min_cell: int = DEFAULT_MIN_CELL,
    base_seed: int = 0,
    threads: int = 1,
) -> Table4Report:
    """Every method on every scenario, averaged over ``seeds`` generator seeds.

    By default every covariate is adjusted for, U included: the classifier
    routinely mistakes U for a confounder, and the stratified and matching
    estimators are meant to tolerate superfluous variables. Pass
    ``classification="inferred"`` or ``"true"`` for the other settings.

    Seed ``k`` of scenario ``s`` draws its data with seed ``base_seed + k``;
    PSM uses the same seed for its generator. Inestimable cells are left out
    of the mean (the count is kept in ``estimable``).
    """
    methods = tuple(methods)
    scenarios = tuple(Scenario.parse(s) for s in scenarios)
    report = Table4Report(n=n, seeds=seeds, methods=methods)

    def run(job):
        sid, k = job
        ds = generate(ScenarioSpec(sid, n, base_seed + k))
        ctx = scenario_context(ds, sid, classification, alpha)
        t, y, W = ctx.arrays()
        return [
            estimate_arrays(m, t, y, W, caliper=caliper, min_cell=min_cell,
                            rng=np.random.default_rng(base_seed + k))
            for m in methods
        ]

    jobs = [(s, k) for s in scenarios for k in range(seeds)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    for sid in scenarios:
        report.truth[sid] = analytic_att(sid)
        per = [r for (s, _), r in zip(jobs, results) if s is sid]
        for j, m in enumerate(methods):
            vals = np.array([r[j].att for r in per if r[j].estimable], dtype=float)
            report.estimable[(sid, m)] = int(vals.size)
            report.mean[(sid, m)] = float(vals.mean()) if vals.size else float("nan")
            report.sd[(sid, m)] = float(vals.std(ddof=1)) if vals.size > 1 else float("nan")
    return report
