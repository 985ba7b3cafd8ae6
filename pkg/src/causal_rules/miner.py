"""Frequent, closed causal rule mining.

Two nested level-wise (Apriori) enumerations: the outer one over
subpopulation itemsets ``S`` built from subpopulation items, the inner one
over intervention itemsets ``X`` built from intervention items. Inner
candidates are pruned by one of three strategies:

``apriori``
    plain support, ``support(S + X) > min_support``;
``posp``
    potential-outcome support: the full pattern *and* every leave-one-out
    contrast (all of ``X`` true except member ``i``, which is false) must
    exceed ``min_support``, so each member's effect can be estimated;
``posp+ecrp``
    POSP plus effective-rule pruning: an intervention set is only extended
    if every member's ATT exceeds ``min_effect`` in absolute value. This is
    exact when member effects are additive and a heuristic otherwise.

For every surviving ``(S, X)`` the ATT of each member ``x`` is estimated with
the other members of ``X`` held true. A rule is emitted when it is closed
(every member estimable with ``|ATT| > min_effect``) and frequent
(``support(S + X + {y}) > min_support``).
"""

from __future__ import annotations

import csv
import io
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .classify import CovariateClassification
from .data import Dataset, ItemRole, count_where, itemset
from .estimators import (
    DEFAULT_CALIPER,
    DEFAULT_MIN_CELL,
    METHODS,
    make_context,
    estimate,
)

PRUNING_MODES = ("apriori", "posp", "posp+ecrp")


@dataclass(frozen=True)
class MiningConfig:
    min_support: float
    min_effect: float = 0.0
    max_subpop_size: int = 2
    max_intervention_size: int = 3
    estimator: str = "cc"
    pruning: str = "posp+ecrp"
    caliper: float = DEFAULT_CALIPER
    alpha: float = 0.05
    min_cell: int = DEFAULT_MIN_CELL
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.min_support <= 1:
            raise ValueError(f"min_support must be in (0, 1], got {self.min_support}")
        if self.min_effect < 0:
            raise ValueError(f"min_effect must be >= 0, got {self.min_effect}")
        if self.estimator not in METHODS:
            raise ValueError(f"estimator must be one of {METHODS}, got {self.estimator!r}")
        if self.pruning not in PRUNING_MODES:
            raise ValueError(f"pruning must be one of {PRUNING_MODES}, got {self.pruning!r}")
        if self.max_subpop_size < 0 or self.max_intervention_size < 1:
            raise ValueError("max_subpop_size must be >= 0 and max_intervention_size >= 1")


@dataclass(frozen=True)
class CausalRule:
    s: tuple
    x: tuple
    y: int
    support: float
    per_member_att: dict
    closed: bool

    @property
    def min_abs_att(self) -> float:
        vals = [abs(e.att) for e in self.per_member_att.values() if e.estimable]
        return min(vals) if len(vals) == len(self.per_member_att) else float("nan")

    def to_dict(self, names=None) -> dict:
        name = (lambda i: names[i]) if names is not None else (lambda i: i)
        return {
            "S": [name(i) for i in self.s],
            "X": [name(i) for i in self.x],
            "Y": name(self.y),
            "support": self.support,
            "closed": self.closed,
            "att": {str(name(i)): e.to_dict() for i, e in self.per_member_att.items()},
        }


@dataclass
class MiningStats:
    subpopulations: int = 0
    candidates_generated: int = 0
    pruned_support: int = 0
    pruned_ecrp: int = 0
    evaluated: int = 0
    inestimable: int = 0
    not_effective: int = 0
    infrequent_rule: int = 0
    rules_emitted: int = 0
    wall_time: float = 0.0

    def add(self, other: "MiningStats") -> None:
        for k in ("candidates_generated", "pruned_support", "pruned_ecrp", "evaluated",
                  "inestimable", "not_effective", "infrequent_rule", "rules_emitted"):
            setattr(self, k, getattr(self, k) + getattr(other, k))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MiningResult:
    rules: list
    stats: MiningStats
    evaluated: list = field(default_factory=list)

    def __iter__(self):
        yield self.rules
        yield self.stats


def _effective(atts: dict, eta: float) -> bool:
    return all(e.estimable and abs(e.att) > eta for e in atts.values())


def posp_check(ds: Dataset, s, x, min_support: float) -> bool:
    """Potential-outcome support test for intervention set ``x`` in subpopulation ``s``.

    True iff ``support(s + x)`` and, for every member ``i`` of ``x``, the
    support of "``s`` and ``x`` true except ``i``, ``i`` false" all exceed
    ``min_support``.
    """
    s, x = itemset(s), itemset(x)
    if set(s) & set(x):
        raise ValueError("subpopulation and intervention sets must be disjoint")
    if not x:
        raise ValueError("intervention set must be non-empty")
    limit = min_support * ds.n
    if count_where(ds, s + x) <= limit:
        return False
    for i in x:
        rest = tuple(j for j in x if j != i)
        if count_where(ds, s + rest, (i,)) <= limit:
            return False
    return True


def ecrp_extend(parent: CausalRule, candidate_x: int, min_effect: float) -> bool:
    """Whether ``parent`` may be extended by ``candidate_x`` under effective-rule pruning.

    False when some member of the parent has ``|ATT| <= min_effect`` (or an
    inestimable ATT). The candidate itself does not enter the decision.
    """
    return _effective(parent.per_member_att, min_effect)


def _apriori_gen(parents):
    """Join sorted (k-1)-itemsets sharing a (k-2)-prefix; keep those whose subsets all survive."""
    parents = sorted(parents)
    pset = set(parents)
    out = []
    for a, b in combinations(parents, 2):
        if a[:-1] != b[:-1]:
            continue
        cand = a + (b[-1],) if a[-1] < b[-1] else b + (a[-1],)
        if all(cand[:i] + cand[i + 1:] in pset for i in range(len(cand))):
            out.append(cand)
    return sorted(out)


def frequent_itemsets(ds: Dataset, items, min_support: float, max_size: int, base=()):
    """Level-wise itemsets over ``items`` with ``support(base + I) > min_support``.

    Includes the empty itemset (when ``base`` itself qualifies).
    """
    limit = min_support * ds.n
    base = itemset(base)
    if count_where(ds, base) <= limit:
        return []
    out = [()]
    level = [(i,) for i in sorted(items) if count_where(ds, base + (i,)) > limit]
    k = 1
    while level and k <= max_size:
        out.extend(level)
        k += 1
        level = [c for c in _apriori_gen(level) if count_where(ds, itemset(base + c)) > limit]
    return out


def _rng_seed(seed, s, x, member):
    key = zlib.crc32(repr((s, x, member)).encode())
    return np.random.SeedSequence([int(seed), key])


def _evaluate(ds, cfg, s, x, y):
    atts = {}
    needs_cls = cfg.estimator not in ("conf", "cc")
    for member in x:
        given = tuple(j for j in x if j != member)
        ctx = make_context(
            ds, member, y, s, given,
            classification=None if needs_cls else _EMPTY,
            alpha=cfg.alpha,
            warn=False,
        )
        atts[member] = estimate(ctx, cfg.estimator, caliper=cfg.caliper,
                                min_cell=cfg.min_cell, seed=_rng_seed(cfg.seed, s, x, member))
    return atts


# conf and cc never look at covariates
_EMPTY = CovariateClassification.from_categories({})


def _mine_subpopulation(ds, cfg, s, interventions, y):
    stats = MiningStats()
    rules, evaluated = [], []
    limit = cfg.min_support * ds.n
    posp = cfg.pruning != "apriori"
    ecrp = cfg.pruning == "posp+ecrp"
    survivors = []   # pass the support test at the current level
    effective = set()
    for k in range(1, cfg.max_intervention_size + 1):
        if k == 1:
            cands = [(i,) for i in interventions]
        else:
            cands = _apriori_gen(survivors)
        if not cands:
            break
        stats.candidates_generated += len(cands)
        survivors = []
        for x in cands:
            if ecrp and k > 1 and not all(x[:i] + x[i + 1:] in effective for i in range(k)):
                stats.pruned_ecrp += 1
                continue
            sx = itemset(s + x)
            ok = posp_check(ds, s, x, cfg.min_support) if posp else count_where(ds, sx) > limit
            if not ok:
                stats.pruned_support += 1
                continue
            survivors.append(x)
            stats.evaluated += 1
            atts = _evaluate(ds, cfg, s, x, y)
            closed = _effective(atts, cfg.min_effect)
            if closed:
                effective.add(x)
            rule = CausalRule(s, x, y, count_where(ds, sx + (y,)) / ds.n, atts, closed)
            evaluated.append(rule)
            if not all(e.estimable for e in atts.values()):
                stats.inestimable += 1
            elif not closed:
                stats.not_effective += 1
            if not closed:
                continue
            if rule.support <= cfg.min_support:
                stats.infrequent_rule += 1
                continue
            stats.rules_emitted += 1
            rules.append(rule)
    return rules, stats, evaluated


def mine(ds: Dataset, cfg: MiningConfig, keep_all: bool = False) -> MiningResult:
    """Mine frequent closed causal rules for the dataset's outcome item.

    With ``keep_all`` the result also lists every evaluated ``(S, X)``
    pattern, closed or not.
    """
    t0 = time.perf_counter()
    y = ds.outcome
    subpop_items = ds.with_role(ItemRole.SUBPOPULATION)
    interventions = ds.with_role(ItemRole.INTERVENTION)
    subpops = frequent_itemsets(ds, subpop_items, cfg.min_support, cfg.max_subpop_size)
    stats = MiningStats(subpopulations=len(subpops))

    def branch(s):
        return _mine_subpopulation(ds, cfg, s, interventions, y)

    if cfg.threads > 1 and len(subpops) > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            parts = list(pool.map(branch, subpops))
    else:
        parts = [branch(s) for s in subpops]
    rules, evaluated = [], []
    for r, st, ev in parts:
        rules.extend(r)
        stats.add(st)
        evaluated.extend(ev)
    stats.wall_time = time.perf_counter() - t0
    return MiningResult(rules, stats, evaluated if keep_all else [])


def rules_csv(rules, names) -> str:
    """One line per rule: S, X, support, min |ATT|, closed."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["S", "X", "support", "min_abs_att", "closed"])
    for r in rules:
        w.writerow([
            " ".join(names[i] for i in r.s),
            " ".join(names[i] for i in r.x),
            f"{r.support:.6g}",
            f"{r.min_abs_att:.6g}",
            str(r.closed).lower(),
        ])
    return buf.getvalue()
