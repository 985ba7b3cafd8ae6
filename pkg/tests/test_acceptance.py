"""Acceptance checks: one test per criterion, each printing a PASS or FAIL line."""

import numpy as np
import pytest

from causal_rules import (
    CollinearDesign,
    Dataset,
    MiningConfig,
    ScenarioSpec,
    bootstrap,
    classify,
    fit_logistic,
    generate,
    make_context,
    mine,
    posp_check,
    table4_run,
)
from causal_rules.estimators import psm_matched_rows
from causal_rules.simulation import scenario_context

from conftest import record_acceptance
from oracles import apriori_ok, columns_as_ints, count, exact, posp_ok, subsets

pytestmark = pytest.mark.slow


def test_criterion_1_table4_convergence():
    rep = table4_run(200_000, 10)
    checks = []
    for sc in ("I", "II"):
        for m in ("cc", "da", "cm", "psm", "sn"):
            checks.append((sc, m, -0.15))
    for m in ("da", "cm", "psm", "sn"):
        checks.append(("III", m, -0.15))
    # exact value from the generating law; the literal 0.0447 sits 0.003 away
    checks.append(("III", "cc", exact("III")["cc"]))
    checks.append(("III", "cc", 0.0447))
    checks.append(("IV", "cm", -0.0833))
    bad = [(sc, m, rep.cell(sc, m)) for sc, m, target in checks
           if not abs(rep.cell(sc, m) - target) <= 0.01]
    worst = max(abs(rep.cell(sc, m) - t) for sc, m, t in checks)
    ok = record_acceptance(1, not bad, f"{len(checks)} cells within 0.01, worst deviation {worst:.4f}"
                           + (f"; out of tolerance {bad}" if bad else ""))
    assert ok


def test_criterion_2_bias_reproduction():
    rep = table4_run(5000, 50, methods=("da", "psm", "sn"), scenarios=("V",))
    truth = abs(exact("V")["att"])
    da, psm, sn = (rep.cell("V", m) for m in ("da", "psm", "sn"))
    closer = abs(abs(sn) - truth) < abs(abs(da) - truth) and abs(abs(psm) - truth) < abs(abs(da) - truth)
    attenuated = sn < 0 and abs(sn) < truth
    ok = record_acceptance(
        2, closer and attenuated,
        f"row V means DA {da:+.4f} PSM {psm:+.4f} SN {sn:+.4f} vs truth {-truth:+.4f}; "
        f"ordering {'ok' if closer else 'violated'}, SN attenuation {'ok' if attenuated else 'absent'}",
    )
    assert ok


def _pruning_instance(rng, near_constant):
    n = 200
    p = rng.uniform(0.3, 0.9, 12)
    if near_constant:
        p[4 + rng.integers(0, 8)] = 0.985
    bits = rng.random((n, 12)) < p
    roles = ["subpopulation"] * 4 + ["intervention"] * 8
    return Dataset([f"i{j}" for j in range(12)], roles, bits), float(rng.uniform(0.01, 0.05))


def test_criterion_3_pruning_dominance():
    rng = np.random.default_rng(2024)
    failures = []
    strict_expected = strict_seen = 0
    for inst in range(100):
        ds, theta = _pruning_instance(rng, near_constant=inst % 2 == 0)
        cols = columns_as_ints(ds.bits.tolist())
        n = ds.n
        s_items, x_items = range(4), range(4, 12)
        posp, apri = set(), set()
        for s in subsets(s_items, 4):
            for x in subsets(x_items, 8, 1):
                p = posp_check(ds, s, x, theta)
                if p != posp_ok(cols, n, s, x, theta):
                    failures.append((inst, "oracle mismatch", s, x))
                if p:
                    posp.add((s, x))
                if apriori_ok(cols, n, s, x, theta):
                    apri.add((s, x))
        if not posp <= apri:
            failures.append((inst, "not a subset"))
        # lemma: a failing pattern never gains support by adding an intervention item
        for s in subsets(s_items, 4):
            for x in subsets(x_items, 7, 1):
                if (s, x) in posp:
                    continue
                for extra in x_items:
                    if extra not in x and (s, tuple(sorted(x + (extra,)))) in posp:
                        failures.append((inst, "antimonotonicity", s, x, extra))
        if any(count(cols, n, (i,)) > (1 - theta) * n for i in x_items):
            strict_expected += 1
            if posp < apri:
                strict_seen += 1
            else:
                failures.append((inst, "no strict inclusion"))
    ok = record_acceptance(
        3, not failures and strict_expected > 0,
        f"100 instances, POSP within Apriori everywhere, strict on {strict_seen}/{strict_expected} "
        f"near-constant instances, lemma held" if not failures else f"violations {failures[:5]}",
    )
    assert ok


def _sn_oracle(rows, x, y, adjust, min_cell=5):
    """Stratified estimate by explicit per-stratum tallies over row tuples."""
    cells = {}
    for r in rows:
        key = tuple(r[a] for a in adjust)
        c = cells.setdefault(key, [0, 0, 0, 0])  # treated, treated&y, untreated, untreated&y
        if r[x]:
            c[0] += 1
            c[1] += r[y]
        else:
            c[2] += 1
            c[3] += r[y]
    n1 = sum(c[0] for c in cells.values())
    if n1 == 0 or sum(c[2] for c in cells.values()) == 0:
        return None
    num = kept = 0
    for c in cells.values():
        if c[0] >= min_cell and c[2] >= min_cell:
            num += c[0] * (c[1] / c[0] - c[3] / c[2])
            kept += c[0]
    return num / kept if kept else None


def _cc_rows(rows, x, y):
    t = [r for r in rows if r[x]]
    u = [r for r in rows if not r[x]]
    if not t or not u:
        return None
    return sum(r[y] for r in t) / len(t) - sum(r[y] for r in u) / len(u)


def _closed_rule_oracle(ds, theta, eta, estimator, posp_filter):
    """All (S, X) that are frequent and closed, enumerated without any pruning."""
    table = [tuple(int(b) for b in row) for row in ds.bits.tolist()]
    cols = columns_as_ints(table)
    n, y = ds.n, ds.outcome
    s_items = ds.with_role("subpopulation")
    x_items = ds.with_role("intervention")
    out = set()
    for s in subsets(s_items, len(s_items)):
        for x in subsets(x_items, len(x_items), 1):
            if not count(cols, n, s + x + (y,)) > theta * n:
                continue
            if posp_filter and not posp_ok(cols, n, s, x, theta):
                continue
            closed = True
            for member in x:
                cond = tuple(sorted(s + tuple(j for j in x if j != member)))
                rows = [r for r in table if all(r[c] for c in cond)]
                if estimator == "cc":
                    att = _cc_rows(rows, member, y)
                else:
                    # covariate roles come from the package classifier; the estimate does not
                    cls = classify(ds, member, y, cond, warn=False)
                    att = _sn_oracle(rows, member, y, cls.adjustment_set())
                if att is None or not abs(att) > eta:
                    closed = False
                    break
            if closed:
                out.add((s, x))
    return out


def _closedness_instance(rng):
    n = 600
    c1 = rng.random(n) < 0.4
    c2 = rng.random(n) < 0.5
    s = rng.random((n, 2)) < 0.6
    xs = rng.random((n, 3)) < np.clip(0.3 + 0.3 * c1[:, None] + rng.uniform(-0.1, 0.1, 3), 0, 1)
    py = 0.15 + 0.2 * c1 + 0.1 * c2 - xs @ rng.uniform(0.0, 0.15, 3) + 0.1 * s[:, 0]
    y = rng.random(n) < np.clip(py, 0.01, 0.99)
    bits = np.column_stack([s, xs, c1, c2, y])
    roles = ["subpopulation"] * 2 + ["intervention"] * 3 + ["covariate"] * 2 + ["outcome"]
    return Dataset([f"i{j}" for j in range(8)], roles, bits)


def test_criterion_4_closed_set_oracle_equivalence():
    rng = np.random.default_rng(77)
    mismatches = []
    total = 0
    instances = 10
    for inst in range(instances):
        ds = _closedness_instance(rng)
        theta = float(rng.uniform(0.01, 0.04))
        eta = float(rng.uniform(0.0, 0.04))
        for est in ("cc", "sn"):
            for mode in ("apriori", "posp"):
                cfg = MiningConfig(theta, eta, 2, 3, est, mode)
                got = {(r.s, r.x) for r in mine(ds, cfg).rules}
                want = _closed_rule_oracle(ds, theta, eta, est, mode == "posp")
                total += len(want)
                if got != want:
                    mismatches.append((inst, est, mode, sorted(got ^ want)))
    ok = record_acceptance(
        4, not mismatches,
        f"{instances} eight-item instances x (CC, SN) x (apriori, POSP): miner equals oracle, "
        f"{total} rules in all" if not mismatches else f"mismatches {mismatches[:3]}",
    )
    assert ok


def test_criterion_5_glm_numerics():
    rng = np.random.default_rng(5)
    fits = converged = 0
    worst = 0.0
    while fits < 1000:
        n = int(rng.integers(50, 400))
        k = int(rng.integers(1, 6))
        X = (rng.random((n, k)) < rng.uniform(0.2, 0.8, k)).astype(float)
        beta = rng.normal(0, 1, k + 1)
        y = rng.random(n) < 1 / (1 + np.exp(-(beta[0] + X @ beta[1:])))
        try:
            fit = fit_logistic(X, y)
        except CollinearDesign:
            continue
        fits += 1
        if not fit.converged:
            continue
        converged += 1
        score = np.hstack([np.ones((n, 1)), X]).T @ (y - fit.predict(X))
        worst = max(worst, float(np.max(np.abs(score))))
    score_ok = worst < 1e-8

    # saturated 2x2: slope is the log odds ratio
    x = np.array([1] * 40 + [0] * 60, float)
    y2 = np.array([1] * 30 + [0] * 10 + [1] * 20 + [0] * 40)
    slope_err = abs(fit_logistic(x[:, None], y2).coefficients[1] - np.log((30 * 40) / (10 * 20)))

    # saturated two-factor design reproduces its four cells
    a = rng.random(5000) < 0.4
    b = rng.random(5000) < 0.6
    y3 = rng.random(5000) < 0.2 + 0.3 * a - 0.1 * b + 0.2 * (a & b)
    D = np.column_stack([a, b, a & b]).astype(float)
    p = fit_logistic(D, y3).predict(D)
    cell_err = max(abs(p[(a == i) & (b == j)][0] - y3[(a == i) & (b == j)].mean())
                   for i in (0, 1) for j in (0, 1))
    ok = record_acceptance(
        5, score_ok and slope_err < 1e-6 and cell_err < 1e-6 and converged > 0,
        f"{converged}/{fits} random designs converged, max |score| {worst:.2e}; "
        f"log-OR error {slope_err:.1e}; cell error {cell_err:.1e}",
    )
    assert ok


def test_criterion_6_psm_balance_and_bootstrap_coverage():
    ds = generate(ScenarioSpec("III", 50_000, 6))
    ctx = make_context(ds, ds.index("X"))
    mt, mc = psm_matched_rows(ctx, rng_seed=6)
    z = ds.column(ds.index("Z"))
    imbalance = abs(z[mt].mean() - z[mc].mean())

    covered = 0
    reps = 50
    for k in range(reps):
        d = generate(ScenarioSpec("III", 5000, 1000 + k))
        c = make_context(d, d.index("X"), warn=False)
        b = bootstrap(c, "cm", replicates=500, seed=k)
        covered += b.ci_low <= -0.15 <= b.ci_high
    coverage = covered / reps
    ok = record_acceptance(
        6, imbalance < 0.02 and coverage >= 0.90,
        f"matched |dP(Z)| {imbalance:.4f} ({mt.size} pairs); CM bootstrap CI coverage {covered}/{reps}",
    )
    assert ok


def test_criterion_7_classifier_accuracy():
    hits = 0
    runs = 100
    for seed in range(runs):
        ds = generate(ScenarioSpec("V", 50_000, seed))
        c = classify(ds, ds.index("X"), ds.index("Y"), alpha=0.01)
        got = tuple(c.categories[ds.index(k)].value for k in ("Z", "U", "V"))
        hits += got == ("Z", "U", "V")
    ok = record_acceptance(7, hits >= 95, f"(Z, U, V) classified correctly in {hits}/{runs} runs")
    assert ok
