"""ATT estimators for a single binary intervention inside a subpopulation.

All estimators work on three aligned arrays restricted to the rows of the
estimation context: treatment ``t``, outcome ``y`` and the adjustment matrix
``W`` (confounder and direct-effect items). :func:`estimate_arrays` is the
array-level entry point shared by the context API, the bootstrap and the miner.

Risk differences are reported on the probability scale; a negative ATT means
the intervention lowers the outcome rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .classify import CovariateClassification, classify
from .data import Dataset, itemset
from .errors import CollinearDesign
from .glm import fit_logistic

METHODS = ("conf", "cc", "da", "cm", "psm", "sn")

DEFAULT_CALIPER = 0.1
DEFAULT_MIN_CELL = 5


@dataclass(frozen=True)
class AttEstimate:
    method: str
    att: float
    n_treated: int
    n_untreated: int
    estimable: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "att": self.att if self.estimable else None,
            "n_treated": self.n_treated,
            "n_untreated": self.n_untreated,
            "estimable": self.estimable,
            "diagnostics": self.diagnostics,
        }


def _inestimable(method, t, reason, **diag) -> AttEstimate:
    n1 = int(np.count_nonzero(t))
    return AttEstimate(method, float("nan"), n1, int(t.size - n1), False,
                       {"reason": reason, **diag})


@dataclass(frozen=True)
class EstimationContext:
    """Where an ATT is evaluated: rows supporting ``s`` and ``given``, treatment ``x``.

    ``given`` holds the other members of an intervention set, fixed to true
    while the effect of ``x`` is measured.
    """

    dataset: Dataset
    x: int
    y: int
    s: tuple = ()
    given: tuple = ()
    classification: CovariateClassification | None = None

    @cached_property
    def rows(self) -> np.ndarray:
        return self.dataset.mask(self.s + self.given)

    @property
    def adjustment_items(self) -> tuple:
        if self.classification is None:
            return ()
        return self.classification.adjustment_set()

    def arrays(self):
        """``(t, y, W)`` restricted to the context rows."""
        bits = self.dataset.bits[self.rows]
        W = bits[:, list(self.adjustment_items)]
        return bits[:, self.x], bits[:, self.y], W


def make_context(
    ds: Dataset,
    x: int,
    y: int | None = None,
    s: Iterable[int] = (),
    given: Iterable[int] = (),
    classification: CovariateClassification | None = None,
    alpha: float = 0.05,
    conditioning: str = "adjusted",
    warn: bool = True,
) -> EstimationContext:
    """Build a context, classifying covariates from the data unless a classification is supplied."""
    y = ds.outcome if y is None else int(y)
    s = itemset(s)
    given = itemset(given)
    x = int(x)
    if x in s or x in given or y in s or y in given or x == y:
        raise ValueError("intervention and outcome must not appear in the subpopulation")
    if classification is None:
        classification = classify(ds, x, y, s + given, alpha=alpha,
                                  conditioning=conditioning, warn=warn)
    return EstimationContext(ds, x, y, s, given, classification)


def _nonconstant(W: np.ndarray, rows=None) -> np.ndarray:
    sub = W if rows is None else W[rows]
    if sub.shape[0] == 0:
        return np.zeros(W.shape[1], dtype=bool)
    return sub.any(axis=0) & ~sub.all(axis=0)


def _conf(t, y):
    n1 = int(np.count_nonzero(t))
    if n1 == 0:
        return _inestimable("conf", t, "no treated rows")
    return AttEstimate("conf", float(np.count_nonzero(y & t) / n1), n1, t.size - n1, True)


def _cc(t, y):
    n1 = int(np.count_nonzero(t))
    n0 = t.size - n1
    if n1 == 0 or n0 == 0:
        return _inestimable("cc", t, "empty treatment arm")
    att = np.count_nonzero(y & t) / n1 - np.count_nonzero(y & ~t) / n0
    return AttEstimate("cc", float(att), n1, n0, True)


def _da(t, y, W):
    n1 = int(np.count_nonzero(t))
    n0 = t.size - n1
    if n1 == 0 or n0 == 0:
        return _inestimable("da", t, "empty treatment arm")
    keep = _nonconstant(W)
    Wk = W[:, keep].astype(float)
    try:
        fit = fit_logistic(np.column_stack([Wk, t]), y)
    except CollinearDesign as exc:
        return _inestimable("da", t, f"collinear design: {exc}")
    Wt = Wk[t]
    ones = np.ones((n1, 1))
    p1 = fit.predict(np.hstack([Wt, ones]))
    p0 = fit.predict(np.hstack([Wt, 0 * ones]))
    att = float(np.mean(p1 - p0))
    diag = {"converged": fit.converged, "iterations": fit.iterations,
            "predictors": int(keep.sum())}
    return AttEstimate("da", att, n1, n0, True, diag)


def _cm(t, y, W):
    n1 = int(np.count_nonzero(t))
    n0 = t.size - n1
    if n1 == 0 or n0 == 0:
        return _inestimable("cm", t, "empty treatment arm")
    keep = _nonconstant(W)
    bad = keep & ~_nonconstant(W, ~t)
    if bad.any():
        return _inestimable("cm", t, "predictor constant among untreated",
                            constant_columns=np.flatnonzero(bad).tolist())
    Wk = W[:, keep].astype(float)
    try:
        fit = fit_logistic(Wk[~t], y[~t])
    except CollinearDesign as exc:
        return _inestimable("cm", t, f"collinear design among untreated: {exc}")
    y0_hat = fit.predict(Wk[t])
    att = float(np.count_nonzero(y & t) / n1 - y0_hat.mean())
    diag = {"converged": fit.converged, "iterations": fit.iterations,
            "predictors": int(keep.sum())}
    return AttEstimate("cm", att, n1, n0, True, diag)


class _Available:
    """Nearest still-available slot to the left/right of a position (union-find)."""

    def __init__(self, size):
        self.right = list(range(size + 1))  # sentinel at size
        self.left = list(range(size + 1))   # slot i+1 stands for position i; 0 is sentinel
        self.size = size

    def _find(self, parent, i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def next_right(self, pos):
        r = self._find(self.right, pos)
        return None if r == self.size else r

    def next_left(self, pos):
        if pos < 0:
            return None
        r = self._find(self.left, pos + 1)
        return None if r == 0 else r - 1

    def remove(self, pos):
        self.right[pos] = pos + 1
        self.left[pos + 1] = pos


def greedy_match(score: np.ndarray, t: np.ndarray, width: float):
    """Greedy 1:1 nearest-neighbour matching without replacement.

    Treated rows are visited in descending ``score`` (ties: lower row index
    first); each takes the closest unmatched untreated row whose score differs
    by at most ``width``. Among equally close candidates the lowest row index
    wins.

    Returns
    -------
    treated, control : ndarray of int
        Row positions of the matched pairs, aligned.
    """
    score = np.asarray(score, dtype=float)
    ti = np.flatnonzero(t)
    ci = np.flatnonzero(~t)
    order = ti[np.argsort(-score[ti], kind="stable")]
    if ci.size == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    values, inv = np.unique(score[ci], return_inverse=True)
    by_value = np.argsort(inv, kind="stable")
    starts = np.searchsorted(inv[by_value], np.arange(values.size))
    ends = np.append(starts[1:], ci.size)
    heads = starts.copy()
    avail = _Available(values.size)
    vals = values.tolist()
    pos_all = np.searchsorted(values, score[order]).tolist()

    out_t, out_c = [], []
    for r, pos, v in zip(order.tolist(), pos_all, score[order].tolist()):
        best = None
        for g in (avail.next_left(pos - 1), avail.next_right(pos)):
            if g is None:
                continue
            d = abs(vals[g] - v)
            row = ci[by_value[heads[g]]]
            if best is None or d < best[0] or (d == best[0] and row < best[2]):
                best = (d, g, row)
        if best is None:
            break
        d, g, row = best
        if d > width:
            continue
        out_t.append(r)
        out_c.append(int(row))
        heads[g] += 1
        if heads[g] == ends[g]:
            avail.remove(g)
    return np.array(out_t, dtype=int), np.array(out_c, dtype=int)


def propensity_match(t, W, caliper=DEFAULT_CALIPER, rng=None):
    """Fit the propensity model and match; returns ``(treated, control, info)``.

    The propensity model is a logistic regression of ``t`` on the non-constant
    columns of ``W``; matching uses its linear predictor with tolerance
    ``caliper * SD(linear predictor)``. With no usable predictor the
    propensity is degenerate and arms are paired uniformly at random.
    """
    t = np.asarray(t, dtype=bool)
    keep = _nonconstant(W)
    info = {"degenerate_propensity": False}
    if not keep.any():
        rng = np.random.default_rng(rng)
        ti = rng.permutation(np.flatnonzero(t))
        ci = rng.permutation(np.flatnonzero(~t))
        k = min(ti.size, ci.size)
        info["degenerate_propensity"] = True
        return ti[:k], ci[:k], info
    fit = fit_logistic(W[:, keep].astype(float), t)
    lp = fit.linear_predictor(W[:, keep].astype(float))
    width = caliper * float(np.std(lp))
    info.update(converged=fit.converged, iterations=fit.iterations, caliper_width=width)
    mt, mc = greedy_match(lp, t, width)
    return mt, mc, info


def _psm(t, y, W, caliper, rng):
    n1 = int(np.count_nonzero(t))
    n0 = t.size - n1
    if n1 == 0 or n0 == 0:
        return _inestimable("psm", t, "empty treatment arm")
    try:
        mt, mc, info = propensity_match(t, W, caliper, rng)
    except CollinearDesign as exc:
        return _inestimable("psm", t, f"collinear propensity design: {exc}")
    info["pairs"] = int(mt.size)
    info["unmatched_treated"] = n1 - int(mt.size)
    if mt.size == 0:
        return AttEstimate("psm", float("nan"), n1, n0, False,
                           {"reason": "no pairs within caliper", **info})
    att = float(y[mt].mean() - y[mc].mean())
    return AttEstimate("psm", att, n1, n0, True, info)


def _sn(t, y, W, min_cell):
    n1 = int(np.count_nonzero(t))
    n0 = t.size - n1
    if n1 == 0 or n0 == 0:
        return _inestimable("sn", t, "empty treatment arm")
    if W.shape[1]:
        _, codes = np.unique(W, axis=0, return_inverse=True)
        codes = codes.ravel()
    else:
        codes = np.zeros(t.size, dtype=np.int64)
    k = int(codes.max()) + 1
    c1 = np.bincount(codes[t], minlength=k)
    c0 = np.bincount(codes[~t], minlength=k)
    y1 = np.bincount(codes[t], weights=y[t], minlength=k)
    y0 = np.bincount(codes[~t], weights=y[~t], minlength=k)
    ok = (c1 >= min_cell) & (c0 >= min_cell)
    kept = c1[ok].sum()
    diag = {
        "strata": k,
        "strata_used": int(ok.sum()),
        "dropped_treated_mass": float(1 - kept / n1),
    }
    if kept == 0:
        return AttEstimate("sn", float("nan"), n1, n0, False,
                           {"reason": "every stratum below min_cell", **diag})
    diff = y1[ok] / c1[ok] - y0[ok] / c0[ok]
    att = float(np.sum(c1[ok] * diff) / kept)
    return AttEstimate("sn", att, n1, n0, True, diag)


def estimate_arrays(method, t, y, W=None, *, caliper=DEFAULT_CALIPER,
                    min_cell=DEFAULT_MIN_CELL, rng=None) -> AttEstimate:
    """Run one estimator on aligned arrays (treatment, outcome, adjustment matrix)."""
    t = np.asarray(t, dtype=bool)
    y = np.asarray(y, dtype=bool)
    W = np.zeros((t.size, 0), dtype=bool) if W is None else np.asarray(W, dtype=bool).reshape(t.size, -1)
    if method == "conf":
        return _conf(t, y)
    if method == "cc":
        return _cc(t, y)
    if method == "da":
        return _da(t, y, W)
    if method == "cm":
        return _cm(t, y, W)
    if method == "psm":
        return _psm(t, y, W, caliper, rng)
    if method == "sn":
        return _sn(t, y, W, min_cell)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def estimate(ctx: EstimationContext, method: str, *, caliper=DEFAULT_CALIPER,
             min_cell=DEFAULT_MIN_CELL, seed=None) -> AttEstimate:
    t, y, W = ctx.arrays()
    return estimate_arrays(method, t, y, W, caliper=caliper, min_cell=min_cell,
                           rng=np.random.default_rng(seed))


def att_conf(ctx: EstimationContext) -> AttEstimate:
    """Rule confidence ``P(Y | x, S, given)``; not a causal estimate."""
    return estimate(ctx, "conf")


def att_cc(ctx: EstimationContext) -> AttEstimate:
    """Counterfactual confidence: ``P(Y | treated) - P(Y | untreated)``."""
    return estimate(ctx, "cc")


def att_da(ctx: EstimationContext) -> AttEstimate:
    """Direct adjustment with a logistic outcome model on the adjustment set plus ``x``.

    The ATT is the mean, over treated rows, of the predicted outcome with
    ``x`` set to 1 minus that with ``x`` set to 0.
    """
    return estimate(ctx, "da")


def att_cm(ctx: EstimationContext) -> AttEstimate:
    """Counterfactual model: untreated-only outcome model predicts ``Y0`` for the treated."""
    return estimate(ctx, "cm")


def att_psm(ctx: EstimationContext, caliper: float = DEFAULT_CALIPER, rng_seed=None) -> AttEstimate:
    return estimate(ctx, "psm", caliper=caliper, seed=rng_seed)


def att_sn(ctx: EstimationContext, min_cell: int = DEFAULT_MIN_CELL) -> AttEstimate:
    """Stratified non-parametric estimate over joint levels of the adjustment set.

    Strata with fewer than ``min_cell`` rows in either arm are dropped and the
    remaining treated weights renormalized; the lost share of treated rows is
    ``diagnostics["dropped_treated_mass"]``.
    """
    return estimate(ctx, "sn", min_cell=min_cell)


def psm_matched_rows(ctx: EstimationContext, caliper: float = DEFAULT_CALIPER, rng_seed=None):
    """Dataset row indices of the matched treated and control rows."""
    t, _, W = ctx.arrays()
    mt, mc, _ = propensity_match(t, W, caliper, np.random.default_rng(rng_seed))
    idx = np.flatnonzero(ctx.rows)
    return idx[mt], idx[mc]
