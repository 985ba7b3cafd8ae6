"""Data-driven assignment of covariates to causal-graph categories.

Relative to an intervention ``x`` and outcome ``y`` inside a subpopulation,
every covariate ``A`` gets two tests:

* treatment association: Pearson chi-square (no continuity correction) of
  ``A`` against ``x``;
* outcome association given treatment: Cochran-Mantel-Haenszel test of ``A``
  against ``y`` stratified by ``x`` and, with ``conditioning="adjusted"``, by
  the other covariates that were themselves associated with ``x``.

Both significant gives a confounder (Z), treatment-only an indirect-effect
variable (U), outcome-only a direct-effect variable (V), neither an ignorable
one (O).

Stratifying on ``x`` alone makes an indirect-effect item look like a
confounder whenever a real confounder also drives ``x``: ``x`` is a common
effect of both, so holding it fixed couples them. The adjusted mode also holds
the other treatment-associated items fixed, which blocks that path.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.stats import chi2

from .data import Dataset, ItemRole, itemset


class Category(str, enum.Enum):
    U_INDIRECT = "U"
    Z_CONFOUNDER = "Z"
    V_DIRECT = "V"
    O_IGNORABLE = "O"


@dataclass(frozen=True)
class CovariateClassification:
    categories: dict
    p_assoc_x: dict
    p_assoc_y_given_x: dict
    alpha: float
    degenerate: frozenset = field(default_factory=frozenset)

    def items(self, *cats) -> tuple:
        cats = {Category(c) for c in cats}
        return tuple(sorted(i for i, c in self.categories.items() if c in cats))

    def adjustment_set(self) -> tuple:
        """Items an estimator must adjust for: confounders and direct-effect items."""
        return self.items(Category.Z_CONFOUNDER, Category.V_DIRECT)

    def report(self, names) -> dict:
        return {
            names[i]: {
                "category": c.value,
                "p_assoc_x": self.p_assoc_x[i],
                "p_assoc_y_given_x": self.p_assoc_y_given_x[i],
                "degenerate": i in self.degenerate,
            }
            for i, c in sorted(self.categories.items())
        }

    @classmethod
    def from_categories(cls, mapping: dict, alpha: float = float("nan")):
        """Build a classification from known categories (no tests run)."""
        cats = {int(i): Category(c) for i, c in mapping.items()}
        nan = {i: float("nan") for i in cats}
        return cls(cats, nan, dict(nan), alpha)


def chi2_2x2(a: np.ndarray, b: np.ndarray) -> float:
    """P-value of Pearson's chi-square for two boolean vectors, no Yates correction.

    Returns ``nan`` if a margin of the table is empty.
    """
    n = a.size
    n11 = np.count_nonzero(a & b)
    na = np.count_nonzero(a)
    nb = np.count_nonzero(b)
    if na in (0, n) or nb in (0, n):
        return float("nan")
    # closed form of sum (O-E)^2/E for a 2x2 table
    stat = n * float(n * n11 - na * nb) ** 2 / (float(na) * (n - na) * nb * (n - nb))
    return float(chi2.sf(stat, 1))


def cmh_test(a: np.ndarray, b: np.ndarray, strata: np.ndarray) -> float:
    """P-value of the Cochran-Mantel-Haenszel test of ``a`` vs ``b`` across strata.

    ``strata`` holds an integer label per row. No continuity correction.
    Returns ``nan`` when the pooled variance is zero (no stratum carries
    information).
    """
    labels, inv = np.unique(strata, return_inverse=True)
    k = labels.size
    nk = np.bincount(inv, minlength=k).astype(float)
    n11 = np.bincount(inv, weights=(a & b), minlength=k)
    na = np.bincount(inv, weights=a, minlength=k)
    nb = np.bincount(inv, weights=b, minlength=k)
    ok = nk > 1
    nk, n11, na, nb = nk[ok], n11[ok], na[ok], nb[ok]
    expected = na * nb / nk
    var = na * (nk - na) * nb * (nk - nb) / (nk**2 * (nk - 1))
    v = var.sum()
    if v <= 0:
        return float("nan")
    stat = (n11.sum() - expected.sum()) ** 2 / v
    return float(chi2.sf(stat, 1))


def _strata_codes(cols: np.ndarray) -> np.ndarray:
    if cols.shape[1] == 0:
        return np.zeros(cols.shape[0], dtype=np.int64)
    if cols.shape[1] < 62:
        return cols.astype(np.int64) @ (np.int64(1) << np.arange(cols.shape[1], dtype=np.int64))
    return np.unique(cols, axis=0, return_inverse=True)[1].ravel()


def classify(
    ds: Dataset,
    x: int,
    y: int,
    s: Iterable[int] = (),
    alpha: float = 0.05,
    covariates: Iterable[int] | None = None,
    conditioning: str = "adjusted",
    warn: bool = True,
) -> CovariateClassification:
    """Classify covariates relative to intervention ``x`` and outcome ``y``.

    Only rows supporting ``s`` are used. ``covariates`` defaults to every
    item with the covariate role that is not in ``s``. ``conditioning`` is
    ``"adjusted"`` (default) or ``"treatment"`` (stratify the outcome test on
    ``x`` only).

    An item that is constant in the subpopulation cannot be tested; it is
    classified O and listed in ``degenerate`` (with a ``RuntimeWarning``
    unless ``warn`` is false).
    """
    if conditioning not in ("adjusted", "treatment"):
        raise ValueError(f"unknown conditioning mode {conditioning!r}")
    s = itemset(s)
    x, y = int(x), int(y)
    if covariates is None:
        covariates = [i for i in ds.with_role(ItemRole.COVARIATE) if i not in s]
    excluded = set(s) | {x, y}
    covariates = [i for i in itemset(covariates) if i not in excluded]

    rows = ds.mask(s)
    bits = ds.bits[rows]
    xv = bits[:, x]
    yv = bits[:, y]

    p_x: dict = {}
    degenerate = set()
    for a in covariates:
        av = bits[:, a]
        if av.all() or not av.any():
            degenerate.add(a)
            p_x[a] = float("nan")
            continue
        p_x[a] = chi2_2x2(av, xv)

    x_assoc = [a for a in covariates if a not in degenerate and p_x[a] < alpha]
    p_y: dict = {}
    for a in covariates:
        if a in degenerate:
            p_y[a] = float("nan")
            continue
        if conditioning == "adjusted":
            others = [b for b in x_assoc if b != a]
            codes = _strata_codes(np.column_stack([xv] + [bits[:, b] for b in others]))
        else:
            codes = xv.astype(np.int64)
        p_y[a] = cmh_test(bits[:, a], yv, codes)

    cats = {}
    for a in covariates:
        if a in degenerate:
            cats[a] = Category.O_IGNORABLE
            continue
        sig_x = p_x[a] < alpha
        sig_y = p_y[a] < alpha  # nan compares False
        if sig_x and sig_y:
            cats[a] = Category.Z_CONFOUNDER
        elif sig_x:
            cats[a] = Category.U_INDIRECT
        elif sig_y:
            cats[a] = Category.V_DIRECT
        else:
            cats[a] = Category.O_IGNORABLE
    if degenerate and warn:
        warnings.warn(
            f"items {sorted(ds.names[i] for i in degenerate)} are constant in the "
            "subpopulation; classified O",
            RuntimeWarning,
            stacklevel=2,
        )
    return CovariateClassification(cats, p_x, p_y, alpha, frozenset(degenerate))
