import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causal_rules import CollinearDesign, fit_logistic


def test_intercept_only_is_logit_of_mean():
    y = np.array([1] * 30 + [0] * 70)
    fit = fit_logistic(np.empty((100, 0)), y)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(np.log(0.3 / 0.7), abs=1e-10)


def test_saturated_two_by_two_slope_is_log_odds_ratio():
    # x=1: 30 events / 10 non-events; x=0: 20 events / 40 non-events
    x = np.array([1] * 40 + [0] * 60)
    y = np.array([1] * 30 + [0] * 10 + [1] * 20 + [0] * 40)
    log_or = np.log((30 * 40) / (10 * 20))
    fit = fit_logistic(x[:, None], y)
    assert fit.converged and fit.max_abs_score < 1e-8
    assert fit.coefficients[1] == pytest.approx(log_or, abs=1e-6)
    assert fit.coefficients[0] == pytest.approx(np.log(20 / 40), abs=1e-6)


def test_saturated_design_reproduces_cell_frequencies():
    rng = np.random.default_rng(5)
    a = rng.random(4000) < 0.4
    b = rng.random(4000) < 0.6
    y = rng.random(4000) < 0.2 + 0.3 * a - 0.1 * b + 0.2 * (a & b)
    X = np.column_stack([a, b, a & b]).astype(float)
    fit = fit_logistic(X, y)
    p = fit.predict(X)
    for ca in (0, 1):
        for cb in (0, 1):
            cell = (a == ca) & (b == cb)
            assert p[cell][0] == pytest.approx(y[cell].mean(), abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_converged_fit_has_small_score(seed):
    rng = np.random.default_rng(seed)
    n, k = 300, 3
    X = (rng.random((n, k)) < 0.5).astype(float)
    beta = rng.normal(0, 1, k + 1)
    y = rng.random(n) < 1 / (1 + np.exp(-(beta[0] + X @ beta[1:])))
    try:
        fit = fit_logistic(X, y)
    except CollinearDesign:
        return
    if fit.converged:
        mu = fit.predict(X)
        score = np.hstack([np.ones((n, 1)), X]).T @ (y - mu)
        assert np.max(np.abs(score)) < 1e-8


def test_collinear_designs_rejected():
    x = np.array([0, 1, 0, 1, 1], dtype=float)
    with pytest.raises(CollinearDesign):
        fit_logistic(np.column_stack([x, x]), [0, 1, 1, 0, 1])
    with pytest.raises(CollinearDesign):
        fit_logistic(np.ones((5, 1)), [0, 1, 1, 0, 1])
    with pytest.raises(CollinearDesign):
        fit_logistic(np.column_stack([x, 1 - x]), [0, 1, 1, 0, 1])


def test_non_convergence_is_flagged_not_raised():
    x = np.array([0, 0, 1, 1, 0, 1], dtype=float)
    y = np.array([0, 1, 1, 0, 1, 0])
    fit = fit_logistic(x[:, None], y, max_iter=0)
    assert not fit.converged and fit.iterations == 0


def test_quasi_separation_survives():
    # y is 0 whenever x is 0: the MLE slope is infinite
    x = np.array([0] * 50 + [1] * 50, dtype=float)
    y = np.array([0] * 50 + [1] * 20 + [0] * 30)
    fit = fit_logistic(x[:, None], y)
    assert np.all(np.isfinite(fit.coefficients))
    p = fit.predict(np.array([[0.0], [1.0]]))
    assert p[0] < 1e-6
    assert p[1] == pytest.approx(0.4, abs=1e-6)
