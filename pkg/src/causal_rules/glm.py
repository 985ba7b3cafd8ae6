"""Logistic regression by iteratively reweighted least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import CollinearDesign


@dataclass(frozen=True)
class GlmFit:
    """Result of :func:`fit_logistic`.

    ``coefficients[0]`` is the intercept; the rest follow the design columns.
    """

    coefficients: np.ndarray
    converged: bool
    iterations: int
    max_abs_score: float
    link: str = "logit"

    def linear_predictor(self, design) -> np.ndarray:
        design = np.asarray(design, dtype=float).reshape(len(design), -1)
        return self.coefficients[0] + design @ self.coefficients[1:]

    def predict(self, design) -> np.ndarray:
        return expit(self.linear_predictor(design))


def _check_design(X: np.ndarray) -> None:
    n, p = X.shape
    if p == 1:
        return
    cols = X[:, 1:]
    const = np.all(cols == cols[:1], axis=0)
    if const.any():
        raise CollinearDesign(
            f"design column(s) {np.flatnonzero(const).tolist()} are constant (collinear with intercept)"
        )
    for j in range(cols.shape[1]):
        for k in range(j + 1, cols.shape[1]):
            if np.array_equal(cols[:, j], cols[:, k]):
                raise CollinearDesign(f"design columns {j} and {k} are identical")
    if np.linalg.matrix_rank(X) < p:
        raise CollinearDesign("design matrix is rank deficient")


def _loglik(eta, y):
    # sum y*eta - log(1+exp(eta)), stable for large |eta|
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(design, target, tol: float = 1e-8, max_iter: int = 50, ridge: float = 1e-6) -> GlmFit:
    """Fit ``P(target=1) = expit(b0 + design @ b)`` by IRLS.

    Parameters
    ----------
    design : array_like, shape (n, k)
        Predictor columns, *without* the intercept (it is prepended).
        ``k`` may be zero.
    target : array_like of {0, 1}, shape (n,)
    tol : float
        Convergence threshold on the infinity norm of the score vector
        ``X'(y - p)``.
    max_iter : int
        Newton iterations before giving up; the last iterate is returned with
        ``converged=False``.
    ridge : float
        Diagonal damping added to the information matrix. It only affects the
        step, not the fixed point, so a converged fit is the unpenalized MLE.

    Raises
    ------
    CollinearDesign
        If a predictor is constant or duplicates another, or the design is
        otherwise rank deficient.
    """
    y = np.asarray(target, dtype=float).ravel()
    n = y.shape[0]
    D = np.asarray(design, dtype=float)
    if D.size == 0:
        D = D.reshape(n, 0)
    D = D.reshape(n, -1)
    if D.shape[0] != n:
        raise ValueError(f"design has {D.shape[0]} rows, target has {n}")
    if n == 0:
        raise ValueError("cannot fit a model to zero rows")
    X = np.hstack([np.ones((n, 1)), D])
    _check_design(X)
    p = X.shape[1]

    beta = np.zeros(p)
    ybar = np.clip(y.mean(), 1e-4, 1 - 1e-4)
    beta[0] = np.log(ybar / (1 - ybar))
    eta = X @ beta
    ll = _loglik(eta, y)
    damp = ridge * np.eye(p)
    score = X.T @ (y - expit(eta))
    max_score = float(np.max(np.abs(score)))
    it = 0
    while max_score >= tol and it < max_iter:
        it += 1
        mu = expit(eta)
        w = mu * (1 - mu)
        info = (X.T * w) @ X + damp
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, score, rcond=None)[0]
        # step halving keeps the log-likelihood monotone
        t = 1.0
        for _ in range(30):
            cand = beta + t * step
            eta_c = X @ cand
            ll_c = _loglik(eta_c, y)
            if ll_c >= ll - 1e-12 * max(1.0, abs(ll)):
                break
            t *= 0.5
        beta, eta, ll = cand, eta_c, ll_c
        score = X.T @ (y - expit(eta))
        max_score = float(np.max(np.abs(score)))
    return GlmFit(
        coefficients=beta,
        converged=max_score < tol,
        iterations=it,
        max_abs_score=max_score,
    )
