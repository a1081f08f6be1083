"""Kernel ridge regression and minimum-norm interpolation.

``fit_krr`` solves ``(K_XX + n lambda I) alpha = Y`` and predicts with
``f(x) = sum_i alpha_i k(x, x_i)``; ``fit_interpolant`` is the ``lambda = 0``
limit, defined only when the Gram matrix is numerically invertible. The two
sit on the frequentist side of the GP correspondence: with
``noise = n * lambda`` the KRR prediction coincides with the GP posterior
mean, which the verification suites check to 1e-8.

Predictions can optionally be clipped to ``[-M, M]``; clipping is applied at
prediction time and never alters the fitted coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError
from .kernels import Dataset, Kernel, as_point, as_points, gram
from .linalg import cholesky_with_jitter, require_invertible, solve_cholesky

__all__ = [
    "KRREstimator",
    "fit_krr",
    "fit_interpolant",
    "predict",
    "predict_at",
    "rkhs_norm",
    "with_clip",
]


@dataclass(frozen=True, eq=False)
class KRREstimator:
    """A fitted kernel ridge regressor / interpolant."""

    kernel: Kernel
    X: np.ndarray
    coefficients: np.ndarray
    regularization: float
    clip_bound: float | None = None


def fit_krr(kernel: Kernel, data: Dataset, lam: float) -> KRREstimator:
    """Fit kernel ridge regression with regularization ``lam > 0``.

    The system ``K_XX + n lam I`` is strictly positive definite, so this
    never fails on rank-deficient Gram matrices (duplicate inputs are
    allowed).
    """
    if not np.isfinite(lam) or lam <= 0:
        raise InputError("regularization lambda must be positive and finite")
    if data.n < 1:
        raise InputError("fitting requires at least one observation")
    if data.Y is None:
        raise InputError("fitting requires a dataset with outputs")
    K = gram(kernel, data.X, data.X)
    system = K + data.n * lam * np.eye(data.n)
    L, _ = cholesky_with_jitter(system, name="K_XX + n lambda")
    alpha = solve_cholesky(L, data.Y)
    return KRREstimator(
        kernel=kernel,
        X=data.X,
        coefficients=alpha,
        regularization=float(lam),
    )


def fit_interpolant(kernel: Kernel, data: Dataset) -> KRREstimator:
    """Fit the minimum-RKHS-norm interpolant of the data.

    Requires a numerically invertible Gram matrix; duplicated inputs raise
    :class:`~kernelbridge.errors.NumericalError`.
    """
    if data.n < 1:
        raise InputError("interpolation requires at least one observation")
    if data.Y is None:
        raise InputError("interpolation requires a dataset with outputs")
    K = gram(kernel, data.X, data.X)
    require_invertible(K, name="K_XX")
    L, _ = cholesky_with_jitter(K, name="K_XX")
    alpha = solve_cholesky(L, data.Y)
    return KRREstimator(
        kernel=kernel,
        X=data.X,
        coefficients=alpha,
        regularization=0.0,
    )


def with_clip(estimator: KRREstimator, bound: float) -> KRREstimator:
    """Return a copy whose predictions are clipped to ``[-bound, bound]``."""
    if not np.isfinite(bound) or bound <= 0:
        raise InputError("clip bound must be positive and finite")
    return replace(estimator, clip_bound=float(bound))


def predict_at(estimator: KRREstimator, points) -> np.ndarray:
    """Predict at every row of a point set."""
    P = as_points(points)
    values = gram(estimator.kernel, P, estimator.X) @ estimator.coefficients
    if estimator.clip_bound is not None:
        values = np.clip(values, -estimator.clip_bound, estimator.clip_bound)
    return values


def predict(estimator: KRREstimator, x) -> float:
    """Predict at a single point."""
    return float(predict_at(estimator, as_point(x)[None, :])[0])


def rkhs_norm(estimator: KRREstimator) -> float:
    """RKHS norm of the fitted function, ``sqrt(alpha^T K_XX alpha)``."""
    K = gram(estimator.kernel, estimator.X, estimator.X)
    value = float(estimator.coefficients @ K @ estimator.coefficients)
    return math.sqrt(max(value, 0.0))
