"""Gaussian-process priors, sampling, and posterior conditioning.

The posterior object stores the lower Cholesky factor of
``K_XX + noise * I`` and the residual weights
``(K_XX + noise * I)^{-1} (Y - m_X)``; every query is a pair of kernel
evaluations plus triangular solves against that factor.

With zero noise the Gram matrix must pass the numerical invertibility gate
(see :mod:`kernelbridge.linalg`): conditioning on duplicated inputs raises
:class:`~kernelbridge.errors.NumericalError` instead of silently
regularizing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .kernels import Dataset, Kernel, as_point, as_points, gram
from .linalg import cholesky_with_jitter, require_invertible, solve_cholesky

__all__ = [
    "GPPrior",
    "GPPosterior",
    "sample_prior",
    "condition",
    "posterior_mean",
    "posterior_cov",
    "posterior_cov_raw",
    "posterior_mean_at",
    "posterior_variance_at",
]


@dataclass(frozen=True, eq=False)
class GPPrior:
    """A GP prior: a kernel plus a mean function (default zero).

    The mean is a callable taking a d-vector and returning a float; ``None``
    means the zero function.
    """

    kernel: Kernel
    mean: Callable[[np.ndarray], float] | None = None

    def mean_at(self, points) -> np.ndarray:
        """Evaluate the prior mean at every row of a point set."""
        P = as_points(points)
        if self.mean is None:
            return np.zeros(P.shape[0])
        values = np.array([float(self.mean(row)) for row in P])
        if not np.all(np.isfinite(values)):
            raise InputError("prior mean function returned a non-finite value")
        return values


@dataclass(frozen=True, eq=False)
class GPPosterior:
    """A conditioned GP, stored in factorized form.

    ``cholesky_factor @ cholesky_factor.T`` reconstructs
    ``K_XX + noise_variance * I`` (plus any jitter that was needed), and
    ``residual_weights`` solves that system against ``Y - m_X``.
    """

    prior: GPPrior
    X: np.ndarray
    cholesky_factor: np.ndarray
    residual_weights: np.ndarray
    noise_variance: float


def sample_prior(prior: GPPrior, X, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` joint samples of the prior at the rows of ``X``.

    Each returned row is ``m_X + L u`` with ``u`` standard normal and ``L``
    the (jittered, if necessary) lower Cholesky factor of the Gram matrix.
    Deterministic for a fixed seed.
    """
    P = as_points(X)
    if not isinstance(count, (int, np.integer)) or isinstance(count, bool):
        raise InputError("sample count must be an integer")
    if count < 0:
        raise InputError("sample count must be nonnegative")
    K = gram(prior.kernel, P, P)
    L, _ = cholesky_with_jitter(K, name="K_XX")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((int(count), P.shape[0]))
    return prior.mean_at(P)[None, :] + u @ L.T


def condition(prior: GPPrior, data: Dataset, noise_variance: float) -> GPPosterior:
    """Condition a GP prior on observed data.

    The posterior mean and covariance are

    ``m(x) + k_xX (K_XX + s2 I)^{-1} (Y - m_X)`` and
    ``k(x, x') - k_xX (K_XX + s2 I)^{-1} k_Xx'``.

    With ``noise_variance == 0`` the Gram matrix must be numerically
    invertible. An empty dataset returns a posterior that reproduces the
    prior exactly.
    """
    if not np.isfinite(noise_variance) or noise_variance < 0:
        raise InputError("noise variance must be nonnegative and finite")
    if data.n == 0:
        empty = np.zeros((0, 0))
        return GPPosterior(
            prior=prior,
            X=np.zeros((0, max(data.d, 1))),
            cholesky_factor=empty,
            residual_weights=np.zeros(0),
            noise_variance=float(noise_variance),
        )
    if data.Y is None:
        raise InputError("conditioning requires a dataset with outputs")
    K = gram(prior.kernel, data.X, data.X)
    if noise_variance == 0.0:
        require_invertible(K, name="K_XX")
        system = K
    else:
        system = K + noise_variance * np.eye(data.n)
    L, _ = cholesky_with_jitter(system, name="K_XX + noise")
    residual = data.Y - prior.mean_at(data.X)
    weights = solve_cholesky(L, residual)
    return GPPosterior(
        prior=prior,
        X=data.X,
        cholesky_factor=L,
        residual_weights=weights,
        noise_variance=float(noise_variance),
    )


def _cross(post: GPPosterior, points: np.ndarray) -> np.ndarray:
    """Kernel matrix between query points and the training inputs."""
    return gram(post.prior.kernel, points, post.X)


def posterior_mean(post: GPPosterior, x) -> float:
    """Posterior mean at a single point."""
    return float(posterior_mean_at(post, as_point(x)[None, :])[0])


def posterior_mean_at(post: GPPosterior, points) -> np.ndarray:
    """Posterior mean at every row of a point set."""
    P = as_points(points)
    base = post.prior.mean_at(P)
    if post.X.shape[0] == 0:
        return base
    return base + _cross(post, P) @ post.residual_weights


def posterior_cov_raw(post: GPPosterior, x, y) -> float:
    """Posterior covariance without the diagonal clamp.

    Exposed for diagnostics: a variance below roughly ``-1e-10`` signals a
    bug rather than roundoff.
    """
    xv = as_point(x)
    yv = as_point(y)
    k_xy = float(gram(post.prior.kernel, xv[None, :], yv[None, :])[0, 0])
    if post.X.shape[0] == 0:
        return k_xy
    a = np.linalg.solve(post.cholesky_factor, _cross(post, xv[None, :]).T)[:, 0]
    b = np.linalg.solve(post.cholesky_factor, _cross(post, yv[None, :]).T)[:, 0]
    return k_xy - float(a @ b)


def posterior_cov(post: GPPosterior, x, y) -> float:
    """Posterior covariance; the variance (x == y exactly) is clamped at 0."""
    value = posterior_cov_raw(post, x, y)
    xv = as_point(x)
    yv = as_point(y)
    if xv.shape == yv.shape and np.all(xv == yv):
        return max(value, 0.0)
    return value


def posterior_variance_at(post: GPPosterior, points, clamp: bool = True) -> np.ndarray:
    """Posterior variance at every row of a point set.

    Clamps small negative roundoff at zero unless ``clamp`` is False.
    """
    P = as_points(points)
    prior_diag = np.array(
        [float(gram(post.prior.kernel, row[None, :], row[None, :])[0, 0]) for row in P]
    )
    if post.X.shape[0] == 0:
        out = prior_diag
    else:
        V = np.linalg.solve(post.cholesky_factor, _cross(post, P).T)
        out = prior_diag - np.einsum("ij,ij->j", V, V)
    return np.maximum(out, 0.0) if clamp else out
