"""Worst-case error identities linking posterior variance and RKHS norms.

For nodes ``X``, weights ``w`` and a query ``x``, the worst-case error of
the approximation ``f(x) ~ sum_i w_i f(x_i)`` over the unit ball of the
RKHS is the norm of the residual representer

    ``|| k(., x) - sum_i w_i k(., x_i) ||``,

whose square expands to ``k(x,x) - 2 w^T k_Xx + w^T K_XX w``. The
``verify_*`` operations package the resulting identities as reports with an
explicit gap, so callers (and the CLI) can assert tolerances without
re-deriving anything:

- with the noise-free optimal weights ``K_XX^{-1} k_Xx`` the worst-case
  error equals the posterior standard deviation;
- with noise, the same statement holds after augmenting the kernel with a
  white-noise component and comparing against ``sqrt(var + noise)``;
- for any ``f`` in the span of representers, the interpolation error at
  ``x`` is bounded by ``||f|| sqrt(var(x))``;
- the noisy optimal weights minimize
  ``(worst-case error)^2 + noise * ||w||^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError, PreconditionError
from . import gp
from .kernels import (
    Dataset,
    Kernel,
    KroneckerDelta,
    RepresenterFunction,
    Sum,
    as_point,
    as_points,
    gram,
)
from .linalg import cholesky_with_jitter, require_invertible, solve_cholesky

__all__ = [
    "WeightVector",
    "optimal_weights",
    "worst_case_error",
    "IdentityReport",
    "BoundReport",
    "ObjectiveReport",
    "verify_noise_free_identity",
    "verify_noisy_identity",
    "verify_error_bound",
    "verify_weight_objective",
]

_NEGATIVE_TOLERANCE = -1e-10


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Weights ``(K_XX + noise I)^{-1} k_Xx`` for one query point."""

    X: np.ndarray
    query: np.ndarray
    weights: np.ndarray
    noise_variance: float


@dataclass(frozen=True)
class IdentityReport:
    """Two sides of an identity and their absolute gap."""

    lhs: float
    rhs: float
    gap: float

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "gap": self.gap}


@dataclass(frozen=True)
class BoundReport:
    """An inequality check: ``holds`` means ``lhs <= rhs`` up to roundoff."""

    lhs: float
    rhs: float
    holds: bool

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


@dataclass(frozen=True)
class ObjectiveReport:
    """Stationarity and perturbation evidence for a minimization claim."""

    objective: float
    gradient_norm: float
    perturbations: int
    is_minimal: bool

    def as_dict(self) -> dict:
        return {
            "objective": self.objective,
            "gradient_norm": self.gradient_norm,
            "perturbations": self.perturbations,
            "is_minimal": self.is_minimal,
        }


def optimal_weights(kernel: Kernel, X, x, noise_variance: float = 0.0) -> WeightVector:
    """Solve ``(K_XX + noise I) w = k_Xx`` for one query point."""
    nodes = as_points(X)
    xv = as_point(x)
    if not np.isfinite(noise_variance) or noise_variance < 0:
        raise InputError("noise variance must be nonnegative and finite")
    K = gram(kernel, nodes, nodes)
    if noise_variance == 0.0:
        require_invertible(K, name="K_XX")
        system = K
    else:
        system = K + noise_variance * np.eye(nodes.shape[0])
    L, _ = cholesky_with_jitter(system, name="K_XX + noise")
    k_x = gram(kernel, nodes, xv[None, :])[:, 0]
    w = solve_cholesky(L, k_x)
    return WeightVector(
        X=nodes, query=xv, weights=w, noise_variance=float(noise_variance)
    )


def worst_case_error(kernel: Kernel, X, weights, x) -> float:
    """Norm of the residual representer ``k(., x) - sum_i w_i k(., x_i)``.

    Equals the supremum, over the RKHS unit ball, of the error
    ``f(x) - sum_i w_i f(x_i)``; the supremum is attained by the normalized
    residual itself, which the tests exercise as an analytic witness.
    """
    nodes = as_points(X)
    xv = as_point(x)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != nodes.shape[0]:
        raise InputError(f"{w.shape[0]} weights for {nodes.shape[0]} nodes")
    if not np.all(np.isfinite(w)):
        raise InputError("weights must be finite")
    k_xx = float(gram(kernel, xv[None, :], xv[None, :])[0, 0])
    if nodes.shape[0] == 0:
        squared = k_xx
    else:
        k_x = gram(kernel, nodes, xv[None, :])[:, 0]
        K = gram(kernel, nodes, nodes)
        squared = k_xx - 2.0 * float(w @ k_x) + float(w @ K @ w)
    if squared < _NEGATIVE_TOLERANCE:
        raise NumericalError(
            f"worst-case error squared evaluated to {squared:.3e} < -1e-10"
        )
    return math.sqrt(max(squared, 0.0))


def _conditioned(kernel: Kernel, data: Dataset, noise_variance: float):
    """Condition on the data, substituting zero outputs when absent.

    The posterior variance does not depend on Y, and these verifications
    only query variances.
    """
    if data.Y is None:
        data = Dataset(data.X, np.zeros(data.n))
    prior = gp.GPPrior(kernel)
    return gp.condition(prior, data, noise_variance)


def verify_noise_free_identity(kernel: Kernel, data: Dataset, x) -> IdentityReport:
    """Check posterior sd == worst-case error at the optimal weights.

    Both sides are computed independently: the left from the conditioned
    GP, the right from the quadratic-form expansion with weights
    ``K_XX^{-1} k_Xx``.
    """
    xv = as_point(x)
    post = _conditioned(kernel, data, 0.0)
    lhs = math.sqrt(gp.posterior_cov(post, xv, xv))
    wv = optimal_weights(kernel, data.X, xv, 0.0)
    rhs = worst_case_error(kernel, data.X, wv.weights, xv)
    return IdentityReport(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs))


def verify_noisy_identity(
    kernel: Kernel, data: Dataset, noise_variance: float, x
) -> IdentityReport:
    """Check sqrt(posterior var + noise) == worst-case error under the
    noise-augmented kernel.

    The augmented kernel is ``k`` plus a white-noise component of variance
    ``noise_variance``; the identity requires the query to differ from
    every node exactly (the white-noise component must not fire at ``x``),
    so coincidence raises :class:`PreconditionError`.
    """
    xv = as_point(x)
    if not np.isfinite(noise_variance) or noise_variance <= 0:
        raise InputError("noise variance must be positive and finite")
    if data.n > 0:
        if xv.shape[0] != data.d:
            raise InputError(
                f"query dimension {xv.shape[0]} does not match data dimension "
                f"{data.d}"
            )
        coincides = np.all(data.X == xv[None, :], axis=1)
        if bool(np.any(coincides)):
            raise PreconditionError(
                "the noisy identity requires the query point to differ from "
                "every node; it coincides with node "
                f"{int(np.argmax(coincides))}"
            )
    post = _conditioned(kernel, data, noise_variance)
    lhs = math.sqrt(gp.posterior_cov(post, xv, xv) + noise_variance)
    augmented = Sum(kernel, KroneckerDelta(noise_variance))
    wv = optimal_weights(kernel, data.X, xv, noise_variance)
    rhs = worst_case_error(augmented, data.X, wv.weights, xv)
    return IdentityReport(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs))


def verify_error_bound(
    kernel: Kernel, X, f: RepresenterFunction, x
) -> BoundReport:
    """Check ``(mean(x) - f(x))^2 <= ||f||^2 var(x)`` for the interpolant
    of ``f``'s values at the nodes.
    """
    nodes = as_points(X)
    xv = as_point(x)
    data = Dataset(nodes, f.at(nodes))
    post = _conditioned(kernel, data, 0.0)
    residual = gp.posterior_mean(post, xv) - f(xv)
    lhs = residual * residual
    rhs = f.norm() ** 2 * gp.posterior_cov(post, xv, xv)
    return BoundReport(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs + 1e-10))


def verify_weight_objective(
    kernel: Kernel,
    X,
    noise_variance: float,
    x,
    perturbations: int = 100,
    seed: int = 0,
) -> ObjectiveReport:
    """Check that the noisy optimal weights minimize
    ``wce(w)^2 + noise ||w||^2``.

    Evidence is twofold: the closed-form gradient
    ``2 (K_XX + noise I) w - 2 k_Xx`` vanishes at the solution, and random
    unit perturbations at two step sizes never decrease the objective.
    """
    nodes = as_points(X)
    xv = as_point(x)
    if not np.isfinite(noise_variance) or noise_variance <= 0:
        raise InputError("noise variance must be positive and finite")
    n = nodes.shape[0]
    K = gram(kernel, nodes, nodes)
    k_x = gram(kernel, nodes, xv[None, :])[:, 0]
    k_xx = float(gram(kernel, xv[None, :], xv[None, :])[0, 0])
    system = K + noise_variance * np.eye(n)
    L, _ = cholesky_with_jitter(system, name="K_XX + noise")
    w_star = solve_cholesky(L, k_x)

    def objective(w: np.ndarray) -> float:
        wce_sq = k_xx - 2.0 * float(w @ k_x) + float(w @ K @ w)
        return wce_sq + noise_variance * float(w @ w)

    base = objective(w_star)
    gradient = 2.0 * (system @ w_star) - 2.0 * k_x
    gradient_norm = float(np.linalg.norm(gradient))
    rng = np.random.default_rng(seed)
    minimal = True
    for _ in range(int(perturbations)):
        u = rng.standard_normal(n)
        norm = np.linalg.norm(u)
        if norm == 0.0:
            continue
        u /= norm
        for eps in (1e-2, 1e-3):
            if objective(w_star + eps * u) < base:
                minimal = False
    return ObjectiveReport(
        objective=base,
        gradient_norm=gradient_norm,
        perturbations=int(perturbations),
        is_minimal=minimal,
    )
