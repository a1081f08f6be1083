"""Dense symmetric linear algebra helpers.

Everything here operates on small-to-medium matrices (n up to a few
thousand) and prefers explicit, predictable failure over silent
regularization. The jitter schedule exists to absorb roundoff-level
indefiniteness when factorizing a PSD matrix; it is never allowed to make a
genuinely singular system look invertible. The invertibility verdict is a
separate, eigenvalue-based check.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

# Jitter is scaled by the mean diagonal, trace(K)/n, so the schedule is
# invariant under rescaling the kernel.
JITTER_INITIAL = 1e-12
JITTER_CEILING = 1e-6

# A symmetric PSD system counts as numerically invertible when its condition
# number, after the baseline jitter, stays below this.
CONDITION_LIMIT = 1e12


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose."""
    return 0.5 * (matrix + matrix.T)


def cholesky_with_jitter(matrix: np.ndarray, name: str = "matrix"):
    """Lower Cholesky factor of a PSD matrix, with escalating diagonal jitter.

    The first attempt adds nothing. On failure, ``1e-12 * trace/n`` is added
    to the diagonal and escalated by factors of 10 up to ``1e-6 * trace/n``,
    after which a :class:`NumericalError` naming the matrix is raised.

    Returns
    -------
    (L, jitter) : the factor with ``L @ L.T`` reconstructing the (possibly
    jittered) input, and the amount actually added to the diagonal.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    try:
        return np.linalg.cholesky(a), 0.0
    except np.linalg.LinAlgError:
        pass
    base = float(np.trace(a)) / n
    if not np.isfinite(base) or base <= 0.0:
        raise NumericalError(
            f"Cholesky factorization of {name} failed and its trace admits no "
            "jitter scale"
        )
    eye = np.eye(n)
    jitter = JITTER_INITIAL * base
    ceiling = JITTER_CEILING * base
    while jitter <= ceiling * (1.0 + 1e-12):
        try:
            return np.linalg.cholesky(a + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(
        f"Cholesky factorization of {name} failed with jitter up to "
        f"{ceiling:.3e}"
    )


def solve_cholesky(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(L L^T) x = rhs`` given the lower factor ``L``."""
    if factor.shape[0] == 0:
        return np.zeros_like(np.asarray(rhs, dtype=float))
    half = np.linalg.solve(factor, rhs)
    return np.linalg.solve(factor.T, half)


def spd_stats(matrix: np.ndarray):
    """Eigenvalue statistics backing the invertibility verdict.

    Returns ``(lam_min_effective, lam_max, cond)`` where the effective
    smallest eigenvalue includes the baseline jitter ``1e-12 * trace/n``.
    """
    a = symmetrize(np.asarray(matrix, dtype=float))
    n = a.shape[0]
    if n == 0:
        return 0.0, 0.0, 1.0
    lam = np.linalg.eigvalsh(a)
    baseline = JITTER_INITIAL * float(np.trace(a)) / n
    lam_min = float(lam[0]) + max(baseline, 0.0)
    lam_max = float(lam[-1])
    if lam_min <= 0.0:
        return lam_min, lam_max, np.inf
    return lam_min, lam_max, lam_max / lam_min


def require_invertible(matrix: np.ndarray, name: str = "matrix") -> None:
    """Raise :class:`NumericalError` unless the PSD matrix is invertible.

    The verdict is eigenvalue-based and independent of the jitter escalation
    used for factorization: a matrix with an exactly repeated row (duplicate
    inputs) fails here no matter how much jitter would let a Cholesky
    succeed.
    """
    lam_min, lam_max, cond = spd_stats(matrix)
    if not np.isfinite(cond) or lam_min <= 0.0:
        raise NumericalError(f"{name} is singular (smallest eigenvalue {lam_min:.3e})")
    if cond > CONDITION_LIMIT:
        raise NumericalError(
            f"{name} is numerically singular (condition number {cond:.3e} "
            f"exceeds {CONDITION_LIMIT:.1e})"
        )


def sample_gaussian(
    rng: np.random.Generator,
    covariance: np.ndarray,
    count: int,
    clamp_scale: float,
) -> np.ndarray:
    """Draw ``count`` vectors from N(0, covariance) by eigendecomposition.

    Eigenvalues below ``clamp_scale`` (an absolute threshold supplied by the
    caller, typically ``1e-12 * trace/n`` of a reference matrix) are set to
    zero, so degenerate directions carry exactly zero sample mass. This is
    what makes identities such as "a measure minus itself has Monte-Carlo
    estimate exactly 0" hold bitwise rather than to tolerance.
    """
    cov = symmetrize(np.asarray(covariance, dtype=float))
    n = cov.shape[0]
    if n == 0:
        return np.zeros((count, 0))
    lam, vec = np.linalg.eigh(cov)
    lam = np.where(lam < max(clamp_scale, 0.0), 0.0, lam)
    root = vec * np.sqrt(lam)[None, :]
    z = rng.standard_normal((count, n))
    return z @ root.T
