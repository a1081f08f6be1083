"""Positive definite kernel families and Gram-matrix assembly.

A kernel is an immutable descriptor object. Pointwise evaluation goes
through :func:`eval`, matrix assembly through :func:`gram`; the stationary
families additionally expose their spectral density through
:func:`spectral_density`. Kernels compose with :class:`Sum`,
:class:`Product` and :class:`Scaled`.

Conventions
-----------
Point sets are ``(n, d)`` float arrays; a 1-d array of length n is read as
n points on the real line. Single points are d-vectors (scalars are read
as 1-d points). All inputs must be finite.

The implemented families, writing ``r = ||x - y||``:

==================  =====================================================
SquaredExponential  ``exp(-r^2 / gamma^2)``
Matern              ``alpha = 1/2``: ``exp(-r/h)``;
                    ``alpha = 3/2``: ``(1 + t) exp(-t)``, ``t = sqrt(3) r/h``;
                    ``alpha = 5/2``: ``(1 + t + t^2/3) exp(-t)``,
                    ``t = sqrt(5) r/h``
Polynomial          ``(x . y + c)^m``
KroneckerDelta      ``scale`` if ``x == y`` exactly, else ``0``
BrownianDistance    ``||x|| + ||y|| - ||x - y||``
==================  =====================================================

The delta kernel compares coordinates by exact floating-point equality;
callers needing tolerance must canonicalize their inputs first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UnsupportedOperationError

__all__ = [
    "Kernel",
    "SquaredExponential",
    "Matern",
    "Polynomial",
    "KroneckerDelta",
    "BrownianDistance",
    "Sum",
    "Product",
    "Scaled",
    "Dataset",
    "RepresenterFunction",
    "eval",
    "gram",
    "spectral_density",
    "parse_kernel",
    "format_kernel",
    "as_point",
    "as_points",
]

_MATERN_ORDERS = (0.5, 1.5, 2.5)


def as_point(x) -> np.ndarray:
    """Coerce a scalar or 1-d array-like to a finite d-vector."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InputError(f"expected a point (d-vector), got shape {arr.shape}")
    if arr.size == 0:
        raise InputError("points must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise InputError("point coordinates must be finite")
    return arr


def as_points(A) -> np.ndarray:
    """Coerce an array-like to a finite ``(n, d)`` point-set array.

    A 1-d input of length n is interpreted as n points in one dimension.
    """
    arr = np.asarray(A, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"expected a point set (n x d array), got shape {arr.shape}")
    if arr.shape[0] > 0 and arr.shape[1] == 0:
        raise InputError("points must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise InputError("point coordinates must be finite")
    return arr


def _pairwise_sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _pairwise_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.sqrt(_pairwise_sqdist(A, B))


def _require_param(condition: bool, message: str) -> None:
    if not condition:
        raise InputError(message)


class Kernel:
    """Base class for kernel descriptors.

    Subclasses implement ``_gram`` on validated ``(n, d)`` arrays; the
    public entry points :func:`eval` and :func:`gram` handle coercion and
    shape checks.
    """

    def _gram(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x, y) -> float:
        return eval(self, x, y)

    def gram(self, A, B) -> np.ndarray:
        return gram(self, A, B)


@dataclass(frozen=True)
class SquaredExponential(Kernel):
    """Gaussian radial kernel ``exp(-||x - y||^2 / gamma^2)``."""

    gamma: float = 1.0

    def __post_init__(self):
        _require_param(
            np.isfinite(self.gamma) and self.gamma > 0,
            "SquaredExponential length scale gamma must be positive and finite",
        )

    def _gram(self, A, B):
        return np.exp(-_pairwise_sqdist(A, B) / self.gamma**2)


@dataclass(frozen=True)
class Matern(Kernel):
    """Matern kernel at the half-integer orders 1/2, 3/2 and 5/2.

    These orders have elementary closed forms (a polynomial times an
    exponential), so no Bessel functions are involved. As ``alpha`` grows
    the family approaches ``SquaredExponential(gamma = sqrt(2) h)``; that
    limit is exercised in the test suite through an independent
    Bessel-function oracle.
    """

    alpha: float = 1.5
    h: float = 1.0

    def __post_init__(self):
        _require_param(
            self.alpha in _MATERN_ORDERS,
            "Matern order alpha must be one of 0.5, 1.5, 2.5",
        )
        _require_param(
            np.isfinite(self.h) and self.h > 0,
            "Matern length scale h must be positive and finite",
        )

    def _gram(self, A, B):
        r = _pairwise_dist(A, B)
        if self.alpha == 0.5:
            return np.exp(-r / self.h)
        if self.alpha == 1.5:
            t = (math.sqrt(3.0) / self.h) * r
            return (1.0 + t) * np.exp(-t)
        t = (math.sqrt(5.0) / self.h) * r
        return (1.0 + t + t * t / 3.0) * np.exp(-t)


@dataclass(frozen=True)
class Polynomial(Kernel):
    """Polynomial kernel ``(x . y + c)^m`` with integer degree m >= 1."""

    degree: int = 1
    c: float = 0.0

    def __post_init__(self):
        _require_param(
            not isinstance(self.degree, bool)
            and float(self.degree) == int(self.degree)
            and int(self.degree) >= 1,
            "Polynomial degree must be an integer >= 1",
        )
        object.__setattr__(self, "degree", int(self.degree))
        _require_param(
            np.isfinite(self.c) and self.c >= 0,
            "Polynomial offset c must be nonnegative and finite",
        )

    def _gram(self, A, B):
        return (A @ B.T + self.c) ** self.degree


@dataclass(frozen=True)
class KroneckerDelta(Kernel):
    """White-noise kernel: ``scale`` when x equals y exactly, else 0."""

    scale: float = 1.0

    def __post_init__(self):
        _require_param(
            np.isfinite(self.scale) and self.scale >= 0,
            "KroneckerDelta scale must be nonnegative and finite",
        )

    def _gram(self, A, B):
        equal = np.all(A[:, None, :] == B[None, :, :], axis=-1)
        return self.scale * equal.astype(float)


@dataclass(frozen=True)
class BrownianDistance(Kernel):
    """Distance-induced kernel ``||x|| + ||y|| - ||x - y||``.

    This is the covariance of Brownian motion when restricted to the half
    line. The cross term carries coefficient 1; any larger coefficient
    breaks positive semi-definiteness already on two points.
    """

    def _gram(self, A, B):
        na = np.linalg.norm(A, axis=1)
        nb = np.linalg.norm(B, axis=1)
        return na[:, None] + nb[None, :] - _pairwise_dist(A, B)


@dataclass(frozen=True)
class Sum(Kernel):
    """Pointwise sum of two kernels."""

    left: Kernel
    right: Kernel

    def __post_init__(self):
        _require_param(
            isinstance(self.left, Kernel) and isinstance(self.right, Kernel),
            "Sum operands must be kernels",
        )

    def _gram(self, A, B):
        return self.left._gram(A, B) + self.right._gram(A, B)


@dataclass(frozen=True)
class Product(Kernel):
    """Pointwise product of two kernels."""

    left: Kernel
    right: Kernel

    def __post_init__(self):
        _require_param(
            isinstance(self.left, Kernel) and isinstance(self.right, Kernel),
            "Product operands must be kernels",
        )

    def _gram(self, A, B):
        return self.left._gram(A, B) * self.right._gram(A, B)


@dataclass(frozen=True)
class Scaled(Kernel):
    """A kernel multiplied by a positive constant."""

    base: Kernel
    factor: float

    def __post_init__(self):
        _require_param(isinstance(self.base, Kernel), "Scaled base must be a kernel")
        _require_param(
            np.isfinite(self.factor) and self.factor > 0,
            "Scaled factor must be positive and finite",
        )

    def _gram(self, A, B):
        return self.factor * self.base._gram(A, B)


def eval(kernel: Kernel, x, y) -> float:
    """Evaluate ``k(x, y)`` for two d-vectors."""
    xv = as_point(x)
    yv = as_point(y)
    if xv.shape != yv.shape:
        raise InputError(
            f"point dimensions differ: {xv.shape[0]} vs {yv.shape[0]}"
        )
    return float(kernel._gram(xv[None, :], yv[None, :])[0, 0])


def gram(kernel: Kernel, A, B) -> np.ndarray:
    """Assemble the matrix with entries ``k(a_i, b_j)``."""
    Am = as_points(A)
    Bm = as_points(B)
    if Am.shape[1] != Bm.shape[1]:
        raise InputError(
            f"point dimensions differ: {Am.shape[1]} vs {Bm.shape[1]}"
        )
    return kernel._gram(Am, Bm)


def spectral_density(kernel: Kernel, omega) -> float:
    """Spectral density of a stationary kernel at frequency ``omega``.

    Writing ``Phi`` for the kernel as a function of the lag, this returns
    the closed-form value of the Fourier transform of ``Phi`` in dimension
    ``d = len(omega)``:

    - squared exponential: ``pi^{d/2} gamma^d exp(-gamma^2 ||omega||^2 / 4)``;
    - Matern: ``C (2 alpha / h^2 + 4 pi^2 ||omega||^2)^{-(alpha + d/2)}``
      with ``C = 2^d pi^{d/2} Gamma(alpha + d/2) (2 alpha)^alpha /
      (Gamma(alpha) h^{2 alpha})``.

    The value is positive, even in ``omega``, and strictly decreasing in
    ``||omega||``. Families without a spectral density here raise
    :class:`UnsupportedOperationError`.
    """
    w = as_point(omega)
    d = w.shape[0]
    wsq = float(w @ w)
    if isinstance(kernel, SquaredExponential):
        g = kernel.gamma
        return math.pi ** (d / 2.0) * g**d * math.exp(-(g**2) * wsq / 4.0)
    if isinstance(kernel, Matern):
        a = kernel.alpha
        h = kernel.h
        const = (
            2.0**d
            * math.pi ** (d / 2.0)
            * math.gamma(a + d / 2.0)
            * (2.0 * a) ** a
            / (math.gamma(a) * h ** (2.0 * a))
        )
        return const * (2.0 * a / h**2 + 4.0 * math.pi**2 * wsq) ** (-(a + d / 2.0))
    raise UnsupportedOperationError(
        f"spectral density is not available for {type(kernel).__name__}"
    )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Input locations ``X`` (n x d) with optional outputs ``Y`` (length n)."""

    X: np.ndarray
    Y: np.ndarray | None = None

    def __post_init__(self):
        X = as_points(self.X)
        object.__setattr__(self, "X", X)
        if self.Y is not None:
            Y = np.asarray(self.Y, dtype=float).reshape(-1)
            if Y.shape[0] != X.shape[0]:
                raise InputError(
                    f"outputs have length {Y.shape[0]} but there are "
                    f"{X.shape[0]} inputs"
                )
            if not np.all(np.isfinite(Y)):
                raise InputError("outputs must be finite")
            object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class RepresenterFunction:
    """A finite kernel expansion ``f = sum_i c_i k(., z_i)``.

    These are the functions whose RKHS norm is computable in closed form:
    ``||f||^2 = c^T K_ZZ c``.
    """

    kernel: Kernel
    centers: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        Z = as_points(self.centers)
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if c.shape[0] != Z.shape[0]:
            raise InputError(
                f"{c.shape[0]} coefficients for {Z.shape[0]} centers"
            )
        if not np.all(np.isfinite(c)):
            raise InputError("coefficients must be finite")
        object.__setattr__(self, "centers", Z)
        object.__setattr__(self, "coefficients", c)

    def __call__(self, x) -> float:
        xv = as_point(x)
        row = gram(self.kernel, xv[None, :], self.centers)[0]
        return float(row @ self.coefficients)

    def at(self, points) -> np.ndarray:
        """Evaluate at every row of a point set."""
        P = as_points(points)
        return gram(self.kernel, P, self.centers) @ self.coefficients

    def norm(self) -> float:
        """RKHS norm ``sqrt(c^T K_ZZ c)`` (clamped at zero)."""
        K = gram(self.kernel, self.centers, self.centers)
        value = float(self.coefficients @ K @ self.coefficients)
        return math.sqrt(max(value, 0.0))


# --- flat text form -------------------------------------------------------
#
# The CLI's kernel grammar is `family` or `family:key=value,key=value`.
# Only leaf families are representable; Sum/Product/Scaled cannot be
# spelled in a flat string and stay API-only.

_TEXT_FAMILIES = {
    "se": (SquaredExponential, {"gamma": float}),
    "matern": (Matern, {"alpha": float, "h": float}),
    "poly": (Polynomial, {"degree": int, "c": float}),
    "delta": (KroneckerDelta, {"scale": float}),
    "brownian": (BrownianDistance, {}),
}


def parse_kernel(text: str) -> Kernel:
    """Parse the flat text form, e.g. ``matern:alpha=2.5,h=0.5``.

    Omitted parameters take the family defaults. Unknown families or
    parameters, and malformed values, raise :class:`InputError`.
    """
    if not isinstance(text, str) or not text.strip():
        raise InputError("empty kernel text")
    head, _, tail = text.strip().partition(":")
    family = head.strip().lower()
    if family not in _TEXT_FAMILIES:
        known = ", ".join(sorted(_TEXT_FAMILIES))
        raise InputError(f"unknown kernel family {family!r} (known: {known})")
    cls, schema = _TEXT_FAMILIES[family]
    kwargs = {}
    if tail.strip():
        for piece in tail.split(","):
            key, sep, raw = piece.partition("=")
            key = key.strip()
            if not sep or not key:
                raise InputError(
                    f"malformed kernel parameter {piece!r} (expected key=value)"
                )
            if key not in schema:
                raise InputError(
                    f"unknown parameter {key!r} for kernel family {family!r}"
                )
            try:
                kwargs[key] = schema[key](raw.strip())
            except ValueError as exc:
                raise InputError(
                    f"could not parse value {raw.strip()!r} for parameter "
                    f"{key!r}"
                ) from exc
    return cls(**kwargs)


def format_kernel(kernel: Kernel) -> str:
    """Render a leaf kernel back to the flat text form."""
    for name, (cls, schema) in _TEXT_FAMILIES.items():
        if type(kernel) is cls:
            if not schema:
                return name
            parts = ",".join(
                f"{key}={getattr(kernel, key)!r}" for key in schema
            )
            return f"{name}:{parts}"
    raise UnsupportedOperationError(
        f"{type(kernel).__name__} has no flat text form (leaf families only)"
    )
