"""Scaled Korobov kernel on the box ``[-a, a]^d``.

The kernel is a tensor product of one-dimensional factors

    K_1(x, y) = (2a)^-2 + (-1)^(alpha+1) (2a)^(2 alpha - 1) B_{2 alpha}(|x - y| / 2a) / (2 alpha)!

and the L2 inner product of two kernel sections has the same structure with
``B_{4 alpha}``. Both are exact closed forms of the Fourier series with
weights ``r(0) = sqrt(2a)`` and ``r(h) = |pi h / a|^alpha``;
:func:`kernel_series_oracle` sums that series directly for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import exp, factorial, lgamma, log

import numpy as np

from .bernoulli import _float_coefficients, bernoulli_poly
from .errors import DomainError, UnsupportedOrderError, ValidationError

MAX_ALPHA = 3


@dataclass(frozen=True)
class KernelParams:
    """Smoothness ``alpha``, box half-width ``a`` and dimension ``d``."""

    alpha: int
    a: float
    d: int

    def __post_init__(self):
        if not isinstance(self.alpha, (int, np.integer)) or self.alpha < 1:
            raise UnsupportedOrderError(f"alpha must be a positive integer, got {self.alpha!r}")
        if self.alpha > MAX_ALPHA:
            raise UnsupportedOrderError(
                f"alpha={self.alpha} needs B_{4 * self.alpha}; only alpha <= {MAX_ALPHA} is supported"
            )
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValidationError(f"half-width a must be positive and finite, got {self.a!r}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValidationError(f"dimension d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "alpha", int(self.alpha))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "d", int(self.d))

    @property
    def period(self) -> float:
        return 2.0 * self.a

    # Per-coordinate polynomials in t = |x - y| / 2a with the constant term and
    # scale folded in. Scale factors are formed in log space so a large
    # (2a)^(4 alpha - 1) never overflows before the factorial divides it.
    @cached_property
    def _eval_poly(self) -> np.ndarray:
        sign = 1.0 if self.alpha % 2 == 1 else -1.0
        scale = exp((2 * self.alpha - 1) * log(self.period) - lgamma(2 * self.alpha + 1))
        return _fold(_float_coefficients(2 * self.alpha), sign * scale, self.period**-2)

    @cached_property
    def _l2_poly(self) -> np.ndarray:
        scale = exp((4 * self.alpha - 1) * log(self.period) - lgamma(4 * self.alpha + 1))
        return _fold(_float_coefficients(4 * self.alpha), -scale, self.period**-3)


def _fold(coeffs, scale, base):
    poly = scale * coeffs
    poly[-1] += base
    poly.setflags(write=False)
    return poly


def _as_points(kp: KernelParams, x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != kp.d:
        raise DomainError(f"{name} has trailing dimension {x.shape[-1]}, expected d={kp.d}")
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > kp.a):
        raise DomainError(f"{name} has coordinates outside the box [-{kp.a}, {kp.a}]")
    return x


def _factor(kp: KernelParams, diff: np.ndarray, poly: np.ndarray) -> np.ndarray:
    # diff = x - y with both in [-a, a], so |diff| / 2a is in [0, 1].
    t = np.abs(diff)
    t *= 1.0 / kp.period
    acc = poly[0] * t
    acc += poly[1]
    for c in poly[2:]:
        acc *= t
        acc += c
    return acc


def _exact_factor(kp: KernelParams, t, degree: int, which: str):
    # Same factor evaluated in the dtype of t from the exact rational
    # coefficients; used where extended precision pays off.
    dt = t.dtype.type
    two_a = dt(2) * dt(kp.a)
    coeffs = [dt(f.numerator) / dt(f.denominator) for f in bernoulli_poly(degree).coefficients]
    acc = np.full(t.shape, coeffs[0], dtype=t.dtype)
    for c in coeffs[1:]:
        acc = acc * t + c
    if which == "kernel":
        sign = 1 if kp.alpha % 2 == 1 else -1
        return two_a**-2 + sign * two_a ** (2 * kp.alpha - 1) / dt(factorial(degree)) * acc
    return two_a**-3 - two_a ** (4 * kp.alpha - 1) / dt(factorial(degree)) * acc


def kernel_factor_t(kp: KernelParams, t) -> np.ndarray:
    """Kernel factor as a function of ``t = |x - y| / 2a`` in the precision of ``t``."""
    return _exact_factor(kp, np.asarray(t), 2 * kp.alpha, "kernel")


def l2_factor_t(kp: KernelParams, t) -> np.ndarray:
    """L2 factor as a function of ``t = |x - y| / 2a`` in the precision of ``t``."""
    return _exact_factor(kp, np.asarray(t), 4 * kp.alpha, "l2")


def kernel_factor(kp: KernelParams, diff) -> np.ndarray:
    """One-dimensional kernel factor as a function of ``x - y`` (no domain check)."""
    return _factor(kp, np.asarray(diff, dtype=float), kp._eval_poly)


def l2_factor(kp: KernelParams, diff) -> np.ndarray:
    """One-dimensional L2 inner-product factor as a function of ``x - y`` (no domain check)."""
    return _factor(kp, np.asarray(diff, dtype=float), kp._l2_poly)


def _product(kp, x, y, factor):
    x = _as_points(kp, x, "x")
    y = _as_points(kp, y, "y")
    diff = x - y
    out = np.prod(factor(kp, diff), axis=-1)
    return float(out) if out.ndim == 0 else out


def kernel_eval(kp: KernelParams, x, y):
    """Evaluate ``K(x, y)``; ``x`` and ``y`` broadcast over leading axes.

    Raises
    ------
    DomainError
        If a coordinate lies outside ``[-a, a]`` or the last axis is not ``d``.
    """
    return _product(kp, x, y, kernel_factor)


def kernel_l2_inner(kp: KernelParams, x, y):
    """``<K(x, .), K(y, .)>`` in ``L2([-a, a]^d)``, broadcasting like :func:`kernel_eval`."""
    return _product(kp, x, y, l2_factor)


def _pairwise(kp, X, Y, factor):
    X = _as_points(kp, np.atleast_2d(X), "X")
    Y = _as_points(kp, np.atleast_2d(Y), "Y")
    out = np.ones((X.shape[0], Y.shape[0]))
    for j in range(kp.d):
        out *= factor(kp, X[:, j, None] - Y[None, :, j])
    return out


def kernel_matrix(kp: KernelParams, X, Y) -> np.ndarray:
    """Pairwise kernel values, shape ``(len(X), len(Y))``."""
    return _pairwise(kp, X, Y, kernel_factor)


def l2_inner_matrix(kp: KernelParams, X, Y) -> np.ndarray:
    """Pairwise L2 inner products of kernel sections, shape ``(len(X), len(Y))``."""
    return _pairwise(kp, X, Y, l2_factor)


def fourier_weight(kp: KernelParams, h) -> np.ndarray:
    """``r_{alpha,a}(h)`` for integer frequencies ``h`` (elementwise)."""
    h = np.asarray(h)
    with np.errstate(divide="ignore"):
        r = np.abs(np.pi * h / kp.a) ** kp.alpha
    return np.where(h == 0, np.sqrt(kp.period), r)


def kernel_series_oracle(kp: KernelParams, x, y, H: int):
    """Partial Fourier sum of ``K(x, y)`` over frequencies with ``max|h_j| <= H``.

    The l-infinity ball factorises over coordinates, so the d-dimensional
    partial sum is the product of one-dimensional sums over ``|h| <= H``.
    The imaginary part cancels analytically and is checked to be below 1e-12.
    """
    if int(H) < 0:
        raise ValidationError("H must be >= 0")
    x = _as_points(kp, x, "x")
    y = _as_points(kp, y, "y")
    diff = x - y
    h = np.arange(-int(H), int(H) + 1)
    weights = fourier_weight(kp, h) ** -2 / kp.period
    phase = np.exp(2j * np.pi * diff[..., None] * h / kp.period)
    per_coord = phase @ weights
    if np.max(np.abs(per_coord.imag), initial=0.0) > 1e-12:
        raise ArithmeticError("imaginary part of the kernel series failed to cancel")
    out = np.prod(per_coord.real, axis=-1)
    return float(out) if out.ndim == 0 else out
