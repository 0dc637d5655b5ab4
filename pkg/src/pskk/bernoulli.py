"""Bernoulli polynomials with exact rational coefficients.

Coefficients come from the binomial expansion
``B_k(x) = sum_j C(k, j) B_j x^(k-j)`` over exact Bernoulli numbers (``B_1 = -1/2``)
and are cached; evaluation converts them to floats once and runs Horner's scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import DomainError, UnsupportedOrderError

MAX_DEGREE = 12


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple[Fraction, ...]:
    """Return ``(B_0, ..., B_n)`` as exact fractions with ``B_1 = -1/2``.

    Uses the recurrence ``sum_{j=0}^{m} C(m+1, j) B_j = 0`` for ``m >= 1``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    out = [Fraction(1)]
    for m in range(1, n + 1):
        s = sum(comb(m + 1, j) * out[j] for j in range(m))
        out.append(-s / (m + 1))
    return tuple(out)


@dataclass(frozen=True)
class BernoulliPoly:
    """Bernoulli polynomial of a given degree.

    ``coefficients`` holds exact fractions in descending powers, so
    ``coefficients[0]`` multiplies ``x**degree``.
    """

    degree: int
    coefficients: tuple[Fraction, ...]

    @property
    def float_coefficients(self) -> np.ndarray:
        return _float_coefficients(self.degree)

    def __call__(self, x):
        return _horner(self.float_coefficients, x)

    def exact(self, x: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in self.coefficients:
            acc = acc * x + c
        return acc


def _check_degree(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 0 or k > MAX_DEGREE:
        raise UnsupportedOrderError(
            f"Bernoulli degree {k!r} unsupported; need an integer in [0, {MAX_DEGREE}]"
        )


@lru_cache(maxsize=None)
def bernoulli_poly(k: int) -> BernoulliPoly:
    """Exact ``B_k`` for ``0 <= k <= 12``."""
    _check_degree(k)
    k = int(k)
    B = bernoulli_numbers(k)
    coeffs = tuple(comb(k, j) * B[j] for j in range(k + 1))
    return BernoulliPoly(k, coeffs)


@lru_cache(maxsize=None)
def _float_coefficients(k: int) -> np.ndarray:
    c = np.array([float(f) for f in bernoulli_poly(k).coefficients])
    c.setflags(write=False)
    return c


def _horner(coeffs: np.ndarray, x):
    x = np.asarray(x, dtype=float)
    acc = np.full_like(x, coeffs[0])
    for c in coeffs[1:]:
        acc = acc * x + c
    return acc


def bernoulli_polynomial(k: int, x):
    """Evaluate ``B_k(x)`` for ``x`` in ``[0, 1]`` (scalar or array).

    Raises
    ------
    UnsupportedOrderError
        If ``k`` is outside ``0..12``.
    DomainError
        If any ``x`` lies outside ``[0, 1]``.
    """
    _check_degree(k)
    xa = np.asarray(x, dtype=float)
    if xa.size and (np.any(xa < 0.0) or np.any(xa > 1.0) or not np.all(np.isfinite(xa))):
        raise DomainError("Bernoulli polynomial argument must lie in [0, 1]")
    out = _horner(_float_coefficients(int(k)), xa)
    return float(out) if out.ndim == 0 else out
