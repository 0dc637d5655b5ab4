from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pskk.bernoulli import MAX_DEGREE, bernoulli_numbers, bernoulli_poly, bernoulli_polynomial
from pskk.errors import DomainError, UnsupportedOrderError

# Reference Bernoulli numbers with B_1 = -1/2.
KNOWN_NUMBERS = {
    0: Fraction(1), 1: Fraction(-1, 2), 2: Fraction(1, 6), 3: Fraction(0), 4: Fraction(-1, 30),
    6: Fraction(1, 42), 8: Fraction(-1, 30), 10: Fraction(5, 66), 12: Fraction(-691, 2730),
}


@pytest.mark.parametrize("n, value", sorted(KNOWN_NUMBERS.items()))
def test_bernoulli_numbers(n, value):
    assert bernoulli_numbers(12)[n] == value


@pytest.mark.parametrize(
    "k, x, expected",
    [
        (2, 0.0, 1 / 6),
        (2, 1.0, 1 / 6),
        (4, 0.5, 7 / 240),
        (1, 0.25, -0.25),
        (0, 0.3, 1.0),
    ],
)
def test_known_values(k, x, expected):
    assert bernoulli_polynomial(k, x) == pytest.approx(expected, abs=1e-15)


def test_b4_coefficients():
    # B_4(x) = x^4 - 2x^3 + x^2 - 1/30
    assert bernoulli_poly(4).coefficients == (1, -2, 1, 0, Fraction(-1, 30))


@pytest.mark.parametrize("k", range(2, MAX_DEGREE + 1, 2))
def test_periodicity(k):
    assert bernoulli_polynomial(k, 0.0) == pytest.approx(bernoulli_polynomial(k, 1.0), abs=1e-15)
    assert bernoulli_poly(k).exact(Fraction(0)) == bernoulli_poly(k).exact(Fraction(1))


@pytest.mark.parametrize("k", range(1, MAX_DEGREE + 1))
def test_zero_mean(k):
    coeffs = bernoulli_poly(k).coefficients
    integral = sum(c / (k - i + 1) for i, c in enumerate(coeffs))
    assert integral == 0


@pytest.mark.parametrize("k", range(1, MAX_DEGREE + 1))
def test_derivative_identity(k):
    # B_k'(x) = k B_{k-1}(x), checked on exact coefficients.
    c = bernoulli_poly(k).coefficients
    deriv = tuple(ci * (k - i) for i, ci in enumerate(c[:-1]))
    assert deriv == tuple(k * v for v in bernoulli_poly(k - 1).coefficients)


@settings(max_examples=200, deadline=None)
@given(k=st.integers(0, MAX_DEGREE), x=st.fractions(min_value=0, max_value=1, max_denominator=10**6))
def test_float_matches_exact(k, x):
    exact = float(bernoulli_poly(k).exact(x))
    assert bernoulli_polynomial(k, float(x)) == pytest.approx(exact, rel=1e-12, abs=1e-14)


def test_array_input_shape():
    x = np.linspace(0, 1, 7).reshape(7, 1)
    out = bernoulli_polynomial(6, x)
    assert out.shape == (7, 1)
    assert isinstance(bernoulli_polynomial(6, 0.5), float)


@pytest.mark.parametrize("k", [-1, 13, 20, 2.0])
def test_unsupported_degree(k):
    with pytest.raises(UnsupportedOrderError):
        bernoulli_polynomial(k, 0.5)


@pytest.mark.parametrize("x", [-1e-9, 1.0000001, np.nan, [0.2, 1.5]])
def test_domain(x):
    with pytest.raises(DomainError):
        bernoulli_polynomial(2, x)
