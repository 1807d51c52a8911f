import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secular.series import CoefficientSeries, series_exp, series_multiply, \
    sobolev_partial_norm


def series(*vals):
    return CoefficientSeries(np.array(vals, dtype=np.complex128))


def brute_exp_coeff(a, n):
    """c_n of exp(sum a_k z^k) as the explicit sum over cycle-count vectors."""
    def partitions(remaining, largest):
        if remaining == 0:
            yield []
            return
        for k in range(min(remaining, largest), 0, -1):
            for rest in partitions(remaining - k, k):
                yield [k] + rest

    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for parts in partitions(n, n):
        counts = {}
        for k in parts:
            counts[k] = counts.get(k, 0) + 1
        term = 1.0 + 0.0j
        for k, m in counts.items():
            if k >= len(a):
                term = 0.0
                break
            term *= a[k] ** m / math.factorial(m)
        total += term
    return total


def test_multiply_difference_of_squares():
    out = series_multiply(series(1, 1), series(1, -1), 2)
    assert np.allclose(out.coeffs, [1, 0, -1])


def test_multiply_identity():
    a = series(2.0, 1j, -0.5)
    out = series_multiply(a, series(1), 2)
    assert np.array_equal(out.coeffs, a.coeffs)


def test_multiply_hand_convolution():
    out = series_multiply(series(1, 2, 1), series(1, 1), 3)
    assert np.allclose(out.coeffs, [1, 3, 3, 1])


def test_exp_of_zero():
    out = series_exp(series(0, 0, 0), 4)
    assert np.allclose(out.coeffs, [1, 0, 0, 0, 0])


def test_exp_single_monomial_is_taylor():
    out = series_exp(series(0, 1), 5)
    expect = [1 / math.factorial(k) for k in range(6)]
    assert np.allclose(out.coeffs, expect, rtol=1e-14)
    assert abs(out.coeffs[3] - 1.0 / 6.0) < 1e-15


def test_exp_second_order_symbolic():
    a1, a2 = 0.3 - 0.7j, -0.2 + 0.4j
    out = series_exp(series(0, a1, a2), 2)
    assert abs(out.coeffs[2] - (a1 ** 2 / 2 + a2)) < 1e-15


def test_exp_requires_zero_constant_term():
    with pytest.raises(ValueError):
        series_exp(series(0.1, 1), 3)


def test_sobolev_examples():
    assert sobolev_partial_norm(series(1), -3.7) == 1.0
    assert sobolev_partial_norm(series(0, 1), 1.0) == 2.0
    assert abs(sobolev_partial_norm(series(1, 1, 1), -1.0) - 1.7) < 1e-15


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        series(np.nan, 1.0)


complex_lists = st.lists(
    st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
    min_size=1, max_size=7)


@settings(max_examples=40, deadline=None)
@given(complex_lists)
def test_exp_matches_brute_force_composition_sum(vals):
    a = np.concatenate(([0.0], vals)).astype(np.complex128)
    out = series_exp(CoefficientSeries(a), 8)
    for n in range(9):
        ref = brute_exp_coeff(a, n)
        assert abs(out.coeffs[n] - ref) <= 1e-12 * max(1.0, abs(ref))


@settings(max_examples=40, deadline=None)
@given(complex_lists, complex_lists)
def test_multiply_commutes_and_associates(xs, ys):
    a = CoefficientSeries(np.array(xs, dtype=np.complex128))
    b = CoefficientSeries(np.array(ys, dtype=np.complex128))
    order = len(xs) + len(ys) - 2
    ab = series_multiply(a, b, order)
    ba = series_multiply(b, a, order)
    assert np.max(np.abs(ab.coeffs - ba.coeffs)) < 1e-13
    c = series(1, 0.5j)
    left = series_multiply(series_multiply(a, b, order), c, order)
    right = series_multiply(a, series_multiply(b, c, order), order)
    assert np.max(np.abs(left.coeffs - right.coeffs)) < 1e-13


@settings(max_examples=30, deadline=None)
@given(complex_lists, complex_lists)
def test_exp_turns_sums_into_products(xs, ys):
    order = 8
    a = np.zeros(order + 1, dtype=np.complex128)
    b = np.zeros(order + 1, dtype=np.complex128)
    a[1: 1 + len(xs)] = np.array(xs)[: order]
    b[1: 1 + len(ys)] = np.array(ys)[: order]
    lhs = series_exp(CoefficientSeries(a + b), order)
    rhs = series_multiply(series_exp(CoefficientSeries(a), order),
                          series_exp(CoefficientSeries(b), order), order)
    scale = np.max(np.abs(lhs.coeffs)) + 1.0
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) <= 1e-11 * scale
