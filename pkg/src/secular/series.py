"""Truncated complex power-series arithmetic.

CoefficientSeries is the shared carrier for characteristic-polynomial
coefficients, chaos coefficients, and the Verblunsky-evolved polynomials.
Coefficients beyond the stored truncation order are defined to be exactly
zero, matching polynomial semantics.  All arithmetic is double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class CoefficientSeries:
    """Coefficients c_0..c_M of a series truncated at order M."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a nonempty 1-D array")
        if not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("coefficients must be finite")
        self.coeffs = c

    @property
    def truncation_order(self) -> int:
        return self.coeffs.size - 1

    def coefficient(self, n: int) -> complex:
        """c_n, with c_n = 0 for n beyond the truncation order."""
        if n < 0:
            raise ValueError("coefficient index must be nonnegative")
        if n > self.truncation_order:
            return 0.0 + 0.0j
        return complex(self.coeffs[n])

    def padded(self, order: int) -> np.ndarray:
        out = np.zeros(order + 1, dtype=np.complex128)
        m = min(order, self.truncation_order)
        out[: m + 1] = self.coeffs[: m + 1]
        return out


def series_multiply(a: CoefficientSeries, b: CoefficientSeries,
                    order: int) -> CoefficientSeries:
    """Cauchy product truncated at `order`."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    full = np.convolve(a.coeffs, b.coeffs)
    return CoefficientSeries(_pad(full, order))


def series_exp(a: CoefficientSeries, order: int) -> CoefficientSeries:
    """Coefficients of exp(sum_k a_k z^k) up to `order`.

    Requires a_0 = 0.  Uses the derivative recurrence
        n c_n = sum_{k=1}^{n} k a_k c_{n-k},   c_0 = 1,
    which is exact in exact arithmetic and numerically benign at desk scale.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if a.coeffs[0] != 0:
        raise ValueError("series_exp requires zero constant term, got %r"
                         % a.coeffs[0])
    aa = a.padded(order)
    return CoefficientSeries(exp_from_log_coeffs(aa, order))


def exp_from_log_coeffs(a: np.ndarray, order: int) -> np.ndarray:
    """exp recurrence on a raw padded coefficient array (a[0] ignored)."""
    ka = np.arange(order + 1) * a[: order + 1]
    c = np.zeros(order + 1, dtype=np.complex128)
    c[0] = 1.0
    for n in range(1, order + 1):
        c[n] = np.dot(ka[1: n + 1], c[n - 1:: -1]) / n
    return c


def sobolev_partial_norm(c: CoefficientSeries, s: float) -> float:
    """Partial Sobolev sum  sum_{n=0}^{M} (1 + n^2)^s |c_n|^2."""
    if not np.isfinite(s):
        raise ValueError("Sobolev index must be finite")
    n = np.arange(c.coeffs.size, dtype=np.float64)
    return float(np.sum((1.0 + n * n) ** s * np.abs(c.coeffs) ** 2))


def _pad(arr: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros(order + 1, dtype=np.complex128)
    m = min(order + 1, arr.size)
    out[:m] = arr[:m]
    return out
