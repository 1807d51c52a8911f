"""Coefficients of the holomorphic multiplicative chaos and their functionals.

A sample retains its driving complex Gaussians so that cycle-constrained
recomputations, the martingale approximation, and the bracket process all
live on the same realization; the decomposition identities they satisfy are
pathwise, not merely in distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .combinat import gen_binom
from .series import CoefficientSeries, series_exp, sobolev_partial_norm
from .streams import GaussianStream


def _check_theta(theta: float) -> float:
    t = float(theta)
    if not (t > 0.0 and np.isfinite(t)):
        raise ValueError("theta must be positive and finite")
    return t


@dataclass
class HmcSample:
    """One realization of coefficients c_0..c_M with its Gaussian drivers."""

    coeffs: CoefficientSeries
    theta: float
    gaussians: np.ndarray  # N_1..N_M

    @property
    def order(self) -> int:
        return self.coeffs.truncation_order


def log_field_coeffs(gaussians: np.ndarray, theta: float) -> np.ndarray:
    """Exponent coefficients a_k = sqrt(theta/k) N_k, with a_0 = 0."""
    order = gaussians.size
    a = np.zeros(order + 1, dtype=np.complex128)
    k = np.arange(1, order + 1, dtype=np.float64)
    a[1:] = np.sqrt(theta / k) * gaussians
    return a


def sample_hmc(order: int, theta: float, stream: GaussianStream) -> HmcSample:
    """Draw c_0..c_order = coefficients of exp(sqrt(theta) sum_k z^k N_k/sqrt(k))."""
    theta = _check_theta(theta)
    if order < 0:
        raise ValueError("order must be nonnegative")
    gaussians = stream.complex_normals(order)
    a = log_field_coeffs(gaussians, theta)
    coeffs = series_exp(CoefficientSeries(a), order)
    return HmcSample(coeffs, theta, gaussians)


def constrained_coeffs(sample: HmcSample, q: int) -> CoefficientSeries:
    """Series with Gaussians N_k zeroed for k > q, re-exponentiated.

    Coefficient n of the result is c_{n,q}: the part of c_n carried by
    cycle types with no part larger than q.
    """
    if not 0 <= q <= sample.order:
        raise ValueError("q must lie in 0..order")
    g = sample.gaussians.copy()
    g[q:] = 0.0
    a = log_field_coeffs(g, sample.theta)
    return series_exp(CoefficientSeries(a), sample.order)


def _constrained_snapshots(sample: HmcSample, n: int) -> np.ndarray:
    """snap[q] = c_{n-q, q-1} for q = 1..n, one sweep over the realization."""
    a = log_field_coeffs(sample.gaussians[:n], sample.theta)
    _, snap = _kernels.constrained_sweep_batch(a[None, :])
    return snap[0]


def martingale_sum_start(n: int, delta: float) -> int:
    """Lowest summand index max(floor(delta*n), 1) of the martingale sum."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    return max(int(math.floor(delta * n)), 1)


def martingale_approx(sample: HmcSample, n: int, delta: float) -> complex:
    """Single-long-cycle part of c_n:
    sum over q = floor(delta n)..n of N_q sqrt(theta/q) c_{n-q,q-1}.

    The remainder c_n - c_{n, qmin-1} - (this sum) is carried by cycle types
    whose maximal part is >= qmin and repeated.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    if not 1 <= n <= sample.order:
        raise ValueError("n must lie in 1..order")
    qmin = martingale_sum_start(n, delta)
    snap = _constrained_snapshots(sample, n)
    q = np.arange(qmin, n + 1)
    weights = np.sqrt(sample.theta / q) * sample.gaussians[q - 1]
    return complex(np.dot(weights, snap[qmin:]))


def bracket_process(sample: HmcSample, n: int, delta: float) -> float:
    """Normalized predictable variance of the martingale approximation:
    (E|c_n|^2)^{-1} sum_{q=qmin}^{n} (theta/q) |c_{n-q,q-1}|^2,
    with the exact E|c_n|^2 = gen_binom(n, theta).
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    if not 1 <= n <= sample.order:
        raise ValueError("n must lie in 1..order")
    qmin = martingale_sum_start(n, delta)
    snap = _constrained_snapshots(sample, n)
    q = np.arange(qmin, n + 1)
    s = float(np.dot(sample.theta / q, np.abs(snap[qmin:]) ** 2))
    return s / gen_binom(n, sample.theta)


def gmc_mass_approx(sample: HmcSample, n: int) -> float:
    """Total-mass approximation
    (sqrt(log n))^{1[theta=1]} * Gamma(theta+1) * n^-theta * sum_{q<=n} |c_q|^2.
    """
    if not 1 <= n <= sample.order:
        raise ValueError("n must lie in 1..order")
    return float(mass_approx_from_coeffs(
        np.abs(sample.coeffs.coeffs[: n + 1]) ** 2, n, sample.theta))


def mass_approx_from_coeffs(abs_sq: np.ndarray, n: int, theta: float) -> float:
    theta = _check_theta(theta)
    scale = math.exp(gammaln(theta + 1.0)) / n ** theta
    if theta == 1.0:
        scale *= math.sqrt(math.log(n))
    return scale * float(np.sum(abs_sq[: n + 1]))


def mass_approx_expectation(n: int, theta: float) -> float:
    """Exact E of the mass approximation: the coefficient second moments
    telescope to binom(n+theta, theta), so
    E = (sqrt(log n))^{1[theta=1]} Gamma(theta+1) binom(n+theta, theta)/n^theta.
    """
    theta = _check_theta(theta)
    log_binom = gammaln(n + theta + 1.0) - gammaln(theta + 1.0) - gammaln(n + 1.0)
    value = math.exp(gammaln(theta + 1.0) + log_binom - theta * math.log(n))
    if theta == 1.0:
        value *= math.sqrt(math.log(n))
    return value


def sobolev_threshold(theta: float) -> float:
    """Critical regularity exponent: -theta/2 for theta <= 1,
    1/2 - sqrt(theta) above."""
    theta = _check_theta(theta)
    if theta <= 1.0:
        return -theta / 2.0
    return 0.5 - math.sqrt(theta)


def sobolev_diagnostic(sample: HmcSample, s: float) -> float:
    """Partial Sobolev sum of the realized coefficients at index s.

    Finite truncations cannot certify membership; across dyadic orders the
    growth (or saturation) of this sum is the usable trend.
    """
    return sobolev_partial_norm(sample.coeffs, s)


# ----------------------------------------------------------------------
# Batched sampling used by the experiments.
# ----------------------------------------------------------------------

def sample_gaussians_batch(order: int, seed: int, replicates: int,
                           stream_offset: int = 0) -> np.ndarray:
    """Stack of per-replicate Gaussian drivers; replicate r uses stream r."""
    out = np.empty((replicates, order), dtype=np.complex128)
    for r in range(replicates):
        out[r] = GaussianStream(seed, stream_offset + r).complex_normals(order)
    return out


def sample_hmc_batch(order: int, theta: float, seed: int, replicates: int,
                     stream_offset: int = 0) -> np.ndarray:
    """Coefficient matrix (replicates, order+1); row r is replicate r."""
    theta = _check_theta(theta)
    g = sample_gaussians_batch(order, seed, replicates, stream_offset)
    k = np.arange(1, order + 1, dtype=np.float64)
    a = np.zeros((replicates, order + 1), dtype=np.complex128)
    a[:, 1:] = np.sqrt(theta / k)[None, :] * g
    return _kernels.exp_batch(a)


def bracket_and_mass_batch(n: int, theta: float, delta: float, seed: int,
                           replicates: int, stream_offset: int = 0,
                           lanes: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Per-replicate (bracket, mass-approximation) pairs on shared samples."""
    theta = _check_theta(theta)
    qmin = martingale_sum_start(n, delta)
    g = sample_gaussians_batch(n, seed, replicates, stream_offset)
    k = np.arange(1, n + 1, dtype=np.float64)
    a = np.zeros((replicates, n + 1), dtype=np.complex128)
    a[:, 1:] = np.sqrt(theta / k)[None, :] * g
    coeffs_sq, snap_sq = _sweep_lanes(a, lanes)
    q = np.arange(qmin, n + 1, dtype=np.float64)
    brackets = (snap_sq[:, qmin:] @ (theta / q)) / gen_binom(n, theta)
    scale = math.exp(gammaln(theta + 1.0)) / n ** theta
    if theta == 1.0:
        scale *= math.sqrt(math.log(n))
    masses = scale * np.sum(coeffs_sq, axis=1)
    return brackets, masses


def _sweep_lanes(a: np.ndarray, lanes: int) -> tuple[np.ndarray, np.ndarray]:
    """Lane-blocked monomial sweep; returns |c_m|^2 and |c_{n-q,q-1}|^2."""
    R, npts = a.shape
    ngroups = -(-R // lanes)
    padded = ngroups * lanes
    buf = np.zeros((padded, npts), dtype=np.complex128)
    buf[:R] = a
    ARE = np.ascontiguousarray(
        buf.real.reshape(ngroups, lanes, npts).transpose(0, 2, 1))
    AIM = np.ascontiguousarray(
        buf.imag.reshape(ngroups, lanes, npts).transpose(0, 2, 1))
    CRE = np.empty_like(ARE)
    CIM = np.empty_like(ARE)
    SNRE = np.zeros_like(ARE)
    SNIM = np.zeros_like(ARE)
    _kernels.sweep_lanes_batch(ARE, AIM, CRE, CIM, SNRE, SNIM)
    c_sq = (CRE ** 2 + CIM ** 2).transpose(0, 2, 1).reshape(padded, npts)
    s_sq = (SNRE ** 2 + SNIM ** 2).transpose(0, 2, 1).reshape(padded, npts)
    return c_sq[:R], s_sq[:R]
