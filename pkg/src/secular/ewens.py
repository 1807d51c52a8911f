"""Exact distributions attached to the Ewens sampling formula.

Everything here reduces to the conditioning device: cycle counts of an Ewens
permutation are independent Poissons Z_j ~ Poi(theta/j) conditioned on
T_0n = sum_j j Z_j hitting n.  Lattice convolutions give exact laws of T_0n
and its partial sums; the limit density p_theta of T_0n/n is integrated from
its delay differential identity with an exact closed form on (0, 2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from . import _kernels
from .combinat import gen_binom_seq
from .streams import GaussianStream

EULER_GAMMA = 0.57721566490153286061

# probability mass below which a Poisson factor's tail is dropped
_POISSON_TAIL = 1e-16
# tolerated floating-point drift outside [0, 1] before it is treated as a bug
_PROB_DRIFT = 1e-9


def _check_theta(theta: float) -> float:
    t = float(theta)
    if not (t > 0.0 and np.isfinite(t)):
        raise ValueError("theta must be positive and finite")
    return t


def _clamp_prob(p: float) -> float:
    if p < -_PROB_DRIFT or p > 1.0 + _PROB_DRIFT:
        raise FloatingPointError("probability drifted to %r" % p)
    return min(max(p, 0.0), 1.0)


def _harmonic(m: int) -> float:
    """h(m+1) = sum_{j=1}^{m} 1/j."""
    if m <= 0:
        return 0.0
    return float(np.sum(1.0 / np.arange(1, m + 1)))


@dataclass
class CycleCounts:
    """Cycle-count vector (m_1..m_n) of a permutation of n symbols."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("counts must be a nonempty 1-D integer vector")
        if np.any(c < 0):
            raise ValueError("cycle counts must be nonnegative")
        n = int(np.dot(np.arange(1, c.size + 1), c))
        if n != c.size:
            raise ValueError("sum k*m_k = %d must equal the vector length %d"
                             % (n, c.size))
        self.counts = c

    @property
    def n(self) -> int:
        return self.counts.size


def enumerate_cycle_counts(n: int) -> Iterator[CycleCounts]:
    """All cycle-count vectors of permutations of n (partitions of n)."""
    if n < 1:
        raise ValueError("n must be positive")
    counts = np.zeros(n, dtype=np.int64)

    def rec(remaining: int, largest: int):
        if remaining == 0:
            yield CycleCounts(counts.copy())
            return
        for k in range(min(remaining, largest), 0, -1):
            counts[k - 1] += 1
            yield from rec(remaining - k, k)
            counts[k - 1] -= 1

    yield from rec(n, n)


def ewens_pmf(m: CycleCounts, theta: float) -> float:
    """P(cycle counts = m) under the Ewens measure with parameter theta."""
    theta = _check_theta(theta)
    n = m.n
    log_p = gammaln(n + 1) - (gammaln(theta + n) - gammaln(theta))
    for k in range(1, n + 1):
        mk = int(m.counts[k - 1])
        if mk:
            log_p += mk * (math.log(theta) - math.log(k)) - gammaln(mk + 1)
    return _clamp_prob(math.exp(log_p))


def sample_ewens(n: int, theta: float, stream: GaussianStream) -> CycleCounts:
    """Exact Ewens draw via the Feller coupling.

    Cycle lengths are the spacings between ones in (1, xi_n, ..., xi_2, 1)
    with P(xi_j = 1) = theta/(theta + j - 1).
    """
    theta = _check_theta(theta)
    if n < 1:
        raise ValueError("n must be positive")
    counts = np.zeros(n, dtype=np.int64)
    if n == 1:
        counts[0] = 1
        return CycleCounts(counts)
    js = np.arange(n, 1, -1, dtype=np.float64)  # xi_n .. xi_2
    bits = stream.uniforms(n - 1) < theta / (theta + js - 1.0)
    ones = np.flatnonzero(bits) + 1
    pos = np.concatenate(([0], ones, [n]))
    for gap in np.diff(pos):
        counts[gap - 1] += 1
    return CycleCounts(counts)


class LatticePmf(NamedTuple):
    probs: np.ndarray
    tail_mass: float


def _weighted_poisson_pmf(theta: float, j_lo: int, j_hi: int,
                          r_max: int) -> LatticePmf:
    """Exact pmf of sum_{j=j_lo}^{j_hi} j Z_j, Z_j ~ Poi(theta/j), on 0..r_max.

    Mass landing beyond r_max is discarded and reported as tail_mass; each
    Poisson factor is truncated once its remaining tail is below 1e-16.
    """
    pmf = np.zeros(r_max + 1)
    pmf[0] = 1.0
    for j in range(j_lo, j_hi + 1):
        lam = theta / j
        w = math.exp(-lam)
        new = pmf * w
        remaining = 1.0 - w
        level = 0
        while remaining > _POISSON_TAIL and level * j <= r_max - j:
            level += 1
            w *= lam / level
            shift = level * j
            new[shift:] += w * pmf[: r_max + 1 - shift]
            remaining -= w
        pmf = new
    total = float(pmf.sum())
    return LatticePmf(pmf, max(0.0, 1.0 - total))


def t0n_pmf(n: int, r_max: int, theta: float) -> LatticePmf:
    """Exact law of T_0n = sum_{j<=n} j Z_j on the range 0..r_max."""
    theta = _check_theta(theta)
    if n < 0 or r_max < 0:
        raise ValueError("n and r_max must be nonnegative")
    if n == 0:
        probs = np.zeros(r_max + 1)
        probs[0] = 1.0
        return LatticePmf(probs, 0.0)
    return _weighted_poisson_pmf(theta, 1, n, r_max)


def longest_cycle_cdf(n: int, r: int, theta: float) -> float:
    """P(longest cycle of an Ewens(theta) permutation of n is <= r).

    Conditioning form: P(Z_{r+1..n} = 0) * P(T_0r = n) / P(T_0n = n).
    """
    theta = _check_theta(theta)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not 0 <= r <= n:
        raise ValueError("need 0 <= r <= n")
    if n == 0 or r == n:
        return 1.0
    if r == 0:
        return 0.0
    no_large = math.exp(-theta * (_harmonic(n) - _harmonic(r)))
    num = t0n_pmf(r, n, theta).probs[n]
    den = t0n_pmf(n, n, theta).probs[n]
    return _clamp_prob(no_large * float(num) / float(den))


_CDF_TABLE_CACHE: dict[float, np.ndarray] = {}


def longest_cycle_cdf_table(n_max: int, theta: float) -> np.ndarray:
    """Matrix P[m, r] = P(longest cycle of m <= r) for 0 <= m, r <= n_max.

    Built in one sweep from the generating identity: the coefficient of z^m
    in exp(theta * sum_{k<=r} z^k / k) equals gen_binom(m) * P(L^(m) <= r).
    Independent of the conditioning route used by longest_cycle_cdf.
    """
    theta = _check_theta(theta)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    cached = _CDF_TABLE_CACHE.get(theta)
    if cached is None or cached.shape[0] < n_max + 1:
        raw = _kernels.cycle_sweep_table(theta, n_max)  # raw[r, m]
        gb = gen_binom_seq(n_max, theta)
        table = np.ascontiguousarray(raw.T) / gb[:, None]
        np.clip(table, 0.0, 1.0, out=table)
        _CDF_TABLE_CACHE[theta] = table
        cached = table
    return cached[: n_max + 1, : n_max + 1]


def shortest_cycle_survival(n: int, q: int, theta: float) -> float:
    """P(shortest cycle of an Ewens(theta) permutation of n exceeds q).

    Exact value exp(-theta h(q+1)) * P(T_qn = n) / P(T_0n = n) where
    T_qn = sum_{j=q+1}^{n} j Z_j.
    """
    theta = _check_theta(theta)
    if not 0 <= q < n:
        raise ValueError("need 0 <= q < n")
    if q == 0:
        return 1.0
    no_small = math.exp(-theta * _harmonic(q))
    num = _weighted_poisson_pmf(theta, q + 1, n, n).probs[n]
    den = t0n_pmf(n, n, theta).probs[n]
    return _clamp_prob(no_small * float(num) / float(den))


def shortest_cycle_bound(q: int, theta: float) -> float:
    """Upper bound theta*(q-1)!/theta^(q) on the shortest-cycle survival."""
    theta = _check_theta(theta)
    if q < 1:
        raise ValueError("q must be positive")
    return math.exp(math.log(theta) + gammaln(q)
                    - (gammaln(theta + q) - gammaln(theta)))


def unique_max_cycle_prob(n: int, q_min: int, theta: float) -> float:
    """P(the longest cycle has length >= q_min and multiplicity one)."""
    theta = _check_theta(theta)
    if not 1 <= q_min <= n:
        raise ValueError("need 1 <= q_min <= n")
    return _max_cycle_prob(n, q_min, theta, unique=True)


def repeated_max_cycle_prob(n: int, q_min: int, theta: float) -> float:
    """P(the longest cycle has length >= q_min and multiplicity >= 2)."""
    theta = _check_theta(theta)
    if not 1 <= q_min <= n:
        raise ValueError("need 1 <= q_min <= n")
    return _max_cycle_prob(n, q_min, theta, unique=False)


def _max_cycle_prob(n: int, q_min: int, theta: float, unique: bool) -> float:
    den = t0n_pmf(n, n, theta).probs[n]
    hn = _harmonic(n)
    total = 0.0
    for q in range(q_min, n + 1):
        rest = t0n_pmf(q - 1, n, theta).probs
        no_larger = math.exp(-theta * (hn - _harmonic(q)))
        lam = theta / q
        w = math.exp(-lam) * lam  # P(Z_q = 1)
        level = 1
        while q * level <= n:
            if (level == 1) == unique:
                total += no_larger * w * rest[n - q * level]
            level += 1
            w *= lam / level
    return _clamp_prob(total / float(den))


# ----------------------------------------------------------------------
# Limit density of T_0n / n and the longest-cycle limit law.
# ----------------------------------------------------------------------

class PThetaTable:
    """Limit density p_theta of T_0n/n via g(x) = x^(1-theta) p_theta(x).

    g is constant e^(-gamma*theta)/Gamma(theta) on (0, 1]; on (1, 2] it has
    the exact series
        g(x) = g(1) * (1 - theta * sum_{i>=0} z^(theta+i)/(theta+i)),
        z = (x-1)/x,
    (integrating g' = -theta x^(-theta) (x-1)^(theta-1) g(x-1) across the
    integrable endpoint singularity in closed form); beyond 2 the delay ODE
    is integrated by trapezoid on a uniform grid whose nodes are aligned so
    g(x-1) lookups fall exactly on earlier nodes.  Beyond x_max the rapid
    decay envelope theta^m/m! is returned.
    """

    GRID_STEP = 1.0 / 1024
    X_MAX = 30.0

    def __init__(self, theta: float):
        self.theta = _check_theta(theta)
        h = self.GRID_STEP
        steps_per_unit = int(round(1.0 / h))
        npts = int(round((self.X_MAX - 1.0) / h)) + 1
        self.grid = 1.0 + h * np.arange(npts)
        g = np.empty(npts)
        self.g1 = math.exp(-EULER_GAMMA * self.theta - gammaln(self.theta))
        t = self.theta
        # exact series on [1, 2]
        for k in range(steps_per_unit + 1):
            x = self.grid[k]
            z = (x - 1.0) / x
            g[k] = self.g1 * (1.0 - t * _tail_power_series(z, t))
        # trapezoid on the delay ODE for x > 2; the rhs factor at node k uses
        # g one unit back, i.e. index k - steps_per_unit, already final
        factor = np.zeros(npts)
        xs = self.grid[steps_per_unit:]
        factor[steps_per_unit:] = t * xs ** (-t) * (xs - 1.0) ** (t - 1.0)
        for k in range(steps_per_unit + 1, npts):
            rhs_prev = factor[k - 1] * g[k - 1 - steps_per_unit]
            rhs_here = factor[k] * g[k - steps_per_unit]
            g[k] = max(g[k - 1] - 0.5 * h * (rhs_prev + rhs_here), 0.0)
        self.g = g

    def g_at(self, x: float) -> float:
        """Linear interpolation of g = x^(1-theta) p_theta(x), x < X_MAX."""
        if x <= 1.0:
            return self.g1
        pos = (x - 1.0) / self.GRID_STEP
        k = int(pos)
        frac = pos - k
        return float((1.0 - frac) * self.g[k] + frac * self.g[k + 1])

    def density(self, x: float) -> float:
        if x <= 0.0:
            raise ValueError("p_theta is defined for x > 0")
        if x >= self.X_MAX:
            m = int(math.floor(x))
            return math.exp(m * math.log(self.theta) - gammaln(m + 1))
        return x ** (self.theta - 1.0) * self.g_at(x)


def _tail_power_series(z: float, theta: float) -> float:
    """sum_{i>=0} z^(theta+i)/(theta+i) for 0 <= z <= 1/2."""
    if z <= 0.0:
        return 0.0
    total = 0.0
    term = z ** theta
    i = 0
    while True:
        inc = term / (theta + i)
        total += inc
        if inc < 1e-18 * max(total, 1e-300):
            return total
        term *= z
        i += 1


_PTHETA_CACHE: dict[float, PThetaTable] = {}


def _ptheta_table(theta: float) -> PThetaTable:
    theta = _check_theta(theta)
    table = _PTHETA_CACHE.get(theta)
    if table is None:
        table = PThetaTable(theta)
        _PTHETA_CACHE[theta] = table
    return table


def p_theta(x: float, theta: float) -> float:
    """Limit density of T_0n/n: n * P(T_0n = r) -> p_theta(r/n)."""
    return _ptheta_table(theta).density(x)


def limit_longest_cdf(x: float, theta: float) -> float:
    """Limit CDF of (longest cycle)/n:
    F_theta(x) = e^(gamma theta) x^(theta-1) Gamma(theta) p_theta(1/x),
    which simplifies to g(1/x)/g(1); equal to 1 for x >= 1.
    """
    if x <= 0.0:
        raise ValueError("x must be positive")
    if x >= 1.0:
        return 1.0
    table = _ptheta_table(theta)
    value = x ** (table.theta - 1.0) * table.density(1.0 / x) / table.g1
    return _clamp_prob(value)


def c_delta(delta: float, theta: float) -> float:
    """Limit of the mean normalized bracket:
    C_delta = 1 - Gamma(theta) e^(gamma theta) delta^(theta-1) p_theta(1/delta),
    i.e. 1 - F_theta(delta).  Exactly 0 at delta = 1.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    if delta == 1.0:
        return 0.0
    return 1.0 - limit_longest_cdf(delta, theta)


def c_delta_quadrature(delta: float, theta: float) -> float:
    """Independent evaluation of C_delta as the integral
    theta * int_delta^1 (1-x)^(theta-1) F_theta(x/(1-x)) dx / x.

    The piece with x >= 1/2 has F = 1 and is computed with the substitution
    t = (1-x)^theta which removes the endpoint singularity.
    """
    theta = _check_theta(theta)
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    total = 0.0
    if delta < 0.5:
        def body(x):
            return (1.0 - x) ** (theta - 1.0) * \
                limit_longest_cdf(x / (1.0 - x), theta) / x

        # the integrand is piecewise linear between density-table nodes, so
        # only ~1e-7 accuracy is meaningful here
        val, _ = integrate.quad(body, delta, 0.5, limit=200,
                                epsabs=1e-8, epsrel=1e-7)
        total += theta * val
    x0 = max(delta, 0.5)

    def tail(t):
        return 1.0 / (1.0 - t ** (1.0 / theta))

    val, _ = integrate.quad(tail, 0.0, (1.0 - x0) ** theta, limit=200)
    return total + val
