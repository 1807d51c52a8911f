import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammaln

from secular import ewens
from secular.streams import GaussianStream


def counts(*vals):
    return ewens.CycleCounts(np.array(vals, dtype=np.int64))


def test_cycle_counts_validation():
    with pytest.raises(ValueError):
        counts(1, 1)  # sums to 3, length 2
    with pytest.raises(ValueError):
        counts(-1, 1)
    assert counts(1, 1, 0).n == 3


def test_pmf_uniform_permutations():
    assert abs(ewens.ewens_pmf(counts(3, 0, 0), 1.0) - 1.0 / 6.0) < 1e-15
    assert abs(ewens.ewens_pmf(counts(1, 1, 0), 1.0) - 0.5) < 1e-15
    assert abs(ewens.ewens_pmf(counts(0, 0, 1), 1.0) - 1.0 / 3.0) < 1e-15


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_pmf_normalization(theta):
    for n in range(1, 9):
        total = sum(ewens.ewens_pmf(m, theta)
                    for m in ewens.enumerate_cycle_counts(n))
        assert abs(total - 1.0) < 1e-10


def test_sampler_n_one():
    m = ewens.sample_ewens(1, 0.7, GaussianStream(0, 0))
    assert np.array_equal(m.counts, [1])


def test_sampler_identity_frequency():
    reps = 30000
    stream = GaussianStream(3, 0)
    hits = sum(1 for _ in range(reps)
               if np.array_equal(ewens.sample_ewens(3, 1.0, stream).counts,
                                 [3, 0, 0]))
    p = hits / reps
    se = math.sqrt(p * (1 - p) / reps)
    assert abs(p - 1.0 / 6.0) <= 3 * se


def test_sampler_mean_counts_match_pmf():
    n, theta, reps = 6, 2.0, 20000
    exact = np.zeros(n)
    for m in ewens.enumerate_cycle_counts(n):
        exact += ewens.ewens_pmf(m, theta) * m.counts
    stream = GaussianStream(8, 0)
    draws = np.array([ewens.sample_ewens(n, theta, stream).counts
                      for _ in range(reps)], dtype=np.float64)
    for k in range(n):
        se = np.std(draws[:, k], ddof=1) / math.sqrt(reps)
        assert abs(draws[:, k].mean() - exact[k]) <= 3 * se + 1e-12


def test_t0n_at_zero_and_poisson_case():
    for n, theta in ((5, 0.5), (20, 1.0)):
        probs = ewens.t0n_pmf(n, 3, theta).probs
        h = sum(1.0 / j for j in range(1, n + 1))
        assert abs(probs[0] - math.exp(-theta * h)) < 1e-14
    theta = 0.7
    probs = ewens.t0n_pmf(1, 6, theta).probs
    for r in range(7):
        assert abs(probs[r]
                   - theta ** r * math.exp(-theta) / math.factorial(r)) < 1e-14


@pytest.mark.parametrize("theta", [0.3, 1.0])
def test_uniform_bound_on_t0n(theta):
    for n in (4, 16, 64):
        res = ewens.t0n_pmf(n, 4 * n, theta)
        bound = math.exp(-theta * sum(1.0 / j for j in range(1, n + 1)))
        assert res.probs.max() <= bound + 1e-12
        assert res.tail_mass <= bound


def test_t0n_density_limit():
    for theta in (0.5, 1.0, 2.0):
        val = 2000 * ewens.t0n_pmf(2000, 2000, theta).probs[2000]
        target = math.exp(-ewens.EULER_GAMMA * theta - gammaln(theta))
        assert abs(val / target - 1.0) < 0.01


def test_longest_cycle_cdf_values():
    assert ewens.longest_cycle_cdf(9, 9, 0.4) == 1.0
    assert abs(ewens.longest_cycle_cdf(3, 1, 1.0) - 1.0 / 6.0) < 1e-13
    assert ewens.longest_cycle_cdf(5, 0, 1.0) == 0.0


def test_longest_cycle_table_matches_conditioning_route():
    for theta in (0.5, 1.0, 2.0):
        table = ewens.longest_cycle_cdf_table(24, theta)
        for n, r in ((1, 0), (5, 2), (12, 7), (24, 3), (24, 23)):
            direct = ewens.longest_cycle_cdf(n, r, theta)
            assert abs(table[n, r] - direct) < 1e-12
        assert np.all(table[0, :] == 1.0)


def test_longest_cycle_cdf_vs_sampler():
    n, r, theta, reps = 20, 5, 0.5, 30000
    stream = GaussianStream(10, 0)
    hits = 0
    for _ in range(reps):
        m = ewens.sample_ewens(n, theta, stream)
        if not np.any(m.counts[r:]):
            hits += 1
    p = hits / reps
    se = math.sqrt(p * (1 - p) / reps)
    assert abs(p - ewens.longest_cycle_cdf(n, r, theta)) <= 3 * se


def test_longest_cycle_lower_tail_drops_fast():
    vals = []
    for n in (100, 1000):
        r = int(n / math.log(n))
        vals.append(ewens.longest_cycle_cdf(n, r, 1.0))
    assert vals[1] * 10 < vals[0]


def test_shortest_cycle_values_and_bound():
    assert ewens.shortest_cycle_survival(5, 0, 0.7) == 1.0
    # P(no fixed points) among 6 permutations of 3: the two 3-cycles
    assert abs(ewens.shortest_cycle_survival(3, 1, 1.0) - 1.0 / 3.0) < 1e-13
    for theta in (0.5, 1.0, 2.0):
        for n in (8, 17, 40):
            for q in range(1, min(n, 11)):
                exact = ewens.shortest_cycle_survival(n, q, theta)
                assert exact <= ewens.shortest_cycle_bound(q, theta) + 1e-12


def test_max_cycle_partition_of_unity():
    # below-qmin + unique-max + repeated-max partitions all of S_n
    for theta in (0.5, 1.3):
        for n in (6, 11):
            for qmin in (1, 2, n // 2, n):
                total = (ewens.longest_cycle_cdf(n, qmin - 1, theta)
                         + ewens.unique_max_cycle_prob(n, qmin, theta)
                         + ewens.repeated_max_cycle_prob(n, qmin, theta))
                assert abs(total - 1.0) < 1e-10


def test_p_theta_closed_values():
    for theta in (0.5, 1.0, 2.0):
        expect = math.exp(-ewens.EULER_GAMMA * theta - gammaln(theta))
        assert abs(ewens.p_theta(1.0, theta) - expect) < 1e-14
    # constant on (0, 1] at theta = 1, power-shaped below 1 otherwise
    assert abs(ewens.p_theta(0.25, 1.0) - ewens.p_theta(1.0, 1.0)) < 1e-15
    assert abs(ewens.p_theta(0.25, 0.5) -
               0.25 ** -0.5 * ewens.p_theta(1.0, 0.5)) < 1e-14
    with pytest.raises(ValueError):
        ewens.p_theta(0.0, 1.0)


def test_p_theta_dickman_anchor():
    # theta = 1 density is e^(-gamma) * Dickman rho
    egamma = math.exp(ewens.EULER_GAMMA)
    assert abs(ewens.p_theta(2.0, 1.0) * egamma - (1 - math.log(2))) < 1e-12
    # rho(3) from rho(2) by independent quadrature of the delay equation
    rho3 = (1 - math.log(2)) - integrate.quad(
        lambda t: (1 - math.log(t - 1)) / t, 2.0, 3.0)[0]
    assert abs(ewens.p_theta(3.0, 1.0) * egamma - rho3) < 1e-7


def test_p_theta_rapid_decay_envelope():
    for x in (5.0, 5.5, 6.0, 9.0):
        assert ewens.p_theta(x, 1.0) <= 1.0 / math.factorial(5)


def test_p_theta_delay_identity_finite_difference():
    theta, h = 0.6, 1e-4
    table = ewens._ptheta_table(theta)
    for x in (2.3, 3.7, 5.1):
        g_plus = (x + h) ** (1 - theta) * ewens.p_theta(x + h, theta)
        g_minus = (x - h) ** (1 - theta) * ewens.p_theta(x - h, theta)
        lhs = (g_plus - g_minus) / (2 * h)
        rhs = -theta * x ** -theta * ewens.p_theta(x - 1.0, theta)
        assert abs(lhs - rhs) < 5e-4 * max(1.0, abs(rhs))
    assert table.g1 > 0


def test_limit_cdf_properties():
    for theta in (0.5, 1.0, 2.0):
        assert ewens.limit_longest_cdf(1.0, theta) == 1.0
        grid = np.linspace(0.05, 1.0, 60)
        vals = [ewens.limit_longest_cdf(x, theta) for x in grid]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert abs(ewens.limit_longest_cdf(0.5, 1.0) - (1 - math.log(2))) < 1e-12


def test_finite_n_longest_cdf_approaches_limit():
    n = 2000
    for theta in (0.5, 1.0):
        for x in (0.3, 0.6):
            fin = ewens.longest_cycle_cdf(n, int(x * n), theta)
            lim = ewens.limit_longest_cdf(x, theta)
            assert abs(fin - lim) < 0.02


def test_c_delta_values():
    assert ewens.c_delta(1.0, 0.4) == 0.0
    assert abs(ewens.c_delta(0.5, 1.0) - math.log(2)) < 1e-12
    assert abs(ewens.c_delta(0.01, 0.5) - 1.0) < 0.05
    with pytest.raises(ValueError):
        ewens.c_delta(0.0, 1.0)


@pytest.mark.parametrize("theta", [0.3, 1.0])
@pytest.mark.parametrize("delta", [0.1, 0.3, 0.7])
def test_c_delta_closed_form_vs_quadrature(theta, delta):
    closed = ewens.c_delta(delta, theta)
    quad = ewens.c_delta_quadrature(delta, theta)
    assert abs(closed - quad) < 1e-4
