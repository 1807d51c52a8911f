import math

import numpy as np
import pytest

from secular import _kernels, cbe
from secular.streams import GaussianStream


def _random_alphas(count, seed, scale=0.8):
    rng = np.random.default_rng(seed)
    return (rng.random(count) - 0.5 + 1j * (rng.random(count) - 0.5)) * scale


def _evolve(alphas, theta=1.0):
    state = cbe.initial_state(theta)
    for a in alphas:
        state = cbe.szego_step(state, a)
    return state


def test_szego_step_zero_coefficient():
    state = _evolve(_random_alphas(5, 0))
    stepped = cbe.szego_step(state, 0.0)
    assert np.allclose(stepped.phi.coeffs[1:], state.phi.coeffs)
    assert stepped.phi.coeffs[0] == 0.0
    assert np.allclose(stepped.phi_star.coeffs[:-1], state.phi_star.coeffs)


def test_szego_first_step_by_hand():
    alpha = 0.3 - 0.4j
    state = cbe.szego_step(cbe.initial_state(1.0), alpha)
    assert np.allclose(state.phi.coeffs, [-np.conj(alpha), 1.0])
    assert np.allclose(state.phi_star.coeffs, [1.0, -alpha])


def test_reversal_invariant_after_fifty_steps():
    state = _evolve(_random_alphas(50, 3))
    rev = cbe.reversal(state.phi.coeffs)
    assert np.max(np.abs(rev - state.phi_star.coeffs)) < 1e-12


def test_szego_rejects_unit_disk_boundary():
    with pytest.raises(ValueError):
        cbe.szego_step(cbe.initial_state(1.0), 1.0 + 0j)


def test_full_kernel_matches_stepwise_evolution():
    alphas = _random_alphas(40, 9)
    state = _evolve(alphas)
    b = _kernels.szego_full_batch(alphas[None, :])[0]
    assert np.max(np.abs(b - state.phi_star.coeffs)) < 1e-12


def test_verblunsky_magnitude_and_mean():
    stream = GaussianStream(10, 0)
    draws = np.array([cbe.sample_verblunsky(3, 2.0, stream)
                      for _ in range(20000)])
    assert np.all(np.abs(draws) < 1.0)
    sq = np.abs(draws) ** 2
    se = np.std(sq, ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - 1.0 / 3.0) <= 3 * se  # 1/(1 + (j+1)/theta)

    stream = GaussianStream(10, 1)
    sq = np.abs([cbe.sample_verblunsky(0, 1.0, stream)
                 for _ in range(20000)]) ** 2
    se = np.std(sq, ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - 0.5) <= 3 * se  # Beta(1,1) is uniform


def test_secular_sample_invariants():
    for N, theta in ((1, 2.0), (5, 0.5), (24, 1.0)):
        s = cbe.sample_secular(N, theta, GaussianStream(77, N))
        assert s.coeffs.coeffs[0] == 1.0
        assert abs(abs(s.coeffs.coeffs[N]) - 1.0) < 1e-12
    s1 = cbe.sample_secular(1, 1.0, GaussianStream(5, 5))
    assert abs(s1.coeffs.coeffs[1] + s1.eta) < 1e-15  # chi_1 = 1 - eta z


def test_secular_matches_polynomial_identity():
    # chi coefficients equal Phi*_{N-1} - eta * (shifted Phi_{N-1}) exactly
    N, theta = 9, 0.7
    stream = GaussianStream(13, 0)
    alphas = cbe._verblunsky_vector(N - 1, theta, stream)
    eta = complex(stream.unit_phases(1)[0])
    state = cbe.initial_state(theta)
    for a in alphas:
        state = cbe.szego_step(state, a)
    direct = np.zeros(N + 1, dtype=np.complex128)
    direct[: N] += state.phi_star.coeffs
    direct[1:] -= eta * state.phi.coeffs
    s = cbe.sample_secular(N, theta, GaussianStream(13, 0))
    assert np.max(np.abs(s.coeffs.coeffs - direct)) < 1e-14


def test_coefficient_martingale_basics():
    assert cbe.coefficient_martingale(7, 0, 1.0, GaussianStream(1, 2)) == 1.0
    for n in (1, 3, 6):
        val = cbe.coefficient_martingale(n - 1, n, 0.5, GaussianStream(1, 3))
        assert val == 0.0


def test_martingale_update_identity_pathwise():
    # M_{n,N+1} = M_{n,N} - alpha_N conj(M_{N-n+1,N}) along one path
    alphas = _random_alphas(100, 21, scale=0.6)
    n = 4
    state = cbe.initial_state(1.0)
    for N, alpha in enumerate(alphas):
        before = state.phi_star.padded(max(n, N - n + 1))
        state = cbe.szego_step(state, alpha)
        after = state.phi_star.padded(n)
        predicted = before[n] - alpha * np.conj(before[N - n + 1]) \
            if N - n + 1 >= 0 else before[n]
        assert abs(after[n] - predicted) < 1e-12


def test_martingale_property_of_increments():
    """E[(M_{n,N+1} - M_{n,N}) f(past)] = 0 for bounded f of the past."""
    theta, n, N, reps = 0.8, 3, 12, 20000
    vals = np.empty(reps, dtype=np.complex128)
    for r in range(reps):
        stream = GaussianStream(271, r)
        alphas = cbe._verblunsky_vector(N + 1, theta, stream)
        b_now = _kernels.szego_full_batch(alphas[None, :N])[0]
        b_next = _kernels.szego_full_batch(alphas[None, : N + 1])[0]
        past = b_now[n]
        f = np.conj(past) / (1.0 + abs(past))  # bounded functional of F_N
        vals[r] = (b_next[n] - b_now[n]) * f
    for part in (vals.real, vals.imag):
        se = np.std(part, ddof=1) / math.sqrt(reps)
        assert abs(part.mean()) <= 3 * se


def test_block_paths_match_full_evolution():
    n, theta, seed = 8, 0.5, 9
    recs = [40, 71]
    low, high, etas = cbe.secular_coefficient_paths(n, theta, seed, 5, recs)
    for r in range(5):
        alphas = cbe._verblunsky_vector(recs[-1], theta, GaussianStream(seed, r))
        for i, t in enumerate(recs):
            b = _kernels.szego_full_batch(alphas[None, :t])[0]
            assert abs(low[i, r] - b[n]) < 1e-12
            assert abs(high[i, r] - b[t - n + 1]) < 1e-12


def test_block_paths_float32_agrees():
    low64, high64, e64 = cbe.secular_coefficient_paths(
        16, 0.5, 7, 40, [200, 600])
    low32, high32, e32 = cbe.secular_coefficient_paths(
        16, 0.5, 7, 40, [200, 600], dtype=np.float32)
    assert np.array_equal(e64, e32)
    assert np.max(np.abs(low64 - low32)) < 1e-4
    assert np.max(np.abs(high64 - high32)) < 1e-4


def test_sample_secular_batch_matches_single():
    coeffs = cbe.sample_secular_batch(12, 0.5, 31, 4)
    for r in range(4):
        single = cbe.sample_secular(12, 0.5, GaussianStream(31, r))
        assert np.max(np.abs(coeffs[r] - single.coeffs.coeffs)) < 1e-14


def test_expected_bracket_recursion_values():
    for theta in (0.5, 1.0, 2.0):
        for n in (1, 2, 9):
            assert abs(cbe.expected_bracket_dp(n, n, theta)
                       - theta / (theta + n)) < 1e-14
    assert abs(cbe.expected_bracket_dp(1, 2, 1.0) - 2.0 / 3.0) < 1e-14


def test_expected_bracket_matches_monte_carlo():
    theta, n, N, reps = 0.5, 3, 24, 20000
    vals = np.abs([cbe.coefficient_martingale(N, n, theta, GaussianStream(6, r))
                   for r in range(reps)]) ** 2
    se = np.std(vals, ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - cbe.expected_bracket_dp(n, N, theta)) <= 3 * se


def test_bracket_targets_column_roll_consistent():
    theta = 0.7
    pairs = [(1, 1), (2, 5), (3, 17), (17, 40)]
    targets = cbe.expected_bracket_targets(theta, pairs)
    for n, N in pairs:
        assert abs(targets[(n, N)]
                   - cbe.expected_bracket_dp(n, N, theta)) < 1e-14


def test_expected_coupled_gap_matches_monte_carlo():
    theta, n, N, reps = 0.5, 8, 96, 4000
    low, high, etas = cbe.secular_coefficient_paths(
        n, theta, 17, reps, [N - 1, 8 * N])
    c_n = cbe.secular_coeff_from_path(low[0], high[0], etas[0])
    gap = np.abs(low[1] - c_n) ** 2
    se = np.std(gap, ddof=1) / math.sqrt(reps)
    assert abs(gap.mean() - cbe.expected_coupled_gap(n, N, theta)) <= 3 * se


def test_haake_values():
    for n in (0, 1, 4, 9):
        assert abs(cbe.haake_second_moment(n, 9, 1.0) - 1.0) < 1e-12
    assert abs(cbe.haake_second_moment(0, 5, 0.3) - 1.0) < 1e-12
    assert abs(cbe.haake_second_moment(5, 5, 0.3) - 1.0) < 1e-12
    assert abs(cbe.haake_second_moment(1, 2, 2.0) - 4.0 / 3.0) < 1e-14


def test_cross_identity_small_grid():
    worst = 0.0
    for theta in (0.5, 1.0, 2.0):
        for N in range(2, 13):
            for n in range(1, N):
                lhs = cbe.expected_bracket_dp(n, N - 1, theta) + \
                    cbe.expected_bracket_dp(N - n, N - 1, theta)
                rhs = cbe.haake_second_moment(n, N, theta)
                worst = max(worst, abs(lhs - rhs) / rhs)
    assert worst < 1e-12


def test_haar_oracle_invariants_and_moment():
    reps = 3000
    c1 = np.empty(reps, dtype=np.complex128)
    for r in range(reps):
        s = cbe.haar_unitary_oracle(6, GaussianStream(42, r))
        assert s.coeffs.coeffs[0] == 1.0
        assert s.eta is None
        c1[r] = s.coeffs.coeffs[1]
    sq = np.abs(c1) ** 2
    se = np.std(sq, ddof=1) / math.sqrt(reps)
    assert abs(sq.mean() - 1.0) <= 3 * se
    with pytest.raises(ValueError):
        cbe.haar_unitary_oracle(65, GaussianStream(0, 0))


def test_rejection_oracle_moment_and_rate():
    theta, reps = 0.5, 2000
    vals = np.empty(reps)
    trials_total = 0
    stream = GaussianStream(12, 0)
    for r in range(reps):
        angles, trials = cbe.rejection_angles(2, theta, stream)
        trials_total += trials
        vals[r] = abs(np.exp(-1j * angles).sum()) ** 2
    se = np.std(vals, ddof=1) / math.sqrt(reps)
    target = cbe.haake_second_moment(1, 2, theta)
    assert abs(vals.mean() - target) <= 3 * se
    assert trials_total >= reps
    s = cbe.rejection_oracle_small_n(3, 1.0, GaussianStream(1, 1))
    assert abs(abs(s.coeffs.coeffs[3]) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        cbe.rejection_oracle_small_n(4, 1.0, GaussianStream(0, 0))
