"""Compiled inner loops for the Monte Carlo paths.

Every kernel here has a slow, obviously-correct counterpart among the public
operations (series_exp, constrained series, szego_step); the test suite pins
each kernel against its counterpart.  Layouts are chosen for the two hot
regimes: per-replicate scalar loops for triangular recurrences, and a
lane-blocked sliding-window layout for the long Szego coefficient evolution,
whose inner loop vectorizes across replicate lanes.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# Working-set / SIMD tuning constants for the lane kernel.
LANES = 64
SLIDE_CHUNK = 2048


@njit(cache=True)
def _exp_one(a, c):
    """exp recurrence: n c_n = sum_k k a_k c_{n-k}; a[0] ignored, c[0]=1."""
    order = a.shape[0] - 1
    c[0] = 1.0
    for n in range(1, order + 1):
        s = 0.0j
        for k in range(1, n + 1):
            s += k * a[k] * c[n - k]
        c[n] = s / n


@njit(cache=True, parallel=True)
def exp_batch(a):
    """Row-wise exp recurrence; a is (R, order+1) complex with a[:,0]=0."""
    R = a.shape[0]
    c = np.empty_like(a)
    for r in prange(R):
        _exp_one(a[r], c[r])
    return c


@njit(cache=True)
def _constrained_sweep_one(a, c, snap):
    """Incremental exponential over monomials, recording constrained reads.

    State c holds coefficients of exp(sum_{k<=q} a_k z^k) as q grows.  Before
    monomial q is applied the state is the q-1 constrained series, so
    snap[q] = c[n-q] equals the coefficient of z^{n-q} with parts <= q-1.
    snap[0] is unused.  The factor weights a^j/j! are chained as
    term *= a/j, which stays bounded by e^|a| (no factorial overflow) and
    underflows cleanly; chains below 1e-30 are dropped.
    """
    n = a.shape[0] - 1
    c[0] = 1.0
    for m in range(1, n + 1):
        c[m] = 0.0
    for q in range(1, n + 1):
        snap[q] = c[n - q]
        aq = a[q]
        if aq != 0.0:
            for m in range(n, q - 1, -1):
                acc = c[m]
                term = 1.0 + 0.0j
                for j in range(1, m // q + 1):
                    term *= aq / j
                    if abs(term.real) + abs(term.imag) < 1e-30:
                        break
                    acc += term * c[m - j * q]
                c[m] = acc


@njit(cache=True, parallel=True)
def constrained_sweep_batch(a):
    """Returns (coeffs, snap): full series and snap[r, q] = c_{n-q, q-1}."""
    R = a.shape[0]
    n = a.shape[1] - 1
    c = np.empty((R, n + 1), dtype=np.complex128)
    snap = np.zeros((R, n + 1), dtype=np.complex128)
    for r in prange(R):
        _constrained_sweep_one(a[r], c[r], snap[r])
    return c, snap


@njit(cache=True, fastmath=True)
def _sweep_lanes_group(are, aim, cre, cim, snre, snim, tre, tim):
    """Lane-parallel monomial sweep; a* are (n+1, G), state c* are (n+1, G).

    Same recurrence as _constrained_sweep_one with the replicate lane as the
    inner (vectorized) dimension; a j-chain is abandoned once every lane's
    term magnitude is negligible.
    """
    n = are.shape[0] - 1
    G = are.shape[1]
    for g in range(G):
        cre[0, g] = 1.0
        cim[0, g] = 0.0
    for m in range(1, n + 1):
        for g in range(G):
            cre[m, g] = 0.0
            cim[m, g] = 0.0
    for q in range(1, n + 1):
        for g in range(G):
            snre[q, g] = cre[n - q, g]
            snim[q, g] = cim[n - q, g]
        for m in range(n, q - 1, -1):
            for g in range(G):
                tre[g] = 1.0
                tim[g] = 0.0
            for j in range(1, m // q + 1):
                inv = 1.0 / j
                src = m - j * q
                mag = 0.0
                for g in range(G):
                    ar = are[q, g] * inv
                    ai = aim[q, g] * inv
                    xr = tre[g]
                    xi = tim[g]
                    tr = xr * ar - xi * ai
                    ti = xr * ai + xi * ar
                    tre[g] = tr
                    tim[g] = ti
                    cre[m, g] += tr * cre[src, g] - ti * cim[src, g]
                    cim[m, g] += tr * cim[src, g] + ti * cre[src, g]
                    mag += abs(tr) + abs(ti)
                if mag < 1e-30:
                    break


@njit(cache=True, parallel=True)
def sweep_lanes_batch(ARE, AIM, CRE, CIM, SNRE, SNIM):
    ngroups, npts, G = ARE.shape
    for k in prange(ngroups):
        tre = np.empty(G)
        tim = np.empty(G)
        _sweep_lanes_group(ARE[k], AIM[k], CRE[k], CIM[k], SNRE[k], SNIM[k],
                           tre, tim)


@njit(cache=True)
def cycle_sweep_table(theta, n_max):
    """raw[r, m] = [z^m] exp(theta * sum_{k<=r} z^k/k) for 0 <= r, m <= n_max.

    Dividing row r by gen_binom(m) turns it into the longest-cycle CDF
    P(L^(m) <= r); the sweep multiplies in one monomial factor per step.
    """
    u = np.zeros(n_max + 1)
    u[0] = 1.0
    raw = np.empty((n_max + 1, n_max + 1))
    raw[0, 0] = 1.0
    for m in range(1, n_max + 1):
        raw[0, m] = 0.0
    for r in range(1, n_max + 1):
        lam = theta / r
        for m in range(n_max, r - 1, -1):
            acc = u[m]
            term = 1.0
            for j in range(1, m // r + 1):
                term *= lam / j
                if term < 1e-30 * acc:
                    break
                acc += term * u[m - j * r]
            u[m] = acc
        for m in range(n_max + 1):
            raw[r, m] = u[m]
    return raw


@njit(cache=True)
def _szego_full_one(alphas, b):
    """Full coefficient evolution of Phi*_t; b has length nsteps+1, b[0]=1.

    Step at degree d:  b'_j = b_j - alpha * conj(b_{d+1-j}), updated via the
    (j, d+1-j) pairing so the sweep is in place.
    """
    nsteps = alphas.shape[0]
    b[0] = 1.0
    for j in range(1, b.shape[0]):
        b[j] = 0.0
    for d in range(nsteps):
        a = alphas[d]
        top = d + 1
        half = (top + 1) // 2
        for j in range(half):
            x = b[j]
            y = b[top - j]
            b[j] = x - a * np.conj(y)
            b[top - j] = y - a * np.conj(x)
        if top % 2 == 0:
            x = b[half]
            b[half] = x - a * np.conj(x)


@njit(cache=True, parallel=True)
def szego_full_batch(alphas):
    """Final Phi*_N coefficients for each replicate; alphas is (R, N)."""
    R = alphas.shape[0]
    N = alphas.shape[1]
    b = np.empty((R, N + 1), dtype=np.complex128)
    for r in prange(R):
        _szego_full_one(alphas[r], b[r])
    return b


@njit(cache=True, fastmath=True)
def _szego_lanes_group(are, aim, n, lre, lim, wre, wim, chunk, t_start,
                       rec_steps, low_re, low_im, high_re, high_im):
    """Block evolution of the low/high coefficient windows, G lanes at a time.

    After t steps the state of lane g is b = coeffs of Phi*_t; the kernel
    tracks l_j = b_j (j = 0..n) and v_i = conj(b_{t-i}) (i = 0..n-1), valid
    once t >= 2n.  One step with alpha:
        s_i = v_{i-1} (s_0 = 0);  l_i -= alpha s_i;  v'_i = s_i - conj(alpha) l_i
    v lives in a sliding window w at offset `base`, so the shift is free and
    the lane loop carries no dependencies.  At each recorded step the pair
    (b_n, b_{t-n+1}) per lane is stored.
    """
    nsteps = are.shape[0]
    G = are.shape[1]
    base = chunk
    rp = 0
    nrec = rec_steps.shape[0]
    t = t_start
    for step in range(nsteps):
        if base == 0:
            for i in range(n - 1, -1, -1):
                for g in range(G):
                    wre[chunk + i, g] = wre[i, g]
                    wim[chunk + i, g] = wim[i, g]
            base = chunk
        p = base - 1
        for g in range(G):
            wre[p, g] = 0.0
            wim[p, g] = 0.0
        for i in range(n):
            for g in range(G):
                ar = are[step, g]
                ai = aim[step, g]
                sr = wre[p + i, g]
                si = wim[p + i, g]
                xr = lre[i, g]
                xi = lim[i, g]
                wre[p + i, g] = sr - (ar * xr + ai * xi)
                wim[p + i, g] = si - (ar * xi - ai * xr)
                lre[i, g] = xr - (ar * sr - ai * si)
                lim[i, g] = xi - (ar * si + ai * sr)
        for g in range(G):
            ar = are[step, g]
            ai = aim[step, g]
            sr = wre[p + n, g]
            si = wim[p + n, g]
            lre[n, g] = lre[n, g] - (ar * sr - ai * si)
            lim[n, g] = lim[n, g] - (ar * si + ai * sr)
        base = p
        t += 1
        if rp < nrec and t == rec_steps[rp]:
            q = base + n - 1
            for g in range(G):
                low_re[rp, g] = lre[n, g]
                low_im[rp, g] = lim[n, g]
                high_re[rp, g] = wre[q, g]
                high_im[rp, g] = -wim[q, g]
            rp += 1


@njit(cache=True, parallel=True)
def szego_lanes_batch(ARE, AIM, n, LR, LI, WR, WI, chunk, t_start, rec_steps,
                      LOW_RE, LOW_IM, HIGH_RE, HIGH_IM):
    for k in prange(ARE.shape[0]):
        _szego_lanes_group(ARE[k], AIM[k], n, LR[k], LI[k], WR[k], WI[k],
                           chunk, t_start, rec_steps,
                           LOW_RE[k], LOW_IM[k], HIGH_RE[k], HIGH_IM[k])


def warmup():
    """Force-compile all kernels on tiny inputs."""
    a = np.zeros((2, 4), dtype=np.complex128)
    a[:, 1] = 0.5j
    exp_batch(a)
    constrained_sweep_batch(a)
    cycle_sweep_table(1.0, 3)
    sweep_lanes_batch(np.zeros((1, 4, 2)), np.full((1, 4, 2), 0.1),
                      np.zeros((1, 4, 2)), np.zeros((1, 4, 2)),
                      np.zeros((1, 4, 2)), np.zeros((1, 4, 2)))
    al = np.full((2, 9), 0.1 + 0.05j)
    szego_full_batch(al)
    n, chunk, G = 2, 4, 2
    rec = np.array([6], dtype=np.int64)
    for dtype in (np.float64, np.float32):
        LR = np.zeros((1, n + 1, G), dtype)
        LI = np.zeros((1, n + 1, G), dtype)
        WR = np.zeros((1, n + chunk, G), dtype)
        WI = np.zeros((1, n + chunk, G), dtype)
        LR[:, 0, :] = 1.0
        out = [np.zeros((1, 1, G), dtype) for _ in range(4)]
        szego_lanes_batch(np.full((1, 2, G), 0.1, dtype),
                          np.full((1, 2, G), 0.0, dtype), n,
                          LR, LI, WR, WI, chunk, 4, rec, *out)
