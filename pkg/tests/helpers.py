"""Shared test oracles: quadrature, exhaustive search, dense linear algebra
and the explicit error-event power series."""
from __future__ import annotations

import numpy as np
from scipy import integrate

from gmdet.channel import ChannelParams, ConfigurationError
from gmdet.detector import metric_tables, whiten
from gmdet.trellis import Trellis, branch_covariance


def quadrature_pair_integral(alpha, beta, m, m_hat, gamma):
    """Adaptive quadrature of the two-Gaussian product integrand."""
    def integrand(x):
        return np.exp(-0.5 * (alpha * (x - m) ** 2 + beta * (x - m_hat) ** 2)) \
            / (np.sqrt(2 * np.pi) * gamma)

    value, _ = integrate.quad(integrand, -np.inf, np.inf,
                              epsabs=1e-14, epsrel=1e-12)
    return value


def brute_force_decode(trellis: Trellis, samples, known_start=0):
    """Exhaustive minimization over all bit sequences.

    Uses the same per-branch arithmetic and the same left-to-right metric
    accumulation as the Viterbi kernel, so the optimal metric matches
    bitwise, not just approximately.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    u = whiten(samples, trellis.params.ar_coeffs)
    log_var, inv_var, fmean = metric_tables(trellis)
    mask = trellis.num_states - 1
    count = 2 ** n
    seqs = ((np.arange(count)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int64)
    state = np.full(count, known_start, dtype=np.int64)
    total = np.zeros(count)
    for k in range(n):
        bw = (state << 1) | seqs[:, k]
        d = u[k] - fmean[bw]
        total = total + (log_var[bw] + d * d * inv_var[bw])
        state = bw & mask
    best = int(np.argmin(total))
    return seqs[best].astype(np.uint8), float(total[best])


def full_branch_metric(stats, window, c_minor, ar_coeffs):
    """Unsimplified Gaussian metric: log-determinant ratio plus the
    difference of the full and minor quadratic forms."""
    window = np.asarray(window, dtype=np.float64)
    L = len(ar_coeffs)
    C = branch_covariance(stats, c_minor, ar_coeffs)
    dz = window - stats.mean_vector
    dz_minor = dz[:L]
    log_det = np.log(np.linalg.det(C) / np.linalg.det(c_minor))
    return float(log_det
                 + dz @ np.linalg.solve(C, dz)
                 - dz_minor @ np.linalg.solve(c_minor, dz_minor))


def truncated_event_sum(pt, max_len):
    """Error-event series truncated at ``max_len`` branches.

    Walks the bad subgraph length by length carrying (value, derivative)
    pairs, which counts erroneous bits explicitly instead of using the
    closed-form resolvent.
    """
    v = pt.v_bb
    vp = pt.vprime_bb
    b_vec = pt.v_gb.sum(axis=0)
    c_vec = pt.v_bg.sum(axis=1)
    total = 0.0
    x = c_vec.copy()
    d = np.zeros_like(c_vec)
    for _ in range(2, max_len + 1):
        total += b_vec @ x + b_vec @ d
        x, d = v @ x, v @ d + vp @ x
    return total / pt.num_states


def random_spd(rng, n, cond=10.0):
    """Random symmetric positive definite matrix with bounded conditioning."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(1.0, cond, size=n)
    return (q * eig) @ q.T


def random_stable_params(rng, max_noise_memory=3, max_isi_memory=2):
    """Random channel parameters with a stable noise recursion."""
    L = int(rng.integers(1, max_noise_memory + 1))
    I = int(rng.integers(0, max_isi_memory + 1))
    while True:
        b = rng.uniform(-0.9, 0.9, size=L)
        y_table = rng.normal(0.0, 2.0, size=2 ** (I + 1))
        sigma2 = rng.uniform(0.3, 4.0, size=2 ** (I + 1))
        try:
            return ChannelParams(I, L, b, y_table, sigma2)
        except ConfigurationError:
            continue  # unstable draw, try again


def paper_params(num_states=8, scale=1.0):
    """The two reference configurations used across the test suite."""
    if num_states == 8:
        return ChannelParams.linear(1, 2, [0.1, 0.5], [1.0, 2.0, 3.0, 4.0],
                                    [2.0, 1.0], scale)
    if num_states == 16:
        return ChannelParams.linear(1, 3, [0.1, 0.3, 0.5],
                                    [1.0, 2.0, 3.0, 4.0], [2.0, 1.0], scale)
    raise ValueError(num_states)
