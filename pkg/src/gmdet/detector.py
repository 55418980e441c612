"""Maximum-likelihood sequence detection on the noise-whitened trellis.

The branch metric is matrix-inversion free: with u_k the received window
passed through the whitening filter [-b^T 1],

    metric = log sigma^2 + (u_k - filtered_mean)^2 / sigma^2.

Summed along a state path this equals the exact Gaussian log-likelihood
ratio metric up to a path-independent constant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .channel import NoisySignal
from .trellis import BranchStats, Trellis


@dataclass(frozen=True)
class DecodeResult:
    """Decoded bits, the winning state path and its accumulated metric."""

    bits: np.ndarray
    path: np.ndarray
    metric: float


def branch_metric(stats: BranchStats, window: np.ndarray,
                  ar_coeffs: np.ndarray) -> float:
    """Metric of one branch against an (L+1)-sample received window."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != stats.mean_vector.shape:
        raise ValueError(
            f"window must have {stats.mean_vector.size} samples")
    wvec = np.concatenate([-np.asarray(ar_coeffs, float), [1.0]])
    u = wvec @ window
    var = stats.innovation_std ** 2
    return float(np.log(var) + (u - stats.filtered_mean) ** 2 / var)


def whiten(samples: np.ndarray, ar_coeffs: np.ndarray) -> np.ndarray:
    """Apply [-b^T 1] to each sliding window, zero-padding before index 0."""
    samples = np.asarray(samples, dtype=np.float64)
    phi = np.asarray(ar_coeffs, dtype=np.float64)[::-1]
    h = np.concatenate([[1.0], -phi])  # u_k = z_k - sum_j phi_j z_{k-j}
    return np.convolve(samples, h)[:samples.size]


@njit(cache=True)
def _viterbi(u, log_var, inv_var, fmean, num_states, start_state):
    """Forward pass plus traceback.

    Survivor ties break toward the lower-numbered predecessor, and the
    terminal state is the minimum-metric one (lowest index on ties).
    """
    n = u.shape[0]
    half = num_states // 2
    pm = np.full(num_states, np.inf)
    pm[start_state] = 0.0
    new_pm = np.empty(num_states)
    survivors = np.zeros((n, num_states), dtype=np.uint8)
    for k in range(n):
        uk = u[k]
        for t in range(num_states):
            p0 = t >> 1
            p1 = p0 + half
            bw0 = (p0 << 1) | (t & 1)
            bw1 = (p1 << 1) | (t & 1)
            d0 = uk - fmean[bw0]
            d1 = uk - fmean[bw1]
            m0 = pm[p0] + (log_var[bw0] + d0 * d0 * inv_var[bw0])
            m1 = pm[p1] + (log_var[bw1] + d1 * d1 * inv_var[bw1])
            if m1 < m0:
                new_pm[t] = m1
                survivors[k, t] = 1
            else:
                new_pm[t] = m0
                survivors[k, t] = 0
        for t in range(num_states):
            pm[t] = new_pm[t]
    best = 0
    for t in range(1, num_states):
        if pm[t] < pm[best]:
            best = t
    path = np.empty(n, dtype=np.int32)
    bits = np.empty(n, dtype=np.uint8)
    s = best
    for k in range(n - 1, -1, -1):
        path[k] = s
        bits[k] = s & 1
        s = (s >> 1) + (half if survivors[k, s] else 0)
    return bits, path, pm[best]


def metric_tables(trellis: Trellis):
    """Per-branch (log variance, inverse variance, filtered mean) arrays."""
    var = trellis.innovation_std ** 2
    return np.log(var), 1.0 / var, trellis.filtered_mean


def viterbi_decode(trellis: Trellis, signal, known_start: int = 0) -> DecodeResult:
    """Globally optimal state sequence for ``signal`` from a known start.

    ``signal`` is a NoisySignal or a plain sample array.  Windows reaching
    before index 0 use zero-padded samples, matching the all-zero preamble
    convention.
    """
    samples = signal.samples if isinstance(signal, NoisySignal) else signal
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 1:
        raise ValueError("signal must contain at least one sample")
    if not 0 <= known_start < trellis.num_states:
        raise ValueError(f"known_start {known_start} out of range")
    u = whiten(samples, trellis.params.ar_coeffs)
    log_var, inv_var, fmean = metric_tables(trellis)
    bits, path, metric = _viterbi(u, log_var, inv_var, fmean,
                                  trellis.num_states, known_start)
    return DecodeResult(bits=bits, path=path, metric=float(metric))


# internal fast path used by the Monte Carlo harness
def decode_bits(trellis: Trellis, samples: np.ndarray,
                tables=None) -> np.ndarray:
    if tables is None:
        tables = metric_tables(trellis)
    u = whiten(samples, trellis.params.ar_coeffs)
    bits, _, _ = _viterbi(u, tables[0], tables[1], tables[2],
                          trellis.num_states, 0)
    return bits
