"""ISI channel with signal-dependent autoregressive Gaussian noise.

The channel maps a bit stream ``a`` to samples ``z_k = y(a_{k-I..k}) + n_k``
where the noise follows an order-L autoregression whose innovation standard
deviation depends on the same local bit pattern:

    n_k = sum_j b[j] * n_{k-L+j} + sigma(a_{k-I..k}) * w_k,   w_k ~ N(0, 1)

Bit patterns are packed as integers with the newest bit in the least
significant position; every table in this package shares that convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


class ConfigurationError(ValueError):
    """Invalid channel or experiment configuration."""


BURN_IN_PER_LAG = 10  # discarded startup samples per unit of noise memory


def pattern_index(bits) -> int:
    """Pack a bit pattern (ordered oldest to newest) into a table index."""
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ConfigurationError(f"pattern bits must be 0/1, got {b!r}")
        idx = (idx << 1) | int(b)
    return idx


@dataclass(frozen=True)
class ChannelParams:
    """Channel parameter set.

    Attributes:
        isi_memory: number of past bits (beyond the current one) entering
            the noiseless output, often written I.
        noise_memory: autoregression order L (at least 1).
        ar_coeffs: L coefficients, oldest lag first; ``ar_coeffs[0]``
            multiplies ``n_{k-L}`` and ``ar_coeffs[-1]`` multiplies
            ``n_{k-1}``.
        y_table: noiseless output for each of the 2**(I+1) bit patterns.
        sigma2_table: innovation variance for each pattern (all positive).
        signal_weights: optional linear-form weights; ``signal_weights[i]``
            multiplies the bit i steps in the past (index 0 = newest).
        signal_scale: scale factor of the linear form, if any.
    """

    isi_memory: int
    noise_memory: int
    ar_coeffs: np.ndarray
    y_table: np.ndarray
    sigma2_table: np.ndarray
    signal_weights: np.ndarray | None = None
    signal_scale: float | None = None

    def __post_init__(self):
        if self.isi_memory < 0:
            raise ConfigurationError("isi_memory must be non-negative")
        if self.noise_memory < 1:
            raise ConfigurationError("noise_memory must be a positive integer")
        ar = np.atleast_1d(np.asarray(self.ar_coeffs, dtype=np.float64))
        if ar.shape != (self.noise_memory,):
            raise ConfigurationError(
                f"expected {self.noise_memory} AR coefficients, got {ar.shape}")
        npat = self.pattern_count
        yt = np.asarray(self.y_table, dtype=np.float64)
        s2 = np.asarray(self.sigma2_table, dtype=np.float64)
        if yt.shape != (npat,):
            raise ConfigurationError(f"y_table must have {npat} entries")
        if s2.shape != (npat,):
            raise ConfigurationError(f"sigma2_table must have {npat} entries")
        if not np.all(s2 > 0):
            raise ConfigurationError("all innovation variances must be positive")
        if not _ar_is_stable(ar):
            raise ConfigurationError(
                "unstable AR filter: the noise recursion has no finite "
                "stationary variance")
        for name, arr in (("ar_coeffs", ar), ("y_table", yt), ("sigma2_table", s2)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.signal_weights is not None:
            w = np.asarray(self.signal_weights, dtype=np.float64)
            if w.shape != (self.isi_memory + 1,):
                raise ConfigurationError(
                    f"signal_weights must have {self.isi_memory + 1} entries")
            w.setflags(write=False)
            object.__setattr__(self, "signal_weights", w)

    @property
    def pattern_count(self) -> int:
        return 2 ** (self.isi_memory + 1)

    @property
    def num_states(self) -> int:
        return 2 ** (self.noise_memory + self.isi_memory)

    @classmethod
    def linear(cls, isi_memory, noise_memory, ar_coeffs, sigma2_table,
               weights, scale=1.0) -> "ChannelParams":
        """Build parameters with y = scale * sum_i weights[i] * a_{k-i}."""
        weights = np.asarray(weights, dtype=np.float64)
        npat = 2 ** (isi_memory + 1)
        if weights.shape != (isi_memory + 1,):
            raise ConfigurationError(
                f"signal weights must have {isi_memory + 1} entries")
        yt = np.zeros(npat)
        for p in range(npat):
            yt[p] = scale * sum(weights[i] * ((p >> i) & 1)
                                for i in range(isi_memory + 1))
        return cls(isi_memory, noise_memory, ar_coeffs, yt, sigma2_table,
                   signal_weights=weights, signal_scale=float(scale))

    def with_scale(self, scale: float) -> "ChannelParams":
        """Return a copy with the linear signal map rescaled to ``scale``."""
        if self.signal_weights is None:
            raise ConfigurationError(
                "with_scale requires a linear signal map")
        return ChannelParams.linear(self.isi_memory, self.noise_memory,
                                    self.ar_coeffs, self.sigma2_table,
                                    self.signal_weights, scale)


@dataclass(frozen=True)
class BitSequence:
    """Bit stream with a leading run of known zero bits."""

    bits: np.ndarray
    preamble_len: int = 0

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ConfigurationError("bits must be one-dimensional")
        if bits.size and bits.max() > 1:
            raise ConfigurationError("bits must be 0/1 valued")
        if not 0 <= self.preamble_len <= bits.size:
            raise ConfigurationError("preamble_len out of range")
        if np.any(bits[:self.preamble_len] != 0):
            raise ConfigurationError("preamble bits must all be zero")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    def validate_for(self, params: ChannelParams) -> None:
        need = params.noise_memory + params.isi_memory
        if self.preamble_len < need:
            raise ConfigurationError(
                f"preamble must cover at least L+I = {need} bits so the "
                f"initial detector state is known")

    @classmethod
    def with_preamble(cls, payload, params: ChannelParams) -> "BitSequence":
        """Prepend the minimal all-zero preamble to ``payload``."""
        pre = params.noise_memory + params.isi_memory
        payload = np.asarray(payload, dtype=np.uint8)
        return cls(np.concatenate([np.zeros(pre, dtype=np.uint8), payload]), pre)


@dataclass(frozen=True)
class NoisySignal:
    """Channel output samples aligned index-for-index with the input bits."""

    samples: np.ndarray
    rng_seed: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)


def _ar_is_stable(ar_coeffs: np.ndarray) -> bool:
    """True when the AR recursion n_k = sum_j phi_j n_{k-j} + e_k is stable.

    Stability is decided by the companion-matrix eigenvalues (all strictly
    inside the unit circle), with phi_j = ar_coeffs[L-j].
    """
    phi = ar_coeffs[::-1]  # phi[0] multiplies n_{k-1}
    L = phi.size
    if not np.all(np.isfinite(phi)):
        return False
    if np.allclose(phi, 0.0):
        return True
    comp = np.zeros((L, L))
    comp[0, :] = phi
    if L > 1:
        comp[1:, :-1] = np.eye(L - 1)
    return bool(np.max(np.abs(np.linalg.eigvals(comp))) < 1.0)


def pattern_indices(bits: np.ndarray, isi_memory: int) -> np.ndarray:
    """Per-sample pattern table index, zero-padding bits before index 0."""
    bits = np.asarray(bits, dtype=np.int64)
    idx = np.zeros(bits.size, dtype=np.int64)
    for i in range(isi_memory + 1):
        shifted = np.zeros(bits.size, dtype=np.int64)
        shifted[i:] = bits[:bits.size - i]
        idx += shifted << i
    return idx


def noiseless_output(params: ChannelParams, pattern) -> float:
    """Noiseless channel output for one (I+1)-bit pattern.

    ``pattern`` is either a packed table index or an iterable of bits
    ordered oldest to newest.
    """
    if isinstance(pattern, (int, np.integer)):
        idx = int(pattern)
        if not 0 <= idx < params.pattern_count:
            raise ConfigurationError(f"pattern index {idx} out of range")
    else:
        pattern = list(pattern)
        if len(pattern) != params.isi_memory + 1:
            raise ConfigurationError(
                f"pattern must have {params.isi_memory + 1} bits, "
                f"got {len(pattern)}")
        idx = pattern_index(pattern)
    return float(params.y_table[idx])


@njit(cache=True)
def _ar_noise(w, phi, sigma, sigma0, burn_in):
    """Run the noise recursion; returns samples after the burn-in.

    phi[0] multiplies n_{k-1}.  The first ``burn_in`` innovations drive the
    recursion with the all-zero-pattern deviation ``sigma0`` and are
    discarded.
    """
    L = phi.shape[0]
    n_out = w.shape[0] - burn_in
    out = np.empty(n_out)
    hist = np.zeros(L)  # hist[j] = n_{k-1-j}
    for k in range(burn_in):
        acc = 0.0
        for j in range(L):
            acc += phi[j] * hist[j]
        nk = acc + sigma0 * w[k]
        for j in range(L - 1, 0, -1):
            hist[j] = hist[j - 1]
        hist[0] = nk
    for k in range(n_out):
        acc = 0.0
        for j in range(L):
            acc += phi[j] * hist[j]
        nk = acc + sigma[k] * w[burn_in + k]
        for j in range(L - 1, 0, -1):
            hist[j] = hist[j - 1]
        hist[0] = nk
        out[k] = nk
    return out


def generate_with_rng(params: ChannelParams, bits: BitSequence,
                      rng: np.random.Generator) -> np.ndarray:
    """Generate channel output samples, consuming ``rng``.

    Draws exactly ``BURN_IN_PER_LAG*L + len(bits)`` standard normals in one
    call to ``rng.standard_normal``; the first ``BURN_IN_PER_LAG*L`` drive a
    discarded burn-in computed with the all-zero-pattern statistics.
    """
    bits.validate_for(params)
    pat = pattern_indices(bits.bits, params.isi_memory)
    y = params.y_table[pat]
    sigma = np.sqrt(params.sigma2_table[pat])
    burn = BURN_IN_PER_LAG * params.noise_memory
    w = rng.standard_normal(burn + len(bits))
    phi = np.ascontiguousarray(params.ar_coeffs[::-1])
    noise = _ar_noise(w, phi, sigma, float(np.sqrt(params.sigma2_table[0])), burn)
    return y + noise


def generate(params: ChannelParams, bits: BitSequence, seed) -> NoisySignal:
    """Generate one noisy channel output block.

    The random stream is ``np.random.default_rng(seed)`` (PCG64); identical
    (params, bits, seed) always produce bitwise-identical output.  ``seed``
    may be an integer or a ``np.random.SeedSequence``.
    """
    if isinstance(seed, np.random.SeedSequence):
        seed_id = int(seed.generate_state(1, np.uint64)[0])
        rng = np.random.default_rng(seed)
    else:
        seed_id = int(seed)
        rng = np.random.default_rng(seed_id)
    z = generate_with_rng(params, bits, rng)
    return NoisySignal(z, seed_id)


def stationary_noise_variance(params: ChannelParams) -> float:
    """Stationary variance of the noise recursion.

    The innovation variance is averaged over all bit patterns and the
    order-L Yule-Walker system is solved for the lag-0 autocovariance.
    """
    L = params.noise_memory
    phi = params.ar_coeffs[::-1]  # phi[j-1] multiplies n_{k-j}
    s2bar = float(params.sigma2_table.mean())
    # Unknowns gamma_0..gamma_L; row m encodes
    # gamma_m - sum_j phi_j gamma_|m-j| = s2bar * (m == 0).
    A = np.zeros((L + 1, L + 1))
    rhs = np.zeros(L + 1)
    for m in range(L + 1):
        A[m, m] += 1.0
        for j in range(1, L + 1):
            A[m, abs(m - j)] -= phi[j - 1]
        rhs[m] = s2bar if m == 0 else 0.0
    gamma = np.linalg.solve(A, rhs)
    return float(gamma[0])
