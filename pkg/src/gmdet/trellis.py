"""Shift-register trellis and per-branch Gaussian statistics.

A state packs the last L+I bits with the newest bit in the least significant
position, so there are M = 2**(L+I) states.  A branch is identified by its
(L+I+1)-bit history word ``bw``: the source state is ``bw >> 1``, the
destination is ``bw & (M-1)`` and the input bit is ``bw & 1``.  Branch words
double as indices into the per-branch statistic arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, ConfigurationError


@dataclass(frozen=True)
class BranchStats:
    """Gaussian statistics attached to one trellis branch.

    ``mean_vector`` holds the noiseless outputs seen through the branch
    window (oldest first, length L+1) and ``filtered_mean`` is the same
    vector passed through the noise-whitening filter [-b^T 1].
    """

    filtered_mean: float
    innovation_std: float
    mean_vector: np.ndarray


@dataclass(frozen=True)
class Branch:
    from_state: int
    to_state: int
    bits: int  # (L+I+1)-bit history word, newest bit in the LSB
    input_bit: int
    stats: BranchStats


@dataclass(frozen=True)
class Trellis:
    """Immutable branch table shared by the detector and the bound engine.

    Arrays are indexed by branch word; ``filtered_mean[bw]`` and
    ``innovation_std[bw]`` feed both the decoding metric and the pairwise
    error factors.
    """

    params: ChannelParams
    num_states: int
    filtered_mean: np.ndarray
    innovation_std: np.ndarray
    mean_vectors: np.ndarray

    @property
    def num_branches(self) -> int:
        return 2 * self.num_states

    def branch_word(self, from_state: int, input_bit: int) -> int:
        return (from_state << 1) | input_bit

    def to_state(self, branch_word: int) -> int:
        return branch_word & (self.num_states - 1)

    def from_state(self, branch_word: int) -> int:
        return branch_word >> 1

    def predecessors(self, state: int) -> tuple[int, int]:
        """The two source states feeding ``state``, in increasing order."""
        low = state >> 1
        return low, low + self.num_states // 2

    def stats(self, branch_word: int) -> BranchStats:
        return BranchStats(
            filtered_mean=float(self.filtered_mean[branch_word]),
            innovation_std=float(self.innovation_std[branch_word]),
            mean_vector=self.mean_vectors[branch_word].copy(),
        )

    def branch(self, branch_word: int) -> Branch:
        if not 0 <= branch_word < self.num_branches:
            raise ConfigurationError(f"branch word {branch_word} out of range")
        return Branch(
            from_state=self.from_state(branch_word),
            to_state=self.to_state(branch_word),
            bits=branch_word,
            input_bit=branch_word & 1,
            stats=self.stats(branch_word),
        )

    def outgoing(self, state: int) -> tuple[Branch, Branch]:
        return (self.branch(self.branch_word(state, 0)),
                self.branch(self.branch_word(state, 1)))


def whitening_vector(params: ChannelParams) -> np.ndarray:
    """The length-(L+1) filter [-b^T 1] that whitens the noise window."""
    return np.concatenate([-params.ar_coeffs, [1.0]])


def build_trellis(params: ChannelParams) -> Trellis:
    """Enumerate all 2M branches and precompute their statistics.

    For branch word ``bw`` the mean vector entry j is the noiseless output
    whose (I+1)-bit pattern sits at offset L-j inside the branch history,
    j = 0 being the oldest sample in the window.
    """
    L, I = params.noise_memory, params.isi_memory
    M = params.num_states
    pat_mask = params.pattern_count - 1
    wvec = whitening_vector(params)
    n_branches = 2 * M
    mean_vectors = np.zeros((n_branches, L + 1))
    for bw in range(n_branches):
        for j in range(L + 1):
            mean_vectors[bw, j] = params.y_table[(bw >> (L - j)) & pat_mask]
    filtered_mean = mean_vectors @ wvec
    sigma2 = params.sigma2_table[np.arange(n_branches) & pat_mask]
    innovation_std = np.sqrt(sigma2)
    for arr in (mean_vectors, filtered_mean, innovation_std):
        arr.setflags(write=False)
    return Trellis(params=params, num_states=M, filtered_mean=filtered_mean,
                   innovation_std=innovation_std, mean_vectors=mean_vectors)


def branch_covariance(stats: BranchStats, c_minor: np.ndarray,
                      ar_coeffs: np.ndarray) -> np.ndarray:
    """Branch window covariance consistent with the whitening identity.

    Extends the LxL principal minor ``c_minor`` with border column
    ``c_minor @ b`` and corner ``sigma^2 + b^T c_minor b``, which makes

        C^-1 = blockdiag(c_minor^-1, 0) + w w^T / sigma^2,  w = [-b; 1]

    hold exactly.  Raises if ``c_minor`` is not symmetric positive definite.
    """
    b = np.asarray(ar_coeffs, dtype=np.float64)
    c_minor = np.asarray(c_minor, dtype=np.float64)
    L = b.size
    if c_minor.shape != (L, L):
        raise ConfigurationError(f"c_minor must be {L}x{L}")
    if not np.allclose(c_minor, c_minor.T, rtol=0, atol=1e-12):
        raise ConfigurationError("c_minor must be symmetric")
    try:
        np.linalg.cholesky(c_minor)
    except np.linalg.LinAlgError:
        raise ConfigurationError("c_minor must be positive definite") from None
    border = c_minor @ b
    corner = stats.innovation_std ** 2 + b @ border
    C = np.empty((L + 1, L + 1))
    C[:L, :L] = c_minor
    C[:L, L] = border
    C[L, :L] = border
    C[L, L] = corner
    return C
