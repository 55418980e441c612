"""Analytic BER upper bound via pairwise-state transfer matrices.

Each pair of simultaneously-walked branches (actual, decoded) contributes a
Chernoff-type factor W in (0, 1].  The factors populate an M^2 x M^2
weighted pair-state matrix whose entries carry 1/2 * W numerically and the
bit-disagreement exponent separately, so both the matrix and its
Z-derivative at Z=1 are exact.  Partitioning pair states into good
(components equal) and bad yields the closed-form bound

    ber <= (1/M) * [ b (I-V_BB)^-1 c  +  b (I-V_BB)^-1 V'_BB (I-V_BB)^-1 c ]

with b the column sums of the good-to-bad block and c the row sums of the
bad-to-good block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .trellis import BranchStats, Trellis

RHO_GRID_POINTS = 1001
RHO_REFINE_TOL = 1e-9
WEIGHT_CLAMP = 1e-300  # entries whose W underflows this are zeroed
_INV_GOLD = (np.sqrt(5.0) - 1.0) / 2.0
POWER_ITERATIONS = 200
POWER_TOL = 1e-10


class BoundDivergenceError(RuntimeError):
    """The bad-to-bad spectral radius reached 1, the event series diverges."""

    def __init__(self, spectral_radius: float):
        super().__init__(
            f"bound diverges: spectral radius {spectral_radius:.6g} >= 1")
        self.spectral_radius = float(spectral_radius)


def gaussian_pair_integral(alpha: float, beta: float, m: float, m_hat: float,
                           gamma: float) -> float:
    """Closed form of int (1/(sqrt(2 pi) gamma)) exp(-(alpha (x-m)^2
    + beta (x-m_hat)^2)/2) dx.

    Requires alpha, beta >= 0 with alpha + beta > 0 and gamma > 0.
    """
    if alpha < 0 or beta < 0 or alpha + beta <= 0:
        raise ValueError("alpha and beta must be non-negative with "
                         "alpha + beta > 0")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    s = alpha + beta
    expo = -(alpha * m ** 2 + beta * m_hat ** 2) / 2.0 \
        + (alpha * m + beta * m_hat) ** 2 / (2.0 * s)
    return float(np.exp(expo) / (gamma * np.sqrt(s)))


def _log_chernoff(rho, s2a, s2d, ma, md):
    """log of the pair factor at exponent rho; arguments broadcast.

    Evaluates the pair integral with alpha=(1-rho)/s2a, beta=rho/s2d and
    gamma = sigma^(1-rho) sigma_hat^rho in log space, using the variance
    form of the exponent which is exact for any mean magnitudes.
    """
    alpha = (1.0 - rho) / s2a
    beta = rho / s2d
    s = alpha + beta
    log_gamma = 0.5 * ((1.0 - rho) * np.log(s2a) + rho * np.log(s2d))
    return -log_gamma - 0.5 * np.log(s) \
        - alpha * beta * (ma - md) ** 2 / (2.0 * s)


def _minimize_rho(s2a, s2d, ma, md):
    """Per-entry minimum of the log factor over rho in [0, 1].

    A 1001-point grid (endpoints included) locates the basin; golden-section
    steps shrink the surrounding bracket below 1e-9.  All inputs are 1-d
    arrays of equal length; returns (log_w_min, rho_star).
    """
    s2a = s2a[:, None]
    s2d = s2d[:, None]
    ma = ma[:, None]
    md = md[:, None]
    grid = np.linspace(0.0, 1.0, RHO_GRID_POINTS)
    vals = _log_chernoff(grid[None, :], s2a, s2d, ma, md)
    best = np.argmin(vals, axis=1)
    best_val = np.take_along_axis(vals, best[:, None], axis=1)[:, 0]
    h = 1.0 / (RHO_GRID_POINTS - 1)
    lo = np.clip(grid[best] - h, 0.0, 1.0)[:, None]
    hi = np.clip(grid[best] + h, 0.0, 1.0)[:, None]
    c = hi - _INV_GOLD * (hi - lo)
    d = lo + _INV_GOLD * (hi - lo)
    fc = _log_chernoff(c, s2a, s2d, ma, md)
    fd = _log_chernoff(d, s2a, s2d, ma, md)
    while np.max(hi - lo) > RHO_REFINE_TOL:
        take_c = fc < fd
        hi = np.where(take_c, d, hi)
        lo = np.where(take_c, lo, c)
        c_new = hi - _INV_GOLD * (hi - lo)
        d_new = lo + _INV_GOLD * (hi - lo)
        fc_keep = _log_chernoff(c_new, s2a, s2d, ma, md)
        fd_keep = _log_chernoff(d_new, s2a, s2d, ma, md)
        c, d, fc, fd = c_new, d_new, fc_keep, fd_keep
    rho_star = (0.5 * (lo + hi))[:, 0]
    refined = _log_chernoff(rho_star[:, None], s2a, s2d, ma, md)[:, 0]
    use_grid = best_val <= refined
    rho_star = np.where(use_grid, grid[best], rho_star)
    return np.minimum(best_val, refined), rho_star


def pep_factor_W(actual_branch: BranchStats,
                 decoded_branch: BranchStats) -> tuple[float, float]:
    """Minimized pair factor for one (actual, decoded) branch pair.

    Returns (W, rho_star).  W is asymmetric in its arguments whenever the
    two branches carry different innovation variances.
    """
    s2a = np.array([actual_branch.innovation_std ** 2])
    s2d = np.array([decoded_branch.innovation_std ** 2])
    ma = np.array([actual_branch.filtered_mean])
    md = np.array([decoded_branch.filtered_mean])
    log_w, rho = _minimize_rho(s2a, s2d, ma, md)
    return float(np.exp(log_w[0])), float(rho[0])


@dataclass(frozen=True)
class ProductTrellis:
    """Pair-state transition weights with a good/bad partition.

    Pair state (actual, decoded) maps to index actual*M + decoded; a pair
    state is good exactly when its components coincide.  ``weight`` holds
    the 1/2 * W numeric part, ``delta`` the Z exponent and ``valid`` marks
    realizable transitions.  ``rho`` records the minimizing exponent per
    entry (NaN where invalid).
    """

    num_states: int
    rho_mode: str
    weight: np.ndarray
    delta: np.ndarray
    valid: np.ndarray
    rho: np.ndarray
    clamped_entries: int

    @property
    def num_pair_states(self) -> int:
        return self.num_states ** 2

    @property
    def good_index(self) -> np.ndarray:
        return np.arange(self.num_states) * (self.num_states + 1)

    @property
    def bad_index(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.num_pair_states), self.good_index)

    def _block(self, rows, cols, derivative=False):
        m = self.weight * self.delta if derivative else self.weight
        return m[np.ix_(rows, cols)]

    @property
    def v_gg(self) -> np.ndarray:
        return self._block(self.good_index, self.good_index)

    @property
    def v_gb(self) -> np.ndarray:
        return self._block(self.good_index, self.bad_index)

    @property
    def v_bg(self) -> np.ndarray:
        return self._block(self.bad_index, self.good_index)

    @property
    def v_bb(self) -> np.ndarray:
        return self._block(self.bad_index, self.bad_index)

    @property
    def vprime_bb(self) -> np.ndarray:
        return self._block(self.bad_index, self.bad_index, derivative=True)


@dataclass(frozen=True)
class BoundResult:
    ber_bound: float
    spectral_radius: float
    rho_values: np.ndarray | None = None


def build_product_trellis(trellis: Trellis,
                          rho_mode: str = "optimized") -> ProductTrellis:
    """Evaluate every realizable pair-branch factor and assemble the matrix.

    ``rho_mode`` selects per-pair optimization ("optimized") or the fixed
    midpoint exponent ("half").  Factors are evaluated in log space and
    exponentiated at assembly; entries below WEIGHT_CLAMP become exact
    zeros and are counted in ``clamped_entries``.
    """
    if rho_mode not in ("optimized", "half"):
        raise ValueError(f"unknown rho_mode {rho_mode!r}")
    M = trellis.num_states
    P = M * M
    n_br = trellis.num_branches
    var = trellis.innovation_std ** 2
    fmean = trellis.filtered_mean

    bw_i, bw_j = np.divmod(np.arange(n_br * n_br), n_br)
    s2a, s2d = var[bw_i], var[bw_j]
    ma, md = fmean[bw_i], fmean[bw_j]
    if rho_mode == "optimized":
        log_w, rho = _minimize_rho(s2a, s2d, ma, md)
    else:
        log_w = _log_chernoff(0.5, s2a, s2d, ma, md)
        rho = np.full(log_w.shape, 0.5)
    log_w = np.minimum(log_w, 0.0)  # W <= 1 analytically; clip rounding dust
    log_w[bw_i == bw_j] = 0.0
    clamp = log_w < np.log(WEIGHT_CLAMP)
    w = np.where(clamp, 0.0, np.exp(log_w))

    weight = np.zeros((P, P))
    delta = np.zeros((P, P), dtype=np.int8)
    valid = np.zeros((P, P), dtype=bool)
    rho_mat = np.full((P, P), np.nan)
    mask = M - 1
    src = (bw_i >> 1) * M + (bw_j >> 1)
    dst = (bw_i & mask) * M + (bw_j & mask)
    weight[src, dst] = 0.5 * w
    delta[src, dst] = ((bw_i & 1) != (bw_j & 1)).astype(np.int8)
    valid[src, dst] = True
    rho_mat[src, dst] = rho
    return ProductTrellis(num_states=M, rho_mode=rho_mode, weight=weight,
                          delta=delta, valid=valid, rho=rho_mat,
                          clamped_entries=int(clamp.sum()))


def spectral_radius(matrix: np.ndarray, iterations: int = POWER_ITERATIONS,
                    tol: float = POWER_TOL) -> float:
    """Dominant eigenvalue magnitude of a non-negative matrix.

    Plain power iteration from the all-ones vector; used only as the
    divergence guard so sub-1e-10 accuracy is not needed.
    """
    n = matrix.shape[0]
    if n == 0:
        return 0.0
    x = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(iterations):
        y = matrix @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        if abs(norm - lam) <= tol * max(1.0, norm):
            return float(norm)
        lam = norm
        x = y / norm
    return float(lam)


def ber_upper_bound(pt: ProductTrellis,
                    include_rho: bool = False) -> BoundResult:
    """Evaluate the closed-form bound from the pair-state matrix.

    Uses one LU factorization of (I - V_BB) with two solves; the matrix is
    never inverted explicitly.  Raises BoundDivergenceError when the
    bad-to-bad spectral radius reaches 1.
    """
    v_bb = pt.v_bb
    radius = spectral_radius(v_bb)
    if radius >= 1.0:
        raise BoundDivergenceError(radius)
    b_vec = pt.v_gb.sum(axis=0)
    c_vec = pt.v_bg.sum(axis=1)
    lu = scipy.linalg.lu_factor(np.eye(v_bb.shape[0]) - v_bb)
    x = scipy.linalg.lu_solve(lu, c_vec)
    r = scipy.linalg.lu_solve(lu, pt.vprime_bb @ x)
    bound = (b_vec @ x + b_vec @ r) / pt.num_states
    return BoundResult(ber_bound=float(bound), spectral_radius=radius,
                       rho_values=pt.rho.copy() if include_rho else None)
