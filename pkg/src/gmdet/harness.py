"""SNR sweeps: analytic bound plus parallel Monte Carlo BER estimation.

Reproducibility contract: a sweep is a pure function of the experiment
configuration including the worker count.  Monte Carlo work is split into
fixed-size blocks; block index b draws its bits and noise from the stream
seeded by (seed, snr_index, b), blocks run in rounds of ``workers`` and the
early-stop rule is evaluated on cumulative totals after each completed
round, so scheduling order can never change the result.  Totals are *not*
invariant under a change of worker count (the round boundaries move).
"""
from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bound import BoundDivergenceError, ber_upper_bound, build_product_trellis
from .channel import (BitSequence, ChannelParams, ConfigurationError,
                      generate_with_rng)
from .detector import decode_bits
from .trellis import build_trellis

BLOCK_BITS = 1_000_000
WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep description: channel template plus Monte Carlo budget."""

    channel: ChannelParams
    snr_grid_db: tuple
    payload_bits: int
    min_error_events: int = 100
    seed: int = 0
    workers: int = 1
    rho_mode: str = "optimized"

    def __post_init__(self):
        grid = tuple(float(s) for s in self.snr_grid_db)
        if not grid:
            raise ConfigurationError("snr_grid_db must not be empty")
        if any(b >= a for a, b in zip(grid[1:], grid)):
            raise ConfigurationError("snr_grid_db must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        if self.payload_bits < 10_000:
            raise ConfigurationError("payload_bits must be at least 10^4")
        if self.min_error_events < 1:
            raise ConfigurationError("min_error_events must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be positive")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigurationError("seed must fit in 64 bits")
        if self.rho_mode not in ("optimized", "half"):
            raise ConfigurationError("rho_mode must be 'optimized' or 'half'")


@dataclass(frozen=True)
class BerPoint:
    """One sweep row; simulation or bound fields may be absent (None)."""

    snr_db: float
    ber_sim: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    errors: int | None = None
    bits: int | None = None
    ber_bound: float | None = None
    spectral_radius: float | None = None


@dataclass(frozen=True)
class BerCurve:
    points: tuple

    CSV_HEADER = "snr_db,ber_sim,ci_low,ci_high,errors,bits,ber_bound,spectral_radius"

    def to_csv(self) -> str:
        def cell(v):
            if v is None:
                return ""
            if isinstance(v, (int, np.integer)):
                return str(int(v))
            return repr(float(v))  # shortest round-trip decimal

        lines = [self.CSV_HEADER]
        for p in self.points:
            lines.append(",".join(cell(v) for v in (
                p.snr_db, p.ber_sim, p.ci_low, p.ci_high, p.errors, p.bits,
                p.ber_bound, p.spectral_radius)))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def snr_noise_variance(params: ChannelParams) -> float:
    """Noise variance entering the SNR definition.

    The square of the pattern-averaged innovation standard deviation.  This
    reference reproduces the published operating points; see README for the
    relation to the true stationary noise variance.
    """
    return float(np.mean(np.sqrt(params.sigma2_table)) ** 2)


def signal_energy(params: ChannelParams) -> float:
    """Mean squared noiseless output over equiprobable bit patterns."""
    return float(np.mean(params.y_table ** 2))


def snr_to_scale(params: ChannelParams, snr_db: float) -> float:
    """Signal scale c that realizes the requested SNR.

    Only defined for linear signal maps: the per-unit-scale signal energy
    is E1 = mean over patterns of (sum_i w_i a_i)^2 and c solves
    c^2 E1 / noise_variance = 10^(snr_db/10).
    """
    if params.signal_weights is None:
        raise ConfigurationError("snr_to_scale requires a linear signal map")
    unit = params.with_scale(1.0)
    e1 = signal_energy(unit)
    if e1 <= 0.0:
        raise ConfigurationError("signal energy is zero; SNR is undefined")
    return float(np.sqrt(10.0 ** (snr_db / 10.0) * snr_noise_variance(params) / e1))


def wilson_interval(errors: int, total: int) -> tuple[float, float]:
    """95% Wilson score interval for an error proportion."""
    if total <= 0:
        return 0.0, 1.0
    z2 = WILSON_Z ** 2
    p = errors / total
    denom = 1.0 + z2 / total
    center = (p + z2 / (2 * total)) / denom
    half = WILSON_Z * np.sqrt(p * (1.0 - p) / total
                              + z2 / (4.0 * total ** 2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _block_seed(seed: int, snr_index: int, block_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(seed, snr_index, block_index))


def _simulate_block(task) -> tuple[int, int, int]:
    """Worker body: one block of payload bits through channel and detector.

    ``task`` = (params, seed, snr_index, block_index, n_bits).  Returns
    (block_index, payload_errors, payload_bits).
    """
    params, seed, snr_index, block_index, n_bits = task
    rng = np.random.default_rng(_block_seed(seed, snr_index, block_index))
    payload = rng.integers(0, 2, size=n_bits, dtype=np.uint8)
    bits = BitSequence.with_preamble(payload, params)
    samples = generate_with_rng(params, bits, rng)
    trellis = build_trellis(params)
    decoded = decode_bits(trellis, samples)
    pre = bits.preamble_len
    errors = int(np.sum(decoded[pre:] != bits.bits[pre:]))
    return block_index, errors, n_bits


def _block_plan(payload_bits: int):
    """Deterministic block sizes covering the payload budget."""
    sizes = []
    remaining = payload_bits
    while remaining > 0:
        n = min(BLOCK_BITS, remaining)
        sizes.append(n)
        remaining -= n
    return sizes


def simulate_point(params: ChannelParams, cfg: ExperimentConfig,
                   snr_index: int, executor=None) -> tuple[int, int]:
    """Monte Carlo error count at one operating point.

    Blocks are dispatched in rounds of ``cfg.workers``; after each round the
    cumulative (errors, bits) decide whether to stop.  Every block of a
    completed round is counted, which keeps results independent of worker
    scheduling.
    """
    sizes = _block_plan(cfg.payload_bits)
    errors = 0
    bits_done = 0
    next_block = 0
    while next_block < len(sizes):
        round_blocks = range(next_block, min(next_block + cfg.workers, len(sizes)))
        tasks = [(params, cfg.seed, snr_index, b, sizes[b]) for b in round_blocks]
        if executor is None:
            results = map(_simulate_block, tasks)
        else:
            results = executor.map(_simulate_block, tasks)
        for _, err, nb in sorted(results):
            errors += err
            bits_done += nb
        next_block = round_blocks.stop
        if errors >= cfg.min_error_events:
            break
    return errors, bits_done


def bound_point(params: ChannelParams, rho_mode: str):
    """(ber_bound, spectral_radius) with ber_bound None on divergence."""
    pt = build_product_trellis(build_trellis(params), rho_mode)
    try:
        result = ber_upper_bound(pt)
        return result.ber_bound, result.spectral_radius
    except BoundDivergenceError as exc:
        return None, exc.spectral_radius


def _warm_kernels(params: ChannelParams) -> None:
    """Trigger numba compilation in the parent before any fork."""
    tiny = ExperimentConfig(channel=params, snr_grid_db=(10.0,),
                            payload_bits=10_000, min_error_events=1,
                            seed=0, workers=1)
    _simulate_block((params, tiny.seed, 0, 0, 16))


def run_sweep(cfg: ExperimentConfig, progress: bool = False) -> BerCurve:
    """Bound plus simulated BER across the configured SNR grid."""
    points = []
    scaled = [cfg.channel.with_scale(snr_to_scale(cfg.channel, snr))
              for snr in cfg.snr_grid_db]
    _warm_kernels(scaled[0])
    executor = None
    try:
        if cfg.workers > 1:
            executor = ProcessPoolExecutor(max_workers=cfg.workers)
        for snr_index, (snr, params) in enumerate(zip(cfg.snr_grid_db, scaled)):
            ber_bound, radius = bound_point(params, cfg.rho_mode)
            errors, bits_done = simulate_point(params, cfg, snr_index, executor)
            ci_low, ci_high = wilson_interval(errors, bits_done)
            point = BerPoint(snr_db=snr, ber_sim=errors / bits_done,
                             ci_low=ci_low, ci_high=ci_high, errors=errors,
                             bits=bits_done, ber_bound=ber_bound,
                             spectral_radius=radius)
            points.append(point)
            if progress:
                bound_txt = "diverged" if ber_bound is None else f"{ber_bound:.3e}"
                print(f"snr {snr:6.2f} dB: sim {point.ber_sim:.3e} "
                      f"({errors} errors / {bits_done} bits), bound {bound_txt}",
                      file=sys.stderr)
    finally:
        if executor is not None:
            executor.shutdown()
    return BerCurve(points=tuple(points))


def simulate_single(cfg: ExperimentConfig, snr_db: float, payload_bits: int,
                    seed: int) -> BerPoint:
    """One simulation-only operating point (CLI ``simulate`` command)."""
    run_cfg = replace(cfg, snr_grid_db=(float(snr_db),),
                      payload_bits=payload_bits, seed=seed)
    params = cfg.channel.with_scale(snr_to_scale(cfg.channel, snr_db))
    _warm_kernels(params)
    executor = None
    try:
        if run_cfg.workers > 1:
            executor = ProcessPoolExecutor(max_workers=run_cfg.workers)
        errors, bits_done = simulate_point(params, run_cfg, 0, executor)
    finally:
        if executor is not None:
            executor.shutdown()
    ci_low, ci_high = wilson_interval(errors, bits_done)
    return BerPoint(snr_db=float(snr_db), ber_sim=errors / bits_done,
                    ci_low=ci_low, ci_high=ci_high, errors=errors,
                    bits=bits_done)


def bound_curve(cfg: ExperimentConfig, snr_points=None,
                rho_mode: str | None = None) -> tuple[BerCurve, bool]:
    """Bound-only rows (CLI ``bound`` command); flags any divergence."""
    snrs = cfg.snr_grid_db if snr_points is None else tuple(snr_points)
    mode = cfg.rho_mode if rho_mode is None else rho_mode
    points = []
    diverged = False
    for snr in snrs:
        params = cfg.channel.with_scale(snr_to_scale(cfg.channel, snr))
        ber_bound, radius = bound_point(params, mode)
        diverged = diverged or ber_bound is None
        points.append(BerPoint(snr_db=float(snr), ber_bound=ber_bound,
                               spectral_radius=radius))
    return BerCurve(points=tuple(points)), diverged
