"""Viterbi detection and analytic BER bounds for ISI channels with
signal-dependent Gauss-Markov noise."""

from .bound import (BoundDivergenceError, BoundResult, ProductTrellis,
                    ber_upper_bound, build_product_trellis,
                    gaussian_pair_integral, pep_factor_W)
from .channel import (BitSequence, ChannelParams, ConfigurationError,
                      NoisySignal, generate, noiseless_output,
                      stationary_noise_variance)
from .config import load_config, parse_config
from .detector import DecodeResult, branch_metric, viterbi_decode
from .harness import (BerCurve, BerPoint, ExperimentConfig, run_sweep,
                      snr_to_scale, wilson_interval)
from .trellis import (Branch, BranchStats, Trellis, branch_covariance,
                      build_trellis)

__version__ = "0.1.0"

__all__ = [
    "BitSequence", "Branch", "BranchStats", "BerCurve", "BerPoint",
    "BoundDivergenceError", "BoundResult", "ChannelParams",
    "ConfigurationError", "DecodeResult", "ExperimentConfig", "NoisySignal",
    "ProductTrellis", "Trellis", "ber_upper_bound", "branch_covariance",
    "branch_metric", "build_product_trellis", "build_trellis", "generate",
    "gaussian_pair_integral", "load_config", "noiseless_output",
    "parse_config", "pep_factor_W", "run_sweep", "snr_to_scale",
    "stationary_noise_variance", "viterbi_decode", "wilson_interval",
]
