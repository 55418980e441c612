"""TOML experiment configuration loader.

Expected layout::

    [channel]
    L = 2                      # noise memory (AR order)
    I = 1                      # ISI memory
    b = [0.1, 0.5]             # AR coefficients, oldest lag first

    [channel.sigma_sq]         # innovation variance per (I+1)-bit pattern;
    "00" = 1.0                 # pattern strings read oldest to newest
    "01" = 2.0
    "10" = 3.0
    "11" = 4.0

    [channel.signal]           # exactly one of `linear` / `table`
    linear = { weights = [2.0, 1.0], scale = 1.0 }
    # weights[i] multiplies the bit i steps back (index 0 = current bit);
    # table = [...] lists the noiseless output per pattern instead.

    [experiment]
    snr_grid_db = [15, 16, 17, 18, 19, 20, 21]
    payload_bits = 10_000_000
    min_error_events = 100
    seed = 1
    workers = 8
    rho_mode = "optimized"     # or "half"
"""
from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .channel import ChannelParams, ConfigurationError
from .harness import ExperimentConfig


def _require(table: dict, key: str, section: str):
    if key not in table:
        raise ConfigurationError(f"missing '{key}' in [{section}]")
    return table[key]


def _parse_sigma(table: dict, isi_memory: int) -> np.ndarray:
    width = isi_memory + 1
    npat = 2 ** width
    out = np.full(npat, np.nan)
    for key, value in table.items():
        if len(key) != width or set(key) - {"0", "1"}:
            raise ConfigurationError(
                f"sigma_sq key {key!r} is not a {width}-bit pattern string")
        out[int(key, 2)] = float(value)
    if np.isnan(out).any():
        missing = [format(i, f"0{width}b") for i in range(npat)
                   if np.isnan(out[i])]
        raise ConfigurationError(f"sigma_sq is missing patterns: {missing}")
    return out


def _parse_channel(table: dict) -> ChannelParams:
    L = int(_require(table, "L", "channel"))
    I = int(_require(table, "I", "channel"))
    b = _require(table, "b", "channel")
    sigma2 = _parse_sigma(_require(table, "sigma_sq", "channel"), I)
    signal = _require(table, "signal", "channel")
    has_linear = "linear" in signal
    has_table = "table" in signal
    if has_linear == has_table:
        raise ConfigurationError(
            "[channel.signal] needs exactly one of 'linear' or 'table'")
    try:
        if has_linear:
            linear = signal["linear"]
            return ChannelParams.linear(
                I, L, b, sigma2,
                weights=_require(linear, "weights", "channel.signal.linear"),
                scale=float(linear.get("scale", 1.0)))
        return ChannelParams(I, L, np.asarray(b, float),
                             np.asarray(signal["table"], float), sigma2)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid [channel] section: {exc}") from exc


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config is not valid TOML: {exc}") from exc
    channel = _parse_channel(_require(raw, "channel", "<root>"))
    exp = _require(raw, "experiment", "<root>")
    try:
        return ExperimentConfig(
            channel=channel,
            snr_grid_db=tuple(_require(exp, "snr_grid_db", "experiment")),
            payload_bits=int(_require(exp, "payload_bits", "experiment")),
            min_error_events=int(exp.get("min_error_events", 100)),
            seed=int(exp.get("seed", 0)),
            workers=int(exp.get("workers", 1)),
            rho_mode=str(exp.get("rho_mode", "optimized")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid [experiment] section: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
