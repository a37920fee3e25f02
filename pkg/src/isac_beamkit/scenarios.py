"""Canonical scenario builders.

`default_scenario` reproduces the reference experiment set-up: an 8x12
transceiver with 3/6 RF chains serving a 6-antenna user at 400 m, a
four-component Gaussian-mixture angle prior, 30 dBm transmit power and
-90 dBm noise floors. The coherent block length (64 symbols) and the
default seed are artifact choices.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
    ArrayConfig,
    GmmAnglePrior,
    ReflectionPrior,
    RicianChannelSpec,
    RxArchitecture,
    Scenario,
    WidebandChannelSpec,
    realize_channel,
)

DEFAULT_SYMBOLS = 64
DEFAULT_SEED = 2025


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def default_prior() -> GmmAnglePrior:
    return GmmAnglePrior.from_components(
        [
            (0.31, -0.74, 10.0**-2.5),
            (0.24, -0.54, 10.0**-2.0),
            (0.28, -0.75, 10.0**-2.0),
            (0.17, 0.95, 10.0**-2.5),
        ]
    )


def default_arrays(
    n_rf_tx: int = 3,
    n_rf_rx: int = 6,
    rx_architecture: RxArchitecture = RxArchitecture.PARTIALLY_CONNECTED,
) -> ArrayConfig:
    return ArrayConfig(
        n_tx=8,
        n_rx=12,
        n_user=6,
        n_rf_tx=n_rf_tx,
        n_rf_rx=n_rf_rx,
        rx_architecture=rx_architecture,
    )


def channel_seed(seed: int):
    return np.random.SeedSequence(seed, spawn_key=(0xC5,))


def default_scenario(
    *,
    rate_target_bits: float = 4.5,
    n_rf_tx: int = 3,
    n_rf_rx: int = 6,
    rx_architecture: RxArchitecture = RxArchitecture.PARTIALLY_CONNECTED,
    power_dbm: float = 30.0,
    noise_dbm: float = -90.0,
    symbols: int = DEFAULT_SYMBOLS,
    quadrature_points: int = 2048,
    seed: int = DEFAULT_SEED,
) -> Scenario:
    """Narrowband scenario with the reference parameter set."""
    arrays = default_arrays(n_rf_tx, n_rf_rx, rx_architecture)
    spec = RicianChannelSpec(
        theta_user=0.36,
        distance_m=400.0,
        rician_factor=db_to_linear(-8.0),
        reference_gain=db_to_linear(-30.0),
        path_exponent=3.5,
    )
    channel = realize_channel(arrays, spec, 1, channel_seed(seed))
    return Scenario(
        arrays=arrays,
        angle_prior=default_prior(),
        reflection=ReflectionPrior(2e-12),
        channel=channel,
        power=dbm_to_watt(power_dbm),
        noise_comm=dbm_to_watt(noise_dbm),
        noise_sense=dbm_to_watt(noise_dbm),
        symbols=symbols,
        rate_target=rate_target_bits * math.log(2.0),
        subcarriers=1,
        quadrature_points=quadrature_points,
        seed=seed,
        channel_spec=spec,
    )


def default_ofdm_scenario(
    *,
    rate_target_bits: float = 5.5,
    subcarriers: int = 16,
    n_taps: int = 8,
    n_rf_tx: int = 3,
    n_rf_rx: int = 6,
    rx_architecture: RxArchitecture = RxArchitecture.PARTIALLY_CONNECTED,
    power_dbm: float = 30.0,
    noise_dbm: float = -90.0,
    symbols: int = DEFAULT_SYMBOLS,
    quadrature_points: int = 2048,
    seed: int = DEFAULT_SEED,
) -> Scenario:
    """Wideband OFDM scenario with the reference parameter set."""
    arrays = default_arrays(n_rf_tx, n_rf_rx, rx_architecture)
    spec = WidebandChannelSpec(
        n_taps=n_taps,
        distance_m=400.0,
        reference_gain=db_to_linear(-30.0),
        path_exponent=2.8,
    )
    channel = realize_channel(arrays, spec, subcarriers, channel_seed(seed))
    return Scenario(
        arrays=arrays,
        angle_prior=default_prior(),
        reflection=ReflectionPrior(2e-12),
        channel=channel,
        power=dbm_to_watt(power_dbm),
        noise_comm=dbm_to_watt(noise_dbm),
        noise_sense=dbm_to_watt(noise_dbm),
        symbols=symbols,
        rate_target=rate_target_bits * math.log(2.0),
        subcarriers=subcarriers,
        quadrature_points=quadrature_points,
        seed=seed,
        channel_spec=spec,
    )


def sensing_scenario(**kw) -> Scenario:
    """Sensing-only variant (zero rate target)."""
    kw.setdefault("rate_target_bits", 0.0)
    return default_scenario(**kw)
