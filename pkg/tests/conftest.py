import numpy as np
import pytest

from isac_beamkit.model import (
    ArrayConfig,
    GmmAnglePrior,
    NarrowbandChannel,
    ReflectionPrior,
    RxArchitecture,
    Scenario,
    WidebandChannel,
)


def make_prior(components=((0.6, -0.5, 3e-3), (0.4, 0.7, 1e-3))):
    return GmmAnglePrior.from_components(list(components))


def make_scenario(
    n_tx=4,
    n_rx=4,
    n_user=2,
    n_rf_tx=2,
    n_rf_rx=2,
    arch=RxArchitecture.PARTIALLY_CONNECTED,
    rate_target=0.0,
    subcarriers=1,
    power=1.0,
    noise=1e-12,
    symbols=16,
    gamma=2e-12,
    quadrature_points=768,
    seed=0,
    prior=None,
    channel_scale=1e-6,
):
    """Small random scenario for desk-scale tests (channel ~ -120 dB path)."""
    rng = np.random.default_rng(seed + 1000)
    if subcarriers == 1:
        h = channel_scale * (
            rng.standard_normal((n_user, n_tx)) + 1j * rng.standard_normal((n_user, n_tx))
        )
        channel = NarrowbandChannel(h)
    else:
        hs = [
            channel_scale
            * (rng.standard_normal((n_user, n_tx)) + 1j * rng.standard_normal((n_user, n_tx)))
            for _ in range(subcarriers)
        ]
        channel = WidebandChannel(tuple(hs))
    return Scenario(
        arrays=ArrayConfig(n_tx, n_rx, n_user, n_rf_tx, n_rf_rx, arch),
        angle_prior=prior if prior is not None else make_prior(),
        reflection=ReflectionPrior(gamma),
        channel=channel,
        power=power,
        noise_comm=noise,
        noise_sense=noise,
        symbols=symbols,
        rate_target=rate_target,
        subcarriers=subcarriers,
        quadrature_points=quadrature_points,
        seed=seed,
    )


def random_psd(rng, n, scale=1.0):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (x @ x.conj().T) / n


def random_phases(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
