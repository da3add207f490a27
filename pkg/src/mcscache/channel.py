"""Path loss, Rayleigh block fading and the OFDMA subchannel rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import UserArrays


@dataclass
class ChannelRealization:
    gains: np.ndarray  # K x N linear power gains for one slot

    @property
    def shape(self):
        return self.gains.shape


def path_loss_db(distance_m):
    """Large-scale loss ``128.1 + 37.6 log10(d)`` with ``d`` in km."""
    return 128.1 + 37.6 * np.log10(np.asarray(distance_m, dtype=float) / 1000.0)


def large_scale_gain(distance_m):
    return 10.0 ** (-path_loss_db(distance_m) / 10.0)


def draw_channels(users, num_subchannels: int, rng: np.random.Generator) -> ChannelRealization:
    """One slot of gains: path loss times unit-mean exponential fading.

    The fading power is |h|^2 for a unit-variance complex Gaussian ``h``,
    drawn independently per user and subchannel.
    """
    arrays = UserArrays.from_users(users)
    fading = rng.exponential(1.0, size=(len(arrays), num_subchannels))
    return ChannelRealization(large_scale_gain(arrays.distance)[:, None] * fading)


def subchannel_rate(power, gain, bandwidth, noise_density):
    """Shannon rate in bit/s of one subchannel: ``W log2(1 + P g / (N0 W))``."""
    snr = np.asarray(power) * np.asarray(gain) / (noise_density * bandwidth)
    rate = bandwidth * np.log1p(snr) / np.log(2.0)
    return rate if np.ndim(rate) else float(rate)


def rate_matrix(users, channels: ChannelRealization, bandwidth: float, noise_density: float) -> np.ndarray:
    arrays = UserArrays.from_users(users)
    return subchannel_rate(arrays.transmit_power[:, None], channels.gains, bandwidth, noise_density)
