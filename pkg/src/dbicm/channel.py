"""AWGN channel: SNR bookkeeping, noise sampling and Gaussian log-likelihoods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class NoiseModel:
    """Circular AWGN with variance ``sigma2`` per real dimension.

    For a unit-energy complex constellation ``Es/N0 = 1 / (2 sigma2)``; the
    same relation is used for real PAM (noise occupies one dimension).
    """

    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @classmethod
    def from_esn0_db(cls, esn0_db: float) -> "NoiseModel":
        return cls(float(1.0 / (2.0 * db2lin(esn0_db))))

    @classmethod
    def from_ebn0_db(cls, ebn0_db: float, rate: float, m: int) -> "NoiseModel":
        return cls.from_esn0_db(ebn0_to_esn0_db(ebn0_db, rate, m))

    @property
    def esn0(self) -> float:
        return 1.0 / (2.0 * self.sigma2)

    @property
    def esn0_db(self) -> float:
        return float(lin2db(self.esn0))

    def ebn0_db(self, rate: float, m: int) -> float:
        return esn0_to_ebn0_db(self.esn0_db, rate, m)


def ebn0_to_esn0_db(ebn0_db, rate: float, m: int):
    # nominal spectral efficiency m*R; the T_n/(T_n+T_max) frame loss is ignored
    return ebn0_db + lin2db(rate * m)


def esn0_to_ebn0_db(esn0_db, rate: float, m: int):
    return esn0_db - lin2db(rate * m)


def sample_noise(nm: NoiseModel, count: int, seed=None, real: bool = False) -> np.ndarray:
    """Draw ``count`` i.i.d. noise samples, deterministic for a fixed seed."""
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    std = np.sqrt(nm.sigma2)
    if real:
        return std * rng.standard_normal(count)
    return std * (rng.standard_normal(count) + 1j * rng.standard_normal(count))


def log_likelihood(nm: NoiseModel, y, z):
    """Unnormalised Gaussian log-density ``-|y - z|^2 / (2 sigma2)``."""
    d = np.asarray(y) - np.asarray(z)
    return -(d.real**2 + d.imag**2) / (2.0 * nm.sigma2)
