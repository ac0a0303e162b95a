"""Pharmacist sorting-time model.

Sorting time is normal with mean mu and standard deviation sigma. The
analytic path uses the untruncated normal: for a deterministic travel time t,

    E[max(X, t)] = t * Phi(z) + mu * (1 - Phi(z)) + sigma * phi(z),
    z = (t - mu) / sigma.

Sampling truncates draws at zero (negative sorting times are meaningless),
so sampled and analytic modes differ slightly when the normal has visible
mass below zero; results should say which mode produced them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(z: float) -> float:
    return _INV_SQRT2PI * math.exp(-0.5 * z * z)


def _Phi(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / _SQRT2))


@dataclass(frozen=True)
class SortingModel:
    mu: float
    sigma: float

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def mean(self) -> float:
        return self.mu


def expected_max(model: SortingModel, t: float) -> float:
    """E[max(X, t)] for deterministic travel time t >= 0."""
    if t < 0:
        raise ValueError(f"travel time must be >= 0, got {t}")
    if model.sigma == 0.0:
        return max(model.mu, t)
    z = (t - model.mu) / model.sigma
    big = _Phi(z)
    return t * big + model.mu * (1.0 - big) + model.sigma * _phi(z)


def expected_max_array(model: SortingModel, t: np.ndarray) -> np.ndarray:
    """Vectorized expected_max over an array of travel times."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("travel times must be >= 0")
    if model.sigma == 0.0:
        return np.maximum(model.mu, t)
    from scipy.special import erf
    z = (t - model.mu) / model.sigma
    big = 0.5 * (1.0 + erf(z / _SQRT2))
    small = _INV_SQRT2PI * np.exp(-0.5 * z * z)
    return t * big + model.mu * (1.0 - big) + model.sigma * small


def sample_sorting(model: SortingModel, rng: np.random.Generator,
                   size=None):
    """Sorting-time draw(s), truncated at zero. Deterministic given the rng state."""
    if model.sigma == 0.0:
        if size is None:
            return model.mu
        return np.full(size, model.mu)
    draw = rng.normal(model.mu, model.sigma, size=size)
    return np.maximum(0.0, draw)
