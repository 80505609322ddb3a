"""Seeded random source and Beta sampling.

The bit generator is numpy's PCG64 seeded through ``SeedSequence``; both are
specified algorithms with stable output across platforms. Gamma variates use
Marsaglia-Tsang squeeze/rejection for shape >= 1 and the ``U**(1/a)`` boost for
shape < 1, carried out in log space so tiny shapes do not underflow.
"""

import numpy as np

from ..errors import UsageError
from .functions import FloatArray, IntArray

GENERATOR_ID = "numpy.PCG64/SeedSequence"


class RandomSource:
    """Single-owner seeded random stream.

    ``child(key)`` derives an independent stream whose draws do not depend on
    how much the parent has consumed.
    """

    generator_id = GENERATOR_ID

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        if seed < 0:
            raise UsageError("seed must be a non-negative integer")
        self.seed = seed
        self.spawn_key = spawn_key
        sequence = np.random.SeedSequence(seed, spawn_key=spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"

    def child(self, key: int) -> "RandomSource":
        return RandomSource(self.seed, (*self.spawn_key, key))

    def normal(self, size: int | tuple[int, ...]) -> FloatArray:
        return self.generator.standard_normal(size)

    def uniform(self, size: int | tuple[int, ...]) -> FloatArray:
        """Uniform draws on [0, 1)."""
        return self.generator.random(size)

    def integers(self, high: int, size: int) -> IntArray:
        return self.generator.integers(0, high, size=size, dtype=np.int64)

    def permutation(self, n: int) -> IntArray:
        return self.generator.permutation(n).astype(np.int64)

    def betas(self, alpha: float, size: int) -> FloatArray:
        return sample_betas(alpha, size, self)


def _log_gamma_draws(shape: float, size: int, rng: RandomSource) -> FloatArray:
    if shape < 1.0:
        boosted = _log_gamma_draws(shape + 1.0, size, rng)
        # 1 - U lies in (0, 1], so the log stays finite
        return boosted + np.log1p(-rng.uniform(size)) / shape

    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(size, dtype=np.float64)
    pending = np.arange(size)
    with np.errstate(divide="ignore", invalid="ignore"):
        while pending.size:
            x = rng.normal(pending.size)
            u = rng.uniform(pending.size)
            v = (1.0 + c * x) ** 3
            positive = v > 0
            log_v = np.log(np.where(positive, v, 1.0))
            squeeze = u < 1.0 - 0.0331 * x**4
            full = np.log(u) < 0.5 * x**2 + d * (1.0 - v + log_v)
            accept = positive & (squeeze | full)
            out[pending[accept]] = np.log(d) + log_v[accept]
            pending = pending[~accept]
    return out


def sample_betas(alpha: float, size: int, rng: RandomSource) -> FloatArray:
    """Draw ``size`` samples from the symmetric Beta(alpha, alpha).

    Each draw is ``X / (X + Y)`` with X, Y ~ Gamma(alpha).
    """
    if not alpha > 0:
        raise UsageError(f"alpha must be positive, got {alpha}")
    if size < 0:
        raise UsageError("size must be non-negative")
    log_x = _log_gamma_draws(alpha, size, rng)
    log_y = _log_gamma_draws(alpha, size, rng)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(log_y - log_x))


def sample_beta(alpha: float, rng: RandomSource) -> float:
    """Draw one sample from the symmetric Beta(alpha, alpha)."""
    return float(sample_betas(alpha, 1, rng)[0])
