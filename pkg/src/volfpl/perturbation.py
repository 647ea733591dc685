"""Seeded exponential perturbations and the max-of-exponentials facts.

Sampling goes through the inverse CDF ``xi = -ln(1 - U)`` so that streams are
bit-for-bit reproducible from an :class:`RngSpec` across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream id; equal specs reproduce identical streams."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.stream_id])


def as_generator(rng) -> np.random.Generator:
    """Accept an RngSpec, a Generator, or a plain integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    return RngSpec(int(rng)).generator()


def inverse_exponential_cdf(u):
    """Map uniform [0, 1) values to Exp(1) samples: -ln(1 - u)."""
    return -np.log1p(-np.asarray(u, dtype=float))


def sample_exponential(n: int, gen: np.random.Generator) -> np.ndarray:
    """n i.i.d. Exp(1) draws via the inverse CDF."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return inverse_exponential_cdf(gen.random(n))


def sample_exponential_array(shape, gen: np.random.Generator) -> np.ndarray:
    """Exp(1) draws of an arbitrary shape (same stream as sample_exponential)."""
    return inverse_exponential_cdf(gen.random(shape))


def max_tail_bound(num_experts: int, a: float) -> float:
    """Union bound P{max_i xi^i >= a} <= N e^{-a}."""
    if a < 0:
        raise ValueError(f"threshold must be nonnegative, got {a}")
    return num_experts * math.exp(-a)


def expected_max_bound(num_experts: int) -> float:
    """E(max_i xi^i) <= 1 + ln N; the true value is the harmonic number H_N."""
    if num_experts < 1:
        raise ValueError(f"need at least one expert, got {num_experts}")
    return 1.0 + math.log(num_experts)
