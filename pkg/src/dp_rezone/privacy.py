"""Differentially private noise mechanisms and count privatization.

The release model adds i.i.d. two-sided geometric noise with
alpha = exp(epsilon / sensitivity) to every entry of the counts matrix (each
group count and each total independently), then clamps at zero to restore
non-negativity. Sensitivity defaults to 2: one student appears in exactly one
group count and the total. A continuous Laplace sampler is provided for
completeness, but the count pipeline only ever uses the discrete mechanism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .district import CountsMatrix

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the splitmix64 mixing function (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(base_seed: int, *parts: int) -> int:
    """Derive a stream seed from a base seed and integer labels.

    Chained splitmix64 so that streams for different (label...) tuples are
    uncorrelated and the derivation is identical on every platform.
    """
    out = base_seed & _MASK64
    for p in parts:
        out = splitmix64(out ^ (p & _MASK64))
    return out


def replicate_seed(base_seed: int, epsilon: float, replicate: int) -> int:
    """Noise-stream seed for one (epsilon, replicate) cell of an experiment."""
    # epsilon enters as an integer number of millionths to keep mixing exact
    return mix_seed(base_seed, round(epsilon * 1_000_000), replicate)


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    sensitivity: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a positive finite real, got {self.epsilon}")
        if self.sensitivity < 1:
            raise ValueError(f"sensitivity must be >= 1, got {self.sensitivity}")

    @property
    def alpha(self) -> float:
        """Geometric-mechanism parameter exp(epsilon / sensitivity), always > 1.

        Capped just under the float overflow point; beyond that the noise mass
        at zero is indistinguishable from 1 anyway.
        """
        return math.exp(min(self.epsilon / self.sensitivity, 700.0))


def sample_laplace(scale: float, rng: np.random.Generator, size=None):
    """Draw from Laplace(0, scale) by inverse CDF on a uniform draw.

    u = 0.5 maps to exactly 0. Returns a scalar when size is None.
    """
    if not (scale > 0 and math.isfinite(scale)):
        raise ValueError(f"scale must be positive and finite, got {scale}")
    u = rng.random(size=() if size is None else size) - 0.5
    draw = -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(draw) if size is None else draw


def sample_two_sided_geometric(alpha: float, rng: np.random.Generator, size=None):
    """Integer noise with pmf P(k) = ((alpha-1)/(alpha+1)) * alpha^(-|k|).

    Zero mass is handled explicitly: with probability (alpha-1)/(alpha+1) the
    draw is 0; otherwise a geometric magnitude >= 1 gets a uniform sign, which
    reproduces the pmf exactly. Returns a scalar int when size is None.
    """
    if not (alpha > 1 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be > 1 and finite, got {alpha}")
    shape = () if size is None else size
    p_zero = (alpha - 1.0) / (alpha + 1.0)
    is_zero = rng.random(shape) < p_zero
    magnitude = rng.geometric(1.0 - 1.0 / alpha, size=shape)  # support {1, 2, ...}
    sign = rng.integers(0, 2, size=shape) * 2 - 1
    draw = np.where(is_zero, 0, sign * magnitude)
    return int(draw) if size is None else draw.astype(np.int64)


def variance_two_sided_geometric(alpha: float) -> float:
    """Closed-form variance 2*alpha/(alpha-1)^2 of the two-sided geometric law."""
    if not (alpha > 1 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be > 1 and finite, got {alpha}")
    return 2.0 * alpha / (alpha - 1.0) ** 2


def privatize_counts(
    counts: CountsMatrix,
    params: PrivacyParams,
    rng: np.random.Generator | None = None,
) -> CountsMatrix:
    """Noise every entry with the geometric mechanism, then clamp at zero.

    All rows (each group and the total) receive independent draws, so the
    output need not satisfy total >= sum of groups; it is marked privatized
    so downstream validation does not enforce that relation.
    """
    if rng is None:
        rng = rng_from_seed(params.seed)
    noise = sample_two_sided_geometric(params.alpha, rng, size=counts.data.shape)
    noised = np.maximum(counts.data + noise, 0)
    return CountsMatrix(
        groups=counts.groups,
        block_ids=counts.block_ids,
        data=noised,
        privatized=True,
    )
