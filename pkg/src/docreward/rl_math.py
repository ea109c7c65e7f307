"""Group-relative policy optimization numerics.

Pure evaluation of the published formulas on trainer-supplied numbers:
mean output entropy of a sampled response, group-normalized advantages,
and the clipped surrogate objective. No gradients, no parameters.

"Entropy" here is the mean negative token log-likelihood in nats -- the
quantity actually used for corpus filtration -- not the full Shannon
entropy of the output distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class EmptySequence(ValueError):
    pass


class NonFiniteInput(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class NonPositiveRatio(ValueError):
    pass


@dataclass(frozen=True)
class GrpoConfig:
    """Clip range and normalization constants.

    std_mode is pinned to "population" (divide by G): it is the literal
    reading of the group std and keeps G = 1 defined. The enum exists so
    serialized configs fail loudly if anything else ever shows up.
    """

    epsilon: float = 0.2
    std_floor: float = 1e-8
    std_mode: str = "population"

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if self.std_floor < 0.0:
            raise ValueError("std_floor must be >= 0")
        if self.std_mode != "population":
            raise ValueError("std_mode must be 'population'")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "std_floor": self.std_floor,
            "std_mode": self.std_mode,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GrpoConfig":
        return cls(
            epsilon=obj.get("epsilon", 0.2),
            std_floor=obj.get("std_floor", 1e-8),
            std_mode=obj.get("std_mode", "population"),
        )


def mean_entropy(logprobs: Sequence[float]) -> float:
    """Mean negative log-probability over one response's tokens, in nats."""
    if len(logprobs) == 0:
        raise EmptySequence("logprobs must be non-empty")
    for value in logprobs:
        if not math.isfinite(value):
            raise NonFiniteInput(f"non-finite logprob {value!r}")
        if value > 0.0:
            raise NonFiniteInput(f"logprob {value!r} > 0")
    return -math.fsum(logprobs) / len(logprobs)


def group_advantages(
    rewards: Sequence[float], cfg: GrpoConfig | None = None
) -> list[float]:
    """Center by the group mean, scale by population std plus the floor.

    All-equal groups (including G = 1) come out as exact zeros.
    """
    if cfg is None:
        cfg = GrpoConfig()
    count = len(rewards)
    if count == 0:
        raise EmptySequence("rewards must be non-empty")
    first = rewards[0]
    if all(r == first for r in rewards):
        return [0.0] * count
    mean = math.fsum(rewards) / count
    variance = math.fsum((r - mean) ** 2 for r in rewards) / count
    denom = math.sqrt(variance) + cfg.std_floor
    return [(r - mean) / denom for r in rewards]


def grpo_objective(
    ratios: Sequence[float],
    advantages: Sequence[float],
    cfg: GrpoConfig | None = None,
) -> float:
    """Mean clipped surrogate: min(r*A, clip(r, 1-eps, 1+eps)*A) over the
    group. Ratios are sequence-level pi_theta/pi_theta_old, one per
    response, supplied by the trainer."""
    if cfg is None:
        cfg = GrpoConfig()
    if len(ratios) != len(advantages):
        raise LengthMismatch(
            f"{len(ratios)} ratios vs {len(advantages)} advantages"
        )
    if len(ratios) == 0:
        raise EmptySequence("ratios must be non-empty")
    lo = 1.0 - cfg.epsilon
    hi = 1.0 + cfg.epsilon
    terms = []
    for ratio, adv in zip(ratios, advantages):
        if not math.isfinite(ratio) or ratio <= 0.0:
            raise NonPositiveRatio(f"ratio {ratio!r} must be finite and > 0")
        clipped = min(max(ratio, lo), hi)
        terms.append(min(ratio * adv, clipped * adv))
    return math.fsum(terms) / len(terms)
