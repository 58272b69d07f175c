"""Top-K / Top-p (nucleus) token sampling.

The candidate set is pinned precisely because off-by-one choices here change
outputs: sort by probability descending with ties broken by token id
ascending, truncate to the K most probable, then keep the shortest prefix
whose cumulative probability reaches p (a 1e-12 slack absorbs float
round-off in the cumulative sums).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CUMULATIVE_SLACK = 1e-12
_SUM_TOLERANCE = 1e-6


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    top_k: int = 50
    top_p: float = 0.92
    seed: int = 0
    max_tokens: int = 40
    num_samples: int = 20

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise SamplingError("top_k must be >= 1")
        if not 0 < self.top_p <= 1:
            raise SamplingError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise SamplingError("max_tokens must be >= 1")
        if self.num_samples < 1:
            raise SamplingError("num_samples must be >= 1")


def nucleus_candidates(probs: np.ndarray, top_k: int, top_p: float) -> np.ndarray:
    """Token ids of the K-then-p candidate prefix, in sampling (sorted) order."""
    if top_k < 1:
        raise SamplingError("top_k must be >= 1")
    if not 0 < top_p <= 1:
        raise SamplingError("top_p must be in (0, 1]")
    probs = np.asarray(probs, dtype=np.float64)
    if abs(float(probs.sum()) - 1.0) > _SUM_TOLERANCE:
        raise SamplingError(f"distribution sums to {probs.sum():.9f}, not 1")
    order = np.lexsort((np.arange(len(probs)), -probs))[:top_k]
    cumulative = np.cumsum(probs[order])
    cut = int(np.searchsorted(cumulative, top_p - _CUMULATIVE_SLACK, side="left"))
    cut = min(cut, len(order) - 1)
    return order[: cut + 1]


def sample_token(probs: np.ndarray, config: SamplerConfig, rng: np.random.Generator) -> int:
    """Draw one token id from the renormalized nucleus prefix."""
    candidates = nucleus_candidates(probs, config.top_k, config.top_p)
    weights = np.asarray(probs, dtype=np.float64)[candidates]
    weights = weights / weights.sum()
    return int(rng.choice(candidates, p=weights))
