"""Bandit-level diagnostics computed from trial traces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .traces import TrialTrace

__all__ = [
    "RegretUnavailable",
    "SelectionProbabilitySeries",
    "selection_probability",
    "cumulative_reward",
    "dynamic_regret",
    "final_regret",
]


class RegretUnavailable(ValueError):
    """The trace lacks the ground-truth means needed for regret."""


@dataclass(frozen=True)
class SelectionProbabilitySeries:
    """Windowed selection frequencies.

    ``values[j, i]`` is the share of arm ``i`` among rounds
    ``rounds[j] - window + 1 .. rounds[j]``.
    """

    window: int
    start_round: int
    values: np.ndarray

    @property
    def rounds(self) -> np.ndarray:
        return np.arange(self.start_round, self.start_round + len(self.values))

    def series(self, arm: int) -> np.ndarray:
        return self.values[:, arm]

    def mean_between(self, first: int, last: int) -> np.ndarray:
        """Per-arm mean over windows ending in rounds ``first..last`` inclusive."""
        r = self.rounds
        mask = (r >= first) & (r <= last)
        if not mask.any():
            raise ValueError(f"no complete window ends in rounds {first}..{last}")
        return self.values[mask].mean(axis=0)


def selection_probability(
    trace: TrialTrace | Sequence[int], window: int = 30, n_arms: int | None = None
) -> SelectionProbabilitySeries:
    """Sliding-window selection probability of each arm.

    The first value is reported at ``round == window``; the series has
    ``len(trace) - window + 1`` entries.
    """
    if isinstance(trace, TrialTrace):
        choices = np.asarray(trace.choices, dtype=np.int64)
        n_arms = trace.n_arms if n_arms is None else n_arms
        start = trace.steps[0].round if trace.steps else 1
    else:
        choices = np.asarray(trace, dtype=np.int64)
        start = 1
        if n_arms is None:
            n_arms = int(choices.max()) + 1 if choices.size else 1
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > len(choices):
        raise ValueError(f"window {window} exceeds trace length {len(choices)}")
    if choices.size and (choices.min() < 0 or choices.max() >= n_arms):
        raise ValueError("trace contains arms outside [0, n_arms)")
    counts = np.zeros((len(choices) + 1, n_arms), dtype=np.int64)
    counts[1:] = np.cumsum(np.eye(n_arms, dtype=np.int64)[choices], axis=0)
    values = (counts[window:] - counts[:-window]) / window
    return SelectionProbabilitySeries(window, start + window - 1, values)


def cumulative_reward(trace: TrialTrace) -> float:
    total = 0.0
    for step in trace.steps:
        if step.reward is None:
            raise ValueError(f"round {step.round} has no reward")
        total += step.reward
    return total


def dynamic_regret(trace: TrialTrace) -> np.ndarray:
    """Running sum of ``oracle_mean - mean_reward``; simulation only."""
    gaps = []
    for step in trace.steps:
        if step.oracle_mean is None or step.mean_reward is None:
            raise RegretUnavailable(
                f"round {step.round} has no ground-truth means; regret needs a simulated environment"
            )
        gaps.append(step.oracle_mean - step.mean_reward)
    return np.cumsum(np.asarray(gaps, dtype=np.float64))


def final_regret(trace: TrialTrace) -> float:
    regret = dynamic_regret(trace)
    return float(regret[-1]) if regret.size else 0.0
