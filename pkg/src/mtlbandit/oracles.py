"""Brute-force reference computations for the test suite.

Nothing here imports the policy update code. ``closed_form_stats`` evaluates
the discounted sums directly from a retained pull history, and
``exhaustive_regret`` enumerates every pull sequence of a small deterministic
instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .environments import EnvironmentSpec, make_environment

__all__ = ["Pull", "ClosedFormState", "closed_form_stats", "exhaustive_regret", "MAX_SEQUENCES"]

MAX_SEQUENCES = 3**8


@dataclass(frozen=True)
class Pull:
    round: int
    arm: int
    reward: float


@dataclass
class ClosedFormState:
    """Verbatim pull history."""

    history: list[Pull] = field(default_factory=list)

    def record(self, arm: int, reward: float) -> None:
        self.history.append(Pull(len(self.history) + 1, arm, reward))

    @property
    def rounds(self) -> int:
        return len(self.history)


def closed_form_stats(
    history: Sequence[Pull | tuple[int, int, float]],
    gamma: float,
    priors: tuple[float, float],
    arm: int,
) -> tuple[float, float]:
    """Discounted reward sum and play count of ``arm`` after ``history``.

    ``priors`` is ``(mu_tilde_1, n_1)`` for that arm. With ``t`` pulls,

        mu_tilde = gamma**t * mu_tilde_1 + sum_k gamma**(t-k) * [arm_k == arm] * r_k
        n_disc   = gamma**t * n_1        + sum_k gamma**(t-k) * [arm_k == arm]
    """
    pulls = [p if isinstance(p, Pull) else Pull(*p) for p in history]
    t = len(pulls)
    mu_tilde0, n0 = priors
    mu_tilde = gamma**t * mu_tilde0
    n_disc = gamma**t * n0
    for k, pull in enumerate(pulls, start=1):
        if pull.arm == arm:
            weight = gamma ** (t - k)
            mu_tilde += weight * pull.reward
            n_disc += weight
    return mu_tilde, n_disc


def _sequence_reward(spec: EnvironmentSpec, sequence: Sequence[int]) -> float:
    env = make_environment(spec)
    rng = np.random.default_rng(0)  # noise is zero; the stream is irrelevant
    return sum(env.reward(t, arm, rng).reward for t, arm in enumerate(sequence, start=1))


def _is_noiseless(spec: EnvironmentSpec) -> bool:
    key = "noise_sd" if spec.kind == "mtl-proxy" else "sds"
    value = spec.params.get(key, 0.0)
    values = value if isinstance(value, (list, tuple)) else [value]
    return all(float(v) == 0.0 for v in values)


def exhaustive_regret(spec: EnvironmentSpec) -> tuple[float, tuple[int, ...]]:
    """Best cumulative reward over all ``n_arms ** horizon`` pull sequences.

    Returns the best total and the lexicographically first sequence that
    attains it. Instances larger than ``3**8`` sequences are rejected, as
    are noisy ones.
    """
    k, horizon = spec.n_arms, spec.horizon
    if k > 3 or horizon > 8 or k**horizon > MAX_SEQUENCES:
        raise ValueError(
            f"instance too large for enumeration ({k} arms, {horizon} rounds)"
        )
    if not _is_noiseless(spec):
        raise ValueError("exhaustive_regret requires a zero-noise environment")
    best_total = float("-inf")
    best_seq: tuple[int, ...] = ()
    for seq in itertools.product(range(k), repeat=horizon):
        total = _sequence_reward(spec, seq)
        if total > best_total:
            best_total, best_seq = total, seq
    return best_total, best_seq
