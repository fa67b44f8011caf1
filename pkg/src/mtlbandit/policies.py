"""Discounted Gaussian Thompson Sampling and baseline task-selection policies.

Every policy keeps the same per-arm bookkeeping (discounted reward sum,
discounted play count, mean estimate, sampling standard deviation) so traces
from different policies share one schema. Only the selection rule differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

__all__ = [
    "ArmState",
    "PolicyConfig",
    "Decision",
    "PolicyState",
    "init_policy",
    "sample_and_select",
    "update",
    "step_uniform",
    "step_fixed",
    "step_stationary_ts",
    "stationary_config",
    "Policy",
    "DiscountedGaussianTS",
    "StationaryGaussianTS",
    "UniformPolicy",
    "FixedArmPolicy",
    "POLICY_KINDS",
    "make_policy",
]

# Defaults used for the multi-task experiments.
PRIMARY_PRIOR = 0.3
TAU_INIT = 0.05
TAU_MAX_BOUND = 0.5
GAMMA = 0.9
SLOPE = 0.01


@dataclass(frozen=True)
class ArmState:
    """Snapshot of one arm's statistics."""

    mu_hat: float
    mu_tilde: float
    n_disc: float
    tau: float

    def to_dict(self) -> dict[str, float]:
        return {
            "mu_hat": self.mu_hat,
            "mu_tilde": self.mu_tilde,
            "n_disc": self.n_disc,
            "tau": self.tau,
        }


def _per_arm(value: float | Sequence[float], n_arms: int) -> tuple[float, ...]:
    if np.ndim(value) == 0:
        return (float(value),) * n_arms  # type: ignore[arg-type]
    return tuple(float(v) for v in value)  # type: ignore[union-attr]


@dataclass(frozen=True)
class PolicyConfig:
    """Hyperparameters of the discounted Thompson Sampling controller.

    Parameters
    ----------
    gamma : float
        Discount factor in ``(0, 1]`` applied to every arm each round.
    slope : float
        Per-round growth of the sampling-deviation cap.
    tau_init : tuple of float
        Initial sampling standard deviation per arm.
    tau_max_bound : float
        Hard upper bound on any arm's sampling standard deviation.
    prior_mu_hat, prior_mu_tilde, prior_n : tuple of float
        Initial mean estimate, discounted reward sum and discounted play
        count per arm.
    primary_arm : int
        Index of the primary task. Used by the fixed-arm baseline.
    reward_clip : tuple of float, optional
        ``(low, high)`` interval applied to rewards before updating. ``None``
        (default) passes rewards through unchanged.

    Notes
    -----
    ``tau`` is a standard deviation throughout: indices are drawn from
    ``N(mu_hat, tau**2)``.
    """

    tau_init: tuple[float, ...]
    prior_mu_hat: tuple[float, ...]
    prior_mu_tilde: tuple[float, ...]
    prior_n: tuple[float, ...]
    gamma: float = GAMMA
    slope: float = SLOPE
    tau_max_bound: float = TAU_MAX_BOUND
    primary_arm: int = 0
    reward_clip: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        for name in ("tau_init", "prior_mu_hat", "prior_mu_tilde", "prior_n"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.reward_clip is not None:
            lo, hi = (float(v) for v in self.reward_clip)
            object.__setattr__(self, "reward_clip", (lo, hi))
        self.validate()

    @property
    def n_arms(self) -> int:
        return len(self.tau_init)

    def validate(self) -> None:
        """Raise ``ValueError`` if the configuration is inconsistent."""
        k = len(self.tau_init)
        if k < 1:
            raise ValueError("at least one arm is required")
        for name in ("prior_mu_hat", "prior_mu_tilde", "prior_n"):
            if len(getattr(self, name)) != k:
                raise ValueError(
                    f"{name} has length {len(getattr(self, name))}, expected {k}"
                )
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.slope >= 0.0:
            raise ValueError(f"slope must be non-negative, got {self.slope}")
        if not self.tau_max_bound > 0.0:
            raise ValueError(f"tau_max_bound must be positive, got {self.tau_max_bound}")
        for tau in self.tau_init:
            if not tau > 0.0:
                raise ValueError(f"tau_init values must be positive, got {tau}")
            if tau > self.tau_max_bound:
                raise ValueError(
                    f"tau_init {tau} exceeds tau_max_bound {self.tau_max_bound}"
                )
        for n in self.prior_n:
            if not n >= 0.0:
                raise ValueError(f"prior_n values must be non-negative, got {n}")
        values = self.prior_mu_hat + self.prior_mu_tilde + self.prior_n
        if not all(math.isfinite(v) for v in values):
            raise ValueError("priors must be finite")
        if not 0 <= self.primary_arm < k:
            raise ValueError(f"primary_arm {self.primary_arm} out of range for {k} arms")
        if self.reward_clip is not None and not self.reward_clip[0] <= self.reward_clip[1]:
            raise ValueError(f"reward_clip bounds out of order: {self.reward_clip}")

    @classmethod
    def defaults(
        cls,
        n_arms: int,
        primary_arm: int = 0,
        primary_prior: float = PRIMARY_PRIOR,
        **overrides: Any,
    ) -> "PolicyConfig":
        """Defaults for multi-task task selection.

        The primary arm starts with ``mu_hat = mu_tilde = primary_prior``
        (0.3), auxiliary arms with 0; ``prior_n = 0``, ``tau_init = 0.05``,
        ``tau_max_bound = 0.5``, ``gamma = 0.9``. ``slope`` defaults to 0.01,
        which lifts the cap from 0.05 to 0.5 in 45 rounds.
        """
        if n_arms < 1:
            raise ValueError("n_arms must be >= 1")
        if not 0 <= primary_arm < n_arms:
            raise ValueError(f"primary_arm {primary_arm} out of range for {n_arms} arms")
        prior = [0.0] * n_arms
        prior[primary_arm] = float(primary_prior)
        kwargs: dict[str, Any] = dict(
            tau_init=(TAU_INIT,) * n_arms,
            prior_mu_hat=tuple(prior),
            prior_mu_tilde=tuple(prior),
            prior_n=(0.0,) * n_arms,
            primary_arm=primary_arm,
        )
        kwargs.update(overrides)
        for name in ("tau_init", "prior_mu_hat", "prior_mu_tilde", "prior_n"):
            kwargs[name] = _per_arm(kwargs[name], n_arms)
        return cls(**kwargs)

    @classmethod
    def from_dict(cls, data: dict[str, Any], n_arms: int) -> "PolicyConfig":
        """Build a config from a (possibly partial) mapping of overrides.

        Missing fields fall back to :meth:`defaults`. Scalars given for
        per-arm fields are broadcast to every arm.
        """
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known - {"primary_prior"}
        if unknown:
            raise ValueError(f"unknown policy_config fields: {sorted(unknown)}")
        primary_arm = int(data.pop("primary_arm", 0))
        primary_prior = float(data.pop("primary_prior", PRIMARY_PRIOR))
        if data.get("reward_clip") is not None:
            data["reward_clip"] = tuple(data["reward_clip"])
        return cls.defaults(n_arms, primary_arm, primary_prior, **data)

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "slope": self.slope,
            "tau_init": list(self.tau_init),
            "tau_max_bound": self.tau_max_bound,
            "prior_mu_hat": list(self.prior_mu_hat),
            "prior_mu_tilde": list(self.prior_mu_tilde),
            "prior_n": list(self.prior_n),
            "primary_arm": self.primary_arm,
            "reward_clip": list(self.reward_clip) if self.reward_clip else None,
        }


@dataclass(frozen=True)
class Decision:
    """Outcome of one selection step.

    ``sampled_indices`` is empty for policies that do not sample.
    """

    round: int
    chosen_arm: int
    sampled_indices: tuple[float, ...] = ()


@dataclass(frozen=True)
class PolicyState:
    """Immutable per-trial policy state.

    Arrays hold one entry per arm. ``round`` is the index ``t`` of the next
    round to be played, starting at 1. Treat the arrays as read-only;
    :func:`update` returns a fresh state.
    """

    config: PolicyConfig
    mu_hat: np.ndarray
    mu_tilde: np.ndarray
    n_disc: np.ndarray
    tau: np.ndarray
    round: int = 1
    played: np.ndarray = field(default=None)  # type: ignore[assignment]

    @property
    def n_arms(self) -> int:
        return len(self.mu_hat)

    def arms(self) -> tuple[ArmState, ...]:
        return tuple(
            ArmState(float(m), float(mt), float(n), float(t))
            for m, mt, n, t in zip(self.mu_hat, self.mu_tilde, self.n_disc, self.tau)
        )

    def tau_cap(self, t: int | None = None) -> np.ndarray:
        """Sampling-deviation cap ``min(slope*t + tau_init, tau_max_bound)``."""
        t = self.round if t is None else t
        cfg = self.config
        return np.minimum(
            cfg.slope * t + np.asarray(cfg.tau_init), cfg.tau_max_bound
        )


def init_policy(config: PolicyConfig, n_arms: int | None = None) -> PolicyState:
    """Initial state whose arm statistics equal the configured priors."""
    if n_arms is None:
        n_arms = config.n_arms
    if n_arms < 1:
        raise ValueError("n_arms must be >= 1")
    if config.n_arms != n_arms:
        raise ValueError(
            f"config is sized for {config.n_arms} arms, environment has {n_arms}"
        )
    config.validate()
    return PolicyState(
        config=config,
        mu_hat=np.array(config.prior_mu_hat, dtype=np.float64),
        mu_tilde=np.array(config.prior_mu_tilde, dtype=np.float64),
        n_disc=np.array(config.prior_n, dtype=np.float64),
        tau=np.array(config.tau_init, dtype=np.float64),
        round=1,
        played=np.zeros(n_arms, dtype=bool),
    )


def sample_and_select(state: PolicyState, rng: np.random.Generator) -> Decision:
    """Draw ``theta_i ~ N(mu_hat_i, tau_i**2)`` per arm and pick the argmax.

    Ties go to the lowest arm index. The state is not modified.
    """
    z = rng.standard_normal(state.n_arms)
    theta = state.mu_hat + state.tau * z
    chosen = int(np.argmax(theta))
    return Decision(state.round, chosen, tuple(float(v) for v in theta))


def update(state: PolicyState, chosen: int, reward: float) -> PolicyState:
    """Apply one round of discounted updates and return the new state.

    Every arm is discounted by ``gamma``; the chosen arm additionally gains
    the reward and one play. Arms whose discounted count is still zero keep
    their prior mean and get the current cap as their deviation.
    """
    k = state.n_arms
    if isinstance(chosen, bool) or not isinstance(chosen, (int, np.integer)):
        raise TypeError(f"arm index must be an integer, got {chosen!r}")
    if not 0 <= chosen < k:
        raise ValueError(f"arm index {chosen} out of range for {k} arms")
    reward = float(reward)
    if not math.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward}")
    cfg = state.config
    if cfg.reward_clip is not None:
        reward = min(max(reward, cfg.reward_clip[0]), cfg.reward_clip[1])

    hit = np.zeros(k, dtype=np.float64)
    hit[chosen] = 1.0
    gamma = cfg.gamma
    mu_tilde = gamma * state.mu_tilde + hit * reward
    n_disc = gamma * state.n_disc + hit

    positive = n_disc > 0.0
    mu_hat = state.mu_hat.copy()
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratio = np.divide(mu_tilde, n_disc, out=np.full(k, np.nan), where=positive)
    # Subnormal counts can overflow the ratio; keep the previous estimate then.
    usable = positive & np.isfinite(ratio)
    mu_hat[usable] = ratio[usable]

    tau_max = state.tau_cap(state.round)
    tau = tau_max.copy()
    inv_sqrt = np.full(k, np.inf)
    np.divide(1.0, np.sqrt(n_disc), out=inv_sqrt, where=positive)
    np.minimum(inv_sqrt, tau_max, out=tau, where=positive)

    played = state.played.copy()
    played[chosen] = True
    return replace(
        state,
        mu_hat=mu_hat,
        mu_tilde=mu_tilde,
        n_disc=n_disc,
        tau=tau,
        round=state.round + 1,
        played=played,
    )


def step_uniform(state: PolicyState, rng: np.random.Generator) -> Decision:
    """Pick an arm uniformly at random (the random multi-task baseline)."""
    return Decision(state.round, int(rng.integers(state.n_arms)))


def step_fixed(state: PolicyState, primary_arm: int | None = None) -> Decision:
    """Always pick the primary arm (the single-task baseline)."""
    arm = state.config.primary_arm if primary_arm is None else int(primary_arm)
    if not 0 <= arm < state.n_arms:
        raise ValueError(f"arm index {arm} out of range for {state.n_arms} arms")
    return Decision(state.round, arm)


def step_stationary_ts(state: PolicyState, rng: np.random.Generator) -> Decision:
    """Selection for stationary Gaussian TS; identical to :func:`sample_and_select`.

    What makes the policy stationary is the config it updates with, see
    :func:`stationary_config`.
    """
    return sample_and_select(state, rng)


def stationary_config(config: PolicyConfig) -> PolicyConfig:
    """Undiscounted variant of ``config`` with the cap pinned at its bound.

    ``gamma`` becomes 1 and ``slope`` is raised so that
    ``slope*t + tau_init >= tau_max_bound`` from round 1 on, which makes the
    cap constant at ``tau_max_bound``.
    """
    saturating = config.tau_max_bound - min(config.tau_init)
    return replace(config, gamma=1.0, slope=max(saturating, 0.0))


class Policy:
    """Stateful wrapper used by the harness: ``select`` then ``update``."""

    kind = "abstract"

    def __init__(self, config: PolicyConfig) -> None:
        self.config = config
        self.state = init_policy(self._effective_config(config))

    def _effective_config(self, config: PolicyConfig) -> PolicyConfig:
        return config

    @property
    def n_arms(self) -> int:
        return self.state.n_arms

    def reset(self) -> None:
        self.state = init_policy(self.state.config)

    def select(self, rng: np.random.Generator) -> Decision:
        raise NotImplementedError

    def update(self, chosen: int, reward: float) -> None:
        self.state = update(self.state, chosen, reward)


class DiscountedGaussianTS(Policy):
    """Non-stationary Thompson Sampling with discounted Gaussian statistics."""

    kind = "discounted-ts"

    def select(self, rng: np.random.Generator) -> Decision:
        return sample_and_select(self.state, rng)


class StationaryGaussianTS(Policy):
    """Gaussian Thompson Sampling without discounting (``gamma = 1``)."""

    kind = "stationary-ts"

    def _effective_config(self, config: PolicyConfig) -> PolicyConfig:
        return stationary_config(config)

    def select(self, rng: np.random.Generator) -> Decision:
        return step_stationary_ts(self.state, rng)


class UniformPolicy(Policy):
    """Random task selection; statistics are tracked for diagnostics only."""

    kind = "uniform"

    def select(self, rng: np.random.Generator) -> Decision:
        return step_uniform(self.state, rng)


class FixedArmPolicy(Policy):
    """Always trains on the primary task."""

    kind = "fixed"

    def select(self, rng: np.random.Generator) -> Decision:
        return step_fixed(self.state)


POLICY_KINDS: dict[str, type[Policy]] = {
    cls.kind: cls
    for cls in (DiscountedGaussianTS, StationaryGaussianTS, UniformPolicy, FixedArmPolicy)
}


def make_policy(kind: str, config: PolicyConfig) -> Policy:
    try:
        cls = POLICY_KINDS[kind]
    except KeyError:
        raise ValueError(
            f"unknown policy {kind!r}; expected one of {sorted(POLICY_KINDS)}"
        ) from None
    return cls(config)
