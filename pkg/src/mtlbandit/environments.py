"""Reward processes for bandit simulations.

Four kinds are supported:

``stationary-gaussian``
    ``reward ~ N(means[i], sds[i]**2)`` at every round.
``piecewise-stationary``
    a mean table per stage; stages switch after each changepoint round.
``drifting``
    ``means[i] + drift[i] * (t - 1)`` plus Gaussian noise.
``mtl-proxy``
    a stand-in for a training loop. Pulling an arm trains on that task and
    yields a validation score; the reward is the improvement over the best
    score seen so far.

Every environment draws one noise value per arm each round, whichever arm is
pulled, so two policies given the same seed see the same noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = [
    "ENV_KINDS",
    "EnvironmentSpec",
    "RewardSample",
    "Environment",
    "StationaryGaussianEnv",
    "PiecewiseStationaryEnv",
    "DriftingEnv",
    "MTLProxyEnv",
    "make_environment",
    "mtl_proxy_step",
    "stage_of",
    "PRESETS",
    "get_preset",
    "TASK_NAMES",
]

ENV_KINDS = ("stationary-gaussian", "piecewise-stationary", "drifting", "mtl-proxy")

# Arm order of the six-task presets.
TASK_NAMES = (
    "dialogue-act",
    "emotion-cls",
    "speaker-cls",
    "arousal",
    "valence",
    "dominance",
)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Declarative description of a reward process.

    ``params`` depends on ``kind``:

    * stationary-gaussian: ``means``, ``sds``
    * piecewise-stationary: ``changepoints``, ``means`` (one row per stage), ``sds``
    * drifting: ``means``, ``drift``, ``sds``
    * mtl-proxy: ``changepoints``, ``improvement`` (one row per stage),
      ``half_life`` (scalar, per arm, or per stage and arm; ``None`` means no
      decay), ``noise_sd``, ``initial_score``
    """

    kind: str
    n_arms: int
    horizon: int
    params: dict[str, Any] = field(default_factory=dict)
    name: str | None = None
    arm_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.arm_names is not None:
            object.__setattr__(self, "arm_names", tuple(self.arm_names))
        self.validate()

    def validate(self) -> None:
        if self.kind not in ENV_KINDS:
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if self.n_arms < 1:
            raise ValueError("n_arms must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.arm_names is not None and len(self.arm_names) != self.n_arms:
            raise ValueError("arm_names must have one entry per arm")
        # Building the environment runs the kind-specific checks.
        make_environment(self)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "n_arms": self.n_arms,
            "horizon": self.horizon,
            "params": _jsonable(self.params),
        }
        if self.name is not None:
            out["name"] = self.name
        if self.arm_names is not None:
            out["arm_names"] = list(self.arm_names)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EnvironmentSpec":
        allowed = {"kind", "n_arms", "horizon", "params", "name", "arm_names"}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown environment fields: {sorted(unknown)}")
        try:
            return cls(
                kind=data["kind"],
                n_arms=int(data["n_arms"]),
                horizon=int(data["horizon"]),
                params=dict(data.get("params", {})),
                name=data.get("name"),
                arm_names=data.get("arm_names"),
            )
        except KeyError as exc:
            raise ValueError(f"environment is missing field {exc.args[0]!r}") from None

    def with_horizon(self, horizon: int) -> "EnvironmentSpec":
        return EnvironmentSpec(
            self.kind, self.n_arms, horizon, self.params, self.name, self.arm_names
        )


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


@dataclass(frozen=True)
class RewardSample:
    """Result of pulling one arm.

    ``mean_reward`` and ``oracle_mean`` are the ground-truth expected rewards
    of the pulled arm and of the best arm at that round; they exist only in
    simulation and feed regret. ``score`` is the validation score for the
    MTL proxy and ``None`` elsewhere.
    """

    round: int
    arm: int
    reward: float
    oracle_best_arm: int
    mean_reward: float
    oracle_mean: float
    score: float | None = None


def _none_to_inf(value: Any) -> Any:
    if value is None:
        return np.inf
    if isinstance(value, (list, tuple)):
        return [_none_to_inf(v) for v in value]
    return value


def stage_of(round_: int, changepoints: Sequence[int]) -> int:
    """Zero-based stage of ``round_``; a changepoint ``c`` is the last round of its stage."""
    stage = 0
    for c in changepoints:
        if round_ > c:
            stage += 1
        else:
            break
    return stage


def _vector(value: Any, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must have {n} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _sds(value: Any, n: int) -> np.ndarray:
    sds = _vector(value, n, "sds")
    if np.any(sds < 0):
        raise ValueError("standard deviations must be non-negative")
    return sds


def _changepoints(value: Any, horizon: int) -> tuple[int, ...]:
    cps = tuple(int(c) for c in value)
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError(f"changepoints must be strictly increasing, got {cps}")
    if cps and (cps[0] < 1 or cps[-1] >= horizon):
        raise ValueError(f"changepoints must lie in [1, horizon), got {cps}")
    return cps


class Environment:
    """Base class. Subclasses provide :meth:`expected_rewards`."""

    def __init__(self, spec: EnvironmentSpec) -> None:
        self.spec = spec
        self.n_arms = spec.n_arms
        self.horizon = spec.horizon

    def reset(self) -> None:
        """Restore the initial state (no-op for memoryless environments)."""

    def expected_rewards(self, round_: int) -> np.ndarray:
        raise NotImplementedError

    def oracle_best_arm(self, round_: int) -> int:
        return int(np.argmax(self.expected_rewards(round_)))

    def _check(self, round_: int, arm: int) -> None:
        if not 1 <= round_ <= self.horizon:
            raise ValueError(f"round {round_} outside [1, {self.horizon}]")
        if not 0 <= arm < self.n_arms:
            raise ValueError(f"arm index {arm} out of range for {self.n_arms} arms")

    def _noise_sd(self, round_: int) -> np.ndarray:
        return self.sds  # type: ignore[attr-defined]

    def reward(self, round_: int, arm: int, rng: np.random.Generator) -> RewardSample:
        self._check(round_, arm)
        means = self.expected_rewards(round_)
        noise = rng.standard_normal(self.n_arms)
        best = int(np.argmax(means))
        value = float(means[arm] + self._noise_sd(round_)[arm] * noise[arm])
        return RewardSample(round_, arm, value, best, float(means[arm]), float(means[best]))


class StationaryGaussianEnv(Environment):
    def __init__(self, spec: EnvironmentSpec) -> None:
        super().__init__(spec)
        p = spec.params
        self.means = _vector(p["means"], self.n_arms, "means")
        self.sds = _sds(p.get("sds", 0.0), self.n_arms)

    def expected_rewards(self, round_: int) -> np.ndarray:
        return self.means


class PiecewiseStationaryEnv(Environment):
    def __init__(self, spec: EnvironmentSpec) -> None:
        super().__init__(spec)
        p = spec.params
        self.changepoints = _changepoints(p.get("changepoints", ()), self.horizon)
        table = np.asarray(p["means"], dtype=np.float64)
        if table.shape != (len(self.changepoints) + 1, self.n_arms):
            raise ValueError(
                f"means must have shape ({len(self.changepoints) + 1}, {self.n_arms}),"
                f" got {table.shape}"
            )
        if not np.all(np.isfinite(table)):
            raise ValueError("means must be finite")
        self.means = table
        self.sds = _sds(p.get("sds", 0.0), self.n_arms)

    def stage(self, round_: int) -> int:
        return stage_of(round_, self.changepoints)

    def expected_rewards(self, round_: int) -> np.ndarray:
        return self.means[self.stage(round_)]


class DriftingEnv(Environment):
    def __init__(self, spec: EnvironmentSpec) -> None:
        super().__init__(spec)
        p = spec.params
        self.means = _vector(p["means"], self.n_arms, "means")
        self.drift = _vector(p.get("drift", 0.0), self.n_arms, "drift")
        self.sds = _sds(p.get("sds", 0.0), self.n_arms)

    def expected_rewards(self, round_: int) -> np.ndarray:
        return self.means + self.drift * (round_ - 1)


class MTLProxyEnv(Environment):
    """Synthetic training loop with best-so-far validation tracking.

    Pulling arm ``i`` at stage ``s`` after ``k`` earlier pulls of ``i`` within
    that stage improves the validation score by

        improvement[s][i] * 0.5 ** (k / half_life[s][i]) + noise_sd[i] * z

    The reward is ``V - V_best``; afterwards ``V_best = max(V_best, V)``.
    """

    def __init__(self, spec: EnvironmentSpec) -> None:
        super().__init__(spec)
        p = spec.params
        k = self.n_arms
        self.changepoints = _changepoints(p.get("changepoints", ()), self.horizon)
        n_stages = len(self.changepoints) + 1
        table = np.asarray(p["improvement"], dtype=np.float64)
        if table.ndim == 1:
            table = np.tile(table, (n_stages, 1))
        if table.shape != (n_stages, k):
            raise ValueError(
                f"improvement must have shape ({n_stages}, {k}), got {table.shape}"
            )
        if not np.all(np.isfinite(table)):
            raise ValueError("improvement must be finite")
        self.improvement = table
        self.half_life = self._half_life(p.get("half_life"), n_stages)
        self.sds = _sds(p.get("noise_sd", 0.0), k)
        self.initial_score = float(p.get("initial_score", 0.0))
        if not math.isfinite(self.initial_score):
            raise ValueError("initial_score must be finite")
        self.reset()

    def _half_life(self, value: Any, n_stages: int) -> np.ndarray:
        k = self.n_arms
        arr = np.asarray(_none_to_inf(value), dtype=np.float64)
        if arr.ndim == 0:
            arr = np.full((n_stages, k), float(arr))
        elif arr.ndim == 1:
            arr = np.tile(arr, (n_stages, 1))
        if arr.shape != (n_stages, k):
            raise ValueError(f"half_life must broadcast to ({n_stages}, {k})")
        if np.any(~(arr > 0)):
            raise ValueError("half_life values must be positive")
        return arr

    def reset(self) -> None:
        self.best_score = self.initial_score
        self.last_round = 0
        self._stage = 0
        self.stage_pulls = np.zeros(self.n_arms, dtype=np.int64)

    def stage(self, round_: int) -> int:
        return stage_of(round_, self.changepoints)

    def _sync_stage(self, round_: int) -> int:
        stage = self.stage(round_)
        if stage != self._stage:
            self._stage = stage
            self.stage_pulls[:] = 0
        return stage

    def expected_rewards(self, round_: int) -> np.ndarray:
        stage = self.stage(round_)
        pulls = self.stage_pulls if stage == self._stage else np.zeros(self.n_arms)
        return self.improvement[stage] * np.exp2(-pulls / self.half_life[stage])

    def reward(self, round_: int, arm: int, rng: np.random.Generator) -> RewardSample:
        self._check(round_, arm)
        self._sync_stage(round_)
        means = self.expected_rewards(round_)
        noise = rng.standard_normal(self.n_arms)
        best = int(np.argmax(means))
        draw = float(means[arm] + self.sds[arm] * noise[arm])
        score = self.best_score + draw
        reward = score - self.best_score
        self.best_score = max(self.best_score, score)
        self.stage_pulls[arm] += 1
        self.last_round = round_
        return RewardSample(
            round_, arm, reward, best, float(means[arm]), float(means[best]), score
        )


def mtl_proxy_step(
    env: MTLProxyEnv, arm: int, rng: np.random.Generator, round_: int | None = None
) -> RewardSample:
    """Pull ``arm`` in an MTL-proxy environment, by default at the next round."""
    if round_ is None:
        round_ = env.last_round + 1
    return env.reward(round_, arm, rng)


_ENV_CLASSES: dict[str, type[Environment]] = {
    "stationary-gaussian": StationaryGaussianEnv,
    "piecewise-stationary": PiecewiseStationaryEnv,
    "drifting": DriftingEnv,
    "mtl-proxy": MTLProxyEnv,
}


def make_environment(spec: EnvironmentSpec) -> Environment:
    try:
        return _ENV_CLASSES[spec.kind](spec)
    except KeyError as exc:
        raise ValueError(f"environment {spec.kind!r} is missing parameter {exc.args[0]!r}") from None


def _fig3_stages(horizon: int = 500) -> EnvironmentSpec:
    # Stage dominance: primary, flat, emotion-cls, arousal & valence.
    # Speaker and dominance stay harmful throughout.
    q = horizon // 4
    return EnvironmentSpec(
        kind="mtl-proxy",
        n_arms=6,
        horizon=horizon,
        name="fig3-stages",
        arm_names=TASK_NAMES,
        params={
            "changepoints": [q, 2 * q, 3 * q],
            "improvement": [
                [0.6, 0.0, -0.6, 0.0, 0.0, -0.6],
                [0.1, 0.1, -0.6, 0.1, 0.1, -0.6],
                [0.0, 0.6, -0.6, 0.1, 0.1, -0.6],
                [0.0, 0.1, -0.6, 0.5, 0.5, -0.6],
            ],
            "half_life": [
                [60, None, None, None, None, None],
                [None] * 6,
                [None] * 6,
                [None] * 6,
            ],
            "noise_sd": 0.1,
            "initial_score": 0.0,
        },
    )


PRESETS: dict[str, EnvironmentSpec] = {
    "stationary2": EnvironmentSpec(
        kind="stationary-gaussian",
        n_arms=2,
        horizon=2000,
        name="stationary2",
        params={"means": [0.8, 0.2], "sds": [0.1, 0.1]},
    ),
    "swap2": EnvironmentSpec(
        kind="piecewise-stationary",
        n_arms=2,
        horizon=1000,
        name="swap2",
        params={"changepoints": [500], "means": [[0.8, 0.2], [0.2, 0.8]], "sds": [0.1, 0.1]},
    ),
    "fig3-stages": _fig3_stages(),
    "mtl-proxy-default": EnvironmentSpec(
        kind="mtl-proxy",
        n_arms=6,
        horizon=500,
        name="mtl-proxy-default",
        arm_names=TASK_NAMES,
        params={
            "changepoints": [],
            "improvement": [0.5, 0.3, -0.3, 0.2, 0.2, -0.3],
            "half_life": [100, 200, None, 200, 200, None],
            "noise_sd": 0.1,
            "initial_score": 0.0,
        },
    ),
}


def get_preset(name: str) -> EnvironmentSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown environment preset {name!r}; known: {sorted(PRESETS)}") from None
