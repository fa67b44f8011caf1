"""Seeded multi-trial experiments: policy vs. environment.

One round is one training epoch: the policy picks a task, the environment
returns the reward, the policy updates.

Per-trial seeds are ``base_seed + trial_index``. Each trial seed is split
with :class:`numpy.random.SeedSequence` into one stream for the policy and
one for the environment, so different policies run with the same seed see
the same reward noise.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .environments import EnvironmentSpec, PRESETS, make_environment
from .metrics import RegretUnavailable, cumulative_reward, final_regret, selection_probability
from .policies import POLICY_KINDS, PolicyConfig, make_policy
from .traces import StepRecord, TrialTrace, write_trace

__all__ = [
    "ConfigError",
    "OutputSpec",
    "ExperimentConfig",
    "Summary",
    "ExperimentResult",
    "trial_rngs",
    "run_trial",
    "run_experiment",
    "replay",
    "summarize",
    "SUMMARY_COLUMNS",
]

log = logging.getLogger(__name__)

OUTPUT_KINDS = ("trace", "summary", "selection-prob")
SUMMARY_COLUMNS = (
    "policy",
    "env",
    "trials",
    "mean_cum_reward",
    "std_cum_reward",
    "mean_final_regret",
    "std_final_regret",
)


class ConfigError(ValueError):
    """Invalid or unresolvable experiment configuration."""


@dataclass(frozen=True)
class OutputSpec:
    """Requested output.

    ``trace`` paths are directories (one ``trial_NNN.jsonl`` per trial);
    ``summary`` and ``selection-prob`` paths are CSV files.
    """

    kind: str
    path: str
    window: int = 30

    def __post_init__(self) -> None:
        if self.kind not in OUTPUT_KINDS:
            raise ConfigError(f"unknown output kind {self.kind!r}; expected one of {OUTPUT_KINDS}")
        if self.window < 1:
            raise ConfigError("window must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "path": self.path}
        if self.kind == "selection-prob":
            out["window"] = self.window
        return out


@dataclass
class ExperimentConfig:
    policy: str
    environment: EnvironmentSpec | str
    policy_config: dict[str, Any] = field(default_factory=dict)
    trials: int = 1
    base_seed: int = 0
    outputs: list[OutputSpec] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.policy not in POLICY_KINDS:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {sorted(POLICY_KINDS)}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        self.env_spec  # resolve early so bad presets fail at load time
        self.resolved_policy_config()

    @property
    def env_spec(self) -> EnvironmentSpec:
        if isinstance(self.environment, EnvironmentSpec):
            return self.environment
        try:
            return PRESETS[self.environment]
        except KeyError:
            raise ConfigError(
                f"unknown environment preset {self.environment!r}; known: {sorted(PRESETS)}"
            ) from None

    def resolved_policy_config(self) -> PolicyConfig:
        try:
            return PolicyConfig.from_dict(self.policy_config, self.env_spec.n_arms)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid policy_config: {exc}") from None

    def resolved(self) -> dict[str, Any]:
        """Fully expanded policy and environment description."""
        return {
            "policy": self.policy,
            "policy_config": self.resolved_policy_config().to_dict(),
            "environment": self.env_spec.to_dict(),
        }

    def digest(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        allowed = {"policy", "environment", "policy_config", "trials", "base_seed", "outputs"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for key in ("policy", "environment"):
            if key not in data:
                raise ConfigError(f"config is missing {key!r}")
        env = data["environment"]
        try:
            if isinstance(env, dict):
                env = EnvironmentSpec.from_dict(env)
            elif not isinstance(env, str):
                raise ConfigError("environment must be a preset name or an object")
            outputs = [OutputSpec(**o) for o in data.get("outputs", [])]
            return cls(
                policy=data["policy"],
                environment=env,
                policy_config=dict(data.get("policy_config") or {}),
                trials=int(data.get("trials", 1)),
                base_seed=int(data.get("base_seed", 0)),
                outputs=outputs,
            )
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        env = self.environment
        return {
            "policy": self.policy,
            "environment": env.to_dict() if isinstance(env, EnvironmentSpec) else env,
            "policy_config": self.policy_config,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "outputs": [o.to_dict() for o in self.outputs],
        }


@dataclass(frozen=True)
class Summary:
    policy: str
    env: str
    trials: int
    mean_cum_reward: float
    std_cum_reward: float
    mean_final_regret: float
    std_final_regret: float

    def row(self) -> list[Any]:
        return [getattr(self, c) for c in SUMMARY_COLUMNS]


@dataclass
class ExperimentResult:
    traces: list[TrialTrace]
    summary: Summary
    written: list[Path] = field(default_factory=list)


def trial_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (policy, environment) generators derived from one seed."""
    policy_ss, env_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(policy_ss), np.random.default_rng(env_ss)


def run_trial(config: ExperimentConfig, seed: int) -> TrialTrace:
    spec = config.env_spec
    env = make_environment(spec)
    policy = make_policy(config.policy, config.resolved_policy_config())
    policy_rng, env_rng = trial_rngs(seed)

    steps: list[StepRecord] = []
    for t in range(1, spec.horizon + 1):
        decision = policy.select(policy_rng)
        sample = env.reward(t, decision.chosen_arm, env_rng)
        policy.update(decision.chosen_arm, sample.reward)
        steps.append(
            StepRecord(
                round=t,
                chosen_arm=decision.chosen_arm,
                reward=sample.reward,
                sampled_indices=decision.sampled_indices,
                arms=policy.state.arms(),
                oracle_best_arm=sample.oracle_best_arm,
                mean_reward=sample.mean_reward,
                oracle_mean=sample.oracle_mean,
                score=sample.score,
            )
        )
    return TrialTrace(
        seed=seed,
        n_arms=spec.n_arms,
        steps=steps,
        config_digest=config.digest(),
        config=config.resolved(),
        policy=config.policy,
        environment=spec.name or spec.kind,
    )


def replay(trace: TrialTrace) -> TrialTrace:
    """Re-run a trial from the config and seed stored in its header."""
    if not trace.config:
        raise ConfigError("trace has no embedded config; cannot replay")
    config = ExperimentConfig.from_dict(trace.config)
    return run_trial(config, trace.seed)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def summarize(traces: Sequence[TrialTrace], policy: str = "", env: str = "") -> Summary:
    """Mean and sample standard deviation (ddof=1) across trials."""
    if not traces:
        raise ValueError("no traces to summarize")
    cum = [cumulative_reward(t) for t in traces]
    try:
        regret = [final_regret(t) for t in traces]
    except RegretUnavailable:
        regret = [math.nan] * len(traces)
    m_c, s_c = _mean_std(cum)
    m_r, s_r = _mean_std(regret)
    return Summary(
        policy or traces[0].policy,
        env or traces[0].environment,
        len(traces),
        m_c,
        s_c,
        m_r,
        s_r,
    )


def _write_summary(summary: Summary, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(summary.row())


def _write_selection(traces: Sequence[TrialTrace], window: int, path: Path) -> None:
    n_arms = traces[0].n_arms
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "round", *(f"arm_{i}" for i in range(n_arms))])
        for trial, trace in enumerate(traces):
            sp = selection_probability(trace, window)
            for r, row in zip(sp.rounds, sp.values):
                writer.writerow([trial, int(r), *(repr(float(v)) for v in row)])


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentResult:
    """Run every trial, write the requested outputs, and summarize.

    Relative output paths are resolved against ``out_dir`` when given.
    Raises :class:`ConfigError` when a selection-prob window exceeds the
    horizon and :class:`OSError` when an output cannot be written.
    """
    spec = config.env_spec
    for out in config.outputs:
        if out.kind == "selection-prob" and out.window > spec.horizon:
            raise ConfigError(f"window {out.window} exceeds horizon {spec.horizon}")

    traces = []
    for i in range(config.trials):
        seed = config.base_seed + i
        log.debug("trial %d (seed %d)", i, seed)
        traces.append(run_trial(config, seed))
    summary = summarize(traces, config.policy, spec.name or spec.kind)

    base = Path(out_dir) if out_dir is not None else Path(".")
    written: list[Path] = []
    for out in config.outputs:
        path = Path(out.path)
        if not path.is_absolute():
            path = base / path
        if out.kind == "trace":
            for i, trace in enumerate(traces):
                written.append(write_trace(trace, path / f"trial_{i:03d}.jsonl"))
            continue
        path.parent.mkdir(parents=True, exist_ok=True)
        if out.kind == "summary":
            _write_summary(summary, path)
        else:
            _write_selection(traces, out.window, path)
        written.append(path)
    return ExperimentResult(traces, summary, written)
