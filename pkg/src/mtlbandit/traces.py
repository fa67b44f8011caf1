"""Trial traces and their JSON Lines persistence.

A trace file is one header object followed by one object per round::

    {"type": "header", "format": "mtlbandit-trace/1", "seed": 3, ...}
    {"type": "step", "round": 1, "chosen_arm": 0, "reward": 0.41, ...}

Only ``round`` and ``chosen_arm`` are required in step lines, so traces written
by other tools (e.g. a real trainer) can still be fed to the metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .policies import ArmState

__all__ = ["TRACE_FORMAT", "StepRecord", "TrialTrace", "write_trace", "read_trace", "dumps_trace"]

TRACE_FORMAT = "mtlbandit-trace/1"


@dataclass(frozen=True)
class StepRecord:
    round: int
    chosen_arm: int
    reward: float | None = None
    sampled_indices: tuple[float, ...] = ()
    arms: tuple[ArmState, ...] = ()
    oracle_best_arm: int | None = None
    mean_reward: float | None = None
    oracle_mean: float | None = None
    score: float | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "type": "step",
            "round": self.round,
            "chosen_arm": self.chosen_arm,
            "reward": self.reward,
            "sampled_indices": list(self.sampled_indices),
            "arms": [a.to_dict() for a in self.arms],
            "oracle_best_arm": self.oracle_best_arm,
            "mean_reward": self.mean_reward,
            "oracle_mean": self.oracle_mean,
            "score": self.score,
        }
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StepRecord":
        return cls(
            round=int(data["round"]),
            chosen_arm=int(data["chosen_arm"]),
            reward=data.get("reward"),
            sampled_indices=tuple(data.get("sampled_indices") or ()),
            arms=tuple(ArmState(**a) for a in data.get("arms") or ()),
            oracle_best_arm=data.get("oracle_best_arm"),
            mean_reward=data.get("mean_reward"),
            oracle_mean=data.get("oracle_mean"),
            score=data.get("score"),
        )


@dataclass
class TrialTrace:
    """Ordered step records of one trial plus what is needed to replay it."""

    seed: int
    n_arms: int
    steps: list[StepRecord] = field(default_factory=list)
    config_digest: str = ""
    config: dict[str, Any] = field(default_factory=dict)
    policy: str = ""
    environment: str = ""

    @property
    def choices(self) -> list[int]:
        return [s.chosen_arm for s in self.steps]

    @property
    def rewards(self) -> list[float]:
        return [s.reward for s in self.steps]  # type: ignore[misc]

    def __len__(self) -> int:
        return len(self.steps)

    def header(self) -> dict[str, Any]:
        return {
            "type": "header",
            "format": TRACE_FORMAT,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "n_arms": self.n_arms,
            "policy": self.policy,
            "environment": self.environment,
            "horizon": len(self.steps),
            "config": self.config,
        }

    def validate(self) -> None:
        prev = 0
        for step in self.steps:
            if step.round <= prev:
                raise ValueError(f"rounds must increase strictly; got {step.round} after {prev}")
            if not 0 <= step.chosen_arm < self.n_arms:
                raise ValueError(f"arm {step.chosen_arm} out of range for {self.n_arms} arms")
            prev = step.round

    @classmethod
    def from_choices(
        cls, choices: Sequence[int], n_arms: int | None = None, rewards: Sequence[float] | None = None
    ) -> "TrialTrace":
        """Minimal trace built from a list of chosen arms."""
        if n_arms is None:
            n_arms = max(choices) + 1 if choices else 1
        rewards = list(rewards) if rewards is not None else [None] * len(choices)
        steps = [
            StepRecord(round=t, chosen_arm=int(a), reward=r)
            for t, (a, r) in enumerate(zip(choices, rewards), start=1)
        ]
        return cls(seed=0, n_arms=n_arms, steps=steps)


def _line(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def dumps_trace(trace: TrialTrace) -> str:
    lines = [_line(trace.header())]
    lines.extend(_line(s.to_dict()) for s in trace.steps)
    return "\n".join(lines) + "\n"


def write_trace(trace: TrialTrace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_trace(trace))
    return path


def _parse(lines: Iterable[str], source: str) -> TrialTrace:
    header: dict[str, Any] | None = None
    steps: list[StepRecord] = []
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{source}:{lineno}: invalid JSON ({exc.msg})") from None
        if obj.get("type") == "header":
            if header is not None or steps:
                raise ValueError(f"{source}:{lineno}: header must be the first record")
            header = obj
            continue
        try:
            steps.append(StepRecord.from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{source}:{lineno}: malformed step record ({exc})") from None
    if header is None:
        raise ValueError(f"{source}: missing header record")
    n_arms = header.get("n_arms")
    if n_arms is None:
        n_arms = max((s.chosen_arm for s in steps), default=0) + 1
    trace = TrialTrace(
        seed=int(header.get("seed", 0)),
        n_arms=int(n_arms),
        steps=steps,
        config_digest=header.get("config_digest", ""),
        config=header.get("config", {}),
        policy=header.get("policy", ""),
        environment=header.get("environment", ""),
    )
    trace.validate()
    return trace


def read_trace(path: str | Path) -> TrialTrace:
    with open(path, encoding="utf-8") as fh:
        return _parse(fh, str(path))
