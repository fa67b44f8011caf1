"""Task selection for multi-task learning with discounted Gaussian Thompson Sampling."""

from .environments import (
    PRESETS,
    EnvironmentSpec,
    RewardSample,
    get_preset,
    make_environment,
    mtl_proxy_step,
)
from .harness import ConfigError, ExperimentConfig, OutputSpec, replay, run_experiment, run_trial
from .metrics import RegretUnavailable, cumulative_reward, dynamic_regret, selection_probability
from .policies import (
    ArmState,
    Decision,
    DiscountedGaussianTS,
    FixedArmPolicy,
    PolicyConfig,
    PolicyState,
    StationaryGaussianTS,
    UniformPolicy,
    init_policy,
    make_policy,
    sample_and_select,
    step_fixed,
    step_stationary_ts,
    step_uniform,
    update,
)
from .traces import StepRecord, TrialTrace, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "PRESETS",
    "ArmState",
    "ConfigError",
    "Decision",
    "DiscountedGaussianTS",
    "EnvironmentSpec",
    "ExperimentConfig",
    "FixedArmPolicy",
    "OutputSpec",
    "PolicyConfig",
    "PolicyState",
    "RegretUnavailable",
    "RewardSample",
    "StationaryGaussianTS",
    "StepRecord",
    "TrialTrace",
    "UniformPolicy",
    "cumulative_reward",
    "dynamic_regret",
    "get_preset",
    "init_policy",
    "make_environment",
    "make_policy",
    "mtl_proxy_step",
    "read_trace",
    "replay",
    "run_experiment",
    "run_trial",
    "sample_and_select",
    "selection_probability",
    "step_fixed",
    "step_stationary_ts",
    "step_uniform",
    "update",
    "write_trace",
]
