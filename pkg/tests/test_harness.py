import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

from mtlbandit.cli import main
from mtlbandit.harness import (
    SUMMARY_COLUMNS,
    ConfigError,
    ExperimentConfig,
    OutputSpec,
    replay,
    run_experiment,
    run_trial,
    summarize,
)
from mtlbandit.metrics import cumulative_reward, final_regret
from mtlbandit.traces import TrialTrace, dumps_trace, read_trace, write_trace

ZERO_NOISE = {
    "kind": "stationary-gaussian",
    "n_arms": 3,
    "horizon": 40,
    "params": {"means": [0.5, 0.7, 0.1], "sds": 0.0},
}


def config_file(tmp_path, **fields):
    data = {"policy": "discounted-ts", "environment": "mtl-proxy-default", "trials": 2}
    data.update(fields)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_trace_shape():
    config = ExperimentConfig(policy="discounted-ts", environment="fig3-stages")
    trace = run_trial(config, seed=3)
    assert len(trace) == 500
    assert [s.round for s in trace.steps] == list(range(1, 501))
    assert trace.config_digest == config.digest()
    first = trace.steps[0]
    assert len(first.sampled_indices) == 6
    assert len(first.arms) == 6
    assert first.score is not None


def test_fixed_policy_traces_identical_across_seeds():
    config = ExperimentConfig.from_dict({"policy": "fixed", "environment": ZERO_NOISE, "trials": 4})
    result = run_experiment(config)
    bodies = [[s.to_dict() for s in t.steps] for t in result.traces]
    assert all(b == bodies[0] for b in bodies)
    assert [t.seed for t in result.traces] == [0, 1, 2, 3]


def test_policies_share_reward_noise():
    spec = {**ZERO_NOISE, "params": {"means": [0.5, 0.7, 0.1], "sds": 0.3}}
    a = run_trial(ExperimentConfig.from_dict({"policy": "fixed", "environment": spec}), 5)
    b = run_trial(
        ExperimentConfig.from_dict(
            {"policy": "fixed", "environment": spec, "policy_config": {"gamma": 0.5}}
        ),
        5,
    )
    assert a.rewards == b.rewards


def test_trace_round_trip(tmp_path):
    config = ExperimentConfig(policy="uniform", environment="mtl-proxy-default")
    trace = run_trial(config, seed=9)
    path = write_trace(trace, tmp_path / "t.jsonl")
    again = read_trace(path)
    assert dumps_trace(again) == path.read_text()
    assert again.choices == trace.choices


def test_replay_is_bit_identical(tmp_path):
    config = ExperimentConfig(policy="discounted-ts", environment="fig3-stages")
    trace = run_trial(config, seed=42)
    path = write_trace(trace, tmp_path / "t.jsonl")
    assert dumps_trace(replay(read_trace(path))) == path.read_text()


def test_summary_matches_recomputation(tmp_path):
    config = ExperimentConfig(
        policy="discounted-ts",
        environment="swap2",
        trials=3,
        base_seed=10,
        outputs=[OutputSpec("trace", "traces"), OutputSpec("summary", "summary.csv")],
    )
    result = run_experiment(config, out_dir=tmp_path)
    traces = [read_trace(p) for p in sorted((tmp_path / "traces").glob("*.jsonl"))]
    cum = [cumulative_reward(t) for t in traces]
    reg = [final_regret(t) for t in traces]
    s = result.summary
    assert s.mean_cum_reward == pytest.approx(np.mean(cum), rel=1e-12)
    assert s.std_cum_reward == pytest.approx(np.std(cum, ddof=1), rel=1e-12)
    assert s.mean_final_regret == pytest.approx(np.mean(reg), rel=1e-12)
    assert s.std_final_regret == pytest.approx(np.std(reg, ddof=1), rel=1e-12)
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SUMMARY_COLUMNS
    assert rows[1][:3] == ["discounted-ts", "swap2", "3"]
    assert float(rows[1][3]) == s.mean_cum_reward
    assert summarize(traces) == s


def test_selection_prob_output(tmp_path):
    config = ExperimentConfig(
        policy="uniform",
        environment="mtl-proxy-default",
        trials=2,
        outputs=[OutputSpec("selection-prob", "sel.csv", window=30)],
    )
    run_experiment(config, out_dir=tmp_path)
    with open(tmp_path / "sel.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * (500 - 30 + 1)
    assert rows[0]["round"] == "30"
    for row in rows[:50]:
        assert sum(float(row[f"arm_{i}"]) for i in range(6)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize(
    "data",
    [
        {"policy": "ucb", "environment": "stationary2"},
        {"policy": "uniform", "environment": "no-such-preset"},
        {"policy": "uniform", "environment": "stationary2", "trials": 0},
        {"policy": "uniform"},
        {"policy": "uniform", "environment": "stationary2", "policy_config": {"gamma": 2}},
        {"policy": "uniform", "environment": "stationary2", "extra": 1},
        {"policy": "uniform", "environment": "stationary2", "outputs": [{"kind": "png", "path": "x"}]},
        {"policy": "uniform", "environment": {"kind": "stationary-gaussian", "n_arms": 2}},
    ],
)
def test_config_errors(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_window_longer_than_horizon_rejected():
    env = {**ZERO_NOISE, "horizon": 10}
    config = ExperimentConfig.from_dict(
        {"policy": "uniform", "environment": env, "outputs": [{"kind": "selection-prob", "path": "s.csv"}]}
    )
    with pytest.raises(ConfigError):
        run_experiment(config)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    config = ExperimentConfig.from_dict(
        {
            "policy": "uniform",
            "environment": ZERO_NOISE,
            "outputs": [{"kind": "summary", "path": str(blocker / "sub" / "summary.csv")}],
        }
    )
    with pytest.raises(OSError):
        run_experiment(config)


def test_config_dict_round_trip():
    config = ExperimentConfig.from_dict(
        {"policy": "fixed", "environment": ZERO_NOISE, "trials": 3, "base_seed": 7,
         "outputs": [{"kind": "trace", "path": "tr"}]}
    )
    again = ExperimentConfig.from_dict(json.loads(json.dumps(config.to_dict())))
    assert again.to_dict() == config.to_dict()
    assert again.digest() == config.digest()


# --- CLI ---------------------------------------------------------------


def test_cli_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    for name in ("stationary2", "fig3-stages", "mtl-proxy-default"):
        assert name in out


def test_cli_run_writes_outputs(tmp_path, capsys):
    cfg = config_file(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--trials", "3", "--seed", "5", "--out", str(out)]) == 0
    traces = sorted((out / "traces").glob("*.jsonl"))
    assert len(traces) == 3
    assert read_trace(traces[0]).seed == 5
    assert (out / "summary.csv").exists()
    assert capsys.readouterr().out.startswith(",".join(SUMMARY_COLUMNS))


def test_cli_run_is_byte_reproducible(tmp_path):
    cfg = config_file(tmp_path, trials=1)
    for name in ("a", "b"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "traces" / "trial_000.jsonl").read_bytes()
    b = (tmp_path / "b" / "traces" / "trial_000.jsonl").read_bytes()
    assert a == b


def test_cli_metrics(tmp_path):
    trace_path = write_trace(TrialTrace.from_choices([0, 0, 0, 1], n_arms=2), tmp_path / "t.jsonl")
    out = tmp_path / "sel.csv"
    assert main(["metrics", "--trace", str(trace_path), "--window", "2", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["arm_0"]) for r in rows] == [1.0, 1.0, 0.5]
    assert [int(r["round"]) for r in rows] == [2, 3, 4]


def test_cli_metrics_accepts_minimal_trace(tmp_path, capsys):
    path = tmp_path / "external.jsonl"
    lines = [{"type": "header", "n_arms": 3}] + [
        {"round": t, "chosen_arm": a} for t, a in enumerate([2, 2, 1], start=1)
    ]
    path.write_text("\n".join(json.dumps(x) for x in lines))
    assert main(["metrics", "--trace", str(path), "--window", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "round,arm_0,arm_1,arm_2"
    assert len(out) == 2


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 1
    cfg = config_file(tmp_path, environment="nope")
    assert main(["run", "--config", str(cfg)]) == 1
    trace = write_trace(TrialTrace.from_choices([0, 1], n_arms=2), tmp_path / "t.jsonl")
    assert main(["metrics", "--trace", str(trace), "--window", "5"]) == 1

    blocker = tmp_path / "blocker"
    blocker.write_text("")
    good = config_file(tmp_path, trials=1)
    assert main(["run", "--config", str(good), "--out", str(blocker / "x")]) == 2


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_cli_read_only_dir(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    assert main(["run", "--config", str(config_file(tmp_path, trials=1)), "--out", str(ro)]) == 2


def test_cli_usage_error_is_config_error():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 1


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.json")))
def test_shipped_configs_load(path):
    config = ExperimentConfig.load(path)
    assert config.trials >= 1
