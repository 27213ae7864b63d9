import json
import math
import os
import shutil
import subprocess

import pytest

import relaynet

CLI = os.environ.get("RELAYNET_CLI") or shutil.which("relaynet")

TINY = [
    "markov.sample_budget=10000",
    "ppo.episodes=2",
    "ppo.parameters_per_episode=2",
    "ppo.trials=1",
    "ppo.horizon=20",
    "evaluation.episodes=3",
    "evaluation.horizon=10",
]


def test_closed_forms():
    assert relaynet.mutual_information(0.05, 2.0, 0.001) == pytest.approx(math.log2(101))
    assert relaynet.closed_form_outage(0.05, 1.0, 1.0, 0.001) == pytest.approx(1 - math.exp(-0.02))
    assert relaynet.decode_action(2.7, 0.05, 3, 0.1) == (2, 0.05)
    assert relaynet.decode_action(0.2, -1.0, 3, 0.1) == (1, 0.0)
    assert relaynet.tv_distance([0.5, 0.5], [0.75, 0.25]) == pytest.approx(0.25)
    assert relaynet.advantage(1, 0.9, 2, 1) == pytest.approx(1.8)
    assert relaynet.actor_loss(1.5, 2, 0.2) == pytest.approx(2.4)
    assert relaynet.robust_filter([5, 4], [0.5, 0], 10, 4) == [1]


def test_invalid_inputs_raise():
    with pytest.raises(ValueError):
        relaynet.decode_action(float("nan"), 0.0, 3, 0.1)
    with pytest.raises(ValueError):
        relaynet.actor_loss(0.0, 1.0, 0.2)
    with pytest.raises(ValueError, match="ppo.epochz"):
        relaynet.scenario({"ppo": {"epochz": 1}})


def test_sweeps():
    for sweep in (relaynet.lemma1_sweep, relaynet.lemma2_sweep, relaynet.theorem1_sweep):
        r = sweep(50, seed=3)
        assert r["instances"] == 50
        assert r["violations"] == 0


def test_scenario_overrides():
    s = relaynet.scenario(overrides=["ppo.episodes=7"])
    assert s["ppo"]["episodes"] == 7
    assert s["network"]["relays"] == 3
    assert relaynet.config_hash() != relaynet.config_hash(overrides=["ppo.episodes=7"])


def test_train_and_evaluate(tmp_path):
    ckpt = tmp_path / "model.txt"
    a = relaynet.train("robust", 1, overrides=TINY, checkpoint=ckpt)
    b = relaynet.train("robust", 1, overrides=TINY)
    assert a["metrics_csv"] == b["metrics_csv"]
    assert a["metrics_csv"].startswith("episode,avg_eta,worst_eta")
    assert 0.0 <= a["worst"]["mean"] <= a["average"]["mean"] <= 1.0
    again = relaynet.evaluate(ckpt, overrides=TINY)
    assert again["average"] == a["average"]
    assert again["worst"] == a["worst"]


@pytest.mark.skipif(CLI is None, reason="relaynet CLI not built")
class TestCli:
    def run(self, *args):
        return subprocess.run([CLI, *args], capture_output=True, text=True)

    def test_usage_errors_exit_1(self, tmp_path):
        assert self.run().returncode == 1
        assert self.run("train", "--method", "robust").returncode == 1
        assert self.run("verify", "--instances", "0").returncode == 1
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"ppo": {"nope": 1}}))
        r = self.run("print-config", "--scenario", str(bad))
        assert r.returncode == 1
        assert "ppo.nope" in r.stderr

    def test_runtime_errors_exit_2(self, tmp_path):
        missing = tmp_path / "missing.txt"
        scenario = tmp_path / "s.json"
        scenario.write_text("{}")
        r = self.run("evaluate", "--scenario", str(scenario), "--checkpoint", str(missing))
        assert r.returncode == 2

    def test_verify(self, tmp_path):
        r = self.run("verify", "--suite", "all", "--instances", "30", "--out", str(tmp_path))
        assert r.returncode == 0, r.stderr
        for suite in ("lemma1", "lemma2", "theorem1"):
            assert (tmp_path / f"{suite}.csv").read_text().startswith("instance,lhs,rhs,slack,holds")

    def test_train_rerun_is_byte_identical(self, tmp_path):
        scenario = tmp_path / "s.json"
        scenario.write_text("{}")
        sets = [x for o in TINY for x in ("--set", o)]
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            r = self.run("train", "--scenario", str(scenario), "--method", "ppo", "--seed", "2", "--out", str(out), *sets)
            assert r.returncode == 0, r.stderr
            outs.append(out)
        for f in ("metrics.csv", "curves.csv", "checkpoint.txt", "evaluation.csv", "manifest.txt"):
            assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes(), f
        r = self.run("evaluate", "--scenario", str(scenario), "--checkpoint", str(outs[0] / "checkpoint.txt"),
                     "--format", "csv", *sets)
        assert r.returncode == 0, r.stderr
        assert r.stdout == (outs[0] / "evaluation.csv").read_text()
