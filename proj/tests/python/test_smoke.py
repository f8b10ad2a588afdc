import csv
import io
import math

import numpy as np
import pytest

import hadmc

TINY = {
    "scenario": {"type": "A", "n": 4, "m": 3, "seed": 5, "train_count": 4, "eval_count": 3, "test_count": 3},
    "model": {"kind": "hadmc", "kappa1": 3, "kappa2": 4, "hidden": [24]},
    "train": {
        "n_pi": 60, "b_pi": 32, "pretrain_buffer": 300, "n_mu": 240, "b_mu": 32, "policy_buffer": 200,
        "warmup_steps": 40, "eval_every": 80, "eval_episodes": 4, "log_every": 40,
        "policy": {"hidden": [24], "lr": 0.001},
    },
}


def test_deployment_shape_and_determinism():
    spec = hadmc.generate_deployment("A", 10, 4, 3)
    assert len(spec["pois"]) == 10
    assert len(spec["charge_points"]) == 4
    assert spec == hadmc.generate_deployment("A", 10, 4, 3)
    assert spec != hadmc.generate_deployment("A", 10, 4, 4)


def test_env_random_rollout_keeps_ledger_consistent():
    spec = hadmc.generate_deployment("R", 10, 4, 1)
    env = hadmc.Env(spec)
    obs = env.reset()
    assert obs.dtype == np.float32
    assert obs.shape == (hadmc.state_dim(10, 4),)
    rng = np.random.default_rng(0)
    while not env.done:
        slots = env.feasible()
        obs, reward, done, info = env.step(int(rng.choice(slots)), float(rng.uniform(-1, 1)))
        assert info["case"] in {"obs", "chg", "fail", "end"}
        assert math.isfinite(reward)
    ledger = env.ledger
    assert all(v >= 0 for v in ledger.values())
    rows = list(csv.DictReader(io.StringIO(env.trace_csv())))
    assert rows and rows[-1]["case"] in {"fail", "end"}


def test_infeasible_slot_is_rejected():
    env = hadmc.Env(hadmc.generate_deployment("A", 10, 4, 2))
    env.reset()
    assert max(env.feasible()) < 8
    with pytest.raises(hadmc.ContractViolation):
        env.step(8, 0.0)


def test_greedy_observes_full_tau():
    spec = hadmc.generate_deployment("A", 10, 4, 0)
    r = hadmc.greedy(spec)
    assert r == hadmc.greedy(spec)
    total = sum(r["ledger"].values())
    assert total == pytest.approx(r["makespan"], rel=1e-12)
    if not r["completed"]:
        assert r["objective"] == 0.0


def test_train_and_evaluate(tmp_path):
    rows = hadmc.train(TINY, str(tmp_path / "model"))
    assert [r["step"] for r in rows] == [80, 160, 240]
    assert (tmp_path / "model" / "policy.json").exists()
    cmp = hadmc.evaluate([str(tmp_path / "model"), "greedy"], TINY)
    assert len(cmp) == 6
    assert {r["model"] for r in cmp} == {"model", "greedy"}


def test_bad_config_names_the_field():
    bad = dict(TINY, train=dict(TINY["train"], n_muu=1))
    with pytest.raises(hadmc.ParseError, match="n_muu"):
        hadmc.train(bad, "/tmp/unused")
