import json

import pytest

from hillsnake.config import (
    apply_overrides,
    env_overrides,
    load_config_file,
    run_config_from_dict,
)
from hillsnake.engine import ConfigurationError

FULL = {
    "game": {"width": 7, "height": 7, "n_snakes": 3},
    "reward": {"shaping_terms": {"ate_food": 0.1}},
    "heuristics": [
        {"rules": {"rule1_walls": "in_training_mask"}},
        {"rules": {"rule3_food": "ad_hoc_overwrite"}, "health_threshold": 40},
        {"schedule": {0: {"rule2_forbidden": 1.0}, 500: {"rule2_forbidden": 0.0}},
         "rules": {"rule2_forbidden": "reward_shaping"}},
    ],
    "ppo": {"gamma": 0.9},
    "train": {"iterations": 3},
    "arena": {"ffa_games": 2, "agents": [{"name": "a"}, {"name": "b", "kind": "scripted"}]},
    "serve": {"deadline_ms": 100},
}


def test_round_trip_through_json():
    cfg = run_config_from_dict(FULL)
    again = run_config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert cfg.agent_heuristics(1).health_threshold == 40


def test_yaml_and_json_files(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"train": {"iterations": 4}}))
    (tmp_path / "c.yaml").write_text("train:\n  iterations: 4\n")
    assert load_config_file(tmp_path / "c.json") == load_config_file(tmp_path / "c.yaml")


def test_env_overrides():
    env = {"HILLSNAKE_TRAIN__ITERATIONS": "3", "HILLSNAKE_GAME__WIDTH": "9", "HOME": "/x",
           "HILLSNAKE_NOSECTION": "1"}
    assert env_overrides(env) == {"train.iterations": "3", "game.width": "9"}
    data = apply_overrides({}, env_overrides(env))
    assert data == {"train": {"iterations": 3}, "game": {"width": 9}}


@pytest.mark.parametrize("bad,field", [
    ({"gamee": {}}, "gamee"),
    ({"ppo": {"gamma": 2}}, "ppo"),
    ({"train": {"epochs": 2}}, "epochs"),
    ({"heuristics": {"rules": {"rule3_food": "in_training_mask"}}}, "heuristics"),
    ({"heuristics": [{}, {}]}, "heuristics"),
    ({"arena": {"agents": [{"kind": "random"}]}}, "arena.agents[0]"),
    ({"arena": {"agents": [{"name": "x", "kind": "checkpoint_policy"}]}}, "checkpoint"),
    ({"serve": {"max_concurrency": 0}}, "serve"),
])
def test_errors_name_the_field(bad, field):
    with pytest.raises(ConfigurationError, match=field.replace("[", r"\[").replace("]", r"\]")):
        run_config_from_dict(bad)
