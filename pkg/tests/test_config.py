"""Run configuration loading, validation, and round-tripping."""

import json

import pytest

from tsadrl.config import RunConfig, load_config, save_config
from tsadrl.errors import ConfigError


class TestValidation:
    def test_defaults_construct(self):
        cfg = RunConfig()
        assert cfg.mode == "active" and cfg.potential == "heuristic"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mode": "supervised"},
            {"potential": "telepathy"},
            {"episodes": 0},
            {"n_steps": 0},
            {"train_frac": 0.0},
            {"train_frac": 1.0},
            {"r_target_frac": 1.5},
            {"potential": "llm"},  # llm without base url
        ],
    )
    def test_bad_values_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_llm_with_base_url_accepted(self):
        cfg = RunConfig(potential="llm", llm_base_url="http://127.0.0.1:9")
        assert cfg.llm_model

    def test_vae_hidden_coerced_to_tuple(self):
        cfg = RunConfig(vae_hidden=[16, 8])
        assert cfg.vae_hidden == (16, 8)


class TestDictApi:
    def test_from_dict_rejects_unknown_keys_by_name(self):
        with pytest.raises(ConfigError) as err:
            RunConfig.from_dict({"seed": 1, "bogus_key": 2, "another": 3})
        msg = str(err.value)
        assert "bogus_key" in msg and "another" in msg

    def test_from_dict_rejects_non_object(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict([1, 2, 3])

    def test_round_trip_through_dict(self):
        cfg = RunConfig(seed=7, gamma=0.5, vae_hidden=(8, 4), propagate_sigma=1.5)
        again = RunConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_with_overrides(self):
        cfg = RunConfig()
        out = cfg.with_overrides(seed=9, episodes=2)
        assert out.seed == 9 and out.episodes == 2
        assert cfg.seed == 0  # frozen original untouched
        with pytest.raises(ConfigError):
            cfg.with_overrides(nonsense=1)


class TestFileApi:
    def test_save_load_round_trip(self, tmp_path):
        cfg = RunConfig(seed=3, mode="full", episodes=2, hidden=16)
        path = str(tmp_path / "config.json")
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_saved_file_is_stable_json(self, tmp_path):
        cfg = RunConfig()
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        save_config(cfg, a)
        save_config(cfg, b)
        assert open(a).read() == open(b).read()
        keys = list(json.load(open(a)).keys())
        assert keys == sorted(keys)

    def test_missing_file_raises_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.json"))

    def test_invalid_json_raises_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_unknown_key_in_file_raises(self, tmp_path):
        path = tmp_path / "extra.json"
        path.write_text(json.dumps({"seed": 1, "mystery": True}))
        with pytest.raises(ConfigError):
            load_config(str(path))
