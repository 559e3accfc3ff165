import json

import pytest

from multiway_vae.config import (
    ConfigError,
    config_from_dict,
    config_to_dict,
    default_config,
    load_config,
    write_config,
)


class TestRoundTrip:
    def test_default_config_round_trips(self):
        doc = config_to_dict(default_config())
        cfg = config_from_dict(doc)
        assert config_to_dict(cfg) == doc

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "config.json"
        write_config(path, default_config())
        cfg = load_config(path)
        assert config_to_dict(cfg) == config_to_dict(default_config())

    def test_seed_override_rewires_module_seeds(self, tmp_path):
        path = tmp_path / "config.json"
        write_config(path, default_config())
        cfg = load_config(path, seed_override=100)
        assert cfg.seed == 100
        assert cfg.synth.seed == 100
        assert cfg.vae.seed == 101
        assert cfg.detection.seed == 102
        assert cfg.localization.seed == 103


class TestStrictSchema:
    def _doc(self):
        return config_to_dict(default_config())

    def test_missing_field_names_the_field(self):
        doc = self._doc()
        del doc["vae"]["epochs"]
        with pytest.raises(ConfigError, match="vae.epochs"):
            config_from_dict(doc)

    def test_missing_section_named(self):
        doc = self._doc()
        del doc["detection"]
        with pytest.raises(ConfigError, match="detection"):
            config_from_dict(doc)

    def test_unknown_field_named(self):
        doc = self._doc()
        doc["vae"]["momentum"] = 0.9
        with pytest.raises(ConfigError, match="vae.momentum"):
            config_from_dict(doc)

    def test_wrong_type_named(self):
        doc = self._doc()
        doc["preprocess"]["keep_bins"] = "many"
        with pytest.raises(ConfigError, match="preprocess.keep_bins"):
            config_from_dict(doc)

    def test_domain_validation_propagates(self):
        doc = self._doc()
        doc["vae"]["learning_rate"] = -1.0
        with pytest.raises(ConfigError, match="learning_rate"):
            config_from_dict(doc)

    def test_negative_seed_rejected(self):
        doc = self._doc()
        doc["seed"] = -1
        with pytest.raises(ConfigError, match="seed"):
            config_from_dict(doc)

    def test_duplicate_scenario_names_rejected(self):
        doc = self._doc()
        doc["scenarios"][1]["name"] = doc["scenarios"][0]["name"]
        with pytest.raises(ConfigError, match="duplicates"):
            config_from_dict(doc)

    def test_bad_injection_shape_named(self):
        doc = self._doc()
        doc["scenarios"][1]["injections"][0]["sensors"] = "2"
        with pytest.raises(ConfigError, match=r"scenarios\[1\].injections\[0\]"):
            config_from_dict(doc)

    def test_bool_is_not_an_int(self):
        doc = self._doc()
        doc["vae"]["epochs"] = True
        with pytest.raises(ConfigError, match="vae.epochs"):
            config_from_dict(doc)


class TestLoadConfig:
    def test_invalid_json_reported_with_path(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="broken.json"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_none_gives_defaults(self):
        assert config_to_dict(load_config(None)) == config_to_dict(default_config())

    def test_written_file_is_valid_json_with_all_fields(self, tmp_path):
        path = tmp_path / "config.json"
        write_config(path, default_config())
        doc = json.loads(path.read_text())
        assert set(doc) == {
            "seed", "preprocess", "vae", "detection", "localization", "synth", "scenarios",
        }
