"""Config assembly: defaults, file, env, flag precedence."""

import pytest

from etbot.config import ConfigError, EngineConfig, load_config


class TestDefaults:
    def test_defaults_validate(self):
        config = load_config(env={})
        assert config.reminder_fractions == (0.5, 0.8, 1.0)
        assert config.suggestion_min_gap_s == 180
        assert config.suggestion_initial_delay_s == 120

    def test_policies_built_from_fields(self):
        config = EngineConfig(reminder_fractions=(0.25, 1.0), suggestion_min_gap_s=60)
        assert config.reminder_policy.fractions == (0.25, 1.0)
        assert config.suggestion_policy.min_gap_s == 60


class TestPrecedence:
    def test_file_values_applied(self, tmp_path):
        cfg = tmp_path / "etbot.yaml"
        cfg.write_text("port: 9000\nseed: 7\nreminder_fractions: [0.5, 1.0]\n")
        config = load_config(cfg, env={})
        assert config.port == 9000
        assert config.seed == 7
        assert config.reminder_fractions == (0.5, 1.0)

    def test_env_beats_file(self, tmp_path):
        cfg = tmp_path / "etbot.yaml"
        cfg.write_text("port: 9000\n")
        config = load_config(cfg, env={"ETBOT_PORT": "9100"})
        assert config.port == 9100

    def test_flags_beat_env(self, tmp_path):
        config = load_config(None, env={"ETBOT_PORT": "9100"}, port=9200)
        assert config.port == 9200

    def test_none_override_is_ignored(self):
        config = load_config(None, env={}, port=None)
        assert config.port == EngineConfig().port


class TestValidation:
    def test_empty_manual_rejected_at_startup(self):
        with pytest.raises(ConfigError, match="manual_text"):
            load_config(None, env={}, manual_text="  ")

    def test_empty_intro_rejected(self):
        with pytest.raises(ConfigError, match="intro_text"):
            load_config(None, env={}, intro_text="")

    def test_unknown_file_key_rejected(self, tmp_path):
        cfg = tmp_path / "etbot.yaml"
        cfg.write_text("reminders_every: 60\n")
        with pytest.raises(ConfigError, match="unknown config keys"):
            load_config(cfg, env={})

    def test_unknown_override_rejected(self):
        with pytest.raises(ConfigError, match="unknown config override"):
            load_config(None, env={}, volume=11)

    def test_bad_env_value(self):
        with pytest.raises(ConfigError, match="ETBOT_PORT"):
            load_config(None, env={"ETBOT_PORT": "lots"})

    def test_bad_fractions_rejected(self):
        with pytest.raises(ConfigError):
            load_config(None, env={}, reminder_fractions=(0.8, 0.5, 1.0))

    def test_non_mapping_file(self, tmp_path):
        cfg = tmp_path / "etbot.yaml"
        cfg.write_text("- just\n- a list\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(cfg, env={})
