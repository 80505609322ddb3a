"""Tests for configuration system."""

import json
import logging
from pathlib import Path

import pytest
import yaml
from pydantic import ValidationError

from sfda_lab.config.loader import (
    expand_env_vars,
    get_default_config,
    load_config,
    load_shift_config,
    save_config,
)
from sfda_lab.config.models import AdaptationConfig, LabConfig, LoggingConfig, ShiftConfig
from sfda_lab.errors import ConfigurationError
from sfda_lab.utils.logging import PACKAGE_LOGGER, get_logger, setup_logging


class TestConfigLoader:
    """Test configuration loading functionality."""

    def test_expand_env_vars_simple(self, monkeypatch):
        """Test simple environment variable expansion."""
        monkeypatch.setenv("SFDA_TEST_VAR", "test_value")

        test_data = {
            "setting": "${SFDA_TEST_VAR}",
            "nested": {"value": "${SFDA_TEST_VAR}_suffix"},
            "items": ["$SFDA_TEST_VAR", 3],
        }

        result = expand_env_vars(test_data)
        assert result["setting"] == "test_value"
        assert result["nested"]["value"] == "test_value_suffix"
        assert result["items"] == ["test_value", 3]

    def test_load_default_config(self):
        """Test loading default configuration when no file is given."""
        config = load_config(None)
        assert isinstance(config, LabConfig)
        assert config.adaptation.tau_norm == 0.5
        assert config.adaptation.enable_filtering is True
        assert config.shift.hard_class_indices == [3]

    def test_default_document_matches_models(self):
        """Test the documented defaults validate back into the same config."""
        doc = get_default_config()
        assert LabConfig.model_validate(doc) == LabConfig()

    def test_save_and_load_config(self, tmp_path):
        """Test saving and loading configuration."""
        config_file = tmp_path / "test_config.yaml"

        config = LabConfig()
        config.adaptation.mu = 0.5
        config.shift.rotation_deg = 45.0

        save_config(config, str(config_file))
        assert config_file.exists()

        loaded_config = load_config(str(config_file))
        assert loaded_config.adaptation.mu == 0.5
        assert loaded_config.shift.rotation_deg == 45.0
        assert loaded_config == config

    def test_save_json(self, tmp_path):
        """Test a .json suffix writes JSON that loads back."""
        config_file = tmp_path / "lab.json"
        save_config(LabConfig(), config_file)

        assert json.loads(config_file.read_text())["adaptation"]["gamma"] == 1.0
        assert load_config(config_file) == LabConfig()

    def test_env_var_in_numeric_field(self, tmp_path, monkeypatch):
        """Test expanded strings are coerced by the models."""
        monkeypatch.setenv("SFDA_EPOCHS", "7")
        config_file = tmp_path / "lab.yaml"
        config_file.write_text("adaptation:\n  epochs: ${SFDA_EPOCHS}\n")

        assert load_config(config_file).adaptation.epochs == 7

    def test_empty_file_gives_defaults(self, tmp_path):
        """Test an empty document is an empty mapping."""
        config_file = tmp_path / "empty.yaml"
        config_file.write_text("")
        assert load_config(config_file) == LabConfig()

    def test_missing_file(self, tmp_path):
        """Test a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        """Test unparsable YAML is a configuration error."""
        config_file = tmp_path / "bad.yaml"
        config_file.write_text("shift: [unclosed\n")
        with pytest.raises(ConfigurationError, match="Invalid YAML"):
            load_config(config_file)

    def test_non_mapping_document(self, tmp_path):
        """Test a top-level list is rejected."""
        config_file = tmp_path / "list.yaml"
        config_file.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError, match="mapping"):
            load_config(config_file)

    def test_validation_error_names_field(self, tmp_path):
        """Test validation errors name the offending field."""
        config_file = tmp_path / "lab.yaml"
        config_file.write_text(yaml.dump({"adaptation": {"tau_norm": 1.5}}))
        with pytest.raises(ConfigurationError, match="tau_norm"):
            load_config(config_file)

    def test_unknown_key_rejected(self, tmp_path):
        """Test misspelled keys are not silently ignored."""
        config_file = tmp_path / "lab.yaml"
        config_file.write_text(yaml.dump({"adaptation": {"tau": 0.4}}))
        with pytest.raises(ConfigurationError, match="tau"):
            load_config(config_file)


CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


class TestShippedConfigs:
    """Test the example configuration files."""

    @pytest.mark.parametrize("name", ["sfda-lab.yaml", "quick.yaml"])
    def test_validates(self, name):
        """Test each shipped file loads."""
        assert isinstance(load_config(CONFIG_DIR / name), LabConfig)

    def test_default_file_matches_defaults(self):
        """Test the default file spells out the built-in defaults."""
        loaded = load_config(CONFIG_DIR / "sfda-lab.yaml")
        assert loaded.model_dump() == LabConfig().model_dump()

    def test_quick_file_uses_short_names(self):
        """Test short aliases reach the right fields."""
        loaded = load_config(CONFIG_DIR / "quick.yaml")
        assert loaded.shift.num_classes == 3
        assert loaded.adaptation.epochs == 5
        assert loaded.adaptation.mix_epochs == 3


class TestShiftConfigLoading:
    """Test benchmark description loading."""

    def test_bare_shift_document(self, tmp_path):
        """Test a bare ShiftConfig document using the short aliases."""
        config_file = tmp_path / "shift.yaml"
        config_file.write_text(
            yaml.dump({"K": 3, "D_in": 5, "hard_class_indices": [1], "rotation_deg": 10})
        )

        shift = load_shift_config(config_file)
        assert shift.num_classes == 3
        assert shift.input_dim == 5
        assert shift.hard_class_indices == [1]

    def test_lab_document_uses_shift_section(self, tmp_path):
        """Test a full LabConfig document yields its shift section."""
        config_file = tmp_path / "lab.yaml"
        config_file.write_text(yaml.dump({"shift": {"num_classes": 5, "hard_class_indices": []}}))

        shift = load_shift_config(config_file)
        assert shift.num_classes == 5
        assert shift.hard_class_indices == []


class TestConfigModels:
    """Test configuration model validation."""

    def test_shift_defaults(self):
        """Test shift configuration defaults."""
        shift = ShiftConfig()
        assert shift.num_classes == 4
        assert shift.input_dim == 8
        assert shift.hard_shift >= 2.0

    def test_hard_class_out_of_range(self):
        """Test hard class indices must lie in [0, K)."""
        with pytest.raises(ValidationError, match="hard_class_indices"):
            ShiftConfig(num_classes=3, hard_class_indices=[3])

    def test_class_means_shape(self):
        """Test explicit means must be K x D_in."""
        with pytest.raises(ValidationError, match="class_means"):
            ShiftConfig(num_classes=2, input_dim=2, hard_class_indices=[], class_means=[[0, 0]])

    def test_sample_counts_at_least_classes(self):
        """Test every domain needs at least one sample per class on average."""
        with pytest.raises(ValidationError, match="n_target"):
            ShiftConfig(num_classes=4, n_target=3)

    def test_adaptation_aliases(self):
        """Test the short hyperparameter names are accepted."""
        cfg = AdaptationConfig.model_validate(
            {"N": 4, "K_sub": 2, "K_mix": 0, "betaN": 0.9}
        )
        assert cfg.epochs == 4
        assert cfg.sub_epochs == 2
        assert cfg.mix_epochs == 0
        assert cfg.beta_end == 0.9

    def test_beta_ordering(self):
        """Test beta0 may not exceed the final fusion ratio."""
        with pytest.raises(ValidationError, match="beta0"):
            AdaptationConfig(beta0=0.9, beta_end=0.5)

    def test_tau_bounds(self):
        """Test tau_norm lies in (0, 1]."""
        assert AdaptationConfig(tau_norm=1.0).tau_norm == 1.0
        with pytest.raises(ValidationError):
            AdaptationConfig(tau_norm=0.0)

    def test_assignment_is_validated(self):
        """Test assignments go through validation."""
        cfg = AdaptationConfig()
        with pytest.raises(ValidationError):
            cfg.mu = -1.0


class TestLogging:
    """Test logging setup and structured messages."""

    def test_level_is_normalised(self):
        """Test lower-case levels are accepted and unknown ones rejected."""
        assert LoggingConfig(level="debug").level == "DEBUG"
        with pytest.raises(ValidationError):
            LoggingConfig(level="chatty")

    def test_handlers_are_replaced(self, tmp_path):
        """Test repeated setup does not stack handlers."""
        cfg = LoggingConfig(console=True, file=str(tmp_path / "a.log"))
        setup_logging(cfg)
        logger = setup_logging(cfg)
        assert logger.name == PACKAGE_LOGGER
        assert len(logger.handlers) == 2

        setup_logging(LoggingConfig(console=False))
        assert logger.handlers == []

    def test_structured_fields_in_file(self, tmp_path):
        """Test keyword fields are rendered into the log file."""
        path = tmp_path / "logs" / "run.log"
        logger = setup_logging(LoggingConfig(console=False, file=str(path), level="INFO"))
        get_logger("sfda_lab.test").info("Epoch done", epoch=3, r=0.123456, dims=(4, 8))
        for handler in logger.handlers:
            handler.flush()

        text = path.read_text()
        assert "Epoch done | epoch=3 | r=0.1235 | dims=4x8" in text

    def test_level_filters(self, tmp_path):
        """Test records below the configured level are dropped."""
        path = tmp_path / "run.log"
        setup_logging(LoggingConfig(console=False, file=str(path), level="WARNING"))
        get_logger("sfda_lab.test").info("hidden")
        get_logger("sfda_lab.test").warning("shown")
        for handler in logging.getLogger(PACKAGE_LOGGER).handlers:
            handler.flush()
        text = path.read_text()
        assert "shown" in text
        assert "hidden" not in text
