"""
Tests for configuration loading and argument validation.
"""

import pytest

from effex.utils.config_loader import get_config_value, get_default_config, load_config, merge_config
from effex.utils.validation import (
    ValidationError,
    parse_assignment,
    validate_non_negative_int,
    validate_positive_int,
    validate_sizes,
)


@pytest.mark.unit
class TestConfig:
    def test_partial_file_is_completed_from_defaults(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("execution:\n  fuel: 500\n", encoding="utf-8")
        config = load_config(str(path))
        assert get_config_value("execution", "fuel", config=config) == 500
        assert get_config_value("execution", "seed", config=config) == 2024
        assert get_config_value("simulation", "bfs_depth", config=config) == 32

    def test_missing_file_gives_defaults(self, tmp_path):
        assert load_config(str(tmp_path / "absent.yaml")) == get_default_config()

    def test_missing_key_gives_default(self):
        assert get_config_value("nowhere", "at_all", default=7, config={}) == 7

    def test_merge_is_recursive(self):
        merged = merge_config({"a": {"x": 1, "y": 2}}, {"a": {"y": 3}})
        assert merged == {"a": {"x": 1, "y": 3}}


@pytest.mark.unit
class TestValidation:
    def test_integers(self):
        assert validate_non_negative_int(0) == 0
        with pytest.raises(ValidationError):
            validate_non_negative_int(-1)
        with pytest.raises(ValidationError):
            validate_non_negative_int(True)
        with pytest.raises(ValidationError):
            validate_positive_int(0)

    def test_sizes(self):
        assert validate_sizes([2, 0, 2, 1]) == [0, 1, 2]
        with pytest.raises(ValidationError):
            validate_sizes([])
        with pytest.raises(ValidationError):
            validate_sizes([9])

    def test_assignment(self):
        assert parse_assignment("a=2, b=1") == {"a": 2, "b": 1}
        assert parse_assignment("  ") == {}
        for bad in ("a", "=2", "a=x", "a=-1"):
            with pytest.raises(ValidationError):
                parse_assignment(bad)
