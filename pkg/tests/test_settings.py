# tests/test_settings.py

"""
Tests for the key = value configuration layer
"""

import pytest

from src.agents.calibration_agent import CalibrationAgentConfig
from src.config.constants import DEFAULT_AFFINE_TOL, DEFAULT_COND_MAX, DEFAULT_SEED
from src.config.settings import Settings, load_settings
from src.lib.exceptions import ConfigError


def write_config(tmp_path, text, name="octcal.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestDefaults:
    """Test the constant-backed defaults"""

    def test_defaults(self):
        s = load_settings()
        assert s.affine_tol == DEFAULT_AFFINE_TOL
        assert s.cond_max == DEFAULT_COND_MAX
        assert s.seed == DEFAULT_SEED
        assert s.gt_fx is None

    def test_agent_config_from_settings(self):
        config = CalibrationAgentConfig.from_settings(Settings(affine_tol=0.1, refine_boundary=0.0, workers=2))
        assert config.octagon.affine_tol == 0.1
        assert config.edges.refine_boundary == 0.0
        assert config.workers == 2

    def test_corner_sigma_floor_reaches_calibration(self):
        config = CalibrationAgentConfig.from_settings(Settings(corner_sigma_min=0.25))
        assert config.calibration.corner_sigma_min == 0.25


class TestConfigFile:
    """Test reading config files"""

    def test_values_parsed(self, tmp_path):
        path = write_config(
            tmp_path,
            "# pipeline\n\nransac_p = 0.99\nkalman_quality_weighting = false\nOCTCAL_SEED = 12\ngt_fx = 1810.4\n",
        )
        s = load_settings(path)
        assert s.ransac_p == 0.99
        assert s.kalman_quality_weighting is False
        assert s.seed == 12
        assert s.gt_fx == 1810.4

    def test_empty_value_keeps_default(self, tmp_path):
        assert load_settings(write_config(tmp_path, "affine_tol =\n")).affine_tol == DEFAULT_AFFINE_TOL

    def test_unknown_key(self, tmp_path):
        path = write_config(tmp_path, "seed = 1\n\nafine_tol = 0.1\n")
        with pytest.raises(ConfigError, match=r"octcal.cfg:3: afine_tol"):
            load_settings(path)

    def test_invalid_value_reports_line(self, tmp_path):
        path = write_config(tmp_path, "seed = 1\ncond_max = 0.5\n")
        with pytest.raises(ConfigError, match=r"octcal.cfg:2: cond_max"):
            load_settings(path)

    def test_malformed_line(self, tmp_path):
        path = write_config(tmp_path, "seed = 1\nthis is not a setting\n")
        with pytest.raises(ConfigError, match=r"octcal.cfg:2: expected 'key = value'"):
            load_settings(path)

    def test_duplicate_key(self, tmp_path):
        path = write_config(tmp_path, "seed = 1\nseed = 2\n")
        with pytest.raises(ConfigError, match=r"octcal.cfg:2: duplicate key 'seed'"):
            load_settings(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_settings(str(tmp_path / "none.cfg"))


class TestPrecedence:
    """Test overrides, file values and environment variables"""

    def test_overrides_beat_file(self, tmp_path):
        path = write_config(tmp_path, "seed = 1\nworkers = 2\n")
        s = load_settings(path, seed=7, workers=None)
        assert s.seed == 7
        assert s.workers == 2

    def test_environment_variable(self, monkeypatch):
        monkeypatch.setenv("OCTCAL_AFFINE_TOL", "0.2")
        assert load_settings().affine_tol == 0.2

    def test_file_beats_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("OCTCAL_AFFINE_TOL", "0.2")
        assert load_settings(write_config(tmp_path, "affine_tol = 0.05\n")).affine_tol == 0.05
