#!/usr/bin/env python
# -*- coding: utf-8 -*-

from pathlib import Path

import pytest
import yaml

from src_link.config import ConfigValidationError, default_configs
from utils.config_loader import ConfigLoader, DEFAULT_CONFIG

PROJECT_ROOT = Path(__file__).resolve().parent.parent


def write_yaml(path, content):
    path.write_text(yaml.safe_dump(content, allow_unicode=True), encoding='utf-8')
    return str(path)


class TestConfigLoader:
    def test_example_file_matches_defaults(self):
        loader = ConfigLoader(str(PROJECT_ROOT / 'config.yaml.example'))
        assert loader.build_configs() == default_configs()

    def test_partial_file_is_merged_with_defaults(self, tmp_path):
        path = write_yaml(tmp_path / 'config.yaml', {
            'system': {'n_subcarriers': 61, 'n_pilots': 11},
            'simulation': {'n_trials': 3, 'snr_db_list': [15]},
        })
        system, channel, sim = ConfigLoader(path).build_configs()
        assert system.n_subcarriers == 61
        assert system.n_pilots == 11
        assert sim.n_trials == 3
        assert sim.snr_db_list == (15.0,)
        assert sim.max_outer_iters == DEFAULT_CONFIG['simulation']['max_outer_iters']
        assert channel.poisson_mean == 5.0

    def test_octal_polynomials(self, tmp_path):
        path = write_yaml(tmp_path / 'config.yaml', {'system': {'code_polynomials': ['7', '5']}})
        system, _, _ = ConfigLoader(path).build_configs()
        assert system.code_polynomials == (7, 5)

    def test_default_polynomials(self):
        system, _, _ = ConfigLoader(str(PROJECT_ROOT / 'config.yaml.example')).build_configs()
        assert system.code_polynomials == (0o561, 0o753) == (369, 491)

    def test_overrides_take_precedence_and_none_is_ignored(self, tmp_path):
        path = write_yaml(tmp_path / 'config.yaml', {'simulation': {'n_trials': 3}})
        _, _, sim = ConfigLoader(path).build_configs({
            'simulation': {'n_trials': 7, 'master_seed': None},
        })
        assert sim.n_trials == 7
        assert sim.master_seed == 0

    def test_get_and_get_nested(self, tmp_path):
        path = write_yaml(tmp_path / 'config.yaml', {'logging': {'console_level': 'DEBUG'}})
        loader = ConfigLoader(path)
        assert loader.get('logging', 'console_level') == 'DEBUG'
        assert loader.get_console_level() == 'DEBUG'
        assert loader.get_nested('simulation.n_trials') == 100
        assert loader.get_nested('simulation.missing', 'x') == 'x'
        assert loader.get('nope', 'key', 5) == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            ConfigLoader(str(tmp_path / 'absent.yaml'))
        assert info.value.invariant == "config file not found"

    def test_unknown_key(self, tmp_path):
        path = write_yaml(tmp_path / 'config.yaml', {'simulation': {'n_trails': 3}})
        with pytest.raises(ConfigValidationError) as info:
            ConfigLoader(path)
        assert info.value.invariant == "unknown config key"

    def test_unknown_section(self, tmp_path):
        path = write_yaml(tmp_path / 'config.yaml', {'decoder': {'iterations': 3}})
        with pytest.raises(ConfigValidationError) as info:
            ConfigLoader(path)
        assert info.value.invariant == "unknown config key"

    def test_unreadable_yaml(self, tmp_path):
        path = tmp_path / 'config.yaml'
        path.write_text("system: [unclosed\n", encoding='utf-8')
        with pytest.raises(ConfigValidationError) as info:
            ConfigLoader(str(path))
        assert info.value.invariant == "unreadable config file"

    def test_non_mapping_yaml(self, tmp_path):
        path = tmp_path / 'config.yaml'
        path.write_text("- 1\n- 2\n", encoding='utf-8')
        with pytest.raises(ConfigValidationError) as info:
            ConfigLoader(str(path))
        assert info.value.invariant == "malformed config file"

    def test_invalid_values_are_rejected_on_build(self, tmp_path):
        path = write_yaml(tmp_path / 'config.yaml', {'channel': {'max_delay': 1.0e-5}})
        loader = ConfigLoader(path)
        with pytest.raises(ConfigValidationError) as info:
            loader.build_configs()
        assert info.value.invariant == "max delay exceeds cyclic prefix"
