#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import copy
import yaml
import logging
from dataclasses import fields
from pathlib import Path

from src_link.config import (
    ConfigValidationError, SystemConfig, ChannelConfig, SimConfig,
    make_system_config, validate,
)

# 参考场景默认值，配置文件中缺失的键由此补齐
DEFAULT_CONFIG = {
    'system': {
        'n_subcarriers': 601,
        'subcarrier_spacing': 15e3,
        'cyclic_prefix': 5.2e-6,
        'n_pilots': 101,
        'pilot_pattern': 'equispaced',
        'bits_per_symbol': 8,
        'code_polynomials': ['561', '753'],
        'interleaver_seed': 1,
        'pilot_seed': 2,
    },
    'channel': {
        'poisson_mean': 5.0,
        'max_delay': 5.2e-6,
        'decay_constant': 1.5e-6,
        'target_mean_gain': 1.0,
    },
    'simulation': {
        'snr_db_list': [10, 12, 14, 16, 18, 20, 22],
        'n_trials': 100,
        'master_seed': 0,
        'max_outer_iters': 50,
        'outer_patience': 10,
        'max_inner_iters': 50,
        'inner_tol': 1e-3,
        'grid_oversampling': 8,
        'n_components_max': None,
        'receivers': ['offgrid_bpmf', 'freq_lmmse', 'oracle'],
        'parallel': 1,
        'cg_tol': 1e-9,
        'bp_iterations_oracle': 5,
        'lmmse_inner_iters': 5,
    },
    'logging': {
        'console_level': 'INFO',
        'log_dir': None,
    },
}


def _polynomial(value):
    """生成多项式：字符串按八进制解析，整数原样使用"""
    if isinstance(value, str):
        return int(value, 8)
    return int(value)


class ConfigLoader:
    """配置加载器，用于读取YAML配置文件并构造仿真参数"""

    def __init__(self, config_file=None):
        """初始化配置加载器

        Args:
            config_file: 配置文件路径，如果为None则依次查找config.local.yaml和config.yaml，
                都不存在时使用默认参数

        Raises:
            ConfigValidationError: 配置文件不存在、无法解析或包含未知的键
        """
        self.config_file = None
        if config_file is None:
            # 首先查找项目根目录下的config.local.yaml（本地开发配置）
            project_root = Path(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))).absolute()
            local_config = project_root / 'config.local.yaml'
            default_config = project_root / 'config.yaml'

            if local_config.exists():
                self.config_file = str(local_config)
                logging.info(f"使用本地配置文件: {self.config_file}")
            elif default_config.exists():
                self.config_file = str(default_config)
                logging.info(f"使用默认配置文件: {self.config_file}")
            else:
                logging.info("未找到配置文件，使用默认参数")
        else:
            if not os.path.exists(config_file):
                raise ConfigValidationError("config file not found", f"配置文件不存在: {config_file}")
            self.config_file = config_file

        self.config = self._load_config()

    def _load_config(self):
        """加载配置文件并与默认值合并

        Returns:
            dict: 配置字典
        """
        config = copy.deepcopy(DEFAULT_CONFIG)
        if self.config_file is None:
            return config

        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            logging.error(f"加载配置文件失败: {str(e)}")
            raise ConfigValidationError("unreadable config file", f"无法读取配置文件 {self.config_file}: {e}") from e

        if not isinstance(loaded, dict):
            raise ConfigValidationError("malformed config file", "配置文件顶层必须是映射")
        self._merge(config, loaded)
        return config

    @staticmethod
    def _merge(config, overrides):
        """将覆盖项合并进配置，拒绝未知的节和键"""
        for section, values in overrides.items():
            if section not in config:
                raise ConfigValidationError("unknown config key", f"未知的配置节: {section}")
            if values is None:
                continue
            if not isinstance(values, dict):
                raise ConfigValidationError("malformed config file", f"配置节 {section} 必须是映射")
            for key, value in values.items():
                if key not in config[section]:
                    raise ConfigValidationError("unknown config key", f"未知的配置键: {section}.{key}")
                config[section][key] = value

    def get(self, section, key, default=None):
        """获取配置值

        Args:
            section: 配置节
            key: 配置键
            default: 默认值，如果配置不存在则返回此值

        Returns:
            配置值或默认值
        """
        if section in self.config and key in self.config[section]:
            return self.config[section][key]
        return default

    def get_nested(self, path, default=None):
        """获取嵌套配置值

        Args:
            path: 配置路径，用点号分隔，如 'simulation.n_trials'
            default: 默认值，如果配置不存在则返回此值

        Returns:
            配置值或默认值
        """
        keys = path.split('.')
        current = self.config

        try:
            for key in keys:
                current = current[key]
            return current
        except (KeyError, TypeError):
            return default

    def get_console_level(self):
        return self.get_nested('logging.console_level', 'INFO')

    def get_log_dir(self):
        return self.get_nested('logging.log_dir')

    def build_configs(self, overrides=None):
        """构造并校验 (SystemConfig, ChannelConfig, SimConfig)

        Args:
            overrides: 形如 {'simulation': {'n_trials': 10}} 的覆盖项（通常来自命令行），
                值为None的键被忽略

        Returns:
            tuple: 已校验的 (SystemConfig, ChannelConfig, SimConfig)

        Raises:
            ConfigValidationError: 参数违反任一约束
        """
        config = copy.deepcopy(self.config)
        if overrides:
            cleaned = {
                section: {k: v for k, v in values.items() if v is not None}
                for section, values in overrides.items()
            }
            self._merge(config, cleaned)

        system_values = dict(config['system'])
        n_pilots = int(system_values.pop('n_pilots'))
        pilot_pattern = system_values.pop('pilot_pattern')
        system_values['code_polynomials'] = tuple(_polynomial(g) for g in system_values['code_polynomials'])
        n_subcarriers = int(system_values.pop('n_subcarriers'))
        system = make_system_config(n_subcarriers, n_pilots, pilot_pattern, **system_values)

        channel = ChannelConfig(**{f.name: float(config['channel'][f.name]) for f in fields(ChannelConfig)})

        sim_values = dict(config['simulation'])
        sim_values['snr_db_list'] = tuple(float(s) for s in sim_values['snr_db_list'])
        sim_values['receivers'] = tuple(sim_values['receivers'])
        sim = SimConfig(**{f.name: sim_values[f.name] for f in fields(SimConfig)})

        return validate(system, channel, sim)


__all__ = ['ConfigLoader', 'DEFAULT_CONFIG']
