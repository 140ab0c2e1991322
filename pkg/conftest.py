#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from src_link.config import SimConfig, ChannelConfig, make_system_config, validate
from src_link.tx_chain import TxChain
from utils.logger import Logger


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 桌面规模的验收运行（分钟级）")


@pytest.fixture(scope="session", autouse=True)
def logger(tmp_path_factory):
    """测试期间日志写入临时目录，控制台只输出警告以上"""
    return Logger(log_dir=str(tmp_path_factory.mktemp("logs")), console_level='WARNING')


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def default_system():
    return make_system_config()


@pytest.fixture(scope="session")
def small_system():
    """N=61，11个等间隔导频，K=192"""
    return make_system_config(n_subcarriers=61, n_pilots=11)


@pytest.fixture(scope="session")
def channel_cfg():
    return ChannelConfig()


@pytest.fixture(scope="session")
def sim_cfg():
    return SimConfig()


@pytest.fixture(scope="session")
def fast_sim():
    """缩短迭代次数的仿真参数，用于端到端的快速测试"""
    return SimConfig(
        snr_db_list=(20.0,), n_trials=2, max_outer_iters=3, outer_patience=2,
        max_inner_iters=5, receivers=('offgrid_bpmf', 'freq_lmmse', 'oracle'),
    )


@pytest.fixture(scope="session")
def small_configs(small_system, channel_cfg, fast_sim):
    return validate(small_system, channel_cfg, fast_sim)


@pytest.fixture
def small_frame(small_system, rng, logger):
    tx = TxChain(small_system, logger=logger)
    return tx.build_frame(tx.random_info_bits(rng), rng)
