#!/usr/bin/env python
# -*- coding: utf-8 -*-

import logging
import os
import re

import numpy as np
import pandas as pd

from utils.logger import Logger
from utils.output_manager import OutputManager


class TestOutputManager:
    def test_session_directory(self, tmp_path):
        manager = OutputManager(base_dir=str(tmp_path))
        table = pd.DataFrame({'snr_db': [10.0, 12.0], 'ber': [1e-2, 2.5e-4]})
        path = manager.save_table(table, None, 'snr.csv')
        session = os.path.basename(os.path.dirname(path))
        assert os.path.basename(path) == 'snr.csv'
        assert re.fullmatch(r'\d{8}_\d{6}_\d{5}', session)
        pd.testing.assert_frame_equal(pd.read_csv(path), table)

    def test_explicit_path_creates_parents(self, tmp_path):
        target = tmp_path / 'a' / 'b' / 'r.csv'
        path = OutputManager(base_dir=str(tmp_path)).save_table(pd.DataFrame({'x': [1]}), str(target))
        assert path == str(target)
        assert target.read_text(encoding='utf-8').splitlines() == ['x', '1']


class TestLogger:
    def test_creates_log_directory(self, tmp_path):
        Logger(log_dir=str(tmp_path / 'logs'))
        assert (tmp_path / 'logs').is_dir()

    def test_log_processing_appends_json(self, caplog, tmp_path):
        logger = Logger(log_dir=str(tmp_path))
        with caplog.at_level(logging.INFO, logger='ofdm_sim'):
            logger.log_processing("扫描点完成", {'receiver': 'oracle', 'n_pilots': np.int64(101)})
        assert '扫描点完成: {"receiver": "oracle", "n_pilots": 101.0}' in caplog.text

    def test_log_processing_without_data(self, caplog, tmp_path):
        with caplog.at_level(logging.INFO, logger='ofdm_sim'):
            Logger(log_dir=str(tmp_path)).log_processing("开始实验")
        assert "开始实验" in caplog.text
