#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
src_link包：参数配置、发射链路与多径信道模型
"""

from src_link.config import (
    ConfigValidationError, SystemConfig, ChannelConfig, SimConfig,
    make_system_config, validate, default_configs,
)
from src_link.tx_chain import TxChain, SymbolFrame, FrameLayout
from src_link.channel_model import MultipathChannel, draw_channel, freq_response, observe

__all__ = [
    'ConfigValidationError', 'SystemConfig', 'ChannelConfig', 'SimConfig',
    'make_system_config', 'validate', 'default_configs',
    'TxChain', 'SymbolFrame', 'FrameLayout',
    'MultipathChannel', 'draw_channel', 'freq_response', 'observe',
]
