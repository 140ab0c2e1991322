#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
src_rx包：时延字典、线性求解器、稀疏信道估计器、译码器与各类接收机
"""

from src_rx.estimator import SparseChannelEstimator, SymbolMoments, EstimatorState
from src_rx.decoder import BpDecoder, SoftInfo
from src_rx.receiver import OffGridReceiver, ReceiverRun, GenieInfo
from src_rx.reference_receivers import OracleReceiver, FreqLmmseReceiver

__all__ = [
    'SparseChannelEstimator', 'SymbolMoments', 'EstimatorState',
    'BpDecoder', 'SoftInfo',
    'OffGridReceiver', 'ReceiverRun', 'GenieInfo',
    'OracleReceiver', 'FreqLmmseReceiver',
]
