#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
联合信道估计与译码的外循环：首次迭代只用导频，之后用译码器反馈的符号矩热启动估计器。
"""

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from utils.logger import Logger
from src_rx.estimator import SparseChannelEstimator, SymbolMoments
from src_rx.decoder import BpDecoder


@dataclass
class IterationResult:
    """一次外迭代结束（译码之后）的快照"""

    outer_iter: int
    info_bits_hat: np.ndarray
    h_mean: np.ndarray
    l_hat: int
    beta_hat: float
    runtime_ms: float


@dataclass
class ReceiverRun:
    """接收机一次完整运行的结果"""

    iterations: List[IterationResult] = field(default_factory=list)
    trace: List[dict] = field(default_factory=list)
    converged: bool = False

    @property
    def final(self):
        return self.iterations[-1]


@dataclass
class GenieInfo:
    """仿真器掌握的真实量，仅供oracle接收机使用"""

    symbols: np.ndarray
    delays: np.ndarray
    path_vars: np.ndarray
    freq_response: np.ndarray
    noise_var: float


class OuterLoopMonitor:
    """外循环停止规则：硬判决连续 patience 次未变化，或达到迭代上限"""

    def __init__(self, patience):
        self.patience = patience
        self.previous = None
        self.unchanged = 0

    def update(self, bits):
        if self.previous is not None and np.array_equal(bits, self.previous):
            self.unchanged += 1
        else:
            self.unchanged = 0
        self.previous = bits.copy()
        return self.unchanged >= self.patience


class OffGridReceiver:
    """离网稀疏信道估计 + BP译码的迭代接收机"""

    name = 'offgrid_bpmf'

    def __init__(self, system, sim, logger=None, use_pilots_after_first=True):
        """初始化接收机

        Args:
            system: SystemConfig
            sim: SimConfig
            logger: 日志记录器，如果为None则创建新的记录器
            use_pilots_after_first: 为False时首次迭代之后不再使用导频子载波
        """
        self.logger = logger if logger else Logger()
        self.system = system
        self.sim = sim
        self.use_pilots_after_first = use_pilots_after_first
        self.estimator = SparseChannelEstimator(system, sim, logger=self.logger)

    def run(self, y, layout, genie: Optional[GenieInfo] = None):
        """运行外循环

        Args:
            y: 接收信号
            layout: FrameLayout
            genie: 不使用

        Returns:
            ReceiverRun: 每次外迭代的结果及估计器轨迹
        """
        y = np.asarray(y, dtype=complex)
        decoder = BpDecoder(layout, logger=self.logger)
        moments = SymbolMoments.pilots_only(layout.n_subcarriers, layout.pilot_indices, layout.pilot_values)
        state = self.estimator.init_state(y, moments)
        monitor = OuterLoopMonitor(self.sim.outer_patience)
        result = ReceiverRun()
        priors = None

        for outer in range(1, self.sim.max_outer_iters + 1):
            start = time.perf_counter()
            state, trace = self.estimator.inner_loop(state, moments, y, fix_act_prob=(outer == 1), outer_iter=outer)
            h_mean, h_second = self.estimator.channel_posterior(state)
            soft = decoder.decode_pass(y, h_mean, h_second, state.noise_var, priors)
            priors = soft.bit_priors
            result.trace.extend(trace)
            result.iterations.append(IterationResult(
                outer_iter=outer,
                info_bits_hat=soft.info_bits_hat,
                h_mean=h_mean,
                l_hat=state.n_active,
                beta_hat=state.noise_var,
                runtime_ms=(time.perf_counter() - start) * 1000.0,
            ))
            self.logger.debug(f"外迭代{outer}: L̂={state.n_active}, β̂={state.noise_var:.4e}")
            if monitor.update(soft.info_bits_hat):
                result.converged = True
                break
            moments = SymbolMoments.from_beliefs(
                layout, soft.symbol_mean, soft.symbol_second, use_pilots=self.use_pilots_after_first)

        if not result.converged:
            self.logger.info(f"离网接收机在{self.sim.max_outer_iters}次外迭代内未收敛")
        return result


__all__ = ['IterationResult', 'ReceiverRun', 'GenieInfo', 'OuterLoopMonitor', 'OffGridReceiver']
