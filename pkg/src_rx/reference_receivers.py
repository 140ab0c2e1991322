#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
参考接收机：已知发送符号与信道统计量的oracle LMMSE接收机，以及使用鲁棒协方差的
频域LMMSE迭代接收机。
"""

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve

from utils.logger import Logger
from src_rx.dictionary import steering_matrix
from src_rx.decoder import BpDecoder
from src_rx.estimator import SymbolMoments
from src_rx.receiver import IterationResult, ReceiverRun, OuterLoopMonitor

ROBUST_SCALE = 25.0
DIAGONAL_LOADING = 1e-10


@dataclass
class RobustCovariance:
    """均匀功率时延谱 [0, T_CP] 下的频域协方差（已放大）"""

    matrix: np.ndarray
    scale: float


def robust_covariance(n, t_cp, spacing, scale=ROBUST_SCALE):
    """[Σ]_{m,n} = (1 - e^{-jθ})/(jθ)，θ = 2πΔ_f(m-n)T_CP，对角线为1，整体乘以 scale

    Args:
        n: 子载波数
        t_cp: 循环前缀时长
        spacing: 子载波间隔
        scale: 放大因子

    Returns:
        RobustCovariance: 加入 1e-10 对角加载后的协方差
    """
    offset = np.subtract.outer(np.arange(n), np.arange(n))
    theta = 2 * np.pi * spacing * offset * t_cp
    safe = np.where(offset == 0, 1.0, theta)
    kernel = np.where(offset == 0, 1.0 + 0j, (1.0 - np.exp(-1j * safe)) / (1j * safe))
    matrix = scale * kernel + DIAGONAL_LOADING * np.eye(n)
    return RobustCovariance(matrix=matrix, scale=scale)


@lru_cache(maxsize=4)
def _shared_covariance(n, t_cp, spacing):
    return robust_covariance(n, t_cp, spacing)


def oracle_lmmse(y, x_true, delays, path_vars, noise_var, spacing):
    """已知发送符号、真实时延与路径方差时的LMMSE估计

    ĥ = Ψα̂，α̂ = (AᴴA + βΣ_α⁻¹)⁻¹Aᴴy，A = XΨ

    Returns:
        np.ndarray: ĥ
    """
    y = np.asarray(y, dtype=complex)
    psi = steering_matrix(delays, y.size, spacing)
    a_matrix = np.asarray(x_true)[:, None] * psi
    gram = a_matrix.conj().T @ a_matrix + noise_var * np.diag(1.0 / np.asarray(path_vars, dtype=float))
    coeffs = solve(gram, a_matrix.conj().T @ y, assume_a='her')
    return psi @ coeffs


class OracleReceiver:
    """oracle LMMSE信道估计后在译码子图中迭代固定次数"""

    name = 'oracle'

    def __init__(self, system, sim, logger=None, perfect_csi=False):
        """初始化接收机

        Args:
            system: SystemConfig
            sim: SimConfig（bp_iterations_oracle）
            logger: 日志记录器，如果为None则创建新的记录器
            perfect_csi: 为True时直接使用真实频率响应
        """
        self.logger = logger if logger else Logger()
        self.system = system
        self.sim = sim
        self.perfect_csi = perfect_csi
        if perfect_csi:
            self.name = 'oracle_csi'

    def run(self, y, layout, genie):
        """运行接收机

        Args:
            y: 接收信号
            layout: FrameLayout
            genie: GenieInfo（必需）

        Returns:
            ReceiverRun: 每次译码迭代的结果

        Raises:
            ValueError: 未提供genie信息
        """
        if genie is None:
            raise ValueError("oracle接收机需要真实的发送符号和信道信息")
        start = time.perf_counter()
        if self.perfect_csi:
            h_hat = np.asarray(genie.freq_response, dtype=complex)
        else:
            h_hat = oracle_lmmse(y, genie.symbols, genie.delays, genie.path_vars,
                                 genie.noise_var, self.system.subcarrier_spacing)
        h_second = np.abs(h_hat) ** 2
        decoder = BpDecoder(layout, logger=self.logger)
        result = ReceiverRun(converged=True)
        priors = None
        for iteration in range(1, self.sim.bp_iterations_oracle + 1):
            soft = decoder.decode_pass(y, h_hat, h_second, genie.noise_var, priors)
            priors = soft.bit_priors
            result.iterations.append(IterationResult(
                outer_iter=iteration,
                info_bits_hat=soft.info_bits_hat,
                h_mean=h_hat,
                l_hat=int(np.asarray(genie.delays).size),
                beta_hat=genie.noise_var,
                runtime_ms=(time.perf_counter() - start) * 1000.0,
            ))
            start = time.perf_counter()
        return result


def lmmse_step(y, moments, covariance, noise_var):
    """观测子载波上的频域LMMSE估计

    ĥ = Σ′_{:,𝒪}M*(MΣ′_{𝒪𝒪}M* + diag(β + Σ′_ii(⟨|x_i|²⟩ - |⟨x_i⟩|²)))⁻¹y_𝒪，M = diag(⟨x⟩_𝒪)

    Returns:
        tuple: (ĥ, 后验方差 diag(P))
    """
    obs = np.flatnonzero(moments.observed)
    sigma = covariance.matrix
    m = moments.mean[obs]
    spread = np.maximum(moments.second_moment[obs] - np.abs(m) ** 2, 0.0)
    gain = sigma[:, obs] * np.conj(m)[None, :]
    system = (m[:, None] * sigma[np.ix_(obs, obs)] * np.conj(m)[None, :]
              + np.diag(noise_var + np.real(np.diag(sigma))[obs] * spread))
    factor = cho_factor(system, lower=True)
    h_hat = gain @ cho_solve(factor, y[obs])
    solved = cho_solve(factor, gain.conj().T)
    post_var = np.real(np.diag(sigma)) - np.real(np.sum(gain * solved.T, axis=1))
    return h_hat, np.maximum(post_var, 0.0)


def lmmse_noise_update(y, moments, h_hat, post_var):
    """β = Σ_𝒪[|y|² - 2Re{y*⟨x⟩ĥ} + ⟨|x|²⟩(|ĥ|² + P_ii)] / |𝒪|"""
    obs = moments.observed
    u = np.sum(np.abs(y[obs]) ** 2
               - 2.0 * np.real(np.conj(y[obs]) * moments.mean[obs] * h_hat[obs])
               + moments.second_moment[obs] * (np.abs(h_hat[obs]) ** 2 + post_var[obs]))
    power = float(np.mean(np.abs(y[obs]) ** 2))
    return max(float(u) / max(moments.n_observed, 1), 1e-12 * max(power, np.finfo(float).tiny))


class FreqLmmseReceiver:
    """频域LMMSE迭代接收机（符号矩反馈，外循环与离网接收机相同）"""

    name = 'freq_lmmse'

    def __init__(self, system, sim, logger=None, covariance=None):
        """初始化接收机

        Args:
            system: SystemConfig
            sim: SimConfig（lmmse_inner_iters 及外循环参数）
            logger: 日志记录器，如果为None则创建新的记录器
            covariance: RobustCovariance，缺省按系统参数构造（进程内共享）
        """
        self.logger = logger if logger else Logger()
        self.system = system
        self.sim = sim
        if covariance is None:
            covariance = _shared_covariance(system.n_subcarriers, system.cyclic_prefix, system.subcarrier_spacing)
        self.covariance = covariance

    def estimate(self, y, moments, noise_var):
        """交替更新 ĥ 与 β̂ 共 lmmse_inner_iters 次

        Returns:
            tuple: (ĥ, 后验方差, β̂)
        """
        for _ in range(self.sim.lmmse_inner_iters):
            h_hat, post_var = lmmse_step(y, moments, self.covariance, noise_var)
            noise_var = lmmse_noise_update(y, moments, h_hat, post_var)
        h_hat, post_var = lmmse_step(y, moments, self.covariance, noise_var)
        return h_hat, post_var, noise_var

    def run(self, y, layout, genie=None):
        """频域LMMSE外循环

        Returns:
            ReceiverRun: 每次外迭代的结果
        """
        y = np.asarray(y, dtype=complex)
        decoder = BpDecoder(layout, logger=self.logger)
        moments = SymbolMoments.pilots_only(layout.n_subcarriers, layout.pilot_indices, layout.pilot_values)
        noise_var = float(np.vdot(y, y).real / y.size)
        monitor = OuterLoopMonitor(self.sim.outer_patience)
        result = ReceiverRun()
        priors = None

        for outer in range(1, self.sim.max_outer_iters + 1):
            start = time.perf_counter()
            h_hat, post_var, noise_var = self.estimate(y, moments, noise_var)
            soft = decoder.decode_pass(y, h_hat, np.abs(h_hat) ** 2 + post_var, noise_var, priors)
            priors = soft.bit_priors
            result.iterations.append(IterationResult(
                outer_iter=outer,
                info_bits_hat=soft.info_bits_hat,
                h_mean=h_hat,
                l_hat=0,
                beta_hat=noise_var,
                runtime_ms=(time.perf_counter() - start) * 1000.0,
            ))
            if monitor.update(soft.info_bits_hat):
                result.converged = True
                break
            moments = SymbolMoments.from_beliefs(layout, soft.symbol_mean, soft.symbol_second)

        if not result.converged:
            self.logger.info(f"频域LMMSE接收机在{self.sim.max_outer_iters}次外迭代内未收敛")
        return result


def freq_lmmse_receiver(y, layout, system, sim, logger=None):
    """频域LMMSE接收机的函数式入口

    Returns:
        tuple: (每次外迭代的 ĥ 列表, 最终硬判决 û)
    """
    run = FreqLmmseReceiver(system, sim, logger=logger).run(y, layout)
    return [it.h_mean for it in run.iterations], run.final.info_bits_hat


__all__ = [
    'RobustCovariance', 'robust_covariance', 'oracle_lmmse', 'OracleReceiver',
    'lmmse_step', 'lmmse_noise_update', 'FreqLmmseReceiver', 'freq_lmmse_receiver',
]
