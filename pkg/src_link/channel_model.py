#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
随机稀疏多径信道：零截断泊松路径数、均匀分布时延、指数衰减功率时延谱。
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd


@dataclass
class MultipathChannel:
    """一次信道实现

    Attributes:
        delays: 各路径时延 τ（秒）
        coeffs: 各路径复增益 α
        path_vars: 各路径增益方差 u·exp(-τ/v)，供oracle接收机使用
        freq_response: 频率响应 h = Ψ(τ)α，调用 realize 后可用
        noise_var: 噪声方差 β，调用 observe 后可用
    """

    delays: np.ndarray
    coeffs: np.ndarray
    path_vars: np.ndarray
    freq_response: Optional[np.ndarray] = None
    noise_var: Optional[float] = None

    @property
    def n_paths(self):
        return int(self.delays.size)

    def realize(self, system):
        """按系统配置计算并缓存频率响应"""
        self.freq_response = freq_response(self.delays, self.coeffs, system)
        return self.freq_response


def zero_truncated_poisson(mean, rng, size=None):
    """零截断泊松抽样（拒绝0）"""
    if size is None:
        while True:
            value = int(rng.poisson(mean))
            if value > 0:
                return value
    out = rng.poisson(mean, size=size)
    zeros = out == 0
    while np.any(zeros):
        out[zeros] = rng.poisson(mean, size=int(zeros.sum()))
        zeros = out == 0
    return out


def gain_scale(n_paths, cfg):
    """单位平均增益归一化因子 u

    在给定路径数 L̃ 的条件下使 E|h_i|² 等于目标增益：
    u = g / [L̃·(v/τ_max)·(1-exp(-τ_max/v))]
    """
    ratio = cfg.decay_constant / cfg.max_delay
    return cfg.target_mean_gain / (n_paths * ratio * (1.0 - np.exp(-1.0 / ratio)))


def draw_channel(cfg, seed):
    """抽取一次多径信道实现

    Args:
        cfg: ChannelConfig
        seed: 整数种子、SeedSequence 或 np.random.Generator

    Returns:
        MultipathChannel: 尚未计算频率响应的信道
    """
    rng = np.random.default_rng(seed)
    n_paths = zero_truncated_poisson(cfg.poisson_mean, rng)
    delays = rng.uniform(0.0, cfg.max_delay, size=n_paths)
    path_vars = gain_scale(n_paths, cfg) * np.exp(-delays / cfg.decay_constant)
    noise = rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)
    coeffs = np.sqrt(path_vars / 2.0) * noise
    return MultipathChannel(delays=delays, coeffs=coeffs, path_vars=path_vars)


def freq_response(delays, coeffs, system):
    """h_n = Σ_l α_l exp(-j2πΔ_f n τ_l)，n = 1..N

    Args:
        delays: 时延向量
        coeffs: 复增益向量
        system: SystemConfig

    Returns:
        np.ndarray: 长度为N的频率响应
    """
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    n = np.arange(1, system.n_subcarriers + 1)
    phases = np.exp(-2j * np.pi * system.subcarrier_spacing * np.outer(n, delays))
    return phases @ coeffs


def observe(frame, h, snr_db, seed):
    """生成接收信号 y = Xh + w

    噪声方差按本次实现计算：β = ||h||²/(SNR·N)。

    Args:
        frame: SymbolFrame
        h: 频率响应
        snr_db: 信噪比（dB），np.inf 表示无噪声
        seed: 噪声随机源

    Returns:
        tuple: (y, β)
    """
    h = np.asarray(h, dtype=complex)
    x = frame.symbol_vector
    n = x.size
    snr = 10.0 ** (snr_db / 10.0)
    if snr <= 0:
        raise ValueError(f"线性信噪比必须为正，当前为{snr}")
    beta = float(np.vdot(h, h).real / (snr * n))
    rng = np.random.default_rng(seed)
    noise = np.sqrt(beta / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return x * h + noise, beta


def channel_records(channels, trials=None):
    """整理信道实现为表格（trial, l, tau, alpha_re, alpha_im）

    Args:
        channels: MultipathChannel 列表
        trials: 对应的试验编号，缺省为 0..len-1

    Returns:
        pd.DataFrame: 每条路径一行
    """
    trials = range(len(channels)) if trials is None else trials
    rows = []
    for trial, channel in zip(trials, channels):
        for l, (tau, alpha) in enumerate(zip(channel.delays, channel.coeffs)):
            rows.append({
                'trial': int(trial),
                'l': l,
                'tau': float(tau),
                'alpha_re': float(alpha.real),
                'alpha_im': float(alpha.imag),
            })
    return pd.DataFrame(rows, columns=['trial', 'l', 'tau', 'alpha_re', 'alpha_im'])


__all__ = [
    'MultipathChannel', 'zero_truncated_poisson', 'gain_scale',
    'draw_channel', 'freq_response', 'observe', 'channel_records',
]
