#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
译码子图：软解调、映射因子的和积消息、BCJR译码与数据符号信念。

比特LLR约定为 L = ln P(b=0)/P(b=1)。
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from utils.logger import Logger

LLR_CLAMP = 60.0
NEG = -1e30


@dataclass
class SoftInfo:
    """一次译码的软信息

    Attributes:
        demap_mean: 每个数据子载波的解调均值 y⟨h⟩*/⟨|h|²⟩
        demap_var: 解调方差 β/⟨|h|²⟩
        symbol_pmf: 数据符号信念 q(x_i)
        coded_llr: 编码比特后验LLR（解交织顺序）
        coded_extrinsic: BCJR输出的外信息LLR（解交织顺序）
        info_llr: 信息比特后验LLR
        info_bits_hat: 硬判决 û
        symbol_mean: ⟨x_i⟩
        symbol_second: ⟨|x_i|²⟩
        bit_priors: 交织顺序的比特先验，供下一次译码的映射因子使用
        uniform_fallbacks: 符号信念退化为均匀分布的子载波数
    """

    demap_mean: np.ndarray
    demap_var: np.ndarray
    symbol_pmf: np.ndarray
    coded_llr: np.ndarray
    coded_extrinsic: np.ndarray
    info_llr: np.ndarray
    info_bits_hat: np.ndarray
    symbol_mean: np.ndarray
    symbol_second: np.ndarray
    bit_priors: np.ndarray
    uniform_fallbacks: int = 0


def _normalize_log(log_values):
    return log_values - logsumexp(log_values, axis=-1, keepdims=True)


def demap_log_message(y, h_mean, h_second, noise_var, alphabet):
    """解调消息的对数（已归一化）

    ⟨|h_i|²⟩ = 0 的子载波没有信道信息，返回均匀分布。

    Returns:
        tuple: (对数概率 [D, M], 均值 [D], 方差 [D])
    """
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    h_mean = np.atleast_1d(np.asarray(h_mean, dtype=complex))
    h_second = np.atleast_1d(np.asarray(h_second, dtype=float))
    informative = h_second > 0
    safe = np.where(informative, h_second, 1.0)
    mean = np.where(informative, y * np.conj(h_mean) / safe, 0.0)
    var = np.where(informative, noise_var / safe, np.inf)

    log_values = np.zeros((y.size, alphabet.size))
    rows = np.flatnonzero(informative)
    if rows.size:
        distance = np.abs(alphabet[None, :] - mean[rows, None]) ** 2
        log_values[rows] = -distance / var[rows, None]
    return _normalize_log(log_values), mean, var


def demap_message(y, h_mean, h_second, noise_var, alphabet):
    """解调消息：∝ exp(-|x - m_i|²/v_i)，m_i = y_i⟨h_i⟩*/⟨|h_i|²⟩，v_i = β/⟨|h_i|²⟩

    Returns:
        np.ndarray: 每行归一化的概率 [D, M]
    """
    log_values, _, _ = demap_log_message(y, h_mean, h_second, noise_var, alphabet)
    return np.exp(log_values)


def bits_to_symbols(prior_llr, bit_labels):
    """映射因子从比特到符号的对数消息 Σ_q (1-2b_q)L_q/2（已归一化）"""
    signs = 1.0 - 2.0 * bit_labels
    return _normalize_log(np.asarray(prior_llr, dtype=float) @ signs.T / 2.0)


def map_bp(log_pmf, prior_llr, bit_labels):
    """映射因子上的精确和积运算

    Args:
        log_pmf: 解调消息的对数 [D, M]
        prior_llr: 比特先验LLR [D, Q]（交织顺序）
        bit_labels: 星座点比特标号 [M, Q]

    Returns:
        tuple: (外信息比特LLR [D, Q], 比特到符号的对数消息 [D, M])
    """
    log_pmf = np.atleast_2d(log_pmf)
    prior_llr = np.atleast_2d(np.asarray(prior_llr, dtype=float))
    if prior_llr.shape != (log_pmf.shape[0], bit_labels.shape[1]):
        raise ValueError(f"比特先验形状{prior_llr.shape}与解调消息{log_pmf.shape}不一致")
    symbol_message = bits_to_symbols(prior_llr, bit_labels)
    total = log_pmf + symbol_message

    extrinsic = np.empty_like(prior_llr)
    for q in range(bit_labels.shape[1]):
        zero = bit_labels[:, q] == 0
        posterior = (logsumexp(np.where(zero[None, :], total, -np.inf), axis=1)
                     - logsumexp(np.where(zero[None, :], -np.inf, total), axis=1))
        extrinsic[:, q] = posterior - prior_llr[:, q]
    return np.clip(extrinsic, -LLR_CLAMP, LLR_CLAMP), symbol_message


def symbol_beliefs(log_demap, log_message, alphabet):
    """q(x_i) ∝ 解调消息 × 映射因子消息，并计算一阶、二阶矩

    Returns:
        tuple: (pmf [D, M], ⟨x⟩, ⟨|x|²⟩, 退化为均匀分布的行数)
    """
    combined = np.asarray(log_demap) + np.asarray(log_message)
    degenerate = ~np.all(np.isfinite(combined), axis=1) | np.all(combined <= NEG, axis=1)
    combined = np.where(degenerate[:, None], 0.0, combined)
    pmf = np.exp(_normalize_log(combined))
    mean = pmf @ alphabet
    second = pmf @ (np.abs(alphabet) ** 2)
    # 数值舍入下保证 ⟨|x|²⟩ ≥ |⟨x⟩|²
    second = np.maximum(second, np.abs(mean) ** 2)
    return pmf, mean, second, int(np.count_nonzero(degenerate))


def bcjr_decode(channel_llrs, code):
    """对数域BCJR，零状态起止

    Args:
        channel_llrs: 编码比特信道LLR，长度为 n_out·(K+m)
        code: ConvCode

    Returns:
        tuple: (信息比特后验LLR [K], 编码比特外信息LLR [n_out·(K+m)])

    Raises:
        ValueError: LLR长度与网格不匹配
    """
    channel_llrs = np.clip(np.asarray(channel_llrs, dtype=float), -LLR_CLAMP, LLR_CLAMP)
    if channel_llrs.size % code.n_out != 0 or channel_llrs.size // code.n_out <= code.memory:
        raise ValueError(f"LLR长度{channel_llrs.size}与码网格不匹配")
    steps = channel_llrs.size // code.n_out
    n_info = steps - code.memory
    n_states = code.n_states
    llrs = channel_llrs.reshape(steps, code.n_out)

    signs = 1.0 - 2.0 * code.out_bits
    gamma = np.einsum('sbj,tj->tsb', signs, llrs) / 2.0
    # 收尾段只允许输入0
    gamma[n_info:, :, 1] = NEG

    prev_state = code.prev_state
    prev_input = code.prev_input
    next_state = code.next_state

    alpha = np.full((steps + 1, n_states), NEG)
    alpha[0, 0] = 0.0
    for t in range(steps):
        branch = alpha[t][prev_state] + gamma[t][prev_state, prev_input[:, None]]
        alpha[t + 1] = np.logaddexp(branch[:, 0], branch[:, 1])
        alpha[t + 1] -= alpha[t + 1].max()

    beta = np.full((steps + 1, n_states), NEG)
    beta[steps, 0] = 0.0
    for t in range(steps - 1, -1, -1):
        branch = gamma[t] + beta[t + 1][next_state]
        beta[t] = np.logaddexp(branch[:, 0], branch[:, 1])
        beta[t] -= beta[t].max()

    metric = alpha[:-1, :, None] + gamma + beta[1:][:, next_state]
    info_llr = (logsumexp(metric[:n_info, :, 0], axis=1)
                - logsumexp(metric[:n_info, :, 1], axis=1))

    flat = metric.reshape(steps, n_states * 2)
    coded_post = np.empty((steps, code.n_out))
    for j in range(code.n_out):
        zero = code.out_bits[:, :, j].ravel() == 0
        coded_post[:, j] = (logsumexp(np.where(zero[None, :], flat, -np.inf), axis=1)
                            - logsumexp(np.where(zero[None, :], -np.inf, flat), axis=1))
    extrinsic = coded_post.ravel() - channel_llrs
    return np.clip(info_llr, -LLR_CLAMP, LLR_CLAMP), np.clip(extrinsic, -LLR_CLAMP, LLR_CLAMP)


class BpDecoder:
    """译码子图的一次前向-后向消息传递"""

    def __init__(self, layout, logger=None):
        """初始化译码器

        Args:
            layout: FrameLayout（子载波划分、星座、卷积码与交织器）
            logger: 日志记录器，如果为None则创建新的记录器
        """
        self.layout = layout
        self.logger = logger if logger else Logger()
        self.alphabet = layout.mapper.alphabet
        self.bit_labels = layout.mapper.bit_labels
        self.n_data = layout.data_indices.size
        self.bits_per_symbol = layout.mapper.bits_per_symbol

    def initial_priors(self):
        return np.zeros((self.n_data, self.bits_per_symbol))

    def decode_pass(self, y, h_mean, h_second, noise_var, bit_priors=None):
        """解调 -> 映射因子 -> 解交织 -> BCJR -> 交织 -> 映射因子 -> 符号信念

        Args:
            y: 全部子载波上的接收信号
            h_mean: ⟨h⟩（全部子载波）
            h_second: ⟨|h|²⟩（全部子载波）
            noise_var: β̂
            bit_priors: 上一次译码的交织顺序比特先验 [D, Q]，缺省为0

        Returns:
            SoftInfo: 本次译码的软信息
        """
        data = self.layout.data_indices
        priors = self.initial_priors() if bit_priors is None else bit_priors
        log_demap, demap_mean, demap_var = demap_log_message(
            np.asarray(y)[data], np.asarray(h_mean)[data], np.asarray(h_second)[data], noise_var, self.alphabet)

        to_decoder, _ = map_bp(log_demap, priors, self.bit_labels)
        channel_llrs = self.layout.interleaver.deinterleave(to_decoder.ravel())
        info_llr, coded_extrinsic = bcjr_decode(channel_llrs, self.layout.code)

        new_priors = self.layout.interleaver.interleave(coded_extrinsic).reshape(self.n_data, self.bits_per_symbol)
        log_message = bits_to_symbols(new_priors, self.bit_labels)
        pmf, mean, second, fallbacks = symbol_beliefs(log_demap, log_message, self.alphabet)
        if fallbacks:
            self.logger.warning(f"{fallbacks}个数据子载波的符号信念退化，使用均匀分布")

        return SoftInfo(
            demap_mean=demap_mean,
            demap_var=demap_var,
            symbol_pmf=pmf,
            coded_llr=channel_llrs + coded_extrinsic,
            coded_extrinsic=coded_extrinsic,
            info_llr=info_llr,
            info_bits_hat=(info_llr < 0).astype(np.int8),
            symbol_mean=mean,
            symbol_second=second,
            bit_priors=new_priors,
            uniform_fallbacks=fallbacks,
        )


__all__ = [
    'SoftInfo', 'LLR_CLAMP', 'demap_log_message', 'demap_message', 'bits_to_symbols',
    'map_bp', 'symbol_beliefs', 'bcjr_decode', 'BpDecoder',
]
