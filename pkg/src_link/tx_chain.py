#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
发射链路：信息比特 -> 卷积编码 -> 随机交织 -> Gray QAM映射 -> OFDM符号组帧。
"""

from dataclasses import dataclass

import numpy as np

from utils.logger import Logger


def _octal_taps(generator, constraint_length):
    """将八进制生成多项式展开为抽头向量（高位对应当前输入）"""
    bits = [(int(generator) >> (constraint_length - 1 - i)) & 1 for i in range(constraint_length)]
    return np.asarray(bits, dtype=np.int64)


def _parity(values):
    """逐元素计算整数二进制表示中1的个数的奇偶性"""
    values = np.asarray(values, dtype=np.int64).copy()
    parity = np.zeros_like(values)
    while np.any(values):
        parity ^= values & 1
        values >>= 1
    return parity


class ConvCode:
    """码率1/n的非递归（前馈）卷积码，零尾收尾

    状态的第 (m-1) 位保存上一时刻输入，最低位保存 m 个时刻前的输入。
    输入比特 b 与状态 s 组成移位寄存器 (b << m) | s，各输出比特为
    生成多项式与寄存器按位与后的奇偶校验。

    Attributes:
        generators: 生成多项式（整数，常以八进制书写）
        memory: 寄存器长度 m（约束长度减1）
        n_states: 状态数 2^m
        n_out: 每个输入比特对应的输出比特数
        next_state: next_state[s, b]
        out_bits: out_bits[s, b, j]
        prev_state: prev_state[ns, x]，进入状态 ns 的两个前驱
        prev_input: prev_input[ns]，进入状态 ns 的输入比特
    """

    def __init__(self, generators=(0o561, 0o753)):
        self.generators = tuple(int(g) for g in generators)
        self.constraint_length = max(g.bit_length() for g in self.generators)
        self.memory = self.constraint_length - 1
        self.n_states = 1 << self.memory
        self.n_out = len(self.generators)
        self.taps = np.stack([_octal_taps(g, self.constraint_length) for g in self.generators])

        states = np.arange(self.n_states)
        half = self.memory - 1 if self.memory > 0 else 0
        self.next_state = np.stack([(b << half) | (states >> 1) for b in (0, 1)], axis=1)
        registers = np.stack([(b << self.memory) | states for b in (0, 1)], axis=1)
        self.out_bits = np.stack([_parity(registers & g) for g in self.generators], axis=2)

        mask = (1 << half) - 1
        self.prev_input = states >> half
        self.prev_state = np.stack([((states & mask) << 1) | x for x in (0, 1)], axis=1)

    def encoded_length(self, n_info):
        """含收尾比特的编码长度"""
        return self.n_out * (n_info + self.memory)

    def info_length(self, n_coded):
        """编码长度对应的信息比特数"""
        return n_coded // self.n_out - self.memory

    def encode(self, info_bits):
        """零尾卷积编码

        Args:
            info_bits: 信息比特（0/1）

        Returns:
            np.ndarray: 编码比特，输出流按时刻交错 c[n_out*t + j]
        """
        info_bits = np.asarray(info_bits, dtype=np.int64).ravel()
        padded = np.concatenate((info_bits, np.zeros(self.memory, dtype=np.int64)))
        streams = [np.convolve(padded, taps)[:padded.size] % 2 for taps in self.taps]
        return np.stack(streams, axis=1).ravel().astype(np.int8)


def conv_encode(bits, generators=(0o561, 0o753)):
    """码率1/2卷积编码（零尾收尾，追加 m 个冲刷零）"""
    bits = np.asarray(bits)
    if bits.size == 0:
        raise ValueError("待编码比特不能为空")
    return ConvCode(generators).encode(bits)


class Interleaver:
    """由种子确定的随机置换交织器"""

    def __init__(self, length, seed):
        self.length = int(length)
        self.permutation = np.random.default_rng(seed).permutation(self.length)

    def interleave(self, values):
        values = np.asarray(values)
        if values.shape[0] != self.length:
            raise ValueError(f"交织长度不匹配: 期望{self.length}，实际{values.shape[0]}")
        return values[self.permutation]

    def deinterleave(self, values):
        values = np.asarray(values)
        if values.shape[0] != self.length:
            raise ValueError(f"解交织长度不匹配: 期望{self.length}，实际{values.shape[0]}")
        out = np.empty_like(values)
        out[self.permutation] = values
        return out


def interleave(bits, seed):
    return Interleaver(len(bits), seed).interleave(bits)


def deinterleave(bits, seed, length=None):
    """interleave 的逆操作

    Args:
        bits: 交织后的序列
        seed: 与交织时相同的种子
        length: 交织器长度，缺省取 len(bits)
    """
    return Interleaver(len(bits) if length is None else length, seed).deinterleave(bits)


class QamMapper:
    """方形Gray映射QAM，平均符号能量归一化为1

    每符号 Q 比特中前 Q/2 比特决定同相分量、后 Q/2 比特决定正交分量；
    每一维上第 k 个电平 2k-(√M-1) 的标号为 k ^ (k >> 1)。

    Attributes:
        alphabet: 按标号整数（高位在前）索引的星座点
        bit_labels: bit_labels[label, q]
    """

    def __init__(self, bits_per_symbol=8):
        if bits_per_symbol <= 0 or bits_per_symbol % 2 != 0:
            raise ValueError(f"方形QAM每符号比特数须为正偶数，当前为{bits_per_symbol}")
        self.bits_per_symbol = bits_per_symbol
        half = bits_per_symbol // 2
        levels = 1 << half
        order = 1 << bits_per_symbol
        self.scale = np.sqrt(2.0 * (order - 1) / 3.0)

        positions = np.arange(levels)
        gray = positions ^ (positions >> 1)
        amplitude = np.empty(levels)
        amplitude[gray] = 2.0 * positions - (levels - 1)

        labels = np.arange(order)
        i_label = labels >> half
        q_label = labels & (levels - 1)
        self.alphabet = (amplitude[i_label] + 1j * amplitude[q_label]) / self.scale
        shifts = np.arange(bits_per_symbol - 1, -1, -1)
        self.bit_labels = ((labels[:, None] >> shifts) & 1).astype(np.int8)
        self._weights = 1 << shifts

    @property
    def order(self):
        return self.alphabet.size

    def labels_from_bits(self, bits):
        bits = np.asarray(bits, dtype=np.int64).ravel()
        if bits.size % self.bits_per_symbol != 0:
            raise ValueError(f"比特数{bits.size}不是每符号比特数{self.bits_per_symbol}的整数倍")
        return bits.reshape(-1, self.bits_per_symbol) @ self._weights

    def map(self, bits):
        """比特 -> 星座点"""
        return self.alphabet[self.labels_from_bits(bits)]

    def hard_demap(self, symbols):
        """最近点判决，返回比特序列"""
        symbols = np.asarray(symbols).ravel()
        nearest = np.argmin(np.abs(symbols[:, None] - self.alphabet[None, :]), axis=1)
        return self.bit_labels[nearest].ravel()


def map_qam(bit_groups, bits_per_symbol=8):
    """Gray映射 2^Q-QAM（默认256-QAM，缩放 1/√170）"""
    bit_groups = np.asarray(bit_groups)
    if bit_groups.ndim == 2 and bit_groups.shape[1] != bits_per_symbol:
        raise ValueError(f"比特分组大小应为{bits_per_symbol}，实际为{bit_groups.shape[1]}")
    return QamMapper(bits_per_symbol).map(bit_groups)


def hard_demap(symbols, bits_per_symbol=8):
    return QamMapper(bits_per_symbol).hard_demap(symbols)


def soft_alphabet(bits_per_symbol=8):
    """返回 (星座点, 比特标号) 列表"""
    mapper = QamMapper(bits_per_symbol)
    return [(mapper.alphabet[k], tuple(int(b) for b in mapper.bit_labels[k])) for k in range(mapper.order)]


QPSK_ALPHABET = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / np.sqrt(2.0)


@dataclass
class FrameLayout:
    """接收端已知的帧结构：子载波划分、导频符号、编码与交织"""

    n_subcarriers: int
    pilot_indices: np.ndarray
    data_indices: np.ndarray
    pilot_values: np.ndarray
    code: ConvCode
    mapper: QamMapper
    interleaver: Interleaver

    @property
    def n_info(self):
        return self.code.info_length(self.interleaver.length)


@dataclass
class SymbolFrame:
    """一个OFDM符号的全部发射信息"""

    info_bits: np.ndarray
    coded_bits: np.ndarray
    symbol_vector: np.ndarray
    pilot_values: np.ndarray
    bit_groups: np.ndarray
    layout: FrameLayout

    @property
    def data_symbols(self):
        return self.symbol_vector[self.layout.data_indices]


class TxChain:
    """发射链路，按系统配置构造编码器、交织器和映射器"""

    def __init__(self, system, logger=None):
        """初始化发射链路

        Args:
            system: 已校验的SystemConfig
            logger: 日志记录器，如果为None则创建新的记录器
        """
        self.system = system
        self.logger = logger if logger else Logger()
        self.code = ConvCode(system.code_polynomials)
        self.mapper = QamMapper(system.bits_per_symbol)
        self.n_coded = system.n_data * system.bits_per_symbol
        self.n_info = self.code.info_length(self.n_coded)
        self.interleaver = Interleaver(self.n_coded, system.interleaver_seed)
        self.logger.debug(
            f"发射链路初始化: D={system.n_data}, 编码比特={self.n_coded}, 信息比特K={self.n_info}")

    def random_info_bits(self, rng):
        return rng.integers(0, 2, size=self.n_info, dtype=np.int8)

    def draw_pilots(self, rng):
        """独立同分布地从单位能量QPSK字母表抽取导频符号"""
        return QPSK_ALPHABET[rng.integers(0, 4, size=self.system.n_pilots)]

    def layout(self, pilot_values):
        return FrameLayout(
            n_subcarriers=self.system.n_subcarriers,
            pilot_indices=self.system.pilots,
            data_indices=self.system.data,
            pilot_values=np.asarray(pilot_values),
            code=self.code,
            mapper=self.mapper,
            interleaver=self.interleaver,
        )

    def build_frame(self, info_bits, pilot_rng):
        """组帧

        Args:
            info_bits: 长度为K的信息比特
            pilot_rng: 用于抽取导频符号的 np.random.Generator

        Returns:
            SymbolFrame: 组好的OFDM符号

        Raises:
            ValueError: 信息比特长度与K不符
        """
        info_bits = np.asarray(info_bits, dtype=np.int8).ravel()
        if info_bits.size != self.n_info:
            raise ValueError(f"信息比特长度不匹配: 期望K={self.n_info}，实际{info_bits.size}")
        coded = self.code.encode(info_bits)
        interleaved = self.interleaver.interleave(coded)
        pilot_values = self.draw_pilots(pilot_rng)

        x = np.zeros(self.system.n_subcarriers, dtype=complex)
        x[self.system.data] = self.mapper.map(interleaved)
        x[self.system.pilots] = pilot_values
        return SymbolFrame(
            info_bits=info_bits,
            coded_bits=coded,
            symbol_vector=x,
            pilot_values=pilot_values,
            bit_groups=interleaved.reshape(-1, self.system.bits_per_symbol),
            layout=self.layout(pilot_values),
        )


def build_frame(system, info_bits, seed, logger=None):
    """按配置与导频种子组帧（函数式入口）"""
    return TxChain(system, logger=logger).build_frame(info_bits, np.random.default_rng(seed))


__all__ = [
    'ConvCode', 'conv_encode', 'Interleaver', 'interleave', 'deinterleave',
    'QamMapper', 'map_qam', 'hard_demap', 'soft_alphabet', 'QPSK_ALPHABET',
    'FrameLayout', 'SymbolFrame', 'TxChain', 'build_frame',
]
