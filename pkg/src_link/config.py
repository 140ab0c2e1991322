#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
系统、信道与仿真参数容器及其校验。默认值对应 N=601 子载波、15 kHz 子载波间隔、
5.2 μs 循环前缀、101 个等间隔导频的参考场景。
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

# oracle_csi 为直接使用真实频率响应的 oracle 接收机
RECEIVER_NAMES = ('offgrid_bpmf', 'freq_lmmse', 'oracle', 'oracle_csi')


class ConfigValidationError(ValueError):
    """配置校验失败

    Attributes:
        invariant: 被违反的约束名称（稳定的英文关键字，便于程序判断）
    """

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


def equispaced_pilots(n, n_pilots):
    """生成首尾均为导频的等间隔导频索引（从0开始）

    Args:
        n: 子载波数 N
        n_pilots: 导频数

    Returns:
        np.ndarray: 导频索引 {0, Δ_P, 2Δ_P, ..., N-1}

    Raises:
        ConfigValidationError: 导频数小于2或 (N-1) 不能被 (n_pilots-1) 整除
    """
    if n_pilots < 2:
        raise ConfigValidationError("too few pilots", f"导频数至少为2，当前为{n_pilots}")
    if (n - 1) % (n_pilots - 1) != 0:
        raise ConfigValidationError(
            "pilot spacing not integral",
            f"(N-1)={n - 1} 不能被 (导频数-1)={n_pilots - 1} 整除")
    spacing = (n - 1) // (n_pilots - 1)
    return np.arange(0, n, spacing, dtype=int)


def random_pilots(n, n_pilots, seed):
    """生成包含首尾子载波、最小间隔为2的随机导频图样

    将内部 k = n_pilots-2 个导频的位置 p_i 映射为 q_i = p_i - i，
    于是间隔约束变为在缩小的区间上无放回抽样。

    Args:
        n: 子载波数 N
        n_pilots: 导频数
        seed: 随机种子

    Returns:
        np.ndarray: 升序导频索引（从0开始）

    Raises:
        ConfigValidationError: 导频数不在 [2, N] 内或间隔约束无法满足
    """
    if n_pilots < 2 or n_pilots > n:
        raise ConfigValidationError("pilot count out of range", f"导频数须在[2, {n}]内，当前为{n_pilots}")
    k = n_pilots - 2
    # 内部位置取自 [2, N-3]
    free = n - k - 3
    if n < 3 or free < k:
        raise ConfigValidationError(
            "infeasible pilot spacing",
            f"N={n} 个子载波无法放置 {n_pilots} 个间隔不小于2的导频")
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(free, size=k, replace=False)) if k > 0 else np.zeros(0, dtype=int)
    interior = picks + 2 + np.arange(k)
    return np.concatenate(([0], interior, [n - 1])).astype(int)


@dataclass(frozen=True)
class SystemConfig:
    """OFDM系统参数"""

    n_subcarriers: int = 601
    subcarrier_spacing: float = 15e3
    cyclic_prefix: float = 5.2e-6
    pilot_indices: Tuple[int, ...] = ()
    data_indices: Tuple[int, ...] = ()
    bits_per_symbol: int = 8
    code_polynomials: Tuple[int, int] = (0o561, 0o753)
    interleaver_seed: int = 1
    pilot_seed: int = 2

    @property
    def pilots(self):
        return np.asarray(self.pilot_indices, dtype=int)

    @property
    def data(self):
        return np.asarray(self.data_indices, dtype=int)

    @property
    def n_pilots(self):
        return len(self.pilot_indices)

    @property
    def n_data(self):
        return len(self.data_indices)


@dataclass(frozen=True)
class ChannelConfig:
    """随机稀疏多径信道参数"""

    poisson_mean: float = 5.0
    max_delay: float = 5.2e-6
    decay_constant: float = 1.5e-6
    target_mean_gain: float = 1.0


@dataclass(frozen=True)
class SimConfig:
    """蒙特卡洛仿真与接收机迭代参数"""

    snr_db_list: Tuple[float, ...] = (10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0)
    n_trials: int = 100
    master_seed: int = 0
    max_outer_iters: int = 50
    outer_patience: int = 10
    max_inner_iters: int = 50
    inner_tol: float = 1e-3
    grid_oversampling: int = 8
    # None 表示 L = N
    n_components_max: Optional[int] = None
    receivers: Tuple[str, ...] = ('offgrid_bpmf', 'freq_lmmse', 'oracle')
    parallel: int = 1
    cg_tol: float = 1e-9
    bp_iterations_oracle: int = 5
    lmmse_inner_iters: int = 5

    def components(self, n_subcarriers):
        """分量数上限 L"""
        return self.n_components_max if self.n_components_max else n_subcarriers


def make_system_config(n_subcarriers=601, n_pilots=101, pilot_pattern='equispaced', **kwargs):
    """按导频图样构造SystemConfig

    Args:
        n_subcarriers: 子载波数
        n_pilots: 导频数
        pilot_pattern: 'equispaced' 或 'random'
        **kwargs: 其余SystemConfig字段

    Returns:
        SystemConfig: 尚未校验的系统配置
    """
    pilot_seed = kwargs.get('pilot_seed', SystemConfig.pilot_seed)
    if pilot_pattern == 'equispaced':
        pilots = equispaced_pilots(n_subcarriers, n_pilots)
    elif pilot_pattern == 'random':
        pilots = random_pilots(n_subcarriers, n_pilots, pilot_seed)
    else:
        raise ConfigValidationError("unknown pilot pattern", f"未知的导频图样: {pilot_pattern}")
    data = np.setdiff1d(np.arange(n_subcarriers), pilots)
    return SystemConfig(
        n_subcarriers=n_subcarriers,
        pilot_indices=tuple(int(i) for i in pilots),
        data_indices=tuple(int(i) for i in data),
        **kwargs,
    )


def with_pilots(system, n_pilots, pilot_pattern):
    """返回仅替换导频图样的系统配置副本"""
    base = make_system_config(system.n_subcarriers, n_pilots, pilot_pattern, pilot_seed=system.pilot_seed)
    return replace(system, pilot_indices=base.pilot_indices, data_indices=base.data_indices)


def _validate_system(system):
    n = system.n_subcarriers
    if n <= 0:
        raise ConfigValidationError("non-positive subcarrier count", f"子载波数必须为正，当前为{n}")
    if system.subcarrier_spacing <= 0:
        raise ConfigValidationError("non-positive subcarrier spacing", "子载波间隔必须为正")
    if system.cyclic_prefix <= 0:
        raise ConfigValidationError("non-positive cyclic prefix", "循环前缀时长必须为正")
    if system.cyclic_prefix * system.subcarrier_spacing >= 1.0:
        raise ConfigValidationError("cyclic prefix exceeds symbol", "循环前缀必须短于OFDM有效符号时长 1/Δ_f")

    pilots = np.asarray(system.pilot_indices, dtype=int)
    data = np.asarray(system.data_indices, dtype=int)
    if len(np.unique(pilots)) != len(pilots) or len(np.unique(data)) != len(data):
        raise ConfigValidationError("duplicate indices", "导频或数据索引中存在重复")
    if np.intersect1d(pilots, data).size > 0:
        raise ConfigValidationError("overlapping index sets", "导频与数据子载波索引集合有交集")
    union = np.union1d(pilots, data)
    if union.size != n or union[0] != 0 or union[-1] != n - 1:
        raise ConfigValidationError("index sets do not cover all subcarriers", "导频与数据索引之并必须恰好为全部子载波")
    if pilots.size == 0:
        raise ConfigValidationError("too few pilots", "至少需要一个导频子载波")

    q = system.bits_per_symbol
    if q <= 0 or q % 2 != 0:
        raise ConfigValidationError("unsupported modulation", f"每符号比特数须为正偶数（方形QAM），当前为{q}")
    memory = max(int(g).bit_length() for g in system.code_polynomials) - 1
    coded = data.size * q
    if coded % 2 != 0 or coded // 2 <= memory:
        raise ConfigValidationError("frame too short for code", f"数据子载波承载的编码比特数{coded}不足以容纳1/2码率与收尾比特")


def _validate_channel(channel, system):
    if channel.poisson_mean <= 0:
        raise ConfigValidationError("non-positive poisson mean", "泊松均值 λ 必须为正")
    if channel.max_delay <= 0:
        raise ConfigValidationError("non-positive max delay", "最大时延 τ_max 必须为正")
    if channel.max_delay > system.cyclic_prefix:
        raise ConfigValidationError("max delay exceeds cyclic prefix", "最大时延 τ_max 超过循环前缀 T_CP")
    if channel.decay_constant <= 0:
        raise ConfigValidationError("non-positive decay constant", "功率时延谱衰减常数 v 必须为正")
    if channel.target_mean_gain <= 0:
        raise ConfigValidationError("non-positive target gain", "目标平均增益必须为正")


def _validate_sim(sim, system):
    counts = {
        'n_trials': sim.n_trials,
        'max_outer_iters': sim.max_outer_iters,
        'outer_patience': sim.outer_patience,
        'max_inner_iters': sim.max_inner_iters,
        'grid_oversampling': sim.grid_oversampling,
        'parallel': sim.parallel,
        'bp_iterations_oracle': sim.bp_iterations_oracle,
        'lmmse_inner_iters': sim.lmmse_inner_iters,
    }
    for name, value in counts.items():
        if int(value) <= 0:
            raise ConfigValidationError("non-positive count", f"{name} 必须为正整数，当前为{value}")
    if sim.n_components_max is not None and not 0 < sim.n_components_max <= system.n_subcarriers:
        raise ConfigValidationError("non-positive count", f"n_components_max 须在 (0, N] 内，当前为{sim.n_components_max}")
    if sim.inner_tol <= 0:
        raise ConfigValidationError("non-positive tolerance", "inner_tol 必须为正")
    if sim.cg_tol <= 0:
        raise ConfigValidationError("non-positive tolerance", "cg_tol 必须为正")
    if len(sim.snr_db_list) == 0:
        raise ConfigValidationError("empty snr list", "SNR列表不能为空")
    unknown = set(sim.receivers) - set(RECEIVER_NAMES)
    if unknown:
        raise ConfigValidationError("unknown receiver", f"未知的接收机: {sorted(unknown)}")


def validate(system, channel, sim):
    """校验全部配置

    Args:
        system: SystemConfig
        channel: ChannelConfig
        sim: SimConfig

    Returns:
        tuple: 原样返回的 (system, channel, sim)

    Raises:
        ConfigValidationError: 任一约束不满足
    """
    _validate_system(system)
    _validate_channel(channel, system)
    _validate_sim(sim, system)
    return system, channel, sim


def default_configs():
    """参考场景默认配置（已校验）"""
    return validate(make_system_config(), ChannelConfig(), SimConfig())


__all__ = [
    'RECEIVER_NAMES', 'ConfigValidationError', 'SystemConfig', 'ChannelConfig', 'SimConfig',
    'equispaced_pilots', 'random_pilots', 'make_system_config', 'with_pilots',
    'validate', 'default_configs',
]
