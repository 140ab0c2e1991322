#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
蒙特卡洛实验：单次试验流水线（发射 -> 信道 -> 接收机 -> 指标）、并行试验、扫描与汇总。

每次试验的随机源由 (master_seed, trial) 派生，比特、信道、噪声三路独立；导频符号由
(pilot_seed, trial) 派生。因此相同种子与配置下，串行与并行运行得到相同的结果。
"""

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, asdict, replace
from typing import List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from utils.logger import Logger
from src_link.config import make_system_config, with_pilots, validate, ConfigValidationError
from src_link.tx_chain import TxChain
from src_link.channel_model import draw_channel, observe, channel_records, MultipathChannel
from src_rx.estimator import SparseChannelEstimator, SymbolMoments
from src_rx.linear_solver import eigen_probe
from src_rx.receiver import OffGridReceiver, GenieInfo
from src_rx.reference_receivers import OracleReceiver, FreqLmmseReceiver

RECEIVER_TYPES = {
    'offgrid_bpmf': OffGridReceiver,
    'freq_lmmse': FreqLmmseReceiver,
    'oracle': OracleReceiver,
    'oracle_csi': OracleReceiver,
}
EXPERIMENTS = ('snr', 'pilots', 'numtaps', 'iters', 'pilot-ablation')
PILOT_COUNTS = (31, 41, 51, 61, 101)
NUMTAPS_MEANS = (1, 3, 5, 13, 32, 80, 200, 500, 1200)
EIGEN_SIZES = (100, 200, 400, 800)
SWEEP_SNR_DB = 18.0
PROBE_SNR_DB = 15.0
ABLATION_PILOTS = (31, 51)

RECORD_COLUMNS = [
    'trial', 'receiver', 'snr_db', 'n_pilots', 'poisson_mean', 'outer_iter',
    'bit_errors', 'bits', 'nmse', 'l_hat', 'beta_hat', 'runtime_ms', 'pilot_usage',
]
TRACE_COLUMNS = [
    'trial', 'receiver', 'snr_db', 'n_pilots', 'poisson_mean', 'pilot_usage',
    'outer_iter', 'inner_iter', 'l_hat', 'beta_hat', 'eta_hat', 'rho_hat', 'rbfe_mf',
]


@dataclass
class MetricsRecord:
    """一次外迭代（译码之后）的指标"""

    trial: int
    receiver: str
    snr_db: float
    n_pilots: int
    poisson_mean: float
    outer_iter: int
    bit_errors: int
    bits: int
    nmse: float
    l_hat: int
    beta_hat: float
    runtime_ms: float
    pilot_usage: str = 'all'


@dataclass
class TrialResult:
    trial: int
    records: List[MetricsRecord]
    trace: List[dict]
    channel: MultipathChannel


@dataclass
class SweepResult:
    """扫描结果：汇总表、原始逐迭代记录、估计器轨迹、信道实现"""

    table: pd.DataFrame
    raw: pd.DataFrame
    trace: pd.DataFrame
    channels: pd.DataFrame


@dataclass(frozen=True)
class TrialTask:
    system: object
    channel: object
    sim: object
    receiver: str
    snr_db: float
    trial: int
    use_pilots_after_first: bool = True
    log_dir: Optional[str] = None
    console_level: str = 'INFO'


def trial_streams(master_seed, pilot_seed, trial):
    """派生一次试验的随机源

    Returns:
        tuple: (比特Generator, 信道SeedSequence, 噪声SeedSequence, 导频Generator)
    """
    bits_seq, channel_seq, noise_seq = np.random.SeedSequence([master_seed, trial]).spawn(3)
    pilot_rng = np.random.default_rng(np.random.SeedSequence([pilot_seed, trial]))
    return np.random.default_rng(bits_seq), channel_seq, noise_seq, pilot_rng


def build_receiver(name, system, sim, logger=None, use_pilots_after_first=True):
    """按名称构造接收机

    Raises:
        ValueError: 未知的接收机名称
    """
    if name not in RECEIVER_TYPES:
        raise ValueError(f"未知的接收机: {name}")
    if name == 'offgrid_bpmf':
        return OffGridReceiver(system, sim, logger=logger, use_pilots_after_first=use_pilots_after_first)
    if name == 'oracle_csi':
        return OracleReceiver(system, sim, logger=logger, perfect_csi=True)
    return RECEIVER_TYPES[name](system, sim, logger=logger)


def nmse(h_hat, h):
    """||ĥ-h||²/||h||²"""
    h = np.asarray(h)
    return float(np.sum(np.abs(np.asarray(h_hat) - h) ** 2) / np.sum(np.abs(h) ** 2))


def run_trial(system, channel_cfg, sim, receiver, trial, snr_db, logger=None, use_pilots_after_first=True):
    """运行一次完整试验

    Args:
        system: SystemConfig
        channel_cfg: ChannelConfig
        sim: SimConfig
        receiver: 接收机名称
        trial: 试验编号
        snr_db: 信噪比（dB）
        logger: 日志记录器，如果为None则创建新的记录器
        use_pilots_after_first: 离网接收机在首次迭代后是否继续使用导频

    Returns:
        TrialResult: 每次外迭代一条 MetricsRecord，外加估计器轨迹和信道实现
    """
    logger = logger if logger else Logger()
    bits_rng, channel_seq, noise_seq, pilot_rng = trial_streams(sim.master_seed, system.pilot_seed, trial)
    tx = TxChain(system, logger=logger)
    info_bits = tx.random_info_bits(bits_rng)
    frame = tx.build_frame(info_bits, pilot_rng)

    channel = draw_channel(channel_cfg, channel_seq)
    h = channel.realize(system)
    y, noise_var = observe(frame, h, snr_db, noise_seq)
    channel.noise_var = noise_var
    genie = GenieInfo(frame.symbol_vector, channel.delays, channel.path_vars, h, noise_var)

    rx = build_receiver(receiver, system, sim, logger=logger, use_pilots_after_first=use_pilots_after_first)
    try:
        run = rx.run(y, frame.layout, genie)
    except Exception as e:
        logger.error(f"试验{trial}（{receiver}, {snr_db} dB）失败: {str(e)}")
        raise

    usage = 'all' if use_pilots_after_first else 'first'
    common = {
        'trial': trial,
        'receiver': receiver,
        'snr_db': float(snr_db),
        'n_pilots': system.n_pilots,
        'poisson_mean': float(channel_cfg.poisson_mean),
        'pilot_usage': usage,
    }
    records = [
        MetricsRecord(
            outer_iter=it.outer_iter,
            bit_errors=int(np.count_nonzero(it.info_bits_hat != info_bits)),
            bits=int(info_bits.size),
            nmse=nmse(it.h_mean, h),
            l_hat=it.l_hat,
            beta_hat=float(it.beta_hat),
            runtime_ms=float(it.runtime_ms),
            **common,
        )
        for it in run.iterations
    ]
    trace = [{**common, **row} for row in run.trace]
    return TrialResult(trial=trial, records=records, trace=trace, channel=channel)


def _trial_worker(task):
    logger = Logger(log_dir=task.log_dir, console_level=task.console_level)
    return run_trial(task.system, task.channel, task.sim, task.receiver, task.trial, task.snr_db,
                     logger=logger, use_pilots_after_first=task.use_pilots_after_first)


def run_trials(system, channel_cfg, sim, receiver, snr_db, trials=None, logger=None,
               use_pilots_after_first=True, parallel=None, progress=False):
    """运行一组试验，结果按试验编号排序

    Args:
        trials: 试验编号序列，缺省为 range(sim.n_trials)
        parallel: 并行进程数，缺省取 sim.parallel
        progress: 是否显示进度条

    Returns:
        list: TrialResult 列表
    """
    logger = logger if logger else Logger()
    trials = list(range(sim.n_trials)) if trials is None else list(trials)
    parallel = sim.parallel if parallel is None else parallel
    desc = f"{receiver} @ {snr_db:g} dB"
    tasks = [
        TrialTask(system, channel_cfg, sim, receiver, float(snr_db), t, use_pilots_after_first,
                  log_dir=logger.log_dir, console_level=logger.console_level)
        for t in trials
    ]

    results = []
    if parallel <= 1:
        for task in tqdm(tasks, desc=desc, unit="trial", leave=False, disable=not progress):
            results.append(run_trial(task.system, task.channel, task.sim, task.receiver, task.trial,
                                     task.snr_db, logger=logger, use_pilots_after_first=task.use_pilots_after_first))
    else:
        with ProcessPoolExecutor(max_workers=parallel) as executor:
            futures = {executor.submit(_trial_worker, task): task.trial for task in tasks}
            for future in tqdm(as_completed(futures), total=len(futures), desc=desc, unit="trial",
                               leave=False, disable=not progress):
                try:
                    results.append(future.result())
                except Exception as e:
                    logger.error(f"试验{futures[future]}失败: {str(e)}")
                    raise
    return sorted(results, key=lambda r: r.trial)


def records_frame(results):
    rows = [asdict(record) for result in results for record in result.records]
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def trace_frame(results):
    rows = [row for result in results for row in result.trace]
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def channels_frame(results, poisson_mean):
    table = channel_records([r.channel for r in results], [r.trial for r in results])
    table.insert(0, 'poisson_mean', float(poisson_mean))
    return table


def final_records(raw, keys):
    """每个 (keys, trial) 取最后一次外迭代的记录"""
    ordered = raw.sort_values('outer_iter', kind='mergesort')
    return ordered.groupby(list(keys) + ['trial'], sort=False).tail(1)


def aggregate(records, keys):
    """按 keys 汇总：ber = Σ误比特/Σ比特，nmse 取均值，trials 为试验数"""
    grouped = records.groupby(list(keys), sort=False)
    table = grouped.agg(
        bit_errors=('bit_errors', 'sum'),
        bits=('bits', 'sum'),
        nmse=('nmse', 'mean'),
        trials=('trial', 'nunique'),
    ).reset_index()
    table['ber'] = table['bit_errors'] / table['bits']
    return table[list(keys) + ['ber', 'nmse', 'trials']]


def carry_forward(raw, max_iter):
    """把每次试验的最后一次迭代结果沿用到 max_iter（早停的试验保持其最终值）"""
    frames = []
    index = pd.Index(range(1, max_iter + 1), name='outer_iter')
    for (receiver, trial), group in raw.groupby(['receiver', 'trial'], sort=False):
        filled = group.set_index('outer_iter').reindex(index).ffill().reset_index()
        filled['receiver'] = receiver
        filled['trial'] = trial
        frames.append(filled)
    if not frames:
        return raw.iloc[0:0]
    return pd.concat(frames, ignore_index=True)


def _sweep_points(experiment, system, channel_cfg, sim, receivers, snr_db, pilot_counts, poisson_means,
                  ablation_pilots):
    """展开扫描点：(system, channel, receiver, snr_db, use_pilots_after_first)"""
    if experiment == 'snr':
        for value in sim.snr_db_list:
            for name in receivers:
                yield system, channel_cfg, name, value, True
    elif experiment == 'pilots':
        for count in pilot_counts:
            for name in receivers:
                pattern = 'random' if name == 'offgrid_bpmf' else 'equispaced'
                point = with_pilots(system, count, pattern)
                validate(point, channel_cfg, sim)
                yield point, channel_cfg, name, snr_db, True
    elif experiment == 'numtaps':
        for mean in poisson_means:
            point = replace(channel_cfg, poisson_mean=float(mean))
            for name in receivers:
                yield system, point, name, snr_db, True
    elif experiment == 'iters':
        for name in receivers:
            yield system, channel_cfg, name, snr_db, True
    elif experiment == 'pilot-ablation':
        for count in ablation_pilots:
            point = with_pilots(system, count, 'random')
            validate(point, channel_cfg, sim)
            for usage in (True, False):
                yield point, channel_cfg, 'offgrid_bpmf', snr_db, usage
    else:
        raise ValueError(f"未知的实验: {experiment}")


def sweep(experiment, system, channel_cfg, sim, trials=None, seed=None, receivers=None, snr_db=None,
          logger=None, progress=False, pilot_counts=PILOT_COUNTS, poisson_means=NUMTAPS_MEANS,
          ablation_pilots=ABLATION_PILOTS):
    """运行一个扫描实验

    Args:
        experiment: 'snr' | 'pilots' | 'numtaps' | 'iters' | 'pilot-ablation'
        system: SystemConfig
        channel_cfg: ChannelConfig
        sim: SimConfig
        trials: 每个扫描点的试验数，缺省取 sim.n_trials
        seed: 主种子，缺省取 sim.master_seed
        receivers: 接收机名称列表，缺省取 sim.receivers
        snr_db: 非SNR扫描实验使用的信噪比，缺省 18 dB
        logger: 日志记录器，如果为None则创建新的记录器
        progress: 是否显示进度条
        pilot_counts: pilots 实验的导频数序列
        poisson_means: numtaps 实验的泊松均值序列
        ablation_pilots: pilot-ablation 实验的随机导频数序列

    Returns:
        SweepResult: 汇总表与原始数据
    """
    logger = logger if logger else Logger()
    if experiment == 'pilots_after_first':
        experiment = 'pilot-ablation'
    if experiment not in EXPERIMENTS:
        raise ValueError(f"未知的实验: {experiment}")
    overrides = {}
    if trials is not None:
        overrides['n_trials'] = int(trials)
    if seed is not None:
        overrides['master_seed'] = int(seed)
    sim = replace(sim, **overrides)
    receivers = tuple(receivers) if receivers else sim.receivers
    unknown = set(receivers) - set(RECEIVER_TYPES)
    if unknown:
        raise ConfigValidationError("unknown receiver", f"未知的接收机: {sorted(unknown)}")
    snr_db = SWEEP_SNR_DB if snr_db is None else float(snr_db)

    start = time.time()
    logger.log_processing(f"开始实验 {experiment}", {
        'trials': sim.n_trials, 'seed': sim.master_seed, 'receivers': list(receivers)})
    raw_frames, trace_frames, channel_frames = [], [], []
    points = _sweep_points(experiment, system, channel_cfg, sim, receivers, snr_db,
                           pilot_counts, poisson_means, ablation_pilots)
    for point_system, point_channel, name, point_snr, usage in points:
        results = run_trials(point_system, point_channel, sim, name, point_snr, logger=logger,
                             use_pilots_after_first=usage, progress=progress)
        raw_frames.append(records_frame(results))
        trace_frames.append(trace_frame(results))
        channel_frames.append(channels_frame(results, point_channel.poisson_mean))
        logger.log_processing("扫描点完成", {
            'receiver': name, 'snr_db': point_snr, 'n_pilots': point_system.n_pilots,
            'poisson_mean': point_channel.poisson_mean, 'pilot_usage': 'all' if usage else 'first'})

    raw = pd.concat(raw_frames, ignore_index=True)
    trace = pd.concat(trace_frames, ignore_index=True)
    channels = pd.concat(channel_frames, ignore_index=True).drop_duplicates(
        subset=['poisson_mean', 'trial', 'l'], ignore_index=True)
    table = summarize(experiment, raw, sim.max_outer_iters)
    logger.info(f"实验 {experiment} 完成，耗时 {time.time() - start:.1f} 秒")
    return SweepResult(table=table, raw=raw, trace=trace, channels=channels)


def summarize(experiment, raw, max_outer_iters):
    """由原始逐迭代记录生成实验汇总表"""
    if experiment == 'snr':
        keys = ['snr_db', 'receiver']
        return aggregate(final_records(raw, keys), keys)
    if experiment == 'pilots':
        keys = ['n_pilots', 'receiver']
        table = aggregate(final_records(raw, keys), keys)
        table.insert(2, 'pilot_pattern', np.where(table['receiver'] == 'offgrid_bpmf', 'random', 'equispaced'))
        return table
    if experiment == 'numtaps':
        keys = ['poisson_mean', 'receiver']
        return aggregate(final_records(raw, keys), keys)
    if experiment == 'iters':
        return aggregate(carry_forward(raw, max_outer_iters), ['outer_iter', 'receiver'])
    keys = ['n_pilots', 'pilot_usage', 'receiver', 'snr_db']
    return aggregate(final_records(raw, keys), keys)


def probe_system(system, n):
    """特征值探测使用的系统：N个子载波，仅首尾两个导频"""
    return make_system_config(
        n, 2, 'equispaced',
        subcarrier_spacing=system.subcarrier_spacing,
        cyclic_prefix=system.cyclic_prefix,
        bits_per_symbol=system.bits_per_symbol,
        code_polynomials=system.code_polynomials,
        interleaver_seed=system.interleaver_seed,
        pilot_seed=system.pilot_seed,
    )


def estimator_snapshots(system, channel_cfg, sim, trials, snr_db=PROBE_SNR_DB, logger=None, progress=False):
    """已知全部符号时运行估计器，返回 (trial, 激活时延, β̂, η̂) 快照"""
    logger = logger if logger else Logger()
    tx = TxChain(system, logger=logger)
    estimator = SparseChannelEstimator(system, sim, logger=logger)
    snapshots = []
    for trial in tqdm(trials, desc=f"eigen N={system.n_subcarriers}", unit="trial", leave=False,
                      disable=not progress):
        bits_rng, channel_seq, noise_seq, pilot_rng = trial_streams(sim.master_seed, system.pilot_seed, trial)
        frame = tx.build_frame(tx.random_info_bits(bits_rng), pilot_rng)
        channel = draw_channel(channel_cfg, channel_seq)
        y, _ = observe(frame, channel.realize(system), snr_db, noise_seq)
        state, _ = estimator.estimate(y, SymbolMoments.known(frame.symbol_vector))
        snapshots.append((trial, state.delays[state.active_indices], state.noise_var, state.comp_var))
    return snapshots


def probe_eigen(system, channel_cfg, sim, trials=None, seed=None, vs='n', sizes=EIGEN_SIZES,
                poisson_means=NUMTAPS_MEANS, snr_db=PROBE_SNR_DB, logger=None, progress=False):
    """最大特征值探测：按子载波数或按平均路径数扫描

    Args:
        vs: 'n' 扫描子载波数 sizes；'numtaps' 在当前N下扫描泊松均值 poisson_means

    Returns:
        pd.DataFrame: 列 N, poisson_mean, trial, l_hat, lambda_max
    """
    logger = logger if logger else Logger()
    overrides = {'n_components_max': None}
    if trials is not None:
        overrides['n_trials'] = int(trials)
    if seed is not None:
        overrides['master_seed'] = int(seed)
    sim = replace(sim, **overrides)
    if vs == 'n':
        points = [(probe_system(system, int(n)), channel_cfg) for n in sizes]
    elif vs == 'numtaps':
        points = [(system, replace(channel_cfg, poisson_mean=float(m))) for m in poisson_means]
    else:
        raise ValueError(f"未知的特征值扫描变量: {vs}")

    frames = []
    for point_system, point_channel in points:
        validate(point_system, point_channel, sim)
        snapshots = estimator_snapshots(point_system, point_channel, sim, range(sim.n_trials),
                                        snr_db=snr_db, logger=logger, progress=progress)
        table = eigen_probe(snapshots, point_system.n_subcarriers, point_system.subcarrier_spacing)
        table.insert(1, 'poisson_mean', float(point_channel.poisson_mean))
        frames.append(table)
        logger.log_processing("特征值探测点完成", {
            'N': point_system.n_subcarriers, 'poisson_mean': point_channel.poisson_mean,
            'mean_lambda_max': float(table['lambda_max'].mean())})
    return pd.concat(frames, ignore_index=True)


__all__ = [
    'MetricsRecord', 'TrialResult', 'SweepResult', 'RECEIVER_TYPES', 'EXPERIMENTS',
    'PILOT_COUNTS', 'NUMTAPS_MEANS', 'EIGEN_SIZES', 'trial_streams', 'build_receiver', 'nmse',
    'run_trial', 'run_trials', 'records_frame', 'trace_frame', 'final_records', 'aggregate',
    'carry_forward', 'sweep', 'summarize', 'probe_eigen', 'estimator_snapshots',
]
