#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
命令行入口

    python app.py sim snr --trials 10 --seed 1 --out r.csv
    python app.py sim pilots|numtaps|iters|pilot-ablation [...]
    python app.py probe eigen [--vs n|numtaps] --out eig.csv
    python app.py selftest

退出码：0 成功；1 配置无效；2 命令行用法错误。
"""

import os
import sys
import argparse

# 导入自定义模块
from src_link.config import ConfigValidationError
from src_sim.harness import EXPERIMENTS, sweep, probe_eigen
from utils.logger import Logger
from utils.config_loader import ConfigLoader
from utils.output_manager import OutputManager

PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))


def _add_common_flags(parser):
    parser.add_argument('--config', metavar='PATH', help='YAML配置文件，缺省查找config.local.yaml/config.yaml')
    parser.add_argument('--seed', type=int, help='主随机种子')
    parser.add_argument('--trials', type=int, help='每个扫描点的试验数')
    parser.add_argument('--out', metavar='PATH', help='结果CSV路径，缺省写入results/<会话目录>/')
    parser.add_argument('--parallel', type=int, help='并行进程数')
    parser.add_argument('--snr', type=float, help='非SNR扫描实验使用的信噪比（dB），缺省18')


def build_parser():
    parser = argparse.ArgumentParser(prog='app.py', description='OFDM离网稀疏信道估计与联合译码仿真')
    commands = parser.add_subparsers(dest='command', required=True)

    sim_parser = commands.add_parser('sim', help='蒙特卡洛扫描实验')
    sim_parser.add_argument('experiment', choices=EXPERIMENTS)
    _add_common_flags(sim_parser)
    sim_parser.add_argument('--receiver', action='append', metavar='NAME',
                            help='接收机（可重复）：offgrid_bpmf, freq_lmmse, oracle, oracle_csi')
    sim_parser.add_argument('--raw', metavar='PATH', help='逐迭代原始记录CSV')
    sim_parser.add_argument('--trace', metavar='PATH', help='估计器内迭代轨迹CSV')
    sim_parser.add_argument('--dump-channels', metavar='PATH', help='信道实现CSV')

    probe_parser = commands.add_parser('probe', help='特征值探测')
    probe_parser.add_argument('target', choices=['eigen'])
    _add_common_flags(probe_parser)
    probe_parser.add_argument('--vs', choices=['n', 'numtaps'], default='n', help='扫描子载波数或平均路径数')

    commands.add_parser('selftest', help='运行快速测试集')
    return parser


def run_selftest():
    import pytest
    return int(pytest.main(['-q', '-m', 'not slow', os.path.join(PROJECT_ROOT, 'tests')]))


def run_sim(args, loader, logger, output_manager):
    overrides = {'simulation': {
        'n_trials': args.trials,
        'master_seed': args.seed,
        'parallel': args.parallel,
        'receivers': args.receiver,
    }}
    system, channel, sim = loader.build_configs(overrides)
    result = sweep(args.experiment, system, channel, sim, snr_db=args.snr, logger=logger, progress=True)

    path = output_manager.save_table(result.table, args.out, f"{args.experiment}.csv")
    logger.info(f"结果已保存: {path}")
    print(path)
    for extra, table in ((args.raw, result.raw), (args.trace, result.trace), (args.dump_channels, result.channels)):
        if extra:
            logger.info(f"附加输出已保存: {output_manager.save_table(table, extra)}")
    return 0


def run_probe(args, loader, logger, output_manager):
    overrides = {'simulation': {'n_trials': args.trials, 'master_seed': args.seed}}
    system, channel, sim = loader.build_configs(overrides)
    snr = {} if args.snr is None else {'snr_db': args.snr}
    table = probe_eigen(system, channel, sim, vs=args.vs, logger=logger, progress=True, **snr)
    path = output_manager.save_table(table, args.out, 'eigen.csv')
    logger.info(f"特征值探测结果已保存: {path}")
    print(path)
    return 0


def cli(argv=None):
    """命令行主函数

    Args:
        argv: 参数列表，缺省取 sys.argv[1:]

    Returns:
        int: 退出码
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.command == 'selftest':
        return run_selftest()

    try:
        # 加载配置
        loader = ConfigLoader(args.config)
        logger = Logger(log_dir=loader.get_log_dir(), console_level=loader.get_console_level())
        output_manager = OutputManager()
        if args.command == 'sim':
            return run_sim(args, loader, logger, output_manager)
        return run_probe(args, loader, logger, output_manager)
    except ConfigValidationError as e:
        print(f"配置无效: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(cli())
