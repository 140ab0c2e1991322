#!/usr/bin/env python
# -*- coding: utf-8 -*-

import sys

from src_link.config import default_configs
from src_sim.harness import run_trial
from utils.logger import Logger


def single_trial(receiver='offgrid_bpmf', snr_db=18.0, trial=0):
    """运行一次试验并逐次打印外迭代指标

    Args:
        receiver (str): 接收机名称
        snr_db (float): 信噪比（dB）
        trial (int): 试验编号（决定随机源）

    Returns:
        TrialResult: 试验结果
    """
    try:
        system, channel, sim = default_configs()
        print(f"N={system.n_subcarriers}, 导频={system.n_pilots}, 数据子载波={system.n_data}, SNR={snr_db} dB")

        result = run_trial(system, channel, sim, receiver, trial, snr_db, logger=Logger(console_level='WARNING'))
        print(f"真实路径数 L̃={result.channel.n_paths}, 时延(μs)={[round(t * 1e6, 3) for t in result.channel.delays]}")

        for record in result.records:
            print(f"  迭代{record.outer_iter:2d}: 误比特={record.bit_errors:4d}/{record.bits}, "
                  f"NMSE={record.nmse:.3e}, L̂={record.l_hat}, β̂={record.beta_hat:.3e}, "
                  f"耗时={record.runtime_ms:.0f} ms")
        return result

    except Exception as e:
        print(f"运行示例试验时发生错误: {str(e)}")
        return None


if __name__ == '__main__':
    name = sys.argv[1] if len(sys.argv) > 1 else 'offgrid_bpmf'
    snr = float(sys.argv[2]) if len(sys.argv) > 2 else 18.0
    single_trial(name, snr)
