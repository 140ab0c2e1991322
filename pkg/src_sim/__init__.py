#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
src_sim包：蒙特卡洛试验、参数扫描与特征值探测
"""

from src_sim.harness import MetricsRecord, run_trial, run_trials, sweep, probe_eigen

__all__ = ['MetricsRecord', 'run_trial', 'run_trials', 'sweep', 'probe_eigen']
