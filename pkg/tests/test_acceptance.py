#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""桌面规模的验收运行，默认跳过：pytest -m slow"""

import os

import numpy as np
import pytest
from scipy import stats

from src_link.config import ChannelConfig, SimConfig
from src_link.channel_model import freq_response
from src_link.tx_chain import QPSK_ALPHABET
from src_rx.estimator import SymbolMoments, SparseChannelEstimator
from src_rx.linear_solver import WoodburySystem, mu_via_woodbury, direct_coeff_solve
from src_sim.harness import sweep, probe_eigen, carry_forward, final_records

pytestmark = pytest.mark.slow

TRIALS = 200
WORKERS = os.cpu_count() or 1


def separated_delays(rng, count, low, high, gap):
    while True:
        delays = np.sort(rng.uniform(low, high, count))
        if np.all(np.diff(delays) > gap):
            return delays


def binomial_ci(bit_errors, bits):
    """误比特率的双侧 95% 二项置信区间"""
    interval = stats.binomtest(int(bit_errors), int(bits)).proportion_ci(confidence_level=0.95)
    return interval.low, interval.high


def pooled_errors(records, key):
    return records.groupby(key)[['bit_errors', 'bits']].sum()


@pytest.fixture(scope="module")
def reference_sweep(default_system, logger):
    """参考场景 18 dB 下三种接收机各 200 次试验"""
    sim = SimConfig(snr_db_list=(18.0,), parallel=WORKERS)
    return sweep('snr', default_system, ChannelConfig(), sim, trials=TRIALS, seed=1, logger=logger)


def test_off_grid_recovery(default_system, sim_cfg, logger):
    n = default_system.n_subcarriers
    cell = 1.0 / (n * default_system.subcarrier_spacing)
    est = SparseChannelEstimator(default_system, sim_cfg, logger)
    successes = 0
    for trial in range(100):
        rng = np.random.default_rng([11, trial])
        delays = separated_delays(rng, 3, 0.2e-6, 5.0e-6, 3 * cell)
        coeffs = rng.uniform(0.5, 1.0, 3) * np.exp(2j * np.pi * rng.uniform(size=3))
        h = freq_response(delays, coeffs, default_system)
        x = QPSK_ALPHABET[rng.integers(0, 4, n)]
        beta = np.sum(np.abs(h) ** 2) / (n * 1000.0)
        y = x * h + np.sqrt(beta / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

        state, _ = est.estimate(y, SymbolMoments.known(x))
        found = np.sort(state.delays[state.active_indices])
        h_mean, _ = est.channel_posterior(state)
        error = np.sum(np.abs(h_mean - h) ** 2) / np.sum(np.abs(h) ** 2)
        if found.size == 3 and np.all(np.abs(found - delays) < cell / 16) and 10 * np.log10(error) <= -30:
            successes += 1
    assert successes >= 95


def test_woodbury_matches_direct_solve():
    for seed in range(100):
        rng = np.random.default_rng([7, seed])
        k = int(rng.integers(1, 21))
        system = WoodburySystem(
            rng.uniform(0, 5.2e-6, k), rng.uniform(0.5, 1.5, 256), 1.0, 0.1,
            rng.standard_normal(256) + 1j * rng.standard_normal(256), 15e3)
        mu, _ = mu_via_woodbury(system, tol=1e-12, max_iters=1000)
        expected = direct_coeff_solve(system.psi, system.weights, system.rhs, system.noise_var, system.comp_var)
        np.testing.assert_allclose(mu, expected, rtol=1e-8, atol=1e-10 * np.abs(expected).max())


def test_largest_eigenvalue_grows_linearly(default_system, logger):
    table = probe_eigen(default_system, ChannelConfig(), SimConfig(), trials=20, logger=logger)
    means = table.groupby('N')['lambda_max'].mean()
    fit = stats.linregress(means.index.to_numpy(dtype=float), means.to_numpy())
    assert fit.slope > 0
    assert fit.rvalue ** 2 > 0.95


def test_largest_eigenvalue_falls_with_multipath_count(default_system, logger):
    table = probe_eigen(default_system, ChannelConfig(), SimConfig(), trials=20, vs='numtaps',
                        poisson_means=(1, 3, 5, 13, 32), logger=logger)
    means = table.groupby('poisson_mean')['lambda_max'].mean()
    fit = stats.linregress(np.log(means.index.to_numpy(dtype=float)), means.to_numpy())
    assert fit.slope <= 0


def test_receiver_ordering(reference_sweep):
    table = reference_sweep.table.set_index('receiver')
    assert (table['trials'] == TRIALS).all()
    nmse_db = 10 * np.log10(table['nmse'])
    assert nmse_db['freq_lmmse'] - nmse_db['offgrid_bpmf'] >= 5.0
    assert nmse_db['oracle'] <= nmse_db['offgrid_bpmf']
    assert table.loc['oracle', 'ber'] <= table.loc['offgrid_bpmf', 'ber'] <= table.loc['freq_lmmse', 'ber']


def test_converges_within_fifteen_outer_iterations(reference_sweep):
    raw = reference_sweep.raw
    max_iter = SimConfig().max_outer_iters
    filled = carry_forward(raw[raw['receiver'] == 'offgrid_bpmf'], max_iter)
    totals = pooled_errors(filled, 'outer_iter')
    low, high = binomial_ci(totals.loc[max_iter, 'bit_errors'], totals.loc[max_iter, 'bits'])
    assert low <= totals.loc[15, 'bit_errors'] / totals.loc[15, 'bits'] <= high


def test_pilot_reduction(default_system, logger):
    sim = SimConfig(parallel=WORKERS)
    offgrid = sweep('pilots', default_system, ChannelConfig(), sim, trials=TRIALS, seed=1,
                    receivers=['offgrid_bpmf'], pilot_counts=(31, 101), logger=logger)
    ber = offgrid.table.set_index('n_pilots')['ber']
    assert ber[31] <= 2 * ber[101]

    lmmse = sweep('pilots', default_system, ChannelConfig(), sim, trials=TRIALS, seed=1,
                  receivers=['freq_lmmse'], pilot_counts=(41, 51), logger=logger)
    ber = lmmse.table.set_index('n_pilots')['ber']
    assert ber[41] > 0
    assert ber[41] >= 10 * ber[51]


def test_pilots_after_first_iteration_are_negligible(default_system, logger):
    sim = SimConfig(parallel=WORKERS)
    result = sweep('pilot-ablation', default_system, ChannelConfig(), sim, trials=TRIALS, seed=1,
                   ablation_pilots=(51,), logger=logger)
    totals = pooled_errors(final_records(result.raw, ['pilot_usage']), 'pilot_usage')
    low, high = binomial_ci(totals.loc['all', 'bit_errors'], totals.loc['all', 'bits'])
    assert low <= totals.loc['first', 'bit_errors'] / totals.loc['first', 'bits'] <= high
