#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest
from scipy.integrate import trapezoid

from src_link.config import ChannelConfig
from src_link.channel_model import (
    MultipathChannel, zero_truncated_poisson, gain_scale, draw_channel,
    freq_response, observe, channel_records,
)


class TestPathCount:
    def test_zero_truncated_mean(self):
        draws = zero_truncated_poisson(5.0, np.random.default_rng(0), size=100000)
        expected = 5.0 / (1.0 - np.exp(-5.0))
        assert expected == pytest.approx(5.034, abs=1e-3)
        assert draws.min() >= 1
        assert draws.mean() == pytest.approx(expected, rel=0.02)

    def test_scalar_draw_positive(self):
        rng = np.random.default_rng(1)
        assert all(zero_truncated_poisson(0.2, rng) >= 1 for _ in range(200))


class TestDrawChannel:
    def test_delays_within_support(self, channel_cfg):
        for seed in range(200):
            channel = draw_channel(channel_cfg, seed)
            assert channel.n_paths >= 1
            assert np.all((channel.delays >= 0) & (channel.delays <= channel_cfg.max_delay))
            assert channel.coeffs.shape == channel.delays.shape

    def test_path_variances_follow_power_delay_profile(self, channel_cfg):
        channel = draw_channel(channel_cfg, 3)
        expected = gain_scale(channel.n_paths, channel_cfg) * np.exp(-channel.delays / channel_cfg.decay_constant)
        np.testing.assert_allclose(channel.path_vars, expected)

    def test_deterministic(self, channel_cfg):
        a, b = draw_channel(channel_cfg, 11), draw_channel(channel_cfg, 11)
        np.testing.assert_array_equal(a.delays, b.delays)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_unit_mean_gain(self, small_system, channel_cfg):
        power = [np.mean(np.abs(draw_channel(channel_cfg, seed).realize(small_system)) ** 2)
                 for seed in range(10000)]
        assert np.mean(power) == pytest.approx(1.0, rel=0.03)

    def test_gain_scale_normalises_profile(self):
        cfg = ChannelConfig()
        taus = np.linspace(0.0, cfg.max_delay, 200001)
        mean_profile = trapezoid(np.exp(-taus / cfg.decay_constant), taus) / cfg.max_delay
        assert gain_scale(4, cfg) * 4 * mean_profile == pytest.approx(1.0, rel=1e-6)


class TestFreqResponse:
    def test_zero_delay_is_flat(self, small_system):
        np.testing.assert_allclose(freq_response([0.0], [0.7 - 0.2j], small_system), 0.7 - 0.2j)

    def test_single_path_has_constant_magnitude(self, small_system):
        h = freq_response([1.3e-6], [0.5j], small_system)
        np.testing.assert_allclose(np.abs(h), 0.5)

    def test_matches_direct_sum(self, small_system, rng):
        delays = rng.uniform(0, 5e-6, 4)
        coeffs = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        expected = np.zeros(small_system.n_subcarriers, dtype=complex)
        for i in range(small_system.n_subcarriers):
            for tau, alpha in zip(delays, coeffs):
                expected[i] += alpha * np.exp(-2j * np.pi * small_system.subcarrier_spacing * (i + 1) * tau)
        np.testing.assert_allclose(freq_response(delays, coeffs, small_system), expected, rtol=1e-10)

    def test_linear_in_coefficients(self, small_system, rng):
        delays = rng.uniform(0, 5e-6, 3)
        a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        np.testing.assert_allclose(
            freq_response(delays, a + 2 * b, small_system),
            freq_response(delays, a, small_system) + 2 * freq_response(delays, b, small_system))


class TestObserve:
    def test_noiseless(self, small_frame, small_system):
        h = freq_response([1e-6, 3e-6], [1.0, 0.5j], small_system)
        y, beta = observe(small_frame, h, np.inf, seed=0)
        assert beta == 0.0
        np.testing.assert_allclose(y, small_frame.symbol_vector * h)

    def test_noise_variance_definition(self, small_frame):
        h = np.ones(small_frame.symbol_vector.size, dtype=complex)
        _, beta = observe(small_frame, h, 0.0, seed=0)
        assert beta == pytest.approx(1.0)

    def test_snr_identity(self, small_frame, small_system, rng):
        h = freq_response(rng.uniform(0, 5e-6, 3), rng.standard_normal(3) + 0j, small_system)
        _, beta = observe(small_frame, h, 13.0, seed=2)
        snr = np.sum(np.abs(h) ** 2) / (small_system.n_subcarriers * beta)
        assert 10 * np.log10(snr) == pytest.approx(13.0)

    def test_empirical_noise_power(self, default_system, logger):
        from src_link.tx_chain import TxChain
        tx = TxChain(default_system, logger=logger)
        rng = np.random.default_rng(5)
        frame = tx.build_frame(tx.random_info_bits(rng), rng)
        h = np.ones(601, dtype=complex)
        y, beta = observe(frame, h, 10.0, seed=6)
        noise_power = np.mean(np.abs(y - frame.symbol_vector * h) ** 2)
        assert noise_power == pytest.approx(beta, rel=0.2)


class TestChannelRecords:
    def test_rows_per_path(self, channel_cfg):
        channels = [draw_channel(channel_cfg, s) for s in range(5)]
        table = channel_records(channels, trials=[10, 11, 12, 13, 14])
        assert list(table.columns) == ['trial', 'l', 'tau', 'alpha_re', 'alpha_im']
        assert len(table) == sum(c.n_paths for c in channels)
        assert set(table['trial']) == {10, 11, 12, 13, 14}

    def test_empty(self):
        assert channel_records([]).empty

    def test_realize_caches_response(self, small_system):
        channel = MultipathChannel(delays=np.array([0.0]), coeffs=np.array([2.0 + 0j]), path_vars=np.array([1.0]))
        h = channel.realize(small_system)
        assert channel.freq_response is h
        np.testing.assert_allclose(h, 2.0)
