#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
时延域字典：导向矢量、加权内积、残差周期图以及时延目标函数的解析导数。

子载波编号 n 取 1..N，[ψ(τ)]_n = exp(-j2πΔ_f n τ)。
"""

from dataclasses import dataclass

import numpy as np


def _subcarrier_numbers(n):
    return np.arange(1, n + 1)


def steering(tau, n, spacing):
    """导向矢量 ψ(τ)

    Args:
        tau: 时延（秒）
        n: 子载波数 N
        spacing: 子载波间隔 Δ_f

    Returns:
        np.ndarray: 长度为N的单位模复向量
    """
    return np.exp(-2j * np.pi * spacing * _subcarrier_numbers(n) * tau)


def steering_matrix(delays, n, spacing):
    """Ψ(τ)，第 l 列为 ψ(τ_l)"""
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    return np.exp(-2j * np.pi * spacing * np.outer(_subcarrier_numbers(n), delays))


@dataclass
class SteeringSet:
    """一组激活时延对应的字典"""

    n: int
    spacing: float
    active_delays: np.ndarray

    @property
    def matrix(self):
        return steering_matrix(self.active_delays, self.n, self.spacing)

    def synthesize(self, coeffs):
        """Ψ(τ)·α"""
        if len(self.active_delays) == 0:
            return np.zeros(self.n, dtype=complex)
        return self.matrix @ np.asarray(coeffs, dtype=complex)

    def correlate(self, r):
        """Ψ(τ)ᴴ·r"""
        return self.matrix.conj().T @ r


def weighted_gram(tau1, tau2, weights, spacing):
    """ψᴴ(τ₁)·diag(d)·ψ(τ₂)

    Raises:
        ValueError: 权重为空
    """
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0:
        raise ValueError("权重向量不能为空")
    n = _subcarrier_numbers(weights.size)
    return complex(np.sum(weights * np.exp(2j * np.pi * spacing * n * (tau1 - tau2))))


def delay_grid(n, spacing, t_cp, oversampling):
    """候选时延网格：起点 -(1/2)/(NΔ_f)，步长 (NΔ_f)⁻¹/oversampling，终点不超过 T_CP"""
    step = 1.0 / (n * spacing * oversampling)
    start = -0.5 / (n * spacing)
    count = int(np.floor((t_cp - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def periodogram(r, delays, spacing):
    """直接求和计算 |ψᴴ(τ)r|²"""
    r = np.asarray(r, dtype=complex)
    return np.abs(steering_matrix(delays, r.size, spacing).conj().T @ r) ** 2


def periodogram_grid(r, grid, spacing):
    """在等间隔网格上计算残差周期图并返回最大值所在时延

    网格步长 δ 满足 1/(Δ_f δ) 为不小于N的整数 P 时，先用 exp(j2πΔ_f n τ₀) 旋转残差，
    再做长度为 P 的补零IFFT；周期图对 τ 以 1/Δ_f 为周期，超出 P 的网格点按模 P 取值。
    其余情况退化为直接求和。

    Args:
        r: 残差向量
        grid: 升序等间隔时延网格
        spacing: 子载波间隔 Δ_f

    Returns:
        tuple: (最大值对应的时延, 网格上的周期图值)

    Raises:
        ValueError: 网格为空
    """
    grid = np.asarray(grid, dtype=float)
    r = np.asarray(r, dtype=complex)
    if grid.size == 0:
        raise ValueError("时延网格不能为空")
    if grid.size == 1:
        values = periodogram(r, grid, spacing)
        return float(grid[0]), values

    step = grid[1] - grid[0]
    length = 1.0 / (spacing * step)
    fft_length = int(round(length))
    if abs(length - fft_length) > 1e-6 * length or fft_length < r.size:
        values = periodogram(r, grid, spacing)
    else:
        n = _subcarrier_numbers(r.size)
        rotated = r * np.exp(2j * np.pi * spacing * n * grid[0])
        spectrum = np.abs(fft_length * np.fft.ifft(rotated, fft_length)) ** 2
        values = np.take(spectrum, np.arange(grid.size), mode='wrap')
    best = int(np.argmax(values))
    return float(grid[best]), values


def objective_derivs(tau, r, spacing):
    """f(τ) = |ψᴴ(τ)r|² 及其一阶、二阶导数

    a(τ) = Σ r_n e^{jωnτ}，ω = 2πΔ_f，
    g = |a|²，g′ = 2Re{a′a*}，g″ = 2Re{a″a*} + 2|a′|²。

    Returns:
        tuple: (g, g′, g″)
    """
    r = np.asarray(r, dtype=complex)
    omega_n = 2 * np.pi * spacing * _subcarrier_numbers(r.size)
    weighted = r * np.exp(1j * omega_n * tau)
    a = np.sum(weighted)
    a1 = np.sum(1j * omega_n * weighted)
    a2 = -np.sum(omega_n ** 2 * weighted)
    g = float(np.abs(a) ** 2)
    g1 = float(2.0 * np.real(a1 * np.conj(a)))
    g2 = float(2.0 * np.real(a2 * np.conj(a)) + 2.0 * np.abs(a1) ** 2)
    return g, g1, g2


__all__ = [
    'steering', 'steering_matrix', 'SteeringSet', 'weighted_gram',
    'delay_grid', 'periodogram', 'periodogram_grid', 'objective_derivs',
]
