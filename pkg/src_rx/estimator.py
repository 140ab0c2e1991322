#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
稀疏离网信道估计器（均值场部分）。

信道频率响应建模为 h = Ψ(τ)α，最多 L 个分量，每个分量带激活位 z_l（Bernoulli-Gaussian先验）。
估计器维护系数信念 (μ_l, σ²_l)、点估计 (τ_l, ρ, η, β) 和残差
r = ⟨x⟩*⊙y - ⟨|x|²⟩⊙(Ψ_𝒜 μ_𝒜)，所有更新都不增加自由能 rbfe_mf。
"""

import copy
from dataclasses import dataclass

import numpy as np

from utils.logger import Logger
from src_rx.dictionary import (
    steering, steering_matrix, SteeringSet, delay_grid, periodogram_grid, objective_derivs,
)
from src_rx.linear_solver import (
    SolverNotConverged, WoodburySystem, mu_via_woodbury, direct_coeff_solve, cg_iteration_cap,
)

# 时延回溯线搜索的最大折半次数
MAX_BACKTRACKS = 30


@dataclass
class SymbolMoments:
    """符号一阶、二阶矩

    Attributes:
        mean: ⟨x_i⟩
        second_moment: ⟨|x_i|²⟩
        observed: 参与估计的子载波；未观测的子载波矩为0，且不计入噪声方差估计
    """

    mean: np.ndarray
    second_moment: np.ndarray
    observed: np.ndarray

    @classmethod
    def known(cls, x):
        """符号已知（导频或genie）"""
        x = np.asarray(x, dtype=complex)
        return cls(x.copy(), np.abs(x) ** 2, np.ones(x.size, dtype=bool))

    @classmethod
    def pilots_only(cls, n, pilot_indices, pilot_values):
        """仅使用导频子载波"""
        mean = np.zeros(n, dtype=complex)
        second = np.zeros(n)
        observed = np.zeros(n, dtype=bool)
        mean[pilot_indices] = pilot_values
        second[pilot_indices] = np.abs(pilot_values) ** 2
        observed[pilot_indices] = True
        return cls(mean, second, observed)

    @classmethod
    def from_beliefs(cls, layout, data_mean, data_second, use_pilots=True):
        """由数据符号信念构造；use_pilots 为False时导频子载波不参与估计"""
        n = layout.n_subcarriers
        mean = np.zeros(n, dtype=complex)
        second = np.zeros(n)
        observed = np.zeros(n, dtype=bool)
        mean[layout.data_indices] = data_mean
        second[layout.data_indices] = data_second
        observed[layout.data_indices] = True
        if use_pilots:
            mean[layout.pilot_indices] = layout.pilot_values
            second[layout.pilot_indices] = np.abs(layout.pilot_values) ** 2
            observed[layout.pilot_indices] = True
        return cls(mean, second, observed)

    @property
    def n_observed(self):
        return int(np.count_nonzero(self.observed))

    def weighted_observation(self, y):
        """b = ⟨x⟩*⊙y"""
        return np.conj(self.mean) * y


@dataclass
class EstimatorState:
    """估计器状态"""

    active: np.ndarray
    delays: np.ndarray
    coeff_mean: np.ndarray
    coeff_var: np.ndarray
    act_prob: float
    comp_var: float
    noise_var: float
    residual: np.ndarray

    @property
    def active_indices(self):
        return np.flatnonzero(self.active)

    @property
    def n_active(self):
        return int(np.count_nonzero(self.active))

    def copy(self):
        return copy.deepcopy(self)


def activation_test(mean, var, comp_var, act_prob):
    """激活判据：|μ|²/σ² > ln(η/σ²) + ln((1-ρ)/ρ) 时保留分量"""
    threshold = np.log(comp_var / var) + np.log((1.0 - act_prob) / act_prob)
    return bool(np.abs(mean) ** 2 / var > threshold)


class SparseChannelEstimator:
    """离网稀疏信道估计器"""

    def __init__(self, system, sim, logger=None):
        """初始化估计器

        Args:
            system: SystemConfig
            sim: SimConfig（网格过采样、分量上限、内循环参数、共轭梯度容差）
            logger: 日志记录器，如果为None则创建新的记录器
        """
        self.logger = logger if logger else Logger()
        self.n = system.n_subcarriers
        self.spacing = system.subcarrier_spacing
        self.t_cp = system.cyclic_prefix
        self.n_components = sim.components(self.n)
        self.max_inner_iters = sim.max_inner_iters
        self.inner_tol = sim.inner_tol
        self.cg_tol = sim.cg_tol
        self.grid = delay_grid(self.n, self.spacing, self.t_cp, sim.grid_oversampling)
        self.direct_threshold = np.sqrt(self.n)

    def init_state(self, y, moments):
        """初始状态：无激活分量，β = ||y||²/N，η = 1，ρ = 0.5"""
        y = np.asarray(y, dtype=complex)
        size = self.n_components
        return EstimatorState(
            active=np.zeros(size, dtype=bool),
            delays=np.zeros(size),
            coeff_mean=np.zeros(size, dtype=complex),
            coeff_var=np.zeros(size),
            act_prob=0.5,
            comp_var=1.0,
            noise_var=float(np.vdot(y, y).real / self.n),
            residual=moments.weighted_observation(y),
        )

    def _psi(self, tau):
        return steering(tau, self.n, self.spacing)

    def recompute_residual(self, state, moments, y):
        """从头计算残差 ⟨x⟩*⊙y - ⟨|x|²⟩⊙(Ψ_𝒜 μ_𝒜)"""
        h_mean, _ = self.channel_posterior(state)
        return moments.weighted_observation(y) - moments.second_moment * h_mean

    def _excluded_residual(self, state, moments, l):
        """去除分量 l 贡献后的残差"""
        return state.residual + moments.second_moment * self._psi(state.delays[l]) * state.coeff_mean[l]

    def _assign(self, state, moments, l, excluded):
        """由去除分量 l 后的残差计算其系数信念，并把新贡献写回残差"""
        psi = self._psi(state.delays[l])
        s = np.sum(moments.second_moment) / state.noise_var
        q = np.vdot(psi, excluded) / state.noise_var
        var = 1.0 / (s + 1.0 / state.comp_var)
        mean = var * q
        state.coeff_var[l] = var
        state.coeff_mean[l] = mean
        state.residual = excluded - moments.second_moment * psi * mean
        return mean, var

    def coeff_update(self, state, moments, l):
        """更新分量 l 的系数信念

        s_l = β⁻¹Σ⟨|x_n|²⟩，q_l = β⁻¹ψᴴ(τ_l)r_l，σ²_l = (s_l + η⁻¹)⁻¹，μ_l = σ²_l·q_l

        Returns:
            tuple: (μ_l, σ²_l)
        """
        return self._assign(state, moments, l, self._excluded_residual(state, moments, l))

    def delay_refine(self, state, moments, l):
        """Newton步 + 回溯线搜索更新时延，随后更新系数信念

        目标 |ψᴴ(τ)r_l|² 不减；结果限制在 [0, T_CP] 内。

        Returns:
            float: 新的时延
        """
        excluded = self._excluded_residual(state, moments, l)
        tau = float(np.clip(state.delays[l], 0.0, self.t_cp))
        g, g1, g2 = objective_derivs(tau, excluded, self.spacing)
        if g1 != 0.0 and g2 != 0.0 and np.isfinite(g1) and np.isfinite(g2):
            step = g1 / abs(g2)
            for _ in range(MAX_BACKTRACKS):
                candidate = float(np.clip(tau + step, 0.0, self.t_cp))
                if objective_derivs(candidate, excluded, self.spacing)[0] >= g:
                    tau = candidate
                    break
                step /= 2.0
        state.delays[l] = tau
        self._assign(state, moments, l, excluded)
        return tau

    def deactivate(self, state, moments, l):
        """关闭分量 l 并把其贡献加回残差"""
        state.residual = self._excluded_residual(state, moments, l)
        state.active[l] = False
        state.coeff_mean[l] = 0.0
        state.coeff_var[l] = 0.0

    def joint_coeff_solve(self, state, moments, y):
        """联合求解所有激活分量的系数均值

        激活数不超过 √N 时直接求解；否则当所有权重为正时走Woodbury+共轭梯度，
        不收敛则退回直接求解。

        Returns:
            np.ndarray: μ_𝒜
        """
        indices = state.active_indices
        if indices.size == 0:
            return np.zeros(0, dtype=complex)
        weights = moments.second_moment
        rhs = moments.weighted_observation(y)
        mean = None
        if indices.size > self.direct_threshold and np.all(weights > 0):
            system = WoodburySystem(
                dict_delays=state.delays[indices], weights=weights, noise_var=state.noise_var,
                comp_var=state.comp_var, rhs=rhs, spacing=self.spacing)
            try:
                mean, _ = mu_via_woodbury(system, tol=self.cg_tol, max_iters=cg_iteration_cap(self.n))
            except SolverNotConverged as e:
                self.logger.warning(f"{e}，改用直接求解")
        psi = steering_matrix(state.delays[indices], self.n, self.spacing)
        if mean is None:
            mean = direct_coeff_solve(psi, weights, rhs, state.noise_var, state.comp_var)

        s = np.sum(weights) / state.noise_var
        state.coeff_mean[indices] = mean
        state.coeff_var[indices] = 1.0 / (s + 1.0 / state.comp_var)
        state.residual = rhs - weights * (psi @ mean)
        return mean

    def activate_component(self, state, moments, y):
        """尝试激活一个新分量

        取编号最小的未激活分量，时延取自整个残差在网格上的周期图峰值；联合求解后做一次
        时延细化和系数更新，不满足激活判据则恢复到激活前的状态。

        Returns:
            bool: 是否保留新分量
        """
        inactive = np.flatnonzero(~state.active)
        if inactive.size == 0:
            return False
        l = int(inactive[0])
        saved_mean = state.coeff_mean.copy()
        saved_var = state.coeff_var.copy()
        saved_residual = state.residual.copy()
        saved_delay = state.delays[l]

        tau, _ = periodogram_grid(state.residual, self.grid, self.spacing)
        state.active[l] = True
        state.delays[l] = tau
        state.coeff_mean[l] = 0.0
        self.joint_coeff_solve(state, moments, y)
        self.delay_refine(state, moments, l)

        if activation_test(state.coeff_mean[l], state.coeff_var[l], state.comp_var, state.act_prob):
            return True
        state.active[l] = False
        state.delays[l] = saved_delay
        state.coeff_mean = saved_mean
        state.coeff_var = saved_var
        state.residual = saved_residual
        return False

    def refine_components(self, state, moments):
        """按编号升序细化所有激活分量，不满足判据的分量被关闭

        Returns:
            int: 关闭的分量数
        """
        dropped = 0
        for l in state.active_indices:
            self.delay_refine(state, moments, l)
            if not activation_test(state.coeff_mean[l], state.coeff_var[l], state.comp_var, state.act_prob):
                self.deactivate(state, moments, l)
                dropped += 1
        return dropped

    def expected_residual_energy(self, state, moments, y):
        """u = Σ_obs [|y|² - 2Re{y*⟨x⟩⟨h⟩} + ⟨|x|²⟩(|⟨h⟩|² + Σσ²)]"""
        h_mean, h_second = self.channel_posterior(state)
        obs = moments.observed
        terms = (np.abs(y[obs]) ** 2
                 - 2.0 * np.real(np.conj(y[obs]) * moments.mean[obs] * h_mean[obs])
                 + moments.second_moment[obs] * h_second[obs])
        return float(np.sum(terms))

    def update_params(self, state, moments, y, fix_act_prob=False):
        """ρ, η, β 的最大似然更新

        ρ = k/L（限制在 [1/L, 1-1/L]），η = Σ(|μ|²+σ²)/k（k = 0 时不变），
        β = u/N_obs（下限为观测功率的 1e-12 倍）。

        Returns:
            tuple: (ρ, η, β)
        """
        k = state.n_active
        size = state.active.size
        if not fix_act_prob:
            lower = 1.0 / size
            state.act_prob = float(np.clip(k / size, lower, 1.0 - lower)) if size > 1 else 0.5
        if k > 0:
            idx = state.active_indices
            state.comp_var = float(np.sum(np.abs(state.coeff_mean[idx]) ** 2 + state.coeff_var[idx]) / k)
        n_obs = max(moments.n_observed, 1)
        power = float(np.mean(np.abs(y[moments.observed]) ** 2)) if moments.n_observed else 0.0
        floor = 1e-12 * max(power, np.finfo(float).tiny)
        state.noise_var = max(self.expected_residual_energy(state, moments, y) / n_obs, floor)
        return state.act_prob, state.comp_var, state.noise_var

    def channel_posterior(self, state):
        """⟨h⟩ = Ψμ，⟨|h|²⟩ = |⟨h⟩|² + Σσ²"""
        indices = state.active_indices
        h_mean = SteeringSet(self.n, self.spacing, state.delays[indices]).synthesize(state.coeff_mean[indices])
        if indices.size == 0:
            return h_mean, np.zeros(self.n)
        h_second = np.abs(h_mean) ** 2 + np.sum(state.coeff_var[indices])
        return h_mean, h_second

    def rbfe_mf(self, state, moments, y):
        """均值场部分的自由能（译码子图的项固定不计）"""
        rho = state.act_prob
        eta = state.comp_var
        beta = state.noise_var
        idx = state.active_indices
        mean = state.coeff_mean[idx]
        var = state.coeff_var[idx]
        n_inactive = state.active.size - idx.size
        value = np.sum(-np.log(np.pi * np.e * var) + np.log(np.pi * eta) + (np.abs(mean) ** 2 + var) / eta - np.log(rho))
        value += n_inactive * -np.log(1.0 - rho)
        value += moments.n_observed * np.log(np.pi * beta)
        value += self.expected_residual_energy(state, moments, y) / beta
        value += state.active.size * np.log(self.t_cp)
        return float(value)

    def inner_loop(self, state, moments, y, fix_act_prob=False, outer_iter=0):
        """内循环：联合求解、尝试激活、细化与关闭、联合求解、参数更新

        当 |1/β_t - 1/β_{t-1}| < tol/β_{t-1} 或达到迭代上限时停止。

        Args:
            state: 上一次外循环留下的状态（热启动）
            moments: 本次外循环的符号矩
            y: 接收信号
            fix_act_prob: 首次外循环中 ρ 固定
            outer_iter: 外循环编号，仅用于轨迹记录

        Returns:
            tuple: (state, 每次内迭代的轨迹行列表)
        """
        y = np.asarray(y, dtype=complex)
        state.residual = self.recompute_residual(state, moments, y)
        trace = []
        previous = state.noise_var
        for inner in range(1, self.max_inner_iters + 1):
            self.joint_coeff_solve(state, moments, y)
            self.activate_component(state, moments, y)
            self.refine_components(state, moments)
            self.joint_coeff_solve(state, moments, y)
            self.update_params(state, moments, y, fix_act_prob=fix_act_prob)
            trace.append({
                'outer_iter': outer_iter,
                'inner_iter': inner,
                'l_hat': state.n_active,
                'beta_hat': state.noise_var,
                'eta_hat': state.comp_var,
                'rho_hat': state.act_prob,
                'rbfe_mf': self.rbfe_mf(state, moments, y),
            })
            if abs(1.0 / state.noise_var - 1.0 / previous) < self.inner_tol / previous:
                break
            previous = state.noise_var
        self.logger.debug(
            f"内循环结束: 外迭代{outer_iter}, 内迭代{len(trace)}次, L̂={state.n_active}, β̂={state.noise_var:.4e}")
        return state, trace

    def estimate(self, y, moments, fix_act_prob=False):
        """从初始状态运行一次内循环"""
        state = self.init_state(y, moments)
        return self.inner_loop(state, moments, y, fix_act_prob=fix_act_prob)


__all__ = ['SymbolMoments', 'EstimatorState', 'activation_test', 'SparseChannelEstimator', 'MAX_BACKTRACKS']
