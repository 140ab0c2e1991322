#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
激活分量系数的联合求解：直接Cholesky求解，以及Woodbury变换后的共轭梯度快速路径。

联合方程为 (β⁻¹ΨᴴDΨ + η⁻¹I)μ = β⁻¹Ψᴴb，其中 D = diag(⟨|x_n|²⟩)，b = ⟨x⟩*⊙y。
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import cho_factor, cho_solve

from src_rx.dictionary import steering_matrix


class SolverNotConverged(RuntimeError):
    """共轭梯度在迭代上限内未达到容差"""

    def __init__(self, iterations, residual_norm):
        super().__init__(f"共轭梯度未收敛: 迭代{iterations}次后相对残差为{residual_norm:.3e}")
        self.iterations = iterations
        self.residual_norm = residual_norm


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool


def cg_iteration_cap(n):
    """共轭梯度迭代上限 4⌈√N⌉"""
    return 4 * int(np.ceil(np.sqrt(n)))


def cg_solve(apply_c, a, tol=1e-9, max_iters=None, raise_on_failure=True):
    """共轭梯度法求解 Cz = a（C为Hermitian正定）

    Args:
        apply_c: 计算 C·v 的函数
        a: 右端向量
        tol: 相对残差容差 ||Cz-a|| ≤ tol·||a||
        max_iters: 迭代上限，缺省为向量长度
        raise_on_failure: 未收敛时是否抛出 SolverNotConverged

    Returns:
        CGResult: 解、迭代次数、相对残差

    Raises:
        SolverNotConverged: 超出迭代上限且 raise_on_failure 为True
    """
    a = np.asarray(a, dtype=complex)
    max_iters = a.size if max_iters is None else int(max_iters)
    norm_a = np.linalg.norm(a)
    z = np.zeros_like(a)
    if norm_a == 0:
        return CGResult(z, 0, 0.0, True)

    residual = a.copy()
    direction = residual.copy()
    rs_old = np.vdot(residual, residual).real
    relative = 1.0
    for iteration in range(1, max_iters + 1):
        c_dir = apply_c(direction)
        step = rs_old / np.vdot(direction, c_dir).real
        z = z + step * direction
        residual = residual - step * c_dir
        rs_new = np.vdot(residual, residual).real
        relative = np.sqrt(rs_new) / norm_a
        if relative <= tol:
            return CGResult(z, iteration, float(relative), True)
        direction = residual + (rs_new / rs_old) * direction
        rs_old = rs_new

    if raise_on_failure:
        raise SolverNotConverged(max_iters, float(relative))
    return CGResult(z, max_iters, float(relative), False)


@dataclass
class WoodburySystem:
    """Woodbury形式 C = D⁻¹ + (η/β)ΨΨᴴ

    Attributes:
        dict_delays: 激活分量时延
        weights: 各子载波 ⟨|x_n|²⟩，须全为正
        noise_var: β
        comp_var: η
        rhs: b = ⟨x⟩*⊙y
        spacing: 子载波间隔
    """

    dict_delays: np.ndarray
    weights: np.ndarray
    noise_var: float
    comp_var: float
    rhs: np.ndarray
    spacing: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise ValueError("Woodbury形式要求所有子载波权重严格为正")
        self.psi = steering_matrix(self.dict_delays, self.weights.size, self.spacing)

    @property
    def ratio(self):
        return self.comp_var / self.noise_var

    def apply_c(self, v):
        return v / self.weights + self.ratio * (self.psi @ (self.psi.conj().T @ v))


def mu_via_woodbury(system, tol=1e-9, max_iters=None):
    """μ = (η/β)(v - (η/β)ΨᴴC⁻¹Ψv)，v = Ψᴴb

    Args:
        system: WoodburySystem
        tol: 共轭梯度容差
        max_iters: 共轭梯度迭代上限，缺省为 4⌈√N⌉

    Returns:
        tuple: (μ, CGResult)

    Raises:
        SolverNotConverged: 共轭梯度未收敛
    """
    if len(system.dict_delays) == 0:
        raise ValueError("激活集合为空")
    max_iters = cg_iteration_cap(system.weights.size) if max_iters is None else max_iters
    v = system.psi.conj().T @ system.rhs
    result = cg_solve(system.apply_c, system.psi @ v, tol=tol, max_iters=max_iters)
    kappa = system.ratio
    mu = kappa * (v - kappa * (system.psi.conj().T @ result.x))
    return mu, result


def direct_coeff_solve(psi, weights, rhs, noise_var, comp_var):
    """直接Cholesky求解 (β⁻¹ΨᴴDΨ + η⁻¹I)μ = β⁻¹Ψᴴb"""
    q_matrix = (psi.conj().T * weights) @ psi / noise_var + np.eye(psi.shape[1]) / comp_var
    p = psi.conj().T @ rhs / noise_var
    return cho_solve(cho_factor(q_matrix, lower=True), p)


def largest_eigenvalue(delays, noise_var, comp_var, n, spacing, steps=100, seed=0):
    """幂迭代估计 T = (η/β)ΨΨᴴ 的最大特征值

    Returns:
        float: 最后一次迭代的Rayleigh商
    """
    psi = steering_matrix(delays, n, spacing)
    ratio = comp_var / noise_var
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(steps):
        w = ratio * (psi @ (psi.conj().T @ v))
        estimate = np.vdot(v, w).real
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
    return float(estimate)


def eigen_probe(snapshots, n, spacing, steps=100, seed=0):
    """对一组估计器快照计算 λ_max(T)

    Args:
        snapshots: 可迭代的 (trial, delays, β̂, η̂) 元组
        n: 子载波数
        spacing: 子载波间隔
        steps: 幂迭代步数
        seed: 幂迭代初值种子

    Returns:
        pd.DataFrame: 列 N, trial, l_hat, lambda_max
    """
    rows = []
    for trial, delays, noise_var, comp_var in snapshots:
        delays = np.asarray(delays, dtype=float)
        value = largest_eigenvalue(delays, noise_var, comp_var, n, spacing, steps, seed) if delays.size else 0.0
        rows.append({'N': n, 'trial': int(trial), 'l_hat': int(delays.size), 'lambda_max': value})
    return pd.DataFrame(rows, columns=['N', 'trial', 'l_hat', 'lambda_max'])


__all__ = [
    'SolverNotConverged', 'CGResult', 'cg_iteration_cap', 'cg_solve', 'WoodburySystem',
    'mu_via_woodbury', 'direct_coeff_solve', 'largest_eigenvalue', 'eigen_probe',
]
