"""Exact law of LMC on quadratic potentials V(x) = 1/2 x' A x.

With step size h the chain x' = (I - hA) x + sqrt(2h) xi is linear
Gaussian, so its law is available in closed form: means contract through
M = I - hA and covariances follow the affine recursion

    S_{k+1} = M S_k M' + 2h I ,

whose fixed point is the biased stationary covariance.  The recursion is
composed by repeated squaring, so laws at very large step counts cost
O(log k) matrix products while remaining exactly the recursion's value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergence import GaussianLaw, renyi_gaussian


class NonContractiveStepError(ValueError):
    """Step size h >= 2 / lambda_max(A): the recursion does not contract."""


@dataclass(frozen=True)
class QuadraticTarget:
    """Symmetric positive-definite precision matrix A; pi = N(0, A^{-1})."""

    A: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        object.__setattr__(self, "A", A)
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("A must be symmetric")
        if np.linalg.eigvalsh(A)[0] <= 0.0:
            raise ValueError("A must be positive-definite")

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def L(self) -> float:
        """Gradient Lipschitz constant, lambda_max(A)."""
        return float(np.linalg.eigvalsh(self.A)[-1])

    @property
    def lam_min(self) -> float:
        return float(np.linalg.eigvalsh(self.A)[0])

    @property
    def C_LSI(self) -> float:
        """Log-Sobolev constant of N(0, A^{-1}): 1 / lambda_min(A)."""
        return 1.0 / self.lam_min

    def pi_law(self) -> GaussianLaw:
        return GaussianLaw(mean=np.zeros(self.d), cov=np.linalg.inv(self.A))

    def step_matrix(self, h: float) -> np.ndarray:
        return np.eye(self.d) - h * self.A

    def require_contractive(self, h: float) -> None:
        if not (0.0 < h < 2.0 / self.L):
            raise NonContractiveStepError(
                f"need 0 < h < 2/lambda_max = {2.0 / self.L:g}, got {h:g}")


def _compose(map1, map2):
    """Compose affine covariance maps S -> P S P' + Q (map1 first)."""
    P1, Q1 = map1
    P2, Q2 = map2
    return P2 @ P1, P2 @ Q1 @ P2.T + Q2


def lmc_law(target: QuadraticTarget, init: GaussianLaw, h: float, k: int) -> GaussianLaw:
    """Exact Gaussian law of the k-th LMC iterate started from init."""
    target.require_contractive(h)
    if k < 0:
        raise ValueError("k must be >= 0")
    if init.d != target.d:
        raise ValueError("dimension mismatch")
    if k == 0:
        return GaussianLaw(mean=init.mean.copy(), cov=init.cov.copy())
    M = target.step_matrix(h)
    step = (M, 2.0 * h * np.eye(target.d))
    total = None
    sq = step
    kk = k
    while kk:
        if kk & 1:
            total = sq if total is None else _compose(total, sq)
        kk >>= 1
        if kk:
            sq = _compose(sq, sq)
    P, Q = total
    cov = P @ init.cov @ P.T + Q
    cov = 0.5 * (cov + cov.T)
    return GaussianLaw(mean=P @ init.mean, cov=cov)


def stationary_law(target: QuadraticTarget, h: float,
                   residual_tol: float = 1e-12) -> GaussianLaw:
    """Biased stationary law: fixed point of S = M S M' + 2h I.

    Solved by iterating the recursion (with doubling, so convergence is
    geometric in O(log) passes) and asserting the fixed-point residual.
    """
    target.require_contractive(h)
    P = target.step_matrix(h)
    Q = 2.0 * h * np.eye(target.d)
    for _ in range(200):
        Q_new = P @ Q @ P.T + Q
        P = P @ P
        if np.max(np.abs(Q_new - Q)) <= 1e-16 * max(1.0, float(np.max(np.abs(Q_new)))):
            Q = Q_new
            break
        Q = Q_new
    S = 0.5 * (Q + Q.T)
    M = target.step_matrix(h)
    residual = float(np.max(np.abs(S - (M @ S @ M.T + 2.0 * h * np.eye(target.d)))))
    if residual > residual_tol * max(1.0, float(np.max(np.abs(S)))):
        raise RuntimeError(f"stationary solve residual {residual:g} above tolerance")
    return GaussianLaw(mean=np.zeros(target.d), cov=S)


def renyi_bias(target: QuadraticTarget, h: float, q: float) -> float:
    """Exact R_q between the biased stationary law and pi = N(0, A^{-1})."""
    mu_inf = stationary_law(target, h)
    return renyi_gaussian(q, mu_inf, target.pi_law()).value


def bias_bound(target: QuadraticTarget, h: float, q: float) -> float:
    """Explicit one-step-recursion bias bound 86 d h q^2 C_LSI L^2."""
    return 86.0 * target.d * h * q**2 * target.C_LSI * target.L**2
