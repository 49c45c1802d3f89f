"""Stochastic LMC ensembles and Monte-Carlo checks of probabilistic bounds.

Ensembles evolve x' = x - h gradV(x) + sqrt(2h) xi with noise drawn
from counter-based streams keyed by (seed, step), so runs are
bit-reproducible for a given seed and independent of how particles are
chunked or scheduled.  A diverging chain (non-finite coordinate) raises
immediately, naming the step: weakly smooth targets with oversized
steps can explode and must be diagnosed, not propagated as NaNs.

The module also verifies, by direct simulation, the exponential-moment
bounds used in the discretization analysis:

  * sup-Brownian:      E exp(lam sup_{[0,h]} ||B_t||^2)   <= exp(6 d h lam)
                       E exp(lam sup_{[0,h]} ||B_t||^2s)  <= exp(144 d^s h^s lam)
  * displacement:      E exp(lam sup_{[0,h]} ||z_t-z_0||^2s)
                       <= exp(8 h^2s L^2s (1+||z_0||^(2s^2)) lam
                              + 1152 d^s h^s lam)

and the high-probability iterate-radius threshold

  R_delta = 2m + 490 sqrt(T R2hat ln(8N)) + 230 sqrt(h) m (L + 1/T) sqrt(T/d)
            + 160 sqrt(T ln(1/delta)).

The supremum over a step interval is discretized on an inner grid; the
discretized sup underestimates the true one, so these checks are
conservative for verifying upper bounds, and refining the inner grid
can only tighten them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .divergence import GaussianLaw


class ChainDivergenceError(RuntimeError):
    """A particle coordinate became non-finite at the named step."""


@dataclass(frozen=True)
class Ensemble:
    """Seeded particle set after step_index LMC steps of size h."""

    positions: np.ndarray
    step_index: int
    seed: int
    h: float

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["particle"] + [f"x{i}" for i in range(self.d)])
            for i, row in enumerate(self.positions):
                w.writerow([i] + [repr(float(v)) for v in row])


@dataclass
class NormTrajectory:
    """Per-step norm statistics (k, max ||x||, mean ||x||)."""

    steps: np.ndarray
    max_norm: np.ndarray
    mean_norm: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "max_norm", "mean_norm"])
            for k, mx, mn in zip(self.steps, self.max_norm, self.mean_norm):
                w.writerow([int(k), repr(float(mx)), repr(float(mn))])


@dataclass(frozen=True)
class TailReport:
    """Empirical exceedance of the high-probability radius threshold."""

    delta: float
    threshold: float
    empirical_exceed_rate: float
    n_runs: int


@dataclass(frozen=True)
class MgfReport:
    """Monte-Carlo exponential-moment estimate against its bound."""

    mc_mean: float
    mc_se: float
    bound: float
    passed: bool
    lam: float
    n_paths: int

    @property
    def margin(self) -> float:
        return self.bound / self.mc_mean


def _init_positions(init: GaussianLaw, n_particles: int, seed: int) -> np.ndarray:
    z = rng.normals(seed, rng.INIT_NOISE, 0, (n_particles, init.d))
    chol = np.linalg.cholesky(init.cov)
    return init.mean + z @ chol.T


def lmc_run(spec, init: GaussianLaw, h: float, N: int, n_particles: int, seed: int,
            track_norms: bool = False):
    """Run N LMC steps from a Gaussian initialization.

    Returns (ensemble, norm_trajectory); the trajectory is None unless
    track_norms is set.  Bit-reproducible for fixed (seed, config).
    """
    if h <= 0.0:
        raise ValueError("step size h must be positive")
    if N < 0:
        raise ValueError("N must be >= 0")
    x = _init_positions(init, n_particles, seed)
    root = math.sqrt(2.0 * h)
    steps, max_n, mean_n = [], [], []

    def record(k):
        r = np.linalg.norm(x, axis=1)
        steps.append(k)
        max_n.append(r.max())
        mean_n.append(r.mean())

    if track_norms:
        record(0)
    for k in range(N):
        g = spec.gradV(x)
        xi = rng.normals(seed, rng.STEP_NOISE, k, x.shape)
        with np.errstate(over="ignore", invalid="ignore"):
            x = x - h * g + root * xi
        if not np.all(np.isfinite(x)):
            raise ChainDivergenceError(f"non-finite coordinate at step {k + 1}")
        if track_norms:
            record(k + 1)
    ens = Ensemble(positions=x, step_index=N, seed=seed, h=h)
    traj = None
    if track_norms:
        traj = NormTrajectory(steps=np.asarray(steps), max_norm=np.asarray(max_n),
                              mean_norm=np.asarray(mean_n))
    return ens, traj


def interpolated_position(spec, ensemble: Ensemble, t_offset: float,
                          matched_noise: bool = False) -> np.ndarray:
    """Continuous-time interpolation over the current step interval:

        x_t = x_kh - t gradV(x_kh) + sqrt(2) (B_{kh+t} - B_kh),  t in [0, h].

    With matched_noise the Brownian increment is the scaled step-noise
    draw the chain itself would use, so t_offset = h reproduces the next
    LMC iterate exactly; otherwise a fresh stream supplies the increment.
    """
    if not (0.0 <= t_offset <= ensemble.h):
        raise ValueError(f"t_offset must lie in [0, h] = [0, {ensemble.h}]")
    x = ensemble.positions
    if t_offset == 0.0:
        return x.copy()
    tag = rng.STEP_NOISE if matched_noise else rng.INTERP_NOISE
    xi = rng.normals(ensemble.seed, tag, ensemble.step_index, x.shape)
    return x - t_offset * spec.gradV(x) + math.sqrt(2.0 * t_offset) * xi


@dataclass(frozen=True)
class TailBoundInputs:
    """Quantities entering the iterate-radius threshold R_delta."""

    m: float
    L: float
    h: float
    N: int
    d: int
    R2_hat: float  # R_2(mu_0 || pi_hat) at initialization

    @property
    def T(self) -> float:
        return self.N * self.h


def tail_threshold(inputs: TailBoundInputs, delta: float,
                   leading_coeff: float = 490.0) -> float:
    """High-probability bound on max_k ||z_kh|| for the fine-step diffusion."""
    T = inputs.T
    return (2.0 * inputs.m
            + leading_coeff * math.sqrt(T * inputs.R2_hat * math.log(8.0 * inputs.N))
            + 230.0 * math.sqrt(inputs.h) * inputs.m * (inputs.L + 1.0 / T)
            * math.sqrt(T / inputs.d)
            + 160.0 * math.sqrt(T * math.log(1.0 / delta)))


def check_iterate_tails(max_norms: np.ndarray, delta: float,
                        inputs: TailBoundInputs,
                        leading_coeff: float = 490.0) -> TailReport:
    """Empirical exceedance of R_delta across independent trajectories.

    max_norms holds max_k ||z_kh|| for each run.  The report passes when
    the exceedance rate is at most delta + 3 sqrt(delta(1-delta)/n_runs).
    """
    if not (0.0 < delta < 0.5):
        raise ValueError("delta must lie in (0, 1/2)")
    max_norms = np.asarray(max_norms, dtype=float)
    thr = tail_threshold(inputs, delta, leading_coeff=leading_coeff)
    rate = float(np.mean(max_norms > thr))
    return TailReport(delta=delta, threshold=thr, empirical_exceed_rate=rate,
                      n_runs=int(max_norms.size))


def run_max_norm_trajectories(spec, init: GaussianLaw, h: float, N: int,
                              n_runs: int, seed: int) -> np.ndarray:
    """max_k ||x_kh|| over k = 0..N for n_runs independent single chains."""
    x = _init_positions(init, n_runs, seed)
    running = np.linalg.norm(x, axis=1)
    root = math.sqrt(2.0 * h)
    for k in range(N):
        g = spec.gradV(x)
        xi = rng.normals(seed, rng.STEP_NOISE, k, x.shape)
        with np.errstate(over="ignore", invalid="ignore"):
            x = x - h * g + root * xi
        if not np.all(np.isfinite(x)):
            raise ChainDivergenceError(f"non-finite coordinate at step {k + 1}")
        np.maximum(running, np.linalg.norm(x, axis=1), out=running)
    return running


def _chunked_paths(n_paths, chunk=20000):
    done = 0
    while done < n_paths:
        take = min(chunk, n_paths - done)
        yield done, take
        done += take


def check_brownian_mgf(d: int, h: float, lam: float, n_paths: int,
                       inner_steps: int, seed: int, s: float = 1.0,
                       constant: Optional[float] = None) -> MgfReport:
    """Monte-Carlo check of the sup-Brownian exponential-moment bound.

    s = 1 checks E exp(lam sup ||B||^2) <= exp(6 d h lam) under
    lam <= 1/(4h); s in (0,1) checks the fractional variant
    E exp(lam sup ||B||^2s) <= exp(144 d^s h^s lam) under
    lam < 1/(12 d h)^s.  The pass rule allows three standard errors:
    mean <= bound (1 + 3 se/mean).
    """
    if inner_steps < 64:
        raise ValueError("inner_steps must be >= 64 to resolve the supremum")
    if s == 1.0:
        cap = 1.0 / (4.0 * h)
        bound_const = 6.0 if constant is None else constant
        bound = math.exp(bound_const * d * h * lam)
    elif 0.0 < s < 1.0:
        cap = 1.0 / (12.0 * d * h) ** s
        bound_const = 144.0 if constant is None else constant
        bound = math.exp(bound_const * d**s * h**s * lam)
    else:
        raise ValueError("s must lie in (0, 1]")
    if lam < 0.0 or lam > cap:
        raise ValueError(f"lam = {lam:g} outside the admissible range [0, {cap:g}]")

    dt = h / inner_steps
    total, total_sq, n_done = 0.0, 0.0, 0
    for idx, take in _chunked_paths(n_paths):
        inc = rng.normals(seed, rng.PATH_NOISE, idx, (take, inner_steps, d))
        paths = np.cumsum(inc * math.sqrt(dt), axis=1)
        sup_sq = np.max(np.sum(paths**2, axis=2), axis=1)
        vals = np.exp(lam * sup_sq**s) if s != 1.0 else np.exp(lam * sup_sq)
        total += float(vals.sum())
        total_sq += float((vals**2).sum())
        n_done += take
    mean = total / n_done
    var = max(total_sq / n_done - mean**2, 0.0)
    se = math.sqrt(var / n_done)
    passed = mean <= bound * (1.0 + 3.0 * se / mean)
    return MgfReport(mc_mean=mean, mc_se=se, bound=bound, passed=passed,
                     lam=lam, n_paths=n_paths)


def check_displacement_mgf(spec, z0: np.ndarray, h: float, lam: float, s: float,
                           n_paths: int, inner_steps: int, seed: int,
                           constants=(8.0, 1152.0)) -> MgfReport:
    """Monte-Carlo check of the one-step displacement exponential moment.

    Verifies E exp(lam sup_{[0,h]} ||z_t - z_0||^(2s)) against
    exp(c1 h^2s L^2s (1 + ||z0||^(2 s^2)) lam + c2 d^s h^s lam) with
    (c1, c2) = (8, 1152), under h <= 1/(6L) and lam <= 1/(96 d^s h^s).
    The diffusion over [0, h] is proxied by inner_steps Euler substeps.
    """
    L = spec.smoothness.L
    d = spec.d
    if h > 1.0 / (6.0 * L) * (1.0 + 1e-12):
        raise ValueError(f"requires h <= 1/(6L) = {1.0 / (6.0 * L):g}")
    cap = 1.0 / (96.0 * d**s * h**s)
    if lam < 0.0 or lam > cap * (1.0 + 1e-12):
        raise ValueError(f"lam = {lam:g} outside the admissible range [0, {cap:g}]")
    if inner_steps < 64:
        raise ValueError("inner_steps must be >= 64 to resolve the supremum")
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    r0 = float(np.linalg.norm(z0))
    c1, c2 = constants
    bound = math.exp(c1 * h ** (2 * s) * L ** (2 * s) * (1.0 + r0 ** (2 * s * s)) * lam
                     + c2 * d**s * h**s * lam)

    dt = h / inner_steps
    root = math.sqrt(2.0 * dt)
    total, total_sq, n_done = 0.0, 0.0, 0
    for idx, take in _chunked_paths(n_paths, chunk=5000):
        z = np.tile(z0, (take, 1))
        sup_disp_sq = np.zeros(take)
        for j in range(inner_steps):
            xi = rng.normals(seed, rng.DIFFUSION_PATH, idx * inner_steps + j, z.shape)
            z = z - dt * spec.gradV(z) + root * xi
            np.maximum(sup_disp_sq, np.sum((z - z0) ** 2, axis=1), out=sup_disp_sq)
        vals = np.exp(lam * sup_disp_sq**s)
        total += float(vals.sum())
        total_sq += float((vals**2).sum())
        n_done += take
    mean = total / n_done
    var = max(total_sq / n_done - mean**2, 0.0)
    se = math.sqrt(var / n_done)
    passed = mean <= bound * (1.0 + 3.0 * se / mean)
    return MgfReport(mc_mean=mean, mc_se=se, bound=bound, passed=passed,
                     lam=lam, n_paths=n_paths)
