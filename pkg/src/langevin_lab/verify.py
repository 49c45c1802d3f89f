"""Randomized property suite behind the `verify` command.

Each sub-suite draws seeded random instances, evaluates a deterministic
inequality on every instance, and reports the violation count (expected
zero) together with the worst observed margin.  Negative controls
deliberately under-declare a constant and assert that the corresponding
check trips.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng
from .divergence import (GaussianLaw, GridDensity, chi2_grid, check_change_of_measure,
                         check_weak_triangle, kl_gaussian, kl_grid, renyi_gaussian,
                         renyi_grid, tv_gaussian_1d, tv_grid, w2_gaussian)
from .density_lab import target_density_grid
from .gaussian_oracle import QuadraticTarget, renyi_bias, bias_bound
from .planner import init_design
from .potentials import make_builtin, verify_holder
from .report import check
from .sampler import check_brownian_mgf, check_displacement_mgf

SLACK = 1e-9


def _random_grid_density(gen, lo=-8.0, hi=8.0, n=96, floor=1e-6) -> GridDensity:
    """Random smooth strictly-positive density: Gaussian mixture plus floor."""
    x = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    k = gen.integers(1, 4)
    vals = np.full(n, floor)
    for _ in range(k):
        m = gen.uniform(lo * 0.5, hi * 0.5)
        s = gen.uniform(0.3, 2.0)
        w = gen.uniform(0.2, 1.0)
        vals = vals + w * np.exp(-0.5 * ((x - m) / s) ** 2)
    return GridDensity.from_masses((lo,), (hi,), (n,), vals)


def divergence_grid_suite(n_instances: int, seed: int, grid_n: int = 96):
    """Change of measure, weak triangle, order monotonicity, q=2 bridge,
    and the grid comparison bounds (2 TV^2 and KL below R_2)."""
    gen = rng.generator(seed, rng.PROBE_NOISE, 1)
    counts = {"change_of_measure": 0, "weak_triangle": 0, "monotonicity": 0,
              "chi2_bridge": 0, "tv_comparison": 0, "kl_comparison": 0}
    worst = {k: math.inf for k in counts}

    def note(key, margin):
        if margin < -SLACK:
            counts[key] += 1
        worst[key] = min(worst[key], margin)

    for _ in range(n_instances):
        mu = _random_grid_density(gen, n=grid_n)
        nu = _random_grid_density(gen, n=grid_n)
        pi = _random_grid_density(gen, n=grid_n)

        mask = gen.random(grid_n) < gen.uniform(0.1, 0.6)
        ok, lhs, rhs = check_change_of_measure(mu, nu, mask, slack=SLACK)
        note("change_of_measure", rhs - lhs)

        for q in (2.0, 3.0, 5.0):
            ok, lhs, rhs = check_weak_triangle(q, mu, nu, pi, slack=SLACK)
            note("weak_triangle", rhs - lhs)

        q1 = gen.uniform(1.05, 6.0)
        q2 = q1 + gen.uniform(0.1, 4.0)
        note("monotonicity",
             renyi_grid(q2, mu, pi).value - renyi_grid(q1, mu, pi).value)

        r2 = renyi_grid(2.0, mu, pi).value
        note("chi2_bridge", 1e-12 - abs(r2 - math.log1p(chi2_grid(mu, pi))))
        note("tv_comparison", r2 - 2.0 * tv_grid(mu, pi) ** 2)
        note("kl_comparison", r2 - kl_grid(mu, pi))

    assertions = [check(f"grid {k}: violations", counts[k], "<=", 0)
                  for k in counts]
    metrics = {f"grid_{k}_worst_margin": worst[k] for k in counts}
    return assertions, metrics


def divergence_gaussian_suite(n_instances: int, seed: int):
    """Gaussian comparison bounds: 2 TV^2, KL, and ln(1 + W2^2/(2 C_PI))
    all below R_2, with C_PI = the reference law's largest variance."""
    gen = rng.generator(seed, rng.PROBE_NOISE, 2)
    counts = {"tv": 0, "kl": 0, "w2": 0}
    worst = {k: math.inf for k in counts}
    for _ in range(n_instances):
        v2 = gen.uniform(0.5, 2.0)
        v1 = v2 * gen.uniform(0.2, 1.8)  # keeps 2 v2 - v1 > 0 so R_2 is finite
        m1, m2 = gen.uniform(-1.0, 1.0, size=2)
        g1 = GaussianLaw(mean=[m1], cov=[[v1]])
        g2 = GaussianLaw(mean=[m2], cov=[[v2]])
        r2 = renyi_gaussian(2.0, g1, g2).value
        margins = {
            "tv": r2 - 2.0 * tv_gaussian_1d(g1, g2) ** 2,
            "kl": r2 - kl_gaussian(g1, g2),
            "w2": r2 - math.log1p(w2_gaussian(g1, g2) ** 2 / (2.0 * v2)),
        }
        for k, m in margins.items():
            if m < -SLACK:
                counts[k] += 1
            worst[k] = min(worst[k], m)
    assertions = [check(f"gaussian {k} <= R_2: violations", counts[k], "<=", 0)
                  for k in counts]
    metrics = {f"gaussian_{k}_worst_margin": worst[k] for k in counts}
    return assertions, metrics


def mgf_suite(n_paths: int, seed: int, negative_control: bool = False,
              inner_steps: int = 64):
    """Brownian and displacement exponential-moment checks.

    The negative control injects the Brownian constant 6 -> 1, which
    sits below the measured exponential-moment rate (about 2 per unit
    d h lam at the admissible cap) and therefore must trip the check.
    Injections that stay above that rate, such as 6 -> 5, cannot trip
    it: the lemma's constant 6 carries provable slack.
    """
    assertions = []
    metrics = {}
    h = 0.01
    for d in (1, 2, 5):
        lam = 0.5 / (4.0 * h)
        rep = check_brownian_mgf(d, h, lam, n_paths, inner_steps, seed)
        assertions.append(check(f"brownian mgf d={d}: mean <= bound(1+3se/mean)",
                                rep.mc_mean, "<=",
                                rep.bound * (1.0 + 3.0 * rep.mc_se / rep.mc_mean)))
        metrics[f"brownian_margin_d{d}"] = rep.margin
    for s in (0.5, 0.75):
        lam = 0.5 / (12.0 * 2 * h) ** s
        rep = check_brownian_mgf(2, h, lam, n_paths, inner_steps, seed, s=s)
        assertions.append(check(f"brownian mgf fractional s={s}: mean <= bound",
                                rep.mc_mean, "<=",
                                rep.bound * (1.0 + 3.0 * rep.mc_se / rep.mc_mean)))
    spec = make_builtin("quadratic", 1)
    lam = 0.5 / (96.0 * h)
    rep = check_displacement_mgf(spec, [0.0], h, lam, 1.0, n_paths, inner_steps, seed)
    assertions.append(check("displacement mgf quadratic: mean <= bound",
                            rep.mc_mean, "<=",
                            rep.bound * (1.0 + 3.0 * rep.mc_se / rep.mc_mean)))
    if negative_control:
        broken = check_brownian_mgf(5, h, 1.0 / (4.0 * h), n_paths, inner_steps, seed,
                                    constant=1.0)
        assertions.append(check("negative control: broken Brownian constant flagged",
                                0.0 if not broken.passed else 1.0, "<=", 0.0))
        metrics["negative_control_mean_over_bound"] = broken.mc_mean / broken.bound
    return assertions, metrics


def init_bound_suite(grid_n: int = 4096):
    """Grid-computed R_infinity(mu0 || pi) below the designed bound
    for the 1D built-ins, plus closed-form agreement of the bounds."""
    assertions = []
    metrics = {}
    cases = [
        ("quadratic", {}, "convex", (-12.0, 12.0)),
        ("smoothed_norm", {}, "convex", (-40.0, 40.0)),
        ("power", {"alpha": 1.5}, "general", (-20.0, 20.0)),
    ]
    for fam, kw, variant, window in cases:
        spec = make_builtin(fam, 1, **kw)
        design = init_design(spec, variant)
        pi = target_density_grid(spec, window, grid_n)
        mu0 = GridDensity.from_function(design.law.density, pi.lo, pi.hi, pi.n)
        mask = pi.values > 0.0
        ratio = np.full_like(pi.values, -np.inf)
        mu_vals = mu0.values
        ratio[mask & (mu_vals > 0)] = (np.log(mu_vals[mask & (mu_vals > 0)])
                                       - np.log(pi.values[mask & (mu_vals > 0)]))
        r_inf = float(ratio.max())
        assertions.append(check(f"init {fam} ({variant}): grid R_inf <= bound",
                                r_inf, "<=", design.bound, slack=SLACK))
        metrics[f"init_{fam}_bound"] = design.bound
        metrics[f"init_{fam}_grid_R_inf"] = r_inf
    return assertions, metrics


def holder_suite(seed: int, n_pairs: int = 20000):
    """Declared Hoelder constants hold on sampled pairs; an
    under-declared constant is flagged (negative control)."""
    assertions = []
    for fam, kw in [("quadratic", {}), ("power", {"alpha": 1.5}),
                    ("smoothed_norm", {})]:
        spec = make_builtin(fam, 2, **kw)
        rep = verify_holder(spec, n_pairs, seed)
        assertions.append(check(f"holder {spec.name}: max ratio <= declared L(1+1e-9)",
                                rep.max_ratio, "<=",
                                rep.declared_L * (1.0 + 1e-9)))
    from dataclasses import replace
    from .potentials import SmoothnessRecord
    spec = make_builtin("quadratic", 2)
    under = replace(spec, smoothness=SmoothnessRecord(s=1.0, L=0.5))
    rep = verify_holder(under, n_pairs, seed)
    assertions.append(check("holder negative control: under-declared L flagged",
                            0.0 if rep.violation else 1.0, "<=", 0.0))
    return assertions, {}


def oracle_suite():
    """Quadratic-oracle invariants: bias below the explicit bound on a
    (d, h, q) grid and bias nondecreasing in h for the identity target."""
    assertions = []
    metrics = {}
    worst = math.inf
    for d in (1, 2, 5):
        tgt = QuadraticTarget(A=np.eye(d))
        for q in (2.0, 4.0):
            for h in (1e-3, 5e-4, 2.5e-4):
                b = renyi_bias(tgt, h, q)
                worst = min(worst, bias_bound(tgt, h, q) - b)
    assertions.append(check("renyi bias <= 86 d h q^2 C_LSI L^2 on all cells",
                            0.0 if worst >= 0 else 1.0, "<=", 0.0))
    metrics["bias_bound_worst_margin"] = worst
    tgt = QuadraticTarget(A=np.eye(2))
    hs = np.linspace(1e-4, 0.25, 12)
    biases = [renyi_bias(tgt, float(h), 2.0) for h in hs]
    assertions.append(check("renyi bias nondecreasing in h",
                            max(b1 - b2 for b1, b2 in zip(biases, biases[1:])),
                            "<=", SLACK))
    return assertions, metrics


def full_suite(n_instances: int = 300, n_paths: int = 20000, grid_n: int = 96,
               seed: int = 0, negative_control: bool = True):
    """The whole deterministic + Monte-Carlo property suite."""
    assertions, metrics = [], {}
    for a, m in (divergence_grid_suite(n_instances, seed, grid_n),
                 divergence_gaussian_suite(n_instances, seed),
                 mgf_suite(n_paths, seed, negative_control=negative_control),
                 init_bound_suite(),
                 holder_suite(seed),
                 oracle_suite()):
        assertions.extend(a)
        metrics.update(m)
    return assertions, metrics
