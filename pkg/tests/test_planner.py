import math

import numpy as np
import pytest

from langevin_lab.divergence import GaussianLaw, GridDensity
from langevin_lab.density_lab import target_density_grid
from langevin_lab.planner import (InitDesign, PlanError, PlanRequest, init_design,
                                  lo_decay_closed_form, lo_horizon, lo_phase_boundary,
                                  plan_log_concave, plan_lo, plan_lsi, plan_mlsi,
                                  predict_continuous_decay, super_poincare_beta)
from langevin_lab.potentials import (FIConstants, SmoothnessRecord, estimate_mean_norm,
                                     make_builtin, make_modified)


def lsi_req(eps=0.1, q=2.0, d=10, C=1.0, L=1.0, R0=5.0):
    return PlanRequest(eps=eps, q=q, d=d, fi=FIConstants(kind="LSI", C=C),
                       smooth=SmoothnessRecord(s=1.0, L=L), R0=R0)


def lo_req(eps=0.1, q=2.0, d=4, C=1.0, L=1.0, s=1.0, alpha=1.5, R0=10.0, m=2.0,
           R0_hat=None):  # noqa: D401
    return PlanRequest(eps=eps, q=q, d=d,
                       fi=FIConstants(kind="LO", C=C, alpha=alpha),
                       smooth=SmoothnessRecord(s=s, L=L), R0=R0, m=m, R0_hat=R0_hat)


def mlsi_req(eps=0.1, q=2.0, d=4, C=1.0, C_tail=1.0, s=1.0, alpha0=1.5, alpha1=1.5,
             R0=10.0, m=2.0, R0_hat=None):
    return PlanRequest(eps=eps, q=q, d=d,
                       fi=FIConstants(kind="MLSI", C=C, alpha0=alpha0, alpha1=alpha1,
                                      C_tail=C_tail),
                       smooth=SmoothnessRecord(s=s, L=1.0), R0=R0, m=m, R0_hat=R0_hat)


# --- LSI plan ---------------------------------------------------------------

def test_plan_lsi_accuracy_branch_value():
    plan = plan_lsi(lsi_req())
    # min{1/768, 0.1/6880}: the accuracy branch wins
    assert plan.h == pytest.approx(0.1 / 6880.0, rel=1e-14)
    assert plan.h == pytest.approx(1.45349e-5, rel=1e-5)
    plan.assert_valid()
    assert plan.T == plan.N * plan.h


def test_plan_lsi_stability_saturation():
    plan = plan_lsi(lsi_req(eps=1e6))
    assert plan.h == pytest.approx(1.0 / 768.0, rel=1e-8)
    assert plan.h < 1.0 / 768.0  # strict inequality preserved at saturation


def test_plan_lsi_d_doubling_halves_h_on_accuracy_branch():
    h1 = plan_lsi(lsi_req(d=10)).h
    h2 = plan_lsi(lsi_req(d=20)).h
    assert h2 == pytest.approx(h1 / 2.0, rel=1e-14)


def test_plan_lsi_n_scales_inversely_with_eps():
    # large R0 keeps the slowly-varying ln(2 R0 / eps) factor inert
    n1 = plan_lsi(lsi_req(eps=1e-3, R0=1e8)).N
    n2 = plan_lsi(lsi_req(eps=2e-3, R0=1e8)).N
    assert 0.45 <= n2 / n1 <= 0.55


def test_plan_lsi_waiting_phase():
    assert plan_lsi(lsi_req(q=2.0)).N0 == 0  # ln((q-1)/2) < 0 at q = 2
    plan = plan_lsi(lsi_req(q=4.0))
    expected = math.ceil((2.0 / plan.h) * math.log(1.5))
    assert plan.N0 == expected


def test_plan_lsi_requires_lsi_and_lipschitz():
    req = lo_req()
    with pytest.raises(PlanError):
        plan_lsi(req)
    bad = PlanRequest(eps=0.1, q=2.0, d=2, fi=FIConstants(kind="LSI", C=1.0),
                      smooth=SmoothnessRecord(s=0.5, L=1.0), R0=1.0)
    with pytest.raises(PlanError):
        plan_lsi(bad)


# --- log-concave plan --------------------------------------------------------

def test_plan_log_concave_unit_constants_converges():
    req = PlanRequest(eps=0.5, q=2.0, d=1, fi=FIConstants(kind="PI", C=1.0),
                      smooth=SmoothnessRecord(s=1.0, L=1.0), R0=3.0, log_concave=True)
    plan = plan_log_concave(req)
    plan.assert_valid()
    assert plan.N >= 1 and plan.h > 0.0
    # the fixed point satisfies the fluctuation constraint in both directions
    h_fluct = (1.0 / (384.0 * 2.0 * math.sqrt(plan.N))) * min(1.0, math.sqrt(plan.N) / 2.0)
    assert plan.h <= h_fluct * (1.0 + 1e-9)


def test_plan_log_concave_monotone_in_eps_and_R0():
    def plan_for(eps, R0=3.0):
        req = PlanRequest(eps=eps, q=2.0, d=2, fi=FIConstants(kind="PI", C=1.0),
                          smooth=SmoothnessRecord(s=1.0, L=1.0), R0=R0,
                          log_concave=True)
        return plan_log_concave(req)

    assert plan_for(0.25).N > plan_for(0.5).N
    assert plan_for(0.5, R0=6.0).N0 > plan_for(0.5, R0=3.0).N0


def test_plan_log_concave_requires_flag():
    req = PlanRequest(eps=0.5, q=2.0, d=1, fi=FIConstants(kind="PI", C=1.0),
                      smooth=SmoothnessRecord(s=1.0, L=1.0), R0=3.0)
    with pytest.raises(PlanError):
        plan_log_concave(req)


# --- LO plan ------------------------------------------------------------------

def test_lo_horizon_direct_value():
    # 68 * 2 * 1 * ((10 - 1)/1 + ln 20), evaluated directly
    expected = 68.0 * 2.0 * (9.0 + math.log(20.0))
    assert expected == pytest.approx(1631.4195892033428, abs=1e-10)
    assert lo_horizon(2.0, 1.0, 1.0, 10.0, 0.05) == pytest.approx(expected, rel=1e-14)


def test_lo_horizon_alpha2_limit():
    # (x^delta - 1)/delta -> ln x as alpha -> 2
    exact = 68.0 * 6.0 * 2.0 * (math.log(10.0) + math.log(20.0))
    assert lo_horizon(6.0, 2.0, 2.0, 10.0, 0.05) == pytest.approx(exact, rel=1e-14)
    near = lo_horizon(6.0, 2.0, 2.0 - 1e-9, 10.0, 0.05)
    assert near == pytest.approx(exact, rel=1e-6)


def test_lo_horizon_warm_start_skips_poly_phase():
    assert lo_horizon(2.0, 1.0, 1.5, 0.5, 0.05) == pytest.approx(
        68.0 * 2.0 * math.log(20.0), rel=1e-14)


def test_plan_lo_h_scales_as_eps_to_inv_s():
    for s in (0.5, 1.0):
        h1 = plan_lo(lo_req(eps=0.1, s=s, d=1000)).h
        h2 = plan_lo(lo_req(eps=0.05, s=s, d=1000)).h
        # exact up to the O(h) drift of the ln(e + h0) polylog divisor
        assert h2 / h1 == pytest.approx(2.0 ** (-1.0 / s), rel=1e-4)


def test_plan_lo_alpha_smoothness_compatibility():
    with pytest.raises(PlanError, match="s \\+ 1 >= alpha"):
        plan_lo(lo_req(s=0.3, alpha=1.5))
    plan_lo(lo_req(s=0.5, alpha=1.5))  # boundary case s + 1 = alpha is allowed


def test_plan_lo_covers_horizon():
    plan = plan_lo(lo_req())
    T_req = lo_horizon(3.0, 1.0, 1.5, 10.0, 0.05)
    assert plan.T >= T_req
    assert plan.T == plan.N * plan.h


# --- MLSI plan ------------------------------------------------------------------

def test_plan_mlsi_eps_halving_exact_on_eps_branch():
    # on the leading branch N scales exactly like eps^{-1/s}
    for s in (0.5, 1.0):
        n1 = plan_mlsi(mlsi_req(eps=2e-3, s=s, d=50, R0=50.0, m=5.0)).N
        n2 = plan_mlsi(mlsi_req(eps=1e-3, s=s, d=50, R0=50.0, m=5.0)).N
        assert n2 / n1 == pytest.approx(2.0 ** (1.0 / s), rel=1e-6)


def _measured_exponent(f, x1, x2):
    return math.log(f(x2) / f(x1)) / math.log(x2 / x1)


def test_plan_mlsi_lsi_like_case_matches_lsi_scaling():
    # alpha0 = alpha1 = 2: same (d, eps) scaling exponents as plan_lsi
    def n_mlsi(d, eps):
        # R0_hat kept small so the d/R0_hat^(s/2) branch stays inactive
        return plan_mlsi(mlsi_req(eps=eps, d=d, alpha0=2.0, alpha1=2.0,
                                  R0=1e12, m=3.0, R0_hat=10.0)).N

    def n_lsi(d, eps):
        # large R0 keeps the slowly-varying log factor from contaminating
        # the measured exponent
        return plan_lsi(lsi_req(eps=eps, d=d, R0=1e12)).N

    for f in (n_mlsi, n_lsi):
        d_exp = _measured_exponent(lambda d: f(int(d), 1e-3), 1e5, 2e5)
        e_exp = _measured_exponent(lambda e: f(10**5, e), 1e-3, 5e-4)
        assert d_exp == pytest.approx(1.0, abs=0.05)
        assert e_exp == pytest.approx(-1.0, abs=0.05)


def test_plan_mlsi_dimension_exponent():
    # m = d^{1/alpha}, R-inits = d: N = O(d^{(2/alpha)(1+1/s) - 1/s})
    alpha, s = 1.5, 1.0
    kappa = (2.0 / alpha) * (1.0 + 1.0 / s) - 1.0 / s

    def n_of_d(d):
        return plan_mlsi(mlsi_req(eps=0.01, d=int(d), alpha0=alpha, alpha1=alpha,
                                  s=s, R0=float(d), m=float(d) ** (1.0 / alpha),
                                  R0_hat=float(d))).N

    measured = _measured_exponent(n_of_d, 1e6, 2e6)
    assert measured == pytest.approx(kappa, rel=0.10)


def test_plan_mlsi_requires_positive_alpha1():
    with pytest.raises(PlanError):
        plan_mlsi(mlsi_req(alpha1=0.0))


# --- continuous-time decay prediction --------------------------------------------

def test_predict_lsi_is_exact_exponential():
    fi = FIConstants(kind="LSI", C=1.0)
    t = np.linspace(0.0, 3.0, 31)
    curve = predict_continuous_decay(fi, 1.0, 1.0, t)
    np.testing.assert_allclose(curve.values, np.exp(-2.0 * t), atol=1e-6)


def test_predict_lo_matches_closed_form_above_one():
    fi = FIConstants(kind="LO", C=1.0, alpha=1.5)
    q, R0 = 2.0, 10.0
    t1 = lo_phase_boundary(q, 1.0, 1.5, R0)
    t = np.linspace(0.0, 0.9 * t1, 25)
    curve = predict_continuous_decay(fi, q, R0, t)
    np.testing.assert_allclose(curve.values, lo_decay_closed_form(q, 1.0, 1.5, R0, t),
                               atol=1e-6)


def test_predict_lo_alpha1_reduces_to_two_phase_pi_form():
    # order-1 case: constant-rate decrease 1/(68 q C) while R >= 1, then
    # exponential -- the PI shape with 1/68 in place of 2
    fi = FIConstants(kind="LO", C=1.0, alpha=1.0)
    q, R0 = 2.0, 5.0
    rate = 1.0 / (68.0 * q)
    t = np.linspace(0.0, 0.9 * (R0 - 1.0) / rate, 10)
    curve = predict_continuous_decay(fi, q, R0, t)
    np.testing.assert_allclose(curve.values, R0 - rate * t, atol=1e-6)


def test_predict_phase_boundary_matches_horizon_formula():
    fi = FIConstants(kind="LO", C=1.0, alpha=1.5)
    q, R0 = 2.0, 10.0
    t1 = lo_phase_boundary(q, 1.0, 1.5, R0)
    t = np.linspace(0.0, 2.0 * t1, 4001)
    curve = predict_continuous_decay(fi, q, R0, t)
    crossing = t[np.searchsorted(-curve.values, -1.0)]
    assert crossing == pytest.approx(t1, rel=2e-3)
    assert curve.max_increase() == 0.0


def test_predict_pi_two_phase():
    fi = FIConstants(kind="PI", C=2.0)
    q, R0 = 2.0, 4.0
    rate = 2.0 / (q * 2.0)
    t = np.linspace(0.0, 2.0, 21)
    curve = predict_continuous_decay(fi, q, R0, t)
    np.testing.assert_allclose(curve.values, R0 - rate * t, atol=1e-6)


def test_super_poincare_beta_value():
    assert super_poincare_beta(2.0, 1.0, 1.0) == pytest.approx(
        96.0 / math.log(math.e + 1.0), rel=1e-12)


# --- initialization designs --------------------------------------------------------

def test_init_convex_quadratic_hand_formula():
    spec = make_builtin("quadratic", 1)
    design = init_design(spec, "convex")
    m = math.sqrt(2.0 / math.pi)
    assert design.bound == pytest.approx(2.0 + 0.5 * math.log(2.0 * m**2), abs=1e-9)
    assert design.bound == pytest.approx(2.1207822376, abs=1e-9)
    assert design.law.cov[0, 0] == pytest.approx(1.0)


def test_init_general_reduces_to_convex_style_plus_L():
    spec = make_builtin("quadratic", 1)  # V(0) = min V = 0
    m = estimate_mean_norm(spec)
    design = init_design(spec, "general")
    assert design.bound == pytest.approx(
        2.0 + 1.0 + 0.5 * math.log(4.0 * m**2), abs=1e-12)
    assert design.law.cov[0, 0] == pytest.approx(0.5)


def test_init_modified_formula():
    base = make_builtin("smoothed_norm", 1)
    gamma, R = 0.5, 4.0
    mod = make_modified(base, gamma, R)
    design = init_design(base, "modified", modified=mod)
    m_hat = R + 1.0 / math.sqrt(gamma)
    expected = (2.0 + 1.0 + 0.25 + 1.0 - 1.0 + 0.5 * math.log(4.0 * m_hat**2))
    assert design.bound == pytest.approx(expected, abs=1e-12)
    assert design.law.cov[0, 0] == pytest.approx(1.0 / 2.5)


def test_init_bound_dominates_grid_ratio_for_builtins():
    cases = [("quadratic", {}, "convex", (-12, 12)),
             ("smoothed_norm", {}, "convex", (-40, 40)),
             ("power", {"alpha": 1.5}, "general", (-20, 20))]
    for fam, kw, variant, window in cases:
        spec = make_builtin(fam, 1, **kw)
        design = init_design(spec, variant)
        pi = target_density_grid(spec, window, 2048)
        mu0 = GridDensity.from_function(design.law.density, pi.lo, pi.hi, pi.n)
        mask = (pi.values > 0) & (mu0.values > 0)
        r_inf = float(np.max(np.log(mu0.values[mask]) - np.log(pi.values[mask])))
        assert r_inf <= design.bound + 1e-9


def test_init_convex_rejects_nonconvex_or_weak_smooth():
    with pytest.raises(PlanError):
        init_design(make_builtin("perturbed_power", 1, alpha=1.5), "convex")
    with pytest.raises(PlanError):
        init_design(make_builtin("power", 1, alpha=1.5), "convex")
