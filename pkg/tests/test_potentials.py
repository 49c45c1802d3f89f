import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn
from scipy.special import k1

from langevin_lab.potentials import (FIConstants, ParameterError, PotentialSpec,
                                     SmoothnessRecord, ensemble_mean_norm,
                                     estimate_mean_norm, finite_difference_grad,
                                     make_builtin, make_modified, verify_holder)

ALL_FAMILIES = [
    ("power", {"alpha": 1.5}),
    ("power", {"alpha": 2.0}),
    ("smoothed_power", {"alpha": 1.7}),
    ("smoothed_norm", {}),
    ("product", {"alpha": 1.3}),
    ("quadratic", {}),
    ("perturbed_power", {"alpha": 1.5}),
    ("perturbed_quadratic", {"s": 0.5}),
]


@pytest.mark.parametrize("family,kw", ALL_FAMILIES)
@pytest.mark.parametrize("d", [1, 2, 3])
def test_gradient_vanishes_at_origin(family, kw, d):
    spec = make_builtin(family, d, **kw)
    g = spec.gradV(np.zeros(d))
    assert np.all(g == 0.0)


@pytest.mark.parametrize("family,kw", ALL_FAMILIES)
def test_finite_difference_gradient_agreement(family, kw):
    # central differences as the independent oracle: rel error <= 1e-5
    spec = make_builtin(family, 2, **kw)
    rng = np.random.default_rng(42)
    x = rng.normal(scale=1.5, size=(100, 2))
    fd = finite_difference_grad(spec, x)
    g = spec.gradV(x)
    denom = np.maximum(np.linalg.norm(g, axis=-1), 1e-3)
    rel = np.linalg.norm(fd - g, axis=-1) / denom
    assert rel.max() < 1e-5


def test_smoothed_norm_gradient_values():
    spec = make_builtin("smoothed_norm", 3)
    assert np.all(spec.gradV(np.zeros(3)) == 0.0)
    g = spec.gradV(np.array([1.0, 0.0, 0.0]))
    # hand differentiation of sqrt(1 + ||x||^2) at (1,0,0)
    np.testing.assert_allclose(g, [1.0 / math.sqrt(2.0), 0.0, 0.0], atol=1e-14)
    fd = finite_difference_grad(spec, np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(fd, g, atol=1e-9)


def test_power_alpha2_is_plain_quadratic():
    spec = make_builtin("power", 1, alpha=2.0)
    assert spec.V(np.array([3.0])) == pytest.approx(9.0, abs=1e-14)
    assert spec.gradV(np.array([3.0]))[0] == pytest.approx(6.0, abs=1e-14)


def test_power_smoothness_metadata():
    spec = make_builtin("power", 2, alpha=1.5)
    assert spec.smoothness.s == pytest.approx(0.5)
    smooth = make_builtin("smoothed_power", 2, alpha=1.5)
    assert smooth.smoothness.s == 1.0


def test_family_parameter_validation():
    with pytest.raises(ParameterError):
        make_builtin("power", 2, alpha=2.5)
    with pytest.raises(ParameterError):
        make_builtin("power", 2, alpha=1.0)
    with pytest.raises(ParameterError):
        make_builtin("smoothed_power", 2, alpha=0.5)
    with pytest.raises(ParameterError):
        make_builtin("no_such_family", 1)
    with pytest.raises(ParameterError):
        make_builtin("quadratic", 2, A=np.array([[1.0, 0.5], [0.4, 1.0]]))


def test_modified_potential_hinge():
    base = PotentialSpec(
        name="flat", d=1, V=lambda x: np.zeros(np.asarray(x).shape[:-1]),
        gradV=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        smoothness=SmoothnessRecord(s=1.0, L=1.0), mean_norm=0.1)
    mod = make_modified(base, gamma=2.0, R=1.0)
    x = np.array([3.0])
    # hinge formula (gamma/2)(|x| - R)^2 evaluated directly
    assert mod.V(x) == pytest.approx(4.0, abs=1e-14)
    assert mod.gradV(x)[0] == pytest.approx(4.0, abs=1e-14)
    inside = np.array([0.5])
    assert mod.V(inside) == base.V(inside)


def test_modified_matches_base_inside_ball_bitwise():
    base = make_builtin("smoothed_norm", 2)
    mod = make_modified(base, gamma=0.5, R=5.0)
    rng = np.random.default_rng(3)
    x = rng.normal(scale=1.0, size=(200, 2))
    x = x[np.linalg.norm(x, axis=1) <= 5.0]
    assert np.all(mod.V(x) == base.V(x))
    assert np.all(mod.gradV(x) == base.gradV(x))


def test_modified_gradient_growth_bound():
    base = make_builtin("smoothed_norm", 2)
    mod = make_modified(base, gamma=1.5, R=5.0)
    rng = np.random.default_rng(11)
    x = rng.normal(scale=4.0, size=(500, 2))
    g = np.linalg.norm(mod.gradV(x), axis=-1)
    assert np.all(g <= mod.gradient_growth_bound(x) + 1e-12)


def test_modified_radius_floor_enforced():
    base = make_builtin("smoothed_norm", 1)
    m = estimate_mean_norm(base)
    with pytest.raises(ParameterError):
        make_modified(base, gamma=1.0, R=0.9 * max(1.0, 2.0 * m))
    make_modified(base, gamma=1.0, R=max(1.0, 2.0 * m))  # floor itself is fine


def test_mean_norm_gaussian():
    spec = make_builtin("quadratic", 1)
    assert estimate_mean_norm(spec) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-8)


def test_mean_norm_power_alpha2():
    # exp(-|x|^2) is a Gaussian with variance 1/2: m = 1/sqrt(pi)
    spec = make_builtin("power", 1, alpha=2.0)
    assert estimate_mean_norm(spec) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-8)


def test_mean_norm_closed_forms():
    # exp(-sqrt(1+x^2)): m = 2 / (e K_1(1));  exp(-|x|^1.5): m = G(4/3)/G(2/3)
    spec = make_builtin("smoothed_norm", 1)
    assert estimate_mean_norm(spec) == pytest.approx(2.0 / (math.e * k1(1.0)), rel=1e-8)
    spec = make_builtin("power", 1, alpha=1.5)
    assert estimate_mean_norm(spec) == pytest.approx(
        gamma_fn(4.0 / 3.0) / gamma_fn(2.0 / 3.0), rel=1e-8)


@pytest.mark.parametrize("family,kw", ALL_FAMILIES)
def test_mean_norm_positive_for_builtins(family, kw):
    assert estimate_mean_norm(make_builtin(family, 1, **kw)) > 0.0


def test_mean_norm_radial_matches_2d_grid():
    spec = make_builtin("smoothed_power", 2, alpha=1.5)
    radial = estimate_mean_norm(spec)
    from dataclasses import replace
    grid = estimate_mean_norm(replace(spec, radial=False))
    assert grid == pytest.approx(radial, rel=1e-4)


def test_ensemble_mean_norm():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200000, 1))
    m, se = ensemble_mean_norm(x)
    assert m == pytest.approx(math.sqrt(2.0 / math.pi), abs=4 * se)


def test_holder_quadratic_exact_constant():
    spec = make_builtin("quadratic", 2)
    rep = verify_holder(spec, 5000, seed=0)
    assert rep.max_ratio <= 1.0 + 1e-12
    assert not rep.violation


def test_holder_power_no_violation():
    rep = verify_holder(make_builtin("power", 2, alpha=1.5), 20000, seed=1)
    assert not rep.violation
    # antipodal pairs attain the constant alpha 2^(2-alpha)
    assert rep.max_ratio == pytest.approx(1.5 * 2.0**0.5, rel=1e-6)


def test_holder_underdeclared_flagged():
    from dataclasses import replace
    spec = replace(make_builtin("quadratic", 2), smoothness=SmoothnessRecord(s=1.0, L=0.5))
    rep = verify_holder(spec, 5000, seed=0)
    assert rep.violation


@pytest.mark.parametrize("family,kw,base_family,base_kw", [
    ("perturbed_power", {"alpha": 1.5}, "power", {"alpha": 1.5}),
    ("perturbed_quadratic", {"s": 0.5}, "quadratic", {}),
])
def test_perturbation_bounded_by_one(family, kw, base_family, base_kw):
    pert = make_builtin(family, 2, **kw)
    base = make_builtin(base_family, 2, **base_kw)
    rng = np.random.default_rng(5)
    x = rng.normal(scale=3.0, size=(2000, 2))
    assert np.max(np.abs(pert.V(x) - base.V(x))) <= 1.0 + 1e-12


def test_perturbed_gradients_vanish_at_origin_limits():
    # both cosine perturbations have gradient 0 at the origin by the limit
    for family, kw in [("perturbed_power", {"alpha": 1.5}),
                       ("perturbed_quadratic", {"s": 0.5})]:
        spec = make_builtin(family, 2, **kw)
        assert np.all(spec.gradV(np.zeros(2)) == 0.0)
        # approach to the zero limit is Hoelder-consistent: |grad| <= L r^s
        for r in (1e-8, 1e-5, 1e-3):
            g = np.linalg.norm(spec.gradV(np.full(2, r / math.sqrt(2.0))))
            assert g <= spec.smoothness.L * r ** spec.smoothness.s * (1 + 1e-9)


def test_fi_constants_validation():
    with pytest.raises(ParameterError):
        FIConstants(kind="LO", C=1.0, alpha=2.5)
    with pytest.raises(ParameterError):
        FIConstants(kind="MLSI", C=1.0, alpha0=1.0, alpha1=2.5, C_tail=1.0)
    with pytest.raises(ParameterError):
        FIConstants(kind="XX", C=1.0)
    with pytest.raises(ParameterError):
        SmoothnessRecord(s=0.0, L=1.0)
    FIConstants(kind="MLSI", C=1.0, alpha0=-1.0, alpha1=0.5, C_tail=2.0)
