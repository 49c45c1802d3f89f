"""Target potentials, their gradients, and smoothness / tail metadata.

A potential V defines the target density pi ~ exp(-V) on R^d.  Built-in
families cover the standard benchmark targets:

    power               V(x) = ||x||^a,              a in (1, 2]
    smoothed_power      V(x) = (1 + ||x||^2)^(a/2),  a in [1, 2]
    smoothed_norm       V(x) = sqrt(1 + ||x||^2)     (a = 1 case)
    product             V(x) = sum_i (1 + x_i^2)^(a/2)
    quadratic           V(x) = 1/2 x' A x
    perturbed_power     V(x) = ||x||^a + cos ||x||
    perturbed_quadratic V(x) = 1/2 ||x||^2 + cos(||x||^(1+s))

All families satisfy gradV(0) = 0 exactly.  Every spec carries a
declared gradient Hoelder record (s, L), meaning

    ||gradV(x) - gradV(y)|| <= L ||x - y||^s ,

and a list of declared functional-inequality constants.  Declared
constants are claims used by the planners; they are not estimated from
data here.  For the perturbed families the cosine term has no finite
global Hoelder seminorm, so the declared L is a practical bound valid
on the sampling window used by verify_holder (see the family builders).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import rng

BUILTIN_FAMILIES = (
    "power",
    "smoothed_power",
    "smoothed_norm",
    "product",
    "quadratic",
    "perturbed_power",
    "perturbed_quadratic",
)


class ParameterError(ValueError):
    """A family parameter is outside its valid range."""


class MetadataError(ValueError):
    """Required potential metadata is missing or not computable."""


@dataclass(frozen=True)
class SmoothnessRecord:
    """Gradient Hoelder exponent s in (0, 1] and constant L > 0."""

    s: float
    L: float

    def __post_init__(self):
        if not (0.0 < self.s <= 1.0):
            raise ParameterError(f"Hoelder exponent s must be in (0, 1], got {self.s}")
        if not self.L > 0.0:
            raise ParameterError(f"Hoelder constant L must be positive, got {self.L}")


@dataclass(frozen=True)
class FIConstants:
    """A declared functional-inequality constant.

    kind is one of PI, LSI, LO, MLSI.  LO carries the order alpha in
    [1, 2].  MLSI carries the entropy order alpha0 <= 2, the tail order
    alpha1 in [0, 1] and the tail constant C_tail.
    """

    kind: str
    C: float
    alpha: Optional[float] = None
    alpha0: Optional[float] = None
    alpha1: Optional[float] = None
    C_tail: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("PI", "LSI", "LO", "MLSI"):
            raise ParameterError(f"unknown functional inequality kind {self.kind!r}")
        if not self.C > 0.0:
            raise ParameterError("functional-inequality constant C must be positive")
        if self.kind == "LO":
            if self.alpha is None or not (1.0 <= self.alpha <= 2.0):
                raise ParameterError("LO order alpha must lie in [1, 2]")
        if self.kind == "MLSI":
            if self.alpha0 is None or self.alpha0 > 2.0 or self.alpha0 < -1.0:
                raise ParameterError("MLSI order alpha0 must lie in [-1, 2]")
            # tail orders up to 2 cover the alpha0 = alpha1 = alpha usage for
            # targets of tail growth alpha in (1, 2]
            if self.alpha1 is None or not (0.0 <= self.alpha1 <= 2.0):
                raise ParameterError("MLSI tail order alpha1 must lie in [0, 2]")
            if self.C_tail is None or not self.C_tail > 0.0:
                raise ParameterError("MLSI requires a positive tail constant C_tail")


@dataclass(frozen=True)
class PotentialSpec:
    """A target potential with gradient and declared metadata.

    V and gradV are vectorized over the leading axes: V maps arrays of
    shape (..., d) to (...,) and gradV maps (..., d) to (..., d).
    Specs are immutable and safe to share across threads.
    """

    name: str
    d: int
    V: Callable[[np.ndarray], np.ndarray]
    gradV: Callable[[np.ndarray], np.ndarray]
    smoothness: SmoothnessRecord
    fi: tuple = ()
    V_at_0: float = 0.0
    min_V: Optional[float] = None
    convex: bool = False
    radial: bool = False
    mean_norm: Optional[float] = None
    params: dict = field(default_factory=dict)

    def fi_of_kind(self, kind: str) -> Optional[FIConstants]:
        for c in self.fi:
            if c.kind == kind:
                return c
        return None

    def with_mean_norm(self, m: float) -> "PotentialSpec":
        return replace(self, mean_norm=float(m))


@dataclass(frozen=True)
class ModifiedPotential:
    """Quadratic-hinge modification of a base potential.

    Vhat(x) = V(x) + (gamma/2) (||x|| - R)_+^2.  The hinge is inactive on
    the ball B(0, R), so Vhat = V there, and the gradient obeys the
    growth bound ||grad Vhat(x)|| <= L + (L + gamma) ||x||.
    """

    base: PotentialSpec
    gamma: float
    R: float

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def name(self) -> str:
        return self.base.name + "_modified"

    @property
    def min_V(self):
        # Vhat >= V with equality on B(0, R); every built-in attains its
        # minimum at the origin, inside the ball, so the minimum is shared
        return self.base.min_V

    @property
    def smoothness(self) -> SmoothnessRecord:
        return self.base.smoothness

    def V(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        hinge = np.maximum(r - self.R, 0.0)
        return self.base.V(x) + 0.5 * self.gamma * hinge**2

    def gradV(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        # hinge active only for r > R >= 1, so r is safely nonzero there
        coeff = np.where(r > self.R, self.gamma * (r - self.R) / np.maximum(r, 1e-300), 0.0)
        return self.base.gradV(x) + coeff[..., None] * x

    def gradient_growth_bound(self, x: np.ndarray) -> np.ndarray:
        """Pointwise bound L + (L + gamma) ||x|| on ||grad Vhat||."""
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        L = self.base.smoothness.L
        return L + (L + self.gamma) * r


@dataclass(frozen=True)
class HolderReport:
    """Result of a sampled-pair gradient Hoelder check."""

    s: float
    declared_L: float
    max_ratio: float
    violation: bool
    worst_x: np.ndarray
    worst_y: np.ndarray
    n_pairs: int


def _radial_family(d, f, df_over_r):
    """Build (V, gradV) from a radial profile f(r) with grad = df_over_r(r) x."""

    def V(x):
        x = np.asarray(x, dtype=float)
        return f(np.linalg.norm(x, axis=-1))

    def gradV(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return df_over_r(r)[..., None] * x

    return V, gradV


def _power_profile(alpha):
    def f(r):
        return r**alpha

    def df_over_r(r):
        # alpha * r^(alpha-2), with the limit 0 at r = 0 for alpha < 2
        out = np.zeros_like(r)
        pos = r > 0.0
        out[pos] = alpha * r[pos] ** (alpha - 2.0)
        return out

    return f, df_over_r


def _smoothed_profile(alpha):
    def f(r):
        return (1.0 + r**2) ** (alpha / 2.0)

    def df_over_r(r):
        return alpha * (1.0 + r**2) ** (alpha / 2.0 - 1.0)

    return f, df_over_r


def _cos_norm_grad_over_r(r):
    # gradient of cos||x|| is -sin(r)/r * x; sin(r)/r -> 1 at 0
    out = np.ones_like(r)
    pos = r > 1e-12
    out[pos] = np.sin(r[pos]) / r[pos]
    return -out


def _cos_power_grad_over_r(r, p):
    # gradient of cos(r^p) is -p sin(r^p) r^(p-2) x; limit 0 at r = 0 for p > 1
    out = np.zeros_like(r)
    pos = r > 0.0
    out[pos] = -p * np.sin(r[pos] ** p) * r[pos] ** (p - 2.0)
    return out


def _min_V_radial(f, r_max=40.0, n=400001):
    r = np.linspace(0.0, r_max, n)
    return float(np.min(f(r)))


def make_builtin(family: str, d: int, alpha: float = None, s: float = None,
                 A: np.ndarray = None) -> PotentialSpec:
    """Construct a built-in potential family.

    power requires alpha in (1, 2] and has Hoelder exponent s = alpha - 1
    with constant alpha * 2^(2 - alpha) (sharp at antipodal pairs).  The
    smoothed families have Lipschitz gradients (s = 1) with L = alpha.
    quadratic takes a symmetric positive-definite matrix A (or a scalar /
    diagonal, promoted to a matrix) with L = lambda_max(A).
    """
    if d < 1:
        raise ParameterError("dimension must be >= 1")

    if family == "power":
        if alpha is None or not (1.0 < alpha <= 2.0):
            raise ParameterError("power family requires alpha in (1, 2]")
        f, dfr = _power_profile(alpha)
        V, gradV = _radial_family(d, f, dfr)
        L = alpha * 2.0 ** (2.0 - alpha)
        return PotentialSpec(
            name=f"power(alpha={alpha:g})", d=d, V=V, gradV=gradV,
            smoothness=SmoothnessRecord(s=alpha - 1.0, L=L),
            fi=(FIConstants(kind="LO", C=1.0, alpha=alpha),),
            V_at_0=0.0, min_V=0.0, convex=True, radial=True,
            params={"family": "power", "alpha": alpha},
        )

    if family in ("smoothed_power", "smoothed_norm"):
        if family == "smoothed_norm":
            alpha = 1.0
        if alpha is None or not (1.0 <= alpha <= 2.0):
            raise ParameterError("smoothed_power requires alpha in [1, 2]")
        f, dfr = _smoothed_profile(alpha)
        V, gradV = _radial_family(d, f, dfr)
        return PotentialSpec(
            name=f"{family}(alpha={alpha:g})" if family == "smoothed_power" else "smoothed_norm",
            d=d, V=V, gradV=gradV,
            smoothness=SmoothnessRecord(s=1.0, L=alpha),
            fi=(FIConstants(kind="LO", C=1.0, alpha=alpha),),
            V_at_0=1.0, min_V=1.0, convex=True, radial=True,
            params={"family": family, "alpha": alpha},
        )

    if family == "product":
        if alpha is None or not (1.0 <= alpha <= 2.0):
            raise ParameterError("product family requires alpha in [1, 2]")

        def V(x):
            x = np.asarray(x, dtype=float)
            return np.sum((1.0 + x**2) ** (alpha / 2.0), axis=-1)

        def gradV(x):
            x = np.asarray(x, dtype=float)
            return alpha * x * (1.0 + x**2) ** (alpha / 2.0 - 1.0)

        return PotentialSpec(
            name=f"product(alpha={alpha:g})", d=d, V=V, gradV=gradV,
            smoothness=SmoothnessRecord(s=1.0, L=alpha),
            fi=(FIConstants(kind="LO", C=1.0, alpha=alpha),),
            V_at_0=float(d), min_V=float(d), convex=True, radial=(d == 1),
            params={"family": "product", "alpha": alpha},
        )

    if family == "quadratic":
        if A is None:
            A = np.eye(d)
        A = np.atleast_1d(np.asarray(A, dtype=float))
        if A.ndim == 1:
            A = np.diag(A if A.size == d else np.full(d, float(A)))
        if A.shape != (d, d):
            raise ParameterError(f"quadratic matrix must be {d}x{d}")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ParameterError("quadratic matrix must be symmetric")
        eigs = np.linalg.eigvalsh(A)
        if eigs[0] <= 0.0:
            raise ParameterError("quadratic matrix must be positive-definite")
        lam_min, lam_max = float(eigs[0]), float(eigs[-1])

        def V(x):
            x = np.asarray(x, dtype=float)
            return 0.5 * np.einsum("...i,ij,...j->...", x, A, x)

        def gradV(x):
            x = np.asarray(x, dtype=float)
            return x @ A.T

        iso = np.allclose(A, lam_max * np.eye(d), atol=1e-12)
        return PotentialSpec(
            name="quadratic", d=d, V=V, gradV=gradV,
            smoothness=SmoothnessRecord(s=1.0, L=lam_max),
            fi=(FIConstants(kind="LSI", C=1.0 / lam_min),
                FIConstants(kind="PI", C=1.0 / lam_min)),
            V_at_0=0.0, min_V=0.0, convex=True, radial=iso,
            params={"family": "quadratic", "A": A.tolist()},
        )

    if family == "perturbed_power":
        if alpha is None or not (1.0 < alpha <= 2.0):
            raise ParameterError("perturbed_power requires alpha in (1, 2]")
        fp, dfrp = _power_profile(alpha)

        def f(r):
            return fp(r) + np.cos(r)

        def df_over_r(r):
            return dfrp(r) + _cos_norm_grad_over_r(r)

        V, gradV = _radial_family(d, f, df_over_r)
        # cosine adds at most 2 to the Hoelder-s seminorm (gradient bounded by 1)
        L = alpha * 2.0 ** (2.0 - alpha) + 2.0
        return PotentialSpec(
            name=f"perturbed_power(alpha={alpha:g})", d=d, V=V, gradV=gradV,
            smoothness=SmoothnessRecord(s=alpha - 1.0, L=L),
            fi=(FIConstants(kind="LO", C=math.e**2, alpha=alpha),),
            V_at_0=1.0, min_V=1.0, convex=False, radial=True,
            params={"family": "perturbed_power", "alpha": alpha},
        )

    if family == "perturbed_quadratic":
        if s is None or not (0.0 < s <= 1.0):
            raise ParameterError("perturbed_quadratic requires s in (0, 1]")
        p = 1.0 + s

        def f(r):
            return 0.5 * r**2 + np.cos(r**p)

        def df_over_r(r):
            return 1.0 + _cos_power_grad_over_r(r, p)

        V, gradV = _radial_family(d, f, df_over_r)
        # the cos(r^(1+s)) term has no finite global Hoelder-s seminorm; this L
        # holds on the radius-10 window probed by verify_holder's default scale:
        # base term D^(1-s) over separations D <= 20, oscillation term from the
        # window Hessian sup (1+s)^2 R^(2s) balanced against the gradient sup
        R_w, D_w = 10.0, 20.0
        L = D_w ** (1.0 - s) + (1.0 + s) ** (1.0 + s) * 2.0 ** (1.0 - s) * R_w ** (s * (1.0 + s))
        return PotentialSpec(
            name=f"perturbed_quadratic(s={s:g})", d=d, V=V, gradV=gradV,
            smoothness=SmoothnessRecord(s=s, L=L),
            fi=(FIConstants(kind="LSI", C=math.e**2),),
            V_at_0=1.0, min_V=_min_V_radial(f), convex=False, radial=True,
            params={"family": "perturbed_quadratic", "s": s},
        )

    raise ParameterError(f"unknown family {family!r}; choose one of {BUILTIN_FAMILIES}")


def make_modified(base: PotentialSpec, gamma: float, R: float) -> ModifiedPotential:
    """Quadratic-hinge modification Vhat = V + (gamma/2)(||x|| - R)_+^2.

    Requires gamma > 0 and R >= max(1, 2 * mean_norm) so that the target
    puts at least half its mass inside B(0, R) and the modified law has
    sub-Gaussian tails 2 exp(-gamma eta^2 / 2) beyond radius R.
    """
    if gamma <= 0.0:
        raise ParameterError("gamma must be positive")
    m = base.mean_norm
    if m is None:
        m = estimate_mean_norm(base)
    floor = max(1.0, 2.0 * m)
    if R < floor * (1.0 - 1e-12):
        raise ParameterError(
            f"R = {R:g} below admissible floor max(1, 2*mean_norm) = {floor:g}")
    return ModifiedPotential(base=base.with_mean_norm(m), gamma=float(gamma), R=float(R))


def _radial_mean_norm(Vfn, d, v0):
    """Mean norm under pi ~ exp(-V(r)) via 1D radial quadrature."""

    def w(r, k):
        r = np.asarray(r, dtype=float)
        x = np.zeros(r.shape + (d,))
        x[..., 0] = r
        return r**k * np.exp(-(Vfn(x) - v0))

    r_max = 10.0
    while w(np.array([r_max]), d)[0] > 1e-18 and r_max < 1e6:
        r_max *= 1.5
    num, _ = integrate.quad(lambda r: float(w(np.array([r]), d)[0]), 0.0, r_max,
                            limit=400, epsabs=1e-13, epsrel=1e-12)
    den, _ = integrate.quad(lambda r: float(w(np.array([r]), d - 1)[0]), 0.0, r_max,
                            limit=400, epsabs=1e-13, epsrel=1e-12)
    if den <= 0.0 or not np.isfinite(num / den):
        raise MetadataError("potential is not normalizable on the quadrature window")
    return num / den


def estimate_mean_norm(spec) -> float:
    """Mean norm m = int ||x|| dpi by deterministic quadrature.

    Works for radially symmetric targets in any dimension and for
    arbitrary targets in d <= 2.  Higher-dimensional non-radial targets
    must declare mean_norm explicitly (or use ensemble_mean_norm).
    """
    v0 = getattr(spec, "min_V", None)
    if v0 is None:
        v0 = getattr(spec.base, "min_V", 0.0) if isinstance(spec, ModifiedPotential) else 0.0
    radial = spec.base.radial if isinstance(spec, ModifiedPotential) else spec.radial
    if radial:
        return _radial_mean_norm(spec.V, spec.d, v0)
    if spec.d == 1:
        def w(x):
            return np.exp(-(spec.V(np.array([[x]]))[0] - v0))
        x_max = 10.0
        while w(x_max) + w(-x_max) > 1e-18 and x_max < 1e6:
            x_max *= 1.5
        num, _ = integrate.quad(lambda x: abs(x) * w(x), -x_max, x_max,
                                limit=400, epsabs=1e-13, epsrel=1e-12)
        den, _ = integrate.quad(w, -x_max, x_max, limit=400, epsabs=1e-13, epsrel=1e-12)
        if den <= 0.0:
            raise MetadataError("potential is not normalizable on the quadrature window")
        return num / den
    if spec.d == 2:
        n = 801
        x_max = 10.0

        def edge_mass(xm):
            g = np.linspace(-xm, xm, n)
            X, Y = np.meshgrid(g, g, indexing="ij")
            pts = np.stack([X, Y], axis=-1)
            w = np.exp(-(spec.V(pts) - v0))
            edge = w[0, :].sum() + w[-1, :].sum() + w[:, 0].sum() + w[:, -1].sum()
            return w, pts, edge / max(w.sum(), 1e-300)

        w, pts, e = edge_mass(x_max)
        while e > 1e-12 and x_max < 1e4:
            x_max *= 1.5
            w, pts, e = edge_mass(x_max)
        r = np.linalg.norm(pts, axis=-1)
        return float((r * w).sum() / w.sum())
    raise MetadataError(
        "mean_norm requires a radial target or d <= 2; declare it explicitly otherwise")


def ensemble_mean_norm(positions: np.ndarray):
    """Monte-Carlo mean norm with standard error from user-supplied samples."""
    r = np.linalg.norm(np.asarray(positions, dtype=float), axis=-1)
    return float(r.mean()), float(r.std(ddof=1) / math.sqrt(r.size))


def verify_holder(spec, n_pairs: int, seed: int, scale: float = 2.0) -> HolderReport:
    """Sampled-pair check of the declared gradient Hoelder constant.

    Maximizes ||gradV(x) - gradV(y)|| / ||x - y||^s over random pairs
    (independent, antipodal, and nearby pairs are all probed; antipodal
    pairs are where the power-family constant is attained).  Flags a
    violation if the maximum exceeds declared L * (1 + 1e-9).
    """
    if n_pairs < 1:
        raise ParameterError("n_pairs must be >= 1")
    s, L = spec.smoothness.s, spec.smoothness.L
    g = rng.generator(seed, rng.PROBE_NOISE)
    x = scale * g.standard_normal((n_pairs, spec.d))
    y = np.empty_like(x)
    kind = np.arange(n_pairs) % 3
    y[kind == 0] = -x[kind == 0]
    near = kind == 1
    y[near] = x[near] + 0.1 * scale * g.standard_normal((int(near.sum()), spec.d))
    indep = kind == 2
    y[indep] = scale * g.standard_normal((int(indep.sum()), spec.d))

    diff = np.linalg.norm(x - y, axis=-1)
    ok = diff > 1e-12
    x, y, diff = x[ok], y[ok], diff[ok]
    num = np.linalg.norm(spec.gradV(x) - spec.gradV(y), axis=-1)
    ratio = num / diff**s
    i = int(np.argmax(ratio))
    max_ratio = float(ratio[i])
    return HolderReport(
        s=s, declared_L=L, max_ratio=max_ratio,
        violation=bool(max_ratio > L * (1.0 + 1e-9)),
        worst_x=x[i].copy(), worst_y=y[i].copy(), n_pairs=int(diff.size),
    )


def finite_difference_grad(spec, x: np.ndarray, delta: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient, used as an independent oracle."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(spec.d):
        e = np.zeros(spec.d)
        e[i] = delta
        out[..., i] = (spec.V(x + e) - spec.V(x - e)) / (2.0 * delta)
    return out
