"""Step-size and iteration planning from functional-inequality constants.

Each planner converts (target accuracy eps, Renyi order q, dimension d,
declared constants, smoothness) into a concrete step size h, iteration
count N, and horizon T = N h, using the explicit constants carried by
the convergence proofs (192, 172, 176, 86, 68, 384, 4, 2).  Where a
formula is stated only up to hidden constants, the constant is set to 1
and polylogarithmic factors are instantiated as ln(e + x) at the
formula's own argument; every precondition the plan relies on is
re-evaluated and recorded on the emitted plan.

The module also integrates the continuous-time decay differential
inequalities (exponential under LSI, two-phase under PI and LO) to
produce upper-bound prediction curves, and provides the Gaussian
initialization designs with their explicit warmness bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .density_lab import DecayCurve
from .divergence import GaussianLaw
from .potentials import (FIConstants, ModifiedPotential, PotentialSpec,
                         SmoothnessRecord, estimate_mean_norm)


class PlanError(ValueError):
    """The request violates a planner precondition or cannot be satisfied."""


@dataclass(frozen=True)
class Precondition:
    """One recorded inequality check: lhs <relation> rhs."""

    description: str
    lhs: float
    rhs: float
    relation: str = "<="
    satisfied: bool = True


def _pre(desc, lhs, rhs, relation="<=", slack=1e-9):
    if relation == "<=":
        ok = lhs <= rhs * (1.0 + slack) + slack * 1e-300
    elif relation == "<":
        ok = lhs < rhs
    elif relation == ">=":
        ok = lhs >= rhs * (1.0 - slack)
    else:
        raise ValueError(relation)
    return Precondition(description=desc, lhs=float(lhs), rhs=float(rhs),
                        relation=relation, satisfied=bool(ok))


@dataclass(frozen=True)
class PlanRequest:
    """Inputs shared by all planners.

    R0 is the Renyi divergence at initialization in the order the
    invoked theorem consumes (R_2 for the LSI plan, R_{2q-1} for the LO
    plan, R_{2q} for the MLSI plan); R0_hat optionally carries
    R_2(mu_0 || pi_hat) for the modified-target terms and defaults to
    R0.  m is the target's mean norm.
    """

    eps: float
    q: float
    d: int
    fi: FIConstants
    smooth: SmoothnessRecord
    R0: float
    m: Optional[float] = None
    R0_hat: Optional[float] = None
    log_concave: bool = False

    def __post_init__(self):
        if self.eps <= 0.0:
            raise PlanError("eps must be positive")
        if self.q < 2.0:
            raise PlanError("Renyi order q must be >= 2")
        if self.R0 < 0.0:
            raise PlanError("R0 must be nonnegative")
        if self.d < 1:
            raise PlanError("dimension must be >= 1")

    @property
    def rhat(self) -> float:
        return self.R0 if self.R0_hat is None else self.R0_hat


@dataclass(frozen=True)
class Plan:
    """Emitted plan: h, N, waiting-phase N0, horizon T = N h exactly."""

    h: float
    N: int
    N0: int
    T: float
    regime_notes: tuple
    preconditions: tuple

    @property
    def all_preconditions_hold(self) -> bool:
        return all(p.satisfied for p in self.preconditions)

    def assert_valid(self) -> None:
        bad = [p for p in self.preconditions if not p.satisfied]
        if bad:
            lines = "; ".join(f"{p.description} ({p.lhs:g} {p.relation} {p.rhs:g})"
                              for p in bad)
            raise PlanError(f"plan violates preconditions: {lines}")

    def to_dict(self) -> dict:
        return {
            "h": self.h, "N": self.N, "N0": self.N0, "T": self.T,
            "regime_notes": list(self.regime_notes),
            "preconditions": [
                {"description": p.description, "lhs": p.lhs, "rhs": p.rhs,
                 "relation": p.relation, "satisfied": p.satisfied}
                for p in self.preconditions
            ],
        }


def polylog(x: float) -> float:
    """The instantiation ln(e + x) used for hidden polylog factors."""
    return math.log(math.e + x)


def super_poincare_beta(alpha: float, C_lo: float, s_arg: float) -> float:
    """Rate function beta_alpha(s) = 96 C_LO / ln(e + s)^(2 - 2/alpha).

    Recorded for documentation of the two-phase ODE constant's origin;
    the planners consume only the resulting 1/68 decay coefficient.
    """
    return 96.0 * C_lo / math.log(math.e + s_arg) ** (2.0 - 2.0 / alpha)


def plan_lsi(req: PlanRequest) -> Plan:
    """Plan under a log-Sobolev inequality with Lipschitz gradient.

    h = min{ 1/(192 q^2 C L^2), eps/(172 d q^2 C L^2) } so the
    asymptotic bias term 86 d h q^2 C L^2 is at most eps/2, then
    N = N0 + ceil((2 q C / h) ln(2 R0 / eps)) with the waiting phase
    N0 = max(0, ceil((2 C / h) ln((q-1)/2))).
    """
    if req.fi.kind != "LSI":
        raise PlanError("plan_lsi requires LSI constants")
    if abs(req.smooth.s - 1.0) > 1e-12:
        raise PlanError("plan_lsi requires a Lipschitz gradient (s = 1)")
    C, L, q, d, eps = req.fi.C, req.smooth.L, req.q, req.d, req.eps
    h_stab_limit = 1.0 / (192.0 * q**2 * C * L**2)
    h_stab = (1.0 - 1e-9) * h_stab_limit  # keep the open-interval condition strict
    h_eps = eps / (172.0 * d * q**2 * C * L**2)
    notes = []
    if h_eps <= h_stab:
        h = h_eps
        notes.append("h on the accuracy branch eps/(172 d q^2 C L^2)")
    else:
        h = h_stab
        notes.append("h pinned at the stability branch 1/(192 q^2 C L^2)")
    N0 = max(0, math.ceil((2.0 * C / h) * math.log((q - 1.0) / 2.0)))
    decay_arg = max(2.0 * req.R0 / eps, 1.0)
    N = max(1, N0 + math.ceil((2.0 * q * C / h) * math.log(decay_arg)))
    pre = (
        _pre("h < 1/(192 q^2 C_LSI L^2)", h, h_stab_limit, relation="<"),
        _pre("bias term 86 d h q^2 C_LSI L^2 <= eps/2",
             86.0 * d * h * q**2 * C * L**2, eps / 2.0),
        _pre("q >= 2", q, 2.0, relation=">="),
        _pre("C_LSI >= 1", C, 1.0, relation=">="),
        _pre("L >= 1", L, 1.0, relation=">="),
    )
    return Plan(h=h, N=N, N0=N0, T=N * h, regime_notes=tuple(notes), preconditions=pre)


def plan_log_concave(req: PlanRequest) -> Plan:
    """Plan for log-concave targets under a Poincare inequality.

    The step size must satisfy, simultaneously,
        h <= 1/(3L),
        h <= 1/(172 d q^2 C L^2)          (first-phase decrement),
        h <= eps/(176 d q^2 C L^2)        (second-phase bias),
        h <= (1/(384 q L sqrt(N))) min{1, sqrt(N)/(q L^2)},
    with N = N0 + 1 + ceil((2 q C / h) ln(2/eps)) and the first phase
    capped at N0 = ceil(4 q C R0 / h); the h <-> N circularity is
    resolved by fixed-point iteration from N = 1.
    """
    if req.fi.kind != "PI":
        raise PlanError("plan_log_concave requires PI constants")
    if not req.log_concave:
        raise PlanError("plan_log_concave requires the log-concavity flag")
    if abs(req.smooth.s - 1.0) > 1e-12:
        raise PlanError("plan_log_concave requires a Lipschitz gradient (s = 1)")
    C, L, q, d, eps, R0 = req.fi.C, req.smooth.L, req.q, req.d, req.eps, req.R0

    def h_of_N(N):
        h_fluct = (1.0 / (384.0 * q * L * math.sqrt(N))) * min(1.0, math.sqrt(N) / (q * L**2))
        return min(1.0 / (3.0 * L),
                   1.0 / (172.0 * d * q**2 * C * L**2),
                   eps / (176.0 * d * q**2 * C * L**2),
                   h_fluct)

    def N_of_h(h):
        N0 = math.ceil(4.0 * q * C * R0 / h)
        N_decay = math.ceil((2.0 * q * C / h) * math.log(max(2.0 / eps, 1.0)))
        return N0, N0 + 1 + N_decay

    N = 1.0
    N0 = 0
    h = h_of_N(N)
    converged = False
    for _ in range(100):
        N0, N_new = N_of_h(h)
        if N_new == N:
            converged = True
            break
        N = N_new
        h = h_of_N(N)
    if not converged:
        raise PlanError("h <-> N fixed point did not converge in 100 rounds")
    N = int(N)
    h_fluct = (1.0 / (384.0 * q * L * math.sqrt(N))) * min(1.0, math.sqrt(N) / (q * L**2))
    pre = (
        _pre("h <= 1/(3L)", h, 1.0 / (3.0 * L)),
        _pre("h <= 1/(172 d q^2 C_PI L^2)", h, 1.0 / (172.0 * d * q**2 * C * L**2)),
        _pre("h <= eps/(176 d q^2 C_PI L^2)", h, eps / (176.0 * d * q**2 * C * L**2)),
        _pre("h <= (1/(384 q L sqrt(N))) min{1, sqrt(N)/(q L^2)}", h, h_fluct),
        _pre("q >= 2", q, 2.0, relation=">="),
    )
    notes = (f"fixed point reached with N0 = {N0} first-phase iterations",
             "initialize at N(0, L^{-1} I_d)")
    return Plan(h=h, N=N, N0=int(N0), T=N * h, regime_notes=notes, preconditions=pre)


def lo_horizon(order: float, C_lo: float, alpha: float, R0: float, eps: float) -> float:
    """Continuous-time horizon under an order-alpha LO inequality:

        T = 68 q C_LO [ (R0^(2/alpha - 1) - 1) / (2/alpha - 1) + ln(1/eps) ],

    with the alpha -> 2 limit (x^delta - 1)/delta -> ln x.
    """
    if order <= 1.0:
        raise PlanError("horizon order must exceed 1")
    delta = 2.0 / alpha - 1.0
    if R0 <= 1.0:
        poly = 0.0
    elif abs(delta) < 1e-12:
        poly = math.log(R0)
    else:
        poly = math.expm1(delta * math.log(R0)) / delta
    return 68.0 * order * C_lo * (poly + max(math.log(1.0 / eps), 0.0))


def plan_lo(req: PlanRequest) -> Plan:
    """Plan under an order-alpha Latala-Oleszkiewicz inequality.

    Horizon from the two-phase decay at order 2q - 1 with target eps/2;
    step size

        h = eps^(1/s) / (d q^(2/s) C^(1/s) L^(2/s) R0^((2/alpha-1)/s))
            * min{1, 1/(q eps)^(1/s), d/m^s, d/R0_hat^(s/2)} / ln(e + .)

    with unit hidden constants.  Requires s + 1 >= alpha.
    """
    if req.fi.kind != "LO":
        raise PlanError("plan_lo requires LO constants")
    alpha, C = req.fi.alpha, req.fi.C
    s, L = req.smooth.s, req.smooth.L
    q, d, eps, R0 = req.q, req.d, req.eps, req.R0
    if s + 1.0 < alpha - 1e-12:
        raise PlanError(
            f"LO order alpha = {alpha:g} and Hoelder exponent s = {s:g} must "
            f"satisfy s + 1 >= alpha")
    if req.m is None:
        raise PlanError("plan_lo requires the mean norm m")
    T_req = lo_horizon(2.0 * q - 1.0, C, alpha, R0, eps / 2.0)
    base = eps ** (1.0 / s) / (
        d * q ** (2.0 / s) * C ** (1.0 / s) * L ** (2.0 / s)
        * max(R0, 1.0) ** ((2.0 / alpha - 1.0) / s))
    branches = {
        "1": 1.0,
        "1/(q eps)^(1/s)": (1.0 / (q * eps)) ** (1.0 / s),
        "d/m^s": d / req.m**s,
        "d/R0_hat^(s/2)": d / max(req.rhat, 1.0) ** (s / 2.0),
    }
    active = min(branches, key=branches.get)
    h0 = base * branches[active]
    h = h0 / polylog(h0)
    N = max(1, math.ceil(T_req / h))
    pre = (
        _pre("s + 1 >= alpha", s + 1.0, alpha, relation=">="),
        _pre("T >= 68 (2q-1) C_LO [(R0^(2/a-1)-1)/(2/a-1) + ln(2/eps)]", T_req, T_req,
             relation=">="),
        _pre("q >= 2", q, 2.0, relation=">="),
    )
    notes = (f"horizon order 2q-1 = {2 * q - 1:g}, continuous-time target eps/2",
             f"step-size branch: {active}")
    return Plan(h=h, N=N, N0=0, T=N * h, regime_notes=notes, preconditions=pre)


def plan_mlsi(req: PlanRequest) -> Plan:
    """Plan under a modified log-Sobolev inequality with tail order alpha1.

    Horizon T = q C^2 (m + q C_tail R0^(1/alpha1))^(2-alpha0) ln(e + R0)
    and step size per the weak-smoothness formula with unit constants:

        h = eps^(1/s) / (d q^((4-a0)/s) C^(2/s) C_tail^((2-a0)/s) L^(2/s)
                         R0^((2-a0)/(a1 s)))
            * min{1, 1/(q eps)^(1/s), d/m^s, d/R0_hat^(s/2),
                  (R0^(1/a1)/m)^((2-a0)/s)} / ln(e + .)
    """
    if req.fi.kind != "MLSI":
        raise PlanError("plan_mlsi requires MLSI constants")
    a0, a1, C, C_tail = req.fi.alpha0, req.fi.alpha1, req.fi.C, req.fi.C_tail
    if a1 is None or a1 <= 0.0:
        raise PlanError("plan_mlsi requires tail order alpha1 > 0")
    if req.m is None:
        raise PlanError("plan_mlsi requires the mean norm m")
    s, L = req.smooth.s, req.smooth.L
    q, d, eps, R0, m = req.q, req.d, req.eps, max(req.R0, 1.0), req.m
    T_req = q * C**2 * (m + q * C_tail * R0 ** (1.0 / a1)) ** (2.0 - a0) * polylog(req.R0)
    base = eps ** (1.0 / s) / (
        d * q ** ((4.0 - a0) / s) * C ** (2.0 / s) * C_tail ** ((2.0 - a0) / s)
        * L ** (2.0 / s) * R0 ** ((2.0 - a0) / (a1 * s)))
    branches = {
        "1": 1.0,
        "1/(q eps)^(1/s)": (1.0 / (q * eps)) ** (1.0 / s),
        "d/m^s": d / m**s,
        "d/R0_hat^(s/2)": d / max(req.rhat, 1.0) ** (s / 2.0),
        "(R0^(1/a1)/m)^((2-a0)/s)": (R0 ** (1.0 / a1) / m) ** ((2.0 - a0) / s),
    }
    active = min(branches, key=branches.get)
    h0 = base * branches[active]
    h = h0 / polylog(h0)
    N = max(1, math.ceil(T_req / h))
    pre = (
        _pre("alpha0 <= 2", a0, 2.0),
        _pre("0 < alpha1 <= 1", a1, 1.0),
        _pre("q >= 2", q, 2.0, relation=">="),
    )
    notes = (f"step-size branch: {active}",)
    return Plan(h=h, N=N, N0=0, T=N * h, regime_notes=notes, preconditions=pre)


def _decay_rhs(fi: FIConstants, q: float):
    C = fi.C
    if fi.kind == "LSI":
        return lambda R: -(2.0 / (q * C)) * R
    if fi.kind == "PI":
        return lambda R: -(2.0 / (q * C)) * (1.0 if R >= 1.0 else R)
    if fi.kind == "LO":
        a = fi.alpha
        return lambda R: -(1.0 / (68.0 * q * C)) * (R ** (2.0 - 2.0 / a) if R >= 1.0 else R)
    raise PlanError(f"no continuous-time decay form for kind {fi.kind}")


def predict_continuous_decay(fi: FIConstants, q: float, R0: float,
                             t_grid: np.ndarray) -> DecayCurve:
    """Integrate the continuous-time decay differential inequality.

    Produces the upper-bound prediction curve R(t) with R(0) = R0 using
    classical RK4 with internal step at most q C / 1000 (the piecewise
    right side is integrated phase by phase, so the kink at R = 1 costs
    no accuracy away from the crossing).
    """
    rhs = _decay_rhs(fi, q)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or t_grid[0] < 0.0:
        raise ValueError("t_grid must be a 1D nonnegative time grid")
    if np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")
    dt_max = q * fi.C / 1000.0
    values = np.empty_like(t_grid)
    t_prev, R = 0.0, float(R0)
    for i, t in enumerate(t_grid):
        span = t - t_prev
        if span > 0.0:
            n_sub = max(1, int(math.ceil(span / dt_max)))
            dt = span / n_sub
            for _ in range(n_sub):
                k1 = rhs(R)
                k2 = rhs(max(R + 0.5 * dt * k1, 0.0))
                k3 = rhs(max(R + 0.5 * dt * k2, 0.0))
                k4 = rhs(max(R + dt * k3, 0.0))
                R = max(R + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, 0.0)
        values[i] = R
        t_prev = t
    return DecayCurve(times=t_grid, values=values, q=q)


def lo_phase_boundary(q: float, C: float, alpha: float, R0: float) -> float:
    """Time at which the order-alpha decay ODE reaches R = 1 from R0 > 1."""
    if R0 <= 1.0:
        return 0.0
    delta = 2.0 / alpha - 1.0
    if abs(delta) < 1e-12:
        return 68.0 * q * C * math.log(R0)
    return 68.0 * q * C * (R0**delta - 1.0) / delta


def lo_decay_closed_form(q: float, C: float, alpha: float, R0: float,
                         t: np.ndarray) -> np.ndarray:
    """Piecewise closed-form solution of the order-alpha decay ODE."""
    t = np.asarray(t, dtype=float)
    rate = 1.0 / (68.0 * q * C)
    delta = 2.0 / alpha - 1.0
    t1 = lo_phase_boundary(q, C, alpha, R0)
    out = np.empty_like(t)
    early = t < t1
    if abs(delta) < 1e-12:
        out[early] = R0 * np.exp(-rate * t[early])
    else:
        out[early] = (R0**delta - delta * rate * t[early]) ** (1.0 / delta)
    start = min(R0, 1.0)
    out[~early] = start * np.exp(-rate * (t[~early] - t1))
    return out


@dataclass(frozen=True)
class InitDesign:
    """Gaussian initialization law with its explicit warmness bound (nats)."""

    law: GaussianLaw
    bound: float
    variant: str


def init_design(spec: PotentialSpec, variant: str,
                modified: Optional[ModifiedPotential] = None) -> InitDesign:
    """Gaussian initialization with an explicit R_infinity warmness bound.

    convex   : mu0 = N(0, L^{-1} I),      bound 2 + (d/2) ln(2 m^2 L)
    general  : mu0 = N(0, (2L)^{-1} I),   bound 2 + L + V(0) - min V
                                                + (d/2) ln(4 m^2 L)
    modified : mu0 = N(0, (2L+g)^{-1} I), bound 2 + L + g/2 + V(0) - min V
                                                + (d/2) ln(4 mhat^2 L),
               mhat = R + 1/sqrt(g) for the hinge-modified target.
    """
    L, d = spec.smoothness.L, spec.d
    m = spec.mean_norm
    if m is None:
        m = estimate_mean_norm(spec)
    if variant == "convex":
        if not spec.convex:
            raise PlanError("convex initialization requires a convex potential")
        if abs(spec.smoothness.s - 1.0) > 1e-12:
            raise PlanError("convex initialization requires s = 1 (Lipschitz gradient)")
        law = GaussianLaw.isotropic(d, 1.0 / L)
        bound = 2.0 + 0.5 * d * math.log(2.0 * m**2 * L)
        return InitDesign(law=law, bound=bound, variant=variant)
    if variant == "general":
        if spec.min_V is None:
            raise PlanError("general initialization requires min_V metadata")
        law = GaussianLaw.isotropic(d, 1.0 / (2.0 * L))
        bound = (2.0 + L + spec.V_at_0 - spec.min_V
                 + 0.5 * d * math.log(4.0 * m**2 * L))
        return InitDesign(law=law, bound=bound, variant=variant)
    if variant == "modified":
        if modified is None:
            raise PlanError("modified initialization requires a ModifiedPotential")
        if spec.min_V is None:
            raise PlanError("modified initialization requires min_V metadata")
        gamma, R = modified.gamma, modified.R
        m_hat = R + 1.0 / math.sqrt(gamma)
        law = GaussianLaw.isotropic(d, 1.0 / (2.0 * L + gamma))
        bound = (2.0 + L + 0.5 * gamma + spec.V_at_0 - spec.min_V
                 + 0.5 * d * math.log(4.0 * m_hat**2 * L))
        return InitDesign(law=law, bound=bound, variant=variant)
    raise PlanError(f"unknown init variant {variant!r}")
