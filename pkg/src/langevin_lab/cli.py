"""Command-line orchestration: experiment configs in, CSV/JSON reports out.

    langevin-lab <command> --config <path> [--out <dir>] [--seed <u64>] [--plot]

Commands: plan, sample, bias-scan, decay-curve, init-check, verify.
Exit codes: 0 all assertions passed, 1 assertion failure, 2 config error.
Every report echoes its effective config and seed; re-running from the
echo reproduces all numbers bit-for-bit.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import density_lab as dl
from . import gaussian_oracle as go
from . import planner as pl
from . import sampler as sp
from . import verify as vf
from .config import ConfigError
from .divergence import GridDensity
from .potentials import make_modified
from .report import RunReport, check, write_csv

_PLANNERS = {"lsi": pl.plan_lsi, "log_concave": pl.plan_log_concave,
             "lo": pl.plan_lo, "mlsi": pl.plan_mlsi}


def cmd_plan(cfg, seed, outdir, plot=False) -> RunReport:
    req = cfgmod.build_plan_request(cfg["plan"])
    plan = _PLANNERS[cfg["plan"]["kind"]](req)
    report = RunReport(command="plan", config=cfg, seed=seed)
    for p in plan.preconditions:
        report.add(check(p.description, p.lhs, p.relation, p.rhs,
                         slack=1e-9 * max(abs(p.rhs), 1.0)))
    report.metrics["plan"] = plan.to_dict()
    print(json.dumps(plan.to_dict(), indent=2, sort_keys=True))
    return report


def cmd_sample(cfg, seed, outdir, plot=False) -> RunReport:
    sc = cfg["sample"]
    spec = cfgmod.build_potential(sc["potential"])
    init = cfgmod.build_init(sc.get("init"), spec.d)
    ens, traj = sp.lmc_run(spec, init, float(sc["h"]), int(sc["n_steps"]),
                           int(sc["n_particles"]), seed,
                           track_norms=bool(sc.get("track_norms", False)))
    report = RunReport(command="sample", config=cfg, seed=seed)
    if sc.get("snapshot", False):
        path = Path(outdir) / "ensemble.csv"
        ens.to_csv(path)
        report.outputs.append(str(path))
    if traj is not None:
        path = Path(outdir) / "norm_stats.csv"
        traj.to_csv(path)
        report.outputs.append(str(path))
    r = ens.norms()
    report.metrics.update(n_particles=ens.n_particles, step_index=ens.step_index,
                          mean_norm=float(r.mean()), max_norm=float(r.max()))
    if sc.get("oracle_check", False):
        if sc["potential"]["family"] != "quadratic":
            raise ConfigError("oracle_check requires a quadratic potential")
        A = np.asarray(sc["potential"].get("A", np.eye(spec.d)), dtype=float)
        if A.ndim == 1:
            A = np.diag(A)
        tgt = go.QuadraticTarget(A=A)
        law = go.lmc_law(tgt, init, float(sc["h"]), int(sc["n_steps"]))
        n = ens.n_particles
        emp_mean = ens.positions.mean(axis=0)
        emp_var = ens.positions.var(axis=0, ddof=1)
        for i in range(spec.d):
            se_mean = math.sqrt(law.cov[i, i] / n)
            report.add(check(f"oracle moment check: |mean[{i}] - exact| <= 4 SE",
                             abs(emp_mean[i] - law.mean[i]), "<=", 4.0 * se_mean))
            se_var = law.cov[i, i] * math.sqrt(2.0 / (n - 1))
            report.add(check(f"oracle moment check: |var[{i}] - exact| <= 4 SE",
                             abs(emp_var[i] - law.cov[i, i]), "<=", 4.0 * se_var))
    return report


def cmd_bias_scan(cfg, seed, outdir, plot=False) -> RunReport:
    sc = cfg["bias_scan"]
    ds, qs, hs = sc["d"], sc["q"], sc["h"]
    report = RunReport(command="bias-scan", config=cfg, seed=seed)
    rows = []
    bias_table = {}
    for d, q, h in itertools.product(ds, qs, hs):
        tgt = go.QuadraticTarget(A=np.eye(int(d)))
        b = go.renyi_bias(tgt, float(h), float(q))
        bound = go.bias_bound(tgt, float(h), float(q))
        bias_table[(d, q, h)] = b
        rows.append((int(d), float(h), float(q), b, bound))
        report.add(check(f"bias(d={d}, h={h:g}, q={q:g}) <= 86 d h q^2 C_LSI L^2",
                         b, "<=", bound))
    for d, q, h in itertools.product(ds, qs, hs):
        if (2 * d, q, h) in bias_table:
            report.add(check(f"tensorization: bias(2d)/bias(d) == 2 (d={d}, q={q:g}, h={h:g})",
                             bias_table[(2 * d, q, h)] / bias_table[(d, q, h)],
                             "==", 2.0, slack=1e-10))
    ratio_rows = []
    for d, q, h in itertools.product(ds, qs, hs):
        if (d, q, h / 2.0) in bias_table:
            ratio_rows.append((d, q, h, bias_table[(d, q, h)] / bias_table[(d, q, h / 2.0)]))
    report.metrics["h_halving_ratios"] = [
        {"d": d, "q": q, "h": h, "ratio": r} for d, q, h, r in ratio_rows]
    path = Path(outdir) / "bias_scan.csv"
    write_csv(path, ["d", "h", "q", "bias", "bound"], rows, meta={"seed": seed})
    report.outputs.append(str(path))
    if plot:
        from .plotting import plot_bias_scan
        png = Path(outdir) / "bias_scan.png"
        plot_bias_scan(rows, png)
        report.outputs.append(str(png))
    return report


def cmd_decay_curve(cfg, seed, outdir, plot=False) -> RunReport:
    sc = cfg["decay_curve"]
    spec = cfgmod.build_potential(sc["potential"])
    if spec.d != 1:
        raise ConfigError("decay-curve runs on 1D targets")
    window = tuple(sc["window"])
    n = int(sc["n"])
    q = float(sc["q"])
    target = dl.target_density_grid(spec, window, n)
    init = cfgmod.build_init(sc.get("init"), 1)
    mu0 = GridDensity.from_function(init.density, target.lo, target.hi, target.n)
    h, T = float(sc["h"]), float(sc["T"])
    save_every = int(sc.get("save_every", 1))
    report = RunReport(command="decay-curve", config=cfg, seed=seed)
    if sc["mode"] == "diffusion":
        curve = dl.diffusion_decay_curve(spec, mu0, target, q, h, T,
                                         save_every=save_every)
        report.add(check("diffusion decay curve nonincreasing (max upward jump)",
                         curve.max_increase(), "<=", 1e-9))
    else:
        n_steps = max(1, int(round(T / h)))
        pcfg = dl.PropagationConfig(potential=spec, h=h, n_steps=n_steps)
        res = dl.propagate_lmc_density(mu0, pcfg, save_every=save_every)
        curve = dl.decay_curve(q, res.times, res.densities, target)
        report.metrics["max_renorm_drift"] = float(np.abs(res.renorm_drift).max())
    predicted = None
    if "predict" in sc:
        pr = sc["predict"]
        from .potentials import FIConstants
        fi = FIConstants(kind=pr["kind"], C=float(pr["C"]),
                         alpha=float(pr.get("alpha", 1.0)) if pr["kind"] == "LO" else None)
        predicted = pl.predict_continuous_decay(fi, q, curve.values[0], curve.times)
    path = Path(outdir) / "decay_curve.csv"
    meta = {"q": q, "h": h, "potential": spec.name,
            "grid": f"[{window[0]},{window[1]}]x{n}", "mode": sc["mode"], "seed": seed}
    if predicted is None:
        curve.to_csv(path, meta=meta)
    else:
        write_csv(path, ["t", "R_q", "predicted_R_q"],
                  list(zip(curve.times, curve.values, predicted.values)), meta=meta)
    report.outputs.append(str(path))
    report.metrics.update(R0=float(curve.values[0]), R_final=float(curve.values[-1]),
                          T=float(curve.times[-1]))
    if plot:
        from .plotting import plot_decay_curve
        png = Path(outdir) / "decay_curve.png"
        plot_decay_curve(curve.times, curve.values,
                         None if predicted is None else predicted.values, q, png,
                         title=spec.name)
        report.outputs.append(str(png))
    return report


def cmd_init_check(cfg, seed, outdir, plot=False) -> RunReport:
    sc = cfg["init_check"]
    spec = cfgmod.build_potential(sc["potential"])
    if spec.d != 1:
        raise ConfigError("init-check verifies the bound on 1D grids")
    variant = sc["variant"]
    modified = None
    eval_spec = spec
    if variant == "modified":
        if "gamma" not in sc or "R" not in sc:
            raise ConfigError("modified init-check requires gamma and R")
        modified = make_modified(spec, float(sc["gamma"]), float(sc["R"]))
        eval_spec = modified
    design = pl.init_design(spec, variant, modified=modified)
    target = dl.target_density_grid(eval_spec, tuple(sc["window"]), int(sc["n"]))
    mu0 = GridDensity.from_function(design.law.density, target.lo, target.hi, target.n)
    mask = (target.values > 0.0) & (mu0.values > 0.0)
    r_inf = float((np.log(mu0.values[mask]) - np.log(target.values[mask])).max())
    report = RunReport(command="init-check", config=cfg, seed=seed)
    report.add(check(f"grid R_inf(mu0 || pi) <= bound ({variant})",
                     r_inf, "<=", design.bound, slack=1e-9))
    report.metrics.update(bound=design.bound, grid_R_inf=r_inf,
                          init_variance=float(design.law.cov[0, 0]))
    return report


def cmd_verify(cfg, seed, outdir, plot=False) -> RunReport:
    sc = cfg.get("verify", {})
    assertions, metrics = vf.full_suite(
        n_instances=int(sc.get("n_instances", 300)),
        n_paths=int(sc.get("n_paths", 20000)),
        grid_n=int(sc.get("grid_n", 96)),
        seed=seed,
        negative_control=bool(sc.get("negative_control", True)),
    )
    report = RunReport(command="verify", config=cfg, seed=seed)
    report.assertions.extend(assertions)
    report.metrics.update(metrics)
    return report


_COMMANDS = {
    "plan": cmd_plan,
    "sample": cmd_sample,
    "bias-scan": cmd_bias_scan,
    "decay-curve": cmd_decay_curve,
    "init-check": cmd_init_check,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="langevin-lab",
        description="Langevin Monte Carlo laboratory: planning, sampling, "
                    "exact grid laws, and bound verification.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--plot", action="store_true",
                       help="render figures next to the CSV output")
    args = parser.parse_args(argv)

    try:
        cfg = cfgmod.load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg["command"] != args.command:
        print(f"config error: config is for {cfg['command']!r}, "
              f"invoked as {args.command!r}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    cfg = dict(cfg)
    cfg["seed"] = seed

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        report = _COMMANDS[args.command](cfg, seed, outdir, plot=args.plot)
    except (ConfigError, pl.PlanError, dl.KernelResolutionError, dl.MassLossError,
            dl.BoundaryLeakError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report.wall_clock = time.perf_counter() - t0
    report_path = outdir / "report.json"
    report.to_json(report_path)
    report.outputs.append(str(report_path))
    for a in report.assertions:
        status = "PASS" if a.passed else "FAIL"
        print(f"[{status}] {a.name}: {a.lhs:.6g} {a.relation} {a.rhs:.6g}")
    if not report.passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
