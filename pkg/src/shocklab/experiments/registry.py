"""Registered experiments; each returns a list of summary records."""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .. import inequalities as iq
from ..functionals import ShockFrame, dissipation_identity_check, eval_Y_ablation
from ..grid import ChannelGrid
from ..shock_profile import build_weight, burgers_closed_form, solve_profile, validate_profile
from ..solver import SolverConfig, evolve_pair, simulate
from .config import ExperimentConfig, build_setup, perturbation
from .fitting import fit_decay, monotonicity_audit
from .outputs import write_rows, write_trajectory

# default experiment parameters; keys not listed here are rejected
PARAMS = {
    "profile": {"tolerance": 1e-8},
    # floor: absolute entropy level of the discrete profile drift, added to E in the relative audit
    "contraction": {"tolerance": 1e-6, "refine": False, "floor": 1e-8},
    "decay": {"t0": 20.0, "t1": 500.0, "slope_min": -0.35, "slope_max": -0.15, "control_L": False,
              "control_tolerance": 0.02},
    "l1": {"amplitude2": 0.2, "center2": 0.0, "width2": 20.0, "sample_every": 1.0, "tolerance": 1e-8},
    "shift-bound": {"double": False, "stability": 0.05},
    "identity": {"strides": [4, 2, 1], "tolerance": 1e-3, "min_ratio": 1.8, "ablation": True},
    "inequalities": {"eps": 1e-2, "delta": 1e-3, "M": 5.0, "n_R": 1000, "n_f": 100, "n_z": 128},
}


# |Xdot| and its bound are computed by different float operations; allow a few ulps
SHIFT_BOUND_ULPS = 4 * np.finfo(float).eps


def experiment_names() -> list[str]:
    return sorted(PARAMS)


def resolve_params(cfg: ExperimentConfig) -> dict:
    from ..errors import ConfigError

    if cfg.experiment not in PARAMS:
        raise ConfigError(f"experiment: unknown experiment {cfg.experiment!r} (choose from {', '.join(experiment_names())})")
    defaults = PARAMS[cfg.experiment]
    unknown = sorted(set(cfg.params) - set(defaults))
    if unknown:
        raise ConfigError(f"params: unknown key(s) {', '.join(unknown)} for experiment {cfg.experiment!r}")
    from .config import _coerce

    out = dict(defaults)
    for k, v in cfg.params.items():
        out[k] = _coerce(defaults[k], v, f"params.{k}")
    return out


def _record(name: str, passed: bool, **metrics) -> dict:
    clean = {}
    for k, v in metrics.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        clean[k] = v
    return {"name": name, "passed": bool(passed), **clean}


def _solver_config(cfg: ExperimentConfig, **kw) -> SolverConfig:
    r = cfg.run
    base = dict(t_end=r.t_end, cadence=r.cadence, scheme=r.scheme, time=r.time,
                cfl_advective=r.cfl_advective, cfl_diffusive=r.cfl_diffusive)
    base.update(kw)
    return SolverConfig(**base)


def _prepare(cfg: ExperimentConfig, L=None, n_xi=None):
    setup = build_setup(cfg)
    g = cfg.geometry
    L = g.L if L is None else L
    n_xi = g.n_xi if n_xi is None else n_xi
    prof = solve_profile(setup.sys.flux, setup.u_minus, setup.u_plus, L=L, n_xi=n_xi)
    weight = build_weight(prof, cfg.shock.lam)
    grid = ChannelGrid(L, n_xi, g.d, g.n_t)
    u0 = grid.expand(prof.u) + perturbation(cfg, grid)
    return setup, prof, weight, grid, u0


def _run(cfg, L=None, n_xi=None, **solver_kw):
    setup, prof, weight, grid, u0 = _prepare(cfg, L, n_xi)
    traj = simulate(u0, prof, weight, setup.sys, _solver_config(cfg, **solver_kw), grid)
    return traj, prof, grid


# ---------------------------------------------------------------------------


def run_profile(cfg: ExperimentConfig, params: dict, out: Path) -> list[dict]:
    setup = build_setup(cfg)
    prof = solve_profile(setup.sys.flux, setup.u_minus, setup.u_plus, L=cfg.geometry.L, n_xi=cfg.geometry.n_xi)
    weight = build_weight(prof, cfg.shock.lam)
    prof.to_csv(out / "profile.csv", weight)
    rep = validate_profile(prof)
    recs = [_record("profile_shape", rep.monotone and rep.within_states and rep.finite,
                    midpoint_error=rep.midpoint_error, ode_residual=rep.ode_residual,
                    sup_slope=rep.sup_slope, C1=rep.C1, C2=rep.C2, curvature_ratio=rep.curvature_ratio,
                    core_slope_inf=rep.core_slope_inf, jacobian_defect=rep.jacobian_defect)]
    if cfg.flux.name == "burgers" and setup.speed_offset == 0.0:
        err = float(np.max(np.abs(prof.u - burgers_closed_form(prof.sigma, prof.eps, prof.xi))))
        recs.append(_record("profile_closed_form", err <= params["tolerance"], sup_error=err,
                            tolerance=params["tolerance"]))
    # int a' over [-L, L] equals lam (u(-L) - u(L)) / eps, so truncated tails show up here
    tv = weight.total_variation()
    tail = cfg.shock.lam * (1.0 - (prof.u[0] - prof.u[-1]) / prof.eps)
    recs.append(_record("weight_total_variation", abs(tv - cfg.shock.lam) <= 1e-3 * cfg.shock.lam,
                        total_variation=tv, lam=cfg.shock.lam, tail_defect=tail))
    return recs


def run_contraction(cfg, params, out):
    traj, prof, grid = _run(cfg, cadence=0.0)
    write_trajectory(out / "trajectory.csv", traj)
    E = traj.column("weighted_entropy")
    fine = None
    if params["refine"]:
        tf, _, _ = _run(cfg, n_xi=2 * cfg.geometry.n_xi - 1, cadence=0.0)
        write_trajectory(out / "trajectory_fine.csv", tf)
        fine = tf.column("weighted_entropy")
    rep = monotonicity_audit(E, params["tolerance"], floor=params["floor"], fine=fine)
    return [_record("weighted_entropy_monotone", rep.passed, steps=rep.n_steps, violations=rep.violations,
                    worst=rep.worst, worst_fine=rep.worst_fine, refinement_ok=rep.refinement_ok,
                    E_start=float(E[0]), E_end=float(E[-1]))]


def run_decay(cfg, params, out):
    traj, prof, grid = _run(cfg)
    write_trajectory(out / "trajectory.csv", traj)
    window = (params["t0"], params["t1"])
    fit = fit_decay(traj.column("t"), traj.column("L2"), window)
    ok = params["slope_min"] <= fit.slope <= params["slope_max"]
    recs = [_record("decay_slope", ok, slope=fit.slope, intercept=fit.intercept, residual=fit.residual,
                    window=list(window), samples=fit.n)]
    if params["control_L"]:
        g = cfg.geometry
        t2, _, _ = _run(cfg, L=2 * g.L, n_xi=2 * g.n_xi - 1)
        write_trajectory(out / "trajectory_2L.csv", t2)
        fit2 = fit_decay(t2.column("t"), t2.column("L2"), window)
        diff = abs(fit2.slope - fit.slope)
        recs.append(_record("decay_domain_control", diff < params["control_tolerance"], slope_2L=fit2.slope,
                            difference=diff))
    return recs


def run_l1(cfg, params, out):
    setup, prof, weight, grid, u0 = _prepare(cfg)
    xi = grid.coords()[0]
    bump = params["amplitude2"] * np.exp(-((xi - params["center2"]) ** 2) / params["width2"])
    v0 = u0 + np.broadcast_to(bump, grid.shape)
    t, dist = evolve_pair(u0, v0, prof, setup.sys, _solver_config(cfg), grid, params["sample_every"])
    write_rows(out / "l1_distance.csv", ["t", "L1"], zip(t, dist))
    growth = np.diff(dist) / (dist[:-1] * np.diff(t))
    worst = float(growth.max()) if growth.size else 0.0
    return [_record("l1_contraction", worst <= params["tolerance"], worst_growth_rate=worst,
                    start=float(dist[0]), end=float(dist[-1]))]


def run_shift_bound(cfg, params, out):
    traj, prof, grid = _run(cfg)
    write_trajectory(out / "trajectory.csv", traj)
    viol = traj.shift.bound_violation()
    supX = float(np.max(np.abs(traj.shift.X + [traj.final.X])))
    recs = [_record("shift_velocity_bound", viol <= SHIFT_BOUND_ULPS, max_relative_excess=viol, sup_X=supX)]
    if params["double"]:
        t2, _, _ = _run(cfg, t_end=2 * cfg.run.t_end)
        supX2 = float(np.max(np.abs(t2.shift.X + [t2.final.X])))
        rel = abs(supX2 - supX) / max(supX, 1e-300)
        recs.append(_record("shift_sup_stable", rel <= params["stability"], sup_X=supX, sup_X_doubled=supX2,
                            relative_change=rel))
    return recs


def run_identity(cfg, params, out):
    setup, prof, weight, grid, u0 = _prepare(cfg)
    ablated = []
    frame = ShockFrame(grid, prof, weight, setup.sys)

    def keep(state, sample):
        # Y with a in place of a' alongside every sample
        ablated.append(eval_Y_ablation(frame, grid.shift_array(state.u, state.X)))

    callback = keep if params["ablation"] else None
    traj = simulate(u0, prof, weight, setup.sys, _solver_config(cfg), grid, callback=callback)
    write_trajectory(out / "trajectory.csv", traj)
    t = traj.column("t")
    E = traj.column("weighted_entropy")
    rhs = traj.rhs_identity()
    strides = [int(s) for s in params["strides"]]
    res = dissipation_identity_check(t, E, rhs, strides)
    ratios = [res[k].residual / res[k + 1].residual for k in range(len(res) - 1)]
    ok = res[0].residual <= params["tolerance"] and all(r >= params["min_ratio"] for r in ratios)
    recs = [_record("dissipation_identity", ok, strides=strides, residuals=[r.residual for r in res],
                    ratios=ratios)]
    if params["ablation"]:
        dX = traj.column("dXdt")
        rep = [s.report for s in traj.samples]
        rhs_ab = np.array([dX[k] * ablated[k] + rep[k].B - rep[k].G0 - rep[k].D for k in range(len(rep))])
        ab = dissipation_identity_check(t, E, rhs_ab, strides[-1:])[0]
        recs.append(_record("identity_ablation", ab.residual > 10 * res[-1].residual,
                            residual_with_a=ab.residual, residual_with_da=res[-1].residual))
    return recs


def run_inequalities(cfg, params, out):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    theta, quad = iq.theta_constant()
    rows.append(_record("theta", abs(quad - (5 - math.pi**2 / 3)) <= 1e-10, theta=theta, quadrature=quad))
    g2 = iq.g_poly_exact(-2)
    rows.append(_record("g_endpoints", g2 == Fraction(-4, 3) and float(iq.g_poly(0.0)) == 0.0,
                        g_minus2=str(g2), g_0=float(iq.g_poly(0.0))))
    alg = iq.algebraic_suite()
    rows.append(_record("g_negative", alg.g_max_on_grid < 0, g_max=alg.g_max_on_grid))
    rows.append(_record("algebraic_region", alg.nonempty, delta2=alg.delta2, deltas=alg.deltas,
                        delta3=[d if math.isfinite(d) else None for d in alg.delta3]))
    exps = [str(t) for t in iq.GN_EXPONENTS]
    rows.append(_record("gn_exponents", exps == ["1/3", "1/2", "3/5"], exponents=exps))
    cos_mode = iq.from_callable(lambda z, x: np.cos(2 * np.pi * x) + 0 * z, lambda z, x: 0 * z + 0 * x,
                                dx=[lambda z, x: -2 * np.pi * np.sin(2 * np.pi * x) + 0 * z], d=1)
    z_mode = iq.from_callable(lambda z: z, lambda z: np.ones_like(z), d=0, n_z=1024)
    for name, W in (("poincare_cos", cos_mode), ("poincare_z", z_mode)):
        s = iq.poincare_slack(W)
        rows.append(_record(name, s >= -1e-10, slack=s))
    slacks = [iq.pointwise_lemma_check(iq.random_trig_f(rng, d=1)) for _ in range(params["n_f"])]
    rows.append(_record("pointwise_random", min(slacks) >= -1e-8, min_slack=min(slacks), samples=len(slacks)))
    eps, delta, M = params["eps"], params["delta"], params["M"]
    R = []
    for k in range(params["n_R"]):
        W = iq.random_constrained_W(rng, eps, M, d=1 + k % 2, n_z=params["n_z"], n_t=16 if k % 2 == 0 else 8)
        R.append(iq.eval_R(W, eps, delta, M))
    R = np.array(R)
    rows.append(_record("nonlinear_poincare_random", bool(np.all(R <= 0)), max_R=float(R.max()),
                        violations=int(np.sum(R > 0)), samples=R.size, eps=eps, delta=delta, M=M))
    gn = []
    for lam in np.geomspace(1 / 8, 8, 13):
        grid = ChannelGrid(12.0 / lam, 4097, 1, 4)
        xi = grid.coords()[0]
        gn.append(iq.gn_check(np.broadcast_to(np.exp(-((lam * xi) ** 2)), grid.shape), grid))
    rows.append(_record("gn_gaussian_family", max(gn) <= 10.0, C_eff_max=max(gn), C_eff_min=min(gn)))
    return rows


RUNNERS = {
    "profile": run_profile,
    "contraction": run_contraction,
    "decay": run_decay,
    "l1": run_l1,
    "shift-bound": run_shift_bound,
    "identity": run_identity,
    "inequalities": run_inequalities,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> tuple[Path, list[dict]]:
    """Run the configured experiment; write config, CSVs and summary.jsonl."""
    from .config import validate_config
    from .outputs import write_summary

    warnings = validate_config(cfg)
    params = resolve_params(cfg)
    out = Path(out_dir if out_dir is not None else cfg.out) / f"{cfg.experiment}-{cfg.config_hash()}"
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(cfg.to_yaml())
    records = RUNNERS[cfg.experiment](cfg, params, out)
    for w in warnings:
        records.append(_record("regime_warning", True, message=w))
    write_summary(out / "summary.jsonl", records, cfg)
    return out, records
