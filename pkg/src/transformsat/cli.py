"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 infeasible optimisation,
3 configuration/validation error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .attitude import sun_vector_body
from .config import ConfigError, load_config
from .control import default_weights, linearize, natural_frequency, solve_lqr
from .equilibrium import InfeasibleTargetError, solve
from .jacobians import finite_difference_wrench, relative_errors, wrench_jacobian
from .model import forward_kinematics
from .sim import LQR, integrate, metrics

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2, 3
OUT_ENV = "TRANSFORMSAT_OUT"

log = logging.getLogger("transformsat")


class Infeasible(RuntimeError):
    pass


def _out_dir(args) -> Path:
    out = Path(os.environ.get(OUT_ENV) or args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _optimize(cfg, model, env, args, out):
    problem = cfg.problem(model)
    try:
        sol = solve(model, env, problem, jobs=args.jobs)
    except InfeasibleTargetError as exc:
        io.write_json({"status": "infeasible", "reason": str(exc)}, out / cfg.data["output"]["solution"])
        raise Infeasible(str(exc)) from None
    io.export(sol, out / cfg.data["output"]["solution"])
    if not sol.converged:
        raise Infeasible(f"no roll seed converged; best residuals {sol.residuals}")
    return sol


def _load_solution(cfg, args, out):
    path = Path(args.solution) if args.solution else out / cfg.data["output"]["solution"]
    d = io.read_json(path)
    if d.get("status") != "converged":
        raise Infeasible(f"{path} does not hold a converged solution")
    return io.solution_from_dict(d)


def _lqr(cfg, model, env, sol, out):
    omega_n = natural_frequency(sol.spectrum)
    system = linearize(model, env, sol.phi_star, sol.theta_star)
    gain = solve_lqr(system, default_weights(model.n_joints, omega_n, cfg.angle_scale()))
    io.write_json(io.gain_to_dict(gain, omega_n), out / cfg.data["output"]["gain"])
    return gain, omega_n


def _simulate(cfg, model, env, sol, gain, omega_n, out):
    sim_cfg = cfg.sim_config(model, omega_n)
    traj = integrate(model, env, sim_cfg, sol.phi_star, sol.theta_star,
                     gain if sim_cfg.control == LQR else None)
    io.write_trajectory_csv(traj, out / cfg.data["output"]["trajectory"])
    report = metrics(traj, cfg.data["target"]["f_target_N"])
    io.write_json(report, out / "metrics.json")
    return traj, report


def cmd_validate(cfg, args):
    model = cfg.build_model()
    print(f"ok: {model.n_bodies} bodies, {model.n_joints} joints, total mass {model.total_mass:g} kg")


def cmd_optimize(cfg, args):
    out = _out_dir(args)
    sol = _optimize(cfg, cfg.build_model(), cfg.environment(), args, out)
    print(f"converged at seed {sol.seed_index}: phi = {np.rad2deg(sol.phi_star).round(4).tolist()} deg, "
          f"f = {sol.spectrum.f_value:.6e} 1/s")


def cmd_lqr(cfg, args):
    out = _out_dir(args)
    model, env = cfg.build_model(), cfg.environment()
    gain, omega_n = _lqr(cfg, model, env, _load_solution(cfg, args, out), out)
    print(f"omega_n = {omega_n:.6e} 1/s, residual = {gain.residual_norm:.3e}, "
          f"spectral abscissa = {gain.spectral_abscissa:.3e} 1/s")


def cmd_simulate(cfg, args):
    out = _out_dir(args)
    model, env = cfg.build_model(), cfg.environment()
    sol = _load_solution(cfg, args, out)
    omega_n = natural_frequency(sol.spectrum)
    gain = None
    if cfg.data["sim"]["control"] == LQR:
        gpath = Path(args.gain) if args.gain else out / cfg.data["output"]["gain"]
        gain = io.gain_from_dict(io.read_json(gpath)) if gpath.exists() else _lqr(cfg, model, env, sol, out)[0]
    _, report = _simulate(cfg, model, env, sol, gain, omega_n, out)
    print(f"final |dphi| = {report['final_dphi_deg']:.3e} deg, |omega| = {report['final_omega_degps']:.3e} deg/s")


def cmd_jacobian_check(cfg, args):
    out = _out_dir(args)
    model, env = cfg.build_model(), cfg.environment()
    rng = np.random.default_rng(args.seed)
    lo, hi = model.theta_bounds
    errs = {}
    done = 0
    while done < args.samples:
        phi = rng.uniform(-0.3, 0.3, 3)
        theta = rng.uniform(np.maximum(lo, -0.5), np.minimum(hi, 0.5))
        kin = forward_kinematics(model, theta)
        if np.any(kin.surface_normal[model.surf_front] @ sun_vector_body(phi) <= 0.05):
            continue
        e = relative_errors(wrench_jacobian(model, kin, phi, env),
                            finite_difference_wrench(model, phi, theta, env, h=args.step))
        for k, v in e.items():
            errs.setdefault(k, []).append(v)
        done += 1
    report = {k: {"max": float(np.max(v)), "mean": float(np.mean(v))} for k, v in errs.items()}
    report["samples"] = args.samples
    report["step"] = args.step
    io.write_json(report, out / "jacobian_check.json")
    print(" ".join(f"{k}: {v['max']:.2e}" for k, v in report.items() if isinstance(v, dict)))


def cmd_pipeline(cfg, args):
    out = _out_dir(args)
    model, env = cfg.build_model(), cfg.environment()
    sol = _optimize(cfg, model, env, args, out)
    gain, omega_n = _lqr(cfg, model, env, sol, out)
    _, report = _simulate(cfg, model, env, sol, gain, omega_n, out)
    print(f"omega_n = {omega_n:.6e} 1/s; final |dphi| = {report['final_dphi_deg']:.3e} deg")


COMMANDS = {
    "validate": cmd_validate,
    "optimize": cmd_optimize,
    "lqr": cmd_lqr,
    "simulate": cmd_simulate,
    "jacobian-check": cmd_jacobian_check,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transformsat",
                                     description="SRP equilibrium, LQR momentum damping and simulation "
                                                 "for multi-panel spacecraft.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default="out", help="output directory (env %s overrides)" % OUT_ENV)
        p.add_argument("--jobs", type=int, default=1, help="parallel roll seeds")
        p.add_argument("--seed", type=int, default=0, help="RNG seed for randomised checks")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("lqr", "simulate"):
            p.add_argument("--solution", help="solution JSON (default: <out>/<output.solution>)")
        if name == "simulate":
            p.add_argument("--gain", help="gain JSON (default: <out>/<output.gain>)")
        if name == "jacobian-check":
            p.add_argument("--samples", type=int, default=20)
            p.add_argument("--step", type=float, default=1e-6)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        COMMANDS[args.command](cfg, args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
