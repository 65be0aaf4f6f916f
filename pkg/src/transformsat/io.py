"""JSON and CSV export/import of solutions, gains and trajectories.

Angles are written in degrees. Field order is fixed so reruns produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .control import LqrGain
from .equilibrium import EquilibriumSolution, StabilitySpectrum
from .srp import BODY, INERTIAL, Wrench
from .sim import Trajectory


def _deg(v) -> list[float]:
    return [float(x) for x in np.rad2deg(np.asarray(v, dtype=float))]


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


def _complex(v) -> dict:
    v = np.asarray(v, dtype=complex)
    return {"real": _vec(v.real), "imag": _vec(v.imag)}


def _from_complex(d) -> np.ndarray:
    return np.asarray(d["real"]) + 1j * np.asarray(d["imag"])


def solution_to_dict(sol: EquilibriumSolution) -> dict:
    return {
        "status": sol.status,
        "phi_star_deg": _deg(sol.phi_star),
        "theta_star_deg": _deg(sol.theta_star),
        "force_body_N": _vec(sol.wrench_body.force),
        "torque_body_Nm": _vec(sol.wrench_body.torque),
        "force_inertial_N": _vec(sol.wrench_inertial.force),
        "torque_inertial_Nm": _vec(sol.wrench_inertial.torque),
        "spectrum": {
            "lambda": _complex(sol.spectrum.lam),
            "sqrt_lambda": _complex(sol.spectrum.sqrt_lambda),
            "f_value": sol.spectrum.f_value,
            "c_value": sol.spectrum.c_value,
        },
        "residuals": {k: sol.residuals[k] for k in sorted(sol.residuals)},
        "iterations": sol.iterations,
        "seed_index": sol.seed_index,
        "roll_seed_deg": float(np.rad2deg(sol.roll_seed)),
    }


def solution_from_dict(d: dict) -> EquilibriumSolution:
    sp = d["spectrum"]
    return EquilibriumSolution(
        phi_star=np.deg2rad(d["phi_star_deg"]),
        theta_star=np.deg2rad(d["theta_star_deg"]),
        wrench_body=Wrench(np.asarray(d["force_body_N"]), np.asarray(d["torque_body_Nm"]), BODY),
        wrench_inertial=Wrench(np.asarray(d["force_inertial_N"]), np.asarray(d["torque_inertial_Nm"]),
                               INERTIAL),
        spectrum=StabilitySpectrum(_from_complex(sp["lambda"]), _from_complex(sp["sqrt_lambda"]),
                                   float(sp["f_value"]), float(sp["c_value"])),
        status=d["status"],
        iterations=int(d["iterations"]),
        residuals=dict(d["residuals"]),
        seed_index=int(d["seed_index"]),
        roll_seed=float(np.deg2rad(d["roll_seed_deg"])),
    )


def gain_to_dict(gain: LqrGain, omega_n: float | None = None) -> dict:
    eig = np.asarray(gain.closed_loop_eigenvalues)
    order = np.lexsort((eig.imag, eig.real))
    out = {
        "k": [_vec(row) for row in gain.k],
        "riccati_x": [_vec(row) for row in gain.riccati_x],
        "residual_norm": gain.residual_norm,
        "closed_loop_eigenvalues": _complex(eig[order]),
        "spectral_abscissa": gain.spectral_abscissa,
    }
    if omega_n is not None:
        out["omega_n"] = float(omega_n)
    return out


def gain_from_dict(d: dict) -> LqrGain:
    return LqrGain(np.asarray(d["k"], dtype=float), np.asarray(d["riccati_x"], dtype=float),
                   float(d["residual_norm"]), _from_complex(d["closed_loop_eigenvalues"]))


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def export(obj, path: str | Path) -> None:
    """Write a solution or gain as JSON, or a trajectory as CSV."""
    if isinstance(obj, EquilibriumSolution):
        write_json(solution_to_dict(obj), path)
    elif isinstance(obj, LqrGain):
        write_json(gain_to_dict(obj), path)
    elif isinstance(obj, Trajectory):
        write_trajectory_csv(obj, path)
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")


def trajectory_columns(m: int) -> list[str]:
    return (["t_s", "phi1_deg", "phi2_deg", "phi3_deg", "wx_degps", "wy_degps", "wz_degps"]
            + [f"dtheta{k}_deg" for k in range(1, m + 1)]
            + [f"u{k}_radps2" for k in range(1, m + 1)]
            + ["Fx_N", "Fy_N", "Fz_N", "Tx_Nm", "Ty_Nm", "Tz_Nm", "hx_Nms", "hy_Nms", "hz_Nms"])


def trajectory_rows(traj: Trajectory) -> np.ndarray:
    return np.column_stack([
        traj.t, np.rad2deg(traj.phi), np.rad2deg(traj.omega), np.rad2deg(traj.dtheta), traj.u,
        traj.force_inertial, traj.torque_body, traj.h_inertial,
    ])


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    m = traj.theta.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_columns(m))
        for row in trajectory_rows(traj):
            w.writerow([f"{v:.8e}" for v in row])


def read_trajectory_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(rows[0]))
