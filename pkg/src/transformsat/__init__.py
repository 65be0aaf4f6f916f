"""Transformable spacecraft under solar radiation pressure.

Multi-panel kinematics, SRP wrench and Jacobians, multibody attitude
dynamics, equilibrium search, LQR momentum damping and simulation.
"""

from .attitude import dcm_from_euler, euler_rate_matrix, sun_vector_body
from .control import default_weights, linearize, natural_frequency, solve_lqr
from .dynamics import AttitudeState, angular_momentum, assemble_mass_blocks, forward_dynamics
from .equilibrium import EquilibriumProblem, solve, spectrum, stability_matrix
from .model import build_model, canonical9_config, forward_kinematics
from .sim import SimConfig, integrate
from .srp import SrpEnvironment, total_wrench

__version__ = "0.1.0"

__all__ = [
    "AttitudeState", "EquilibriumProblem", "SimConfig", "SrpEnvironment",
    "angular_momentum", "assemble_mass_blocks", "build_model", "canonical9_config",
    "dcm_from_euler", "default_weights", "euler_rate_matrix", "forward_dynamics",
    "forward_kinematics", "integrate", "linearize", "natural_frequency", "solve",
    "solve_lqr", "spectrum", "stability_matrix", "sun_vector_body", "total_wrench",
]
