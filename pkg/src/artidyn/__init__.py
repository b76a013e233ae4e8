"""Articulated-robot dynamics built from parallel scans and odd-even elimination."""

from .dynfd import (
    abia_forward_dynamics,
    batch_forward_dynamics,
    build_cfa_operators,
    build_constraint_basis,
    cfa_forward_dynamics,
    forward_dynamics,
    jsi_by_columns,
    jsiia_forward_dynamics,
)
from .dynid import bias_torque, inverse_dynamics
from .model import (
    LinkSpec,
    RobotChain,
    assemble_kinematics,
    load_chain,
    random_chain,
    save_chain,
)
from .oee import SymBlockTriDiagSystem, block_thomas_solve, oee_solve
from .scan import scan_inclusive, solve_lower_bidiag, solve_upper_bidiag
from .spatial import SE3, adjoint_of, screw_exp, small_adjoint, spatial_inertia_from

__version__ = "0.1.0"
