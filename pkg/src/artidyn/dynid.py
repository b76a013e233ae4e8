"""Inverse dynamics as three block bi-diagonal solves.

With ``Gamma`` the block sub-diagonal propagation operator (blocks
``Ad(T_{i,i-1})``), the link states satisfy

    (I - Gamma) V     = S qd + base term
    (I - Gamma) Vdot  = S qdd + [V_i, S_i qd_i] + base term
    (I - Gamma)^T F   = J Vdot - ad_V^T (J V) + tip term
    tau               = S^T F

Each line is solved with a scan (see :mod:`artidyn.scan`).

Sign convention: body-frame twists with ``V_i = Ad V_{i-1} + S_i qd_i``
make the velocity-product term ``[V_i, S_i qd_i]`` and the gyroscopic term
``-ad_V^T (J V)``. These are the signs for which the results agree with
closed-form Lagrangian models and with finite differences of the velocity
recursion.

Gravity is applied as a fictitious upward acceleration of the base.
``qd`` and ``qdd`` may carry leading batch axes; ``q`` may not.
"""

from dataclasses import dataclass

import numpy as np

from . import instrument
from .model import assemble_kinematics
from .scan import solve_lower_bidiag, solve_upper_bidiag
from .spatial import bracket, cobracket

__all__ = [
    "LinkStates",
    "propagate_velocities",
    "propagate_accelerations",
    "propagate_forces",
    "inverse_dynamics",
    "inverse_dynamics_states",
    "bias_torque",
    "diff_torques",
    "inverse_dynamics_sequential",
]


@dataclass(frozen=True)
class LinkStates:
    V: np.ndarray
    Vdot: np.ndarray
    F: np.ndarray


def _base_term(kin, twist, shape):
    c = np.zeros(shape)
    if twist is not None:
        c[..., 0, :] = kin.base_adjoint @ np.asarray(twist, dtype=float)
    return c


def propagate_velocities(chain, kin, qd, base_velocity=None, workers=1):
    qd = np.asarray(qd, dtype=float)
    c = chain.screws * qd[..., None]
    if base_velocity is not None:
        c = c + _base_term(kin, base_velocity, c.shape)
    return solve_lower_bidiag(kin.gamma, c, workers)


def propagate_accelerations(chain, kin, V, qd, qdd, base_accel=None, workers=1):
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)
    S = chain.screws
    c = S * qdd[..., None] + bracket(V, S * qd[..., None])
    if base_accel is not None:
        c = c + _base_term(kin, base_accel, c.shape)
    return solve_lower_bidiag(kin.gamma, c, workers)


def propagate_forces(chain, kin, V, Vdot, tip_wrench=None, workers=1):
    J = chain.inertias
    JV = (J @ np.asarray(V)[..., None])[..., 0]
    JA = (J @ np.asarray(Vdot)[..., None])[..., 0]
    c = JA - cobracket(V, JV)
    if tip_wrench is not None:
        c = c.copy()
        c[..., -1, :] += np.asarray(tip_wrench, dtype=float)
    blocks_t = np.swapaxes(kin.gamma, -1, -2)
    return solve_upper_bidiag(blocks_t, c, workers)


def inverse_dynamics_states(chain, q, qd, qdd, gravity=True, tip_wrench=None,
                            kin=None, workers=1):
    """Velocities, accelerations and link wrenches for a motion."""
    if kin is None:
        kin = assemble_kinematics(chain, q)
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)
    V = propagate_velocities(chain, kin, qd, workers=workers)
    base = chain.base_acceleration if gravity else None
    Vdot = propagate_accelerations(chain, kin, V, qd, qdd, base, workers)
    F = propagate_forces(chain, kin, V, Vdot, tip_wrench, workers)
    return LinkStates(V, Vdot, F)


def inverse_dynamics(chain, q, qd, qdd, gravity=True, tip_wrench=None,
                     kin=None, workers=1):
    """Joint torques producing ``qdd`` at state ``(q, qd)``.

    Parameters
    ----------
    chain : RobotChain
    q, qd, qdd : array_like
        Joint positions, rates and accelerations, length ``n``. ``qd`` and
        ``qdd`` may carry extra leading axes to solve several motions at
        the same configuration at once.
    gravity : bool
        Include the chain's gravity.
    tip_wrench : array_like, optional
        Wrench exerted by the last link on its environment, in that link's
        frame.
    kin : ChainKinematics, optional
        Pre-assembled kinematics for ``q``.
    workers : int
        Threads used inside each scan.
    """
    states = inverse_dynamics_states(chain, q, qd, qdd, gravity, tip_wrench,
                                     kin, workers)
    return np.einsum("...ij,ij->...i", states.F, chain.screws)


def bias_torque(chain, q, qd, gravity=True, kin=None, workers=1):
    """Coriolis, centrifugal and gravity torques (inverse dynamics at zero ``qdd``)."""
    qd = np.asarray(qd, dtype=float)
    return inverse_dynamics(chain, q, qd, np.zeros_like(qd), gravity, kin=kin,
                            workers=workers)


def diff_torques(tau, tau_bias):
    return np.asarray(tau, dtype=float) - np.asarray(tau_bias, dtype=float)


def inverse_dynamics_sequential(chain, q, qd, qdd, gravity=True, tip_wrench=None):
    """Link-by-link recursive Newton-Euler; reference for the scan path."""
    kin = assemble_kinematics(chain, q)
    n = chain.n
    S, J, Ad = chain.screws, chain.inertias, kin.adjoints
    V = np.zeros((n, 6))
    A = np.zeros((n, 6))
    F = np.zeros((n, 6))
    V_prev = np.zeros(6)
    A_prev = chain.base_acceleration if gravity else np.zeros(6)
    for i in range(n):
        V[i] = Ad[i] @ V_prev + S[i] * qd[i]
        A[i] = Ad[i] @ A_prev + S[i] * qdd[i] + bracket(V[i], S[i] * qd[i])
        V_prev, A_prev = V[i], A[i]
        instrument.bump("sequential_link_steps")
    F_next = np.zeros(6) if tip_wrench is None else np.asarray(tip_wrench, float)
    for i in range(n - 1, -1, -1):
        F[i] = J[i] @ A[i] - cobracket(V[i], J[i] @ V[i])
        if i == n - 1:
            F[i] += F_next
        else:
            F[i] += Ad[i + 1].T @ F[i + 1]
        instrument.bump("sequential_link_steps")
    return np.einsum("ij,ij->i", F, S), LinkStates(V, A, F)
