"""Independent reference computations for the test suite.

Nothing here calls the scan, OEE or recursive dynamics code under test:
kinematics use the matrix exponential, operators are assembled densely and
the planar models use their closed-form Lagrangian equations.
"""

import numpy as np
import scipy.linalg

from artidyn.model import LinkSpec, RobotChain
from artidyn.spatial import SE3


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.linalg.norm(b)
    return np.linalg.norm(a - b) / (scale if scale > 0 else 1.0)


# -- kinematics ------------------------------------------------------------------

def twist_matrix(S):
    w, v = S[:3], S[3:]
    X = np.zeros((4, 4))
    X[:3, :3] = [[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]]
    X[:3, 3] = v
    return X


def expm_pose(S, q):
    return scipy.linalg.expm(twist_matrix(np.asarray(S, float)) * q)


def link_poses(chain, q):
    """World poses ``T_{0,i}`` as 4x4 matrices."""
    T = np.eye(4)
    out = []
    for lk, qi in zip(chain.links, q):
        T = T @ lk.home_transform.matrix() @ expm_pose(lk.joint_screw, qi)
        out.append(T)
    return out


def vee(X):
    return np.array([X[2, 1], X[0, 2], X[1, 0], X[0, 3], X[1, 3], X[2, 3]])


def body_velocities_fd(chain, q_of_t, t, h=1e-5):
    """Body twists from central differences of world poses."""
    Tp = link_poses(chain, q_of_t(t + h))
    Tm = link_poses(chain, q_of_t(t - h))
    T0 = link_poses(chain, q_of_t(t))
    return np.array([vee(np.linalg.inv(T) @ (a - b) / (2 * h))
                     for T, a, b in zip(T0, Tp, Tm)])


def potential_energy(chain, q):
    g = chain.gravity
    U = 0.0
    for lk, T in zip(chain.links, link_poses(chain, q)):
        com = T[:3, :3] @ lk.com + T[:3, 3]
        U -= lk.mass * g @ com
    return U


# -- dense operators ---------------------------------------------------------------

def dense_gamma(kin):
    n = kin.n
    G = np.zeros((6 * n, 6 * n))
    for k, blk in enumerate(kin.gamma):
        G[6 * (k + 1):6 * (k + 2), 6 * k:6 * (k + 1)] = blk
    return G


def block_diag(blocks):
    return scipy.linalg.block_diag(*blocks)


def dense_mass_matrix(chain, kin):
    n = chain.n
    I_G = np.eye(6 * n) - dense_gamma(kin)
    S = block_diag([s[:, None] for s in chain.screws])
    J = block_diag(chain.inertias)
    X = np.linalg.solve(I_G, S)
    return X.T @ J @ X


def dense_cfa(chain, kin, W):
    """``A``, ``B``, ``C`` assembled from full matrices."""
    n = chain.n
    I_G = np.eye(6 * n) - dense_gamma(kin)
    S = block_diag([s[:, None] for s in chain.screws])
    Wd = block_diag(list(W))
    Jinv = block_diag([np.linalg.inv(J) for J in chain.inertias])
    core = I_G @ Jinv @ I_G.T
    return Wd.T @ core @ Wd, Wd.T @ core @ S, S.T @ core @ S


# -- closed-form planar models ---------------------------------------------------------

G0 = 9.81


def _planar_link(mass, lc, izz, home_x):
    # joint about z through the link origin, COM on the link x axis
    return LinkSpec(mass, [lc, 0.0, 0.0], np.diag([0.5 * izz + 0.01, 0.7 * izz + 0.01, izz]),
                    [0, 0, 1, 0, 0, 0], SE3(np.eye(3), [home_x, 0.0, 0.0]))


def pendulum_chain(mass=1.7, lc=0.4, izz=0.03):
    return RobotChain((_planar_link(mass, lc, izz, 0.0),), (0.0, -G0, 0.0))


def pendulum_torque(q, qd, qdd, mass=1.7, lc=0.4, izz=0.03):
    # angle measured from +x, gravity along -y
    return (izz + mass * lc ** 2) * qdd + mass * G0 * lc * np.cos(q)


def pendulum_accel(q, tau, mass=1.7, lc=0.4, izz=0.03):
    return (tau - mass * G0 * lc * np.cos(q)) / (izz + mass * lc ** 2)


ARM = dict(m1=2.3, m2=1.4, l1=0.8, lc1=0.35, lc2=0.3, i1=0.06, i2=0.04)


def arm_chain(p=ARM):
    return RobotChain((_planar_link(p["m1"], p["lc1"], p["i1"], 0.0),
                       _planar_link(p["m2"], p["lc2"], p["i2"], p["l1"])),
                      (0.0, -G0, 0.0))


def arm_terms(q, qd, p=ARM):
    """Mass matrix and bias torque of the planar two-link arm."""
    m1, m2, l1, lc1, lc2, i1, i2 = (p[k] for k in ("m1", "m2", "l1", "lc1", "lc2", "i1", "i2"))
    c2, s2 = np.cos(q[1]), np.sin(q[1])
    M11 = i1 + i2 + m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2 * l1 * lc2 * c2)
    M12 = i2 + m2 * (lc2 ** 2 + l1 * lc2 * c2)
    M22 = i2 + m2 * lc2 ** 2
    h = m2 * l1 * lc2 * s2
    cor = np.array([-h * (2 * qd[0] * qd[1] + qd[1] ** 2), h * qd[0] ** 2])
    g1 = (m1 * lc1 + m2 * l1) * G0 * np.cos(q[0]) + m2 * lc2 * G0 * np.cos(q[0] + q[1])
    g2 = m2 * lc2 * G0 * np.cos(q[0] + q[1])
    return np.array([[M11, M12], [M12, M22]]), cor + np.array([g1, g2])


def random_btd(rng, n, b, coupling=0.4):
    """Random symmetric block tri-diagonal system, block diagonally dominant."""
    D = np.empty((n, b, b))
    for i in range(n):
        X = rng.normal(size=(b, b))
        D[i] = X @ X.T + 2.0 * b * np.eye(b)
    U = coupling * rng.normal(size=(max(n - 1, 0), b, b))
    return D, U
