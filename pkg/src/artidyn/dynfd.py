"""Forward dynamics: joint-space inertia inversion, articulated-body and
constraint-force algorithms.

All three solve ``M(q) qdd = tau - tau_bias`` and differ only in how they
factor ``M^{-1}``:

* JSIIA builds ``M`` column by column with inverse dynamics and applies a
  Cholesky solve.
* ABIA computes articulated-body inertias by a sequential backward
  recursion and then applies ``M^{-1}`` with two scan-based sweeps.
* CFA projects the link wrenches onto constraint and joint directions,
  giving ``M^{-1} = C - B^T A^{-1} B`` with ``A`` block tri-diagonal,
  solved by odd-even elimination. It contains no link-sequential loop.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import instrument
from .dynid import bias_torque, diff_torques, propagate_accelerations, propagate_forces
from .model import assemble_kinematics
from .oee import SymBlockTriDiagSystem, oee_factor
from .scan import solve_lower_bidiag, solve_upper_bidiag

__all__ = [
    "NotPositiveDefiniteError",
    "DegenerateArticulationError",
    "jsi_by_columns",
    "jsiia_forward_dynamics",
    "articulated_body_inertias",
    "abia_forward_dynamics",
    "build_constraint_basis",
    "CfaOperators",
    "build_cfa_operators",
    "cfa_forward_dynamics",
    "ALGORITHMS",
    "forward_dynamics",
    "BatchResult",
    "batch_forward_dynamics",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


class DegenerateArticulationError(np.linalg.LinAlgError):
    pass



# -- JSIIA -------------------------------------------------------------------

def jsi_by_columns(chain, q, kin=None, symmetrize=True, workers=1):
    """Joint-space inertia ``M(q)``.

    Column ``k`` is inverse dynamics with ``qdd = e_k``, zero rates and no
    gravity. All columns are solved in one batched pass; with zero rates
    the velocity sweep is identically zero and is skipped.
    """
    if kin is None:
        kin = assemble_kinematics(chain, q)
    n = chain.n
    V = np.zeros((n, 6))
    Vdot = propagate_accelerations(chain, kin, V, np.zeros(n), np.eye(n),
                                   workers=workers)
    F = propagate_forces(chain, kin, V, Vdot, workers=workers)
    M = np.einsum("kij,ij->ik", F, chain.screws)
    return 0.5 * (M + M.T) if symmetrize else M


def jsiia_forward_dynamics(chain, q, qd, tau, workers=1):
    kin = assemble_kinematics(chain, q)
    tau_delta = diff_torques(tau, bias_torque(chain, q, qd, kin=kin, workers=workers))
    M = jsi_by_columns(chain, q, kin=kin, workers=workers)
    try:
        factor = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("joint-space inertia is not positive definite") from None
    return scipy.linalg.cho_solve(factor, tau_delta, check_finite=False)


# -- ABIA --------------------------------------------------------------------

def articulated_body_inertias(chain, kin):
    """Backward recursion ``Jh_i = J_i + G^T (Jh - Jh S D^{-1} S^T Jh)_{i+1} G``
    with ``D = S^T Jh S`` and ``G = Ad(T_{i+1,i})``. Inherently sequential."""
    n = chain.n
    S, J, G = chain.screws, chain.inertias, kin.gamma
    Jh = np.empty((n, 6, 6))
    Jh[n - 1] = J[n - 1]
    for i in range(n - 2, -1, -1):
        U = Jh[i + 1] @ S[i + 1]
        d = S[i + 1] @ U
        if not d > 0:
            raise DegenerateArticulationError(f"link {i + 1}: S^T Jh S = {d}")
        Ja = Jh[i + 1] - np.outer(U, U) / d
        Jh[i] = J[i] + G[i].T @ Ja @ G[i]
        Jh[i] = 0.5 * (Jh[i] + Jh[i].T)
        instrument.bump("sequential_link_steps")
    return Jh


def abia_forward_dynamics(chain, q, qd, tau, workers=1, return_inertias=False):
    """Articulated-body forward dynamics on the differential torques.

    With ``U_i = Jh_i S_i`` and ``d_i = S_i^T U_i``, ``M^{-1} tau_delta`` is
    applied by two affine sweeps:

    backward  ``p_i = G_i^T [(I - U S^T / d) p + U tau_delta / d]_{i+1}``
    forward   ``a_i = (I - S U^T / d)_i G a_{i-1} + S_i u_i / d_i``

    with ``u_i = tau_delta_i - S_i^T p_i`` and
    ``qdd_i = (u_i - U_i^T G a_{i-1}) / d_i``.
    """
    kin = assemble_kinematics(chain, q)
    tau_delta = diff_torques(tau, bias_torque(chain, q, qd, kin=kin, workers=workers))
    Jh = articulated_body_inertias(chain, kin)
    S, G = chain.screws, kin.gamma
    U = (Jh @ S[..., None])[..., 0]
    d = np.einsum("ij,ij->i", S, U)
    if not np.all(d > 0):
        raise DegenerateArticulationError("non-positive articulated joint inertia")
    Gt = np.swapaxes(G, 1, 2)
    eye = np.eye(6)

    # backward sweep: p_{n-1} = 0
    P = eye - U[:, :, None] * S[:, None, :] / d[:, None, None]
    src = U * (tau_delta / d)[:, None]
    back_blocks = Gt @ P[1:]
    back_rhs = np.zeros_like(src)
    back_rhs[:-1] = (Gt @ src[1:, :, None])[..., 0]
    p = solve_upper_bidiag(back_blocks, back_rhs, workers)
    u = tau_delta - np.einsum("ij,ij->i", S, p)

    # forward sweep from a resting, gravity-free base
    Q = eye - S[:, :, None] * U[:, None, :] / d[:, None, None]
    fwd_blocks = Q[1:] @ G
    a = solve_lower_bidiag(fwd_blocks, S * (u / d)[:, None], workers)
    Ga = np.zeros_like(a)
    Ga[1:] = (G @ a[:-1, :, None])[..., 0]
    qdd = (u - np.einsum("ij,ij->i", U, Ga)) / d
    return (qdd, Jh) if return_inertias else qdd


# -- CFA ---------------------------------------------------------------------

def build_constraint_basis(chain):
    """Orthonormal complements ``W_i`` (6x5) of the joint screws, from a
    complete QR factorisation of each screw."""
    S = chain.screws
    Q, _ = np.linalg.qr(S[:, :, None], mode="complete")
    return Q[:, :, 1:]


@dataclass(frozen=True)
class CfaOperators:
    """Block tri-diagonal operators of the constraint-force formulation.

    ``A`` has 5x5 blocks. ``B`` (5n x n) is stored as ``B_diag[i] = B_{i,i}``,
    ``B_sup[i] = B_{i,i+1}`` and ``B_sub[i] = B_{i+1,i}``; ``C`` (n x n,
    symmetric) as ``C_diag`` and ``C_off``.
    """

    A: SymBlockTriDiagSystem
    B_diag: np.ndarray
    B_sup: np.ndarray
    B_sub: np.ndarray
    C_diag: np.ndarray
    C_off: np.ndarray

    @property
    def n(self):
        return self.C_diag.shape[0]

    def B_matvec(self, tau):
        out = self.B_diag * tau[:, None]
        out[:-1] += self.B_sup * tau[1:, None]
        out[1:] += self.B_sub * tau[:-1, None]
        return out

    def BT_matvec(self, F):
        out = np.einsum("ij,ij->i", self.B_diag, F)
        out[1:] += np.einsum("ij,ij->i", self.B_sup, F[:-1])
        out[:-1] += np.einsum("ij,ij->i", self.B_sub, F[1:])
        return out

    def C_matvec(self, tau):
        out = self.C_diag * tau
        out[:-1] += self.C_off * tau[1:]
        out[1:] += self.C_off * tau[:-1]
        return out

    def dense_B(self):
        n = self.n
        B = np.zeros((5 * n, n))
        for i in range(n):
            B[5 * i:5 * i + 5, i] = self.B_diag[i]
        for i in range(n - 1):
            B[5 * i:5 * i + 5, i + 1] = self.B_sup[i]
            B[5 * i + 5:5 * i + 10, i] = self.B_sub[i]
        return B

    def dense_C(self):
        return (np.diag(self.C_diag) + np.diag(self.C_off, 1)
                + np.diag(self.C_off, -1))


def build_cfa_operators(chain, kin, basis=None):
    """Assemble ``A``, ``B``, ``C`` from the tri-diagonal core
    ``(I - Gamma) J^{-1} (I - Gamma)^T`` projected onto ``[W_i  S_i]``.

    Core blocks: diagonal ``J_i^{-1} + G_i J_{i-1}^{-1} G_i^T`` and
    super-diagonal ``-J_i^{-1} G_{i+1}^T``. Every link is handled in one
    vectorised step; ``J^{-1}`` only appears through linear solves.
    """
    if basis is None:
        basis = build_constraint_basis(chain)
    n = chain.n
    S, J = chain.screws, chain.inertias
    N = np.concatenate([basis, S[:, :, None]], axis=2)
    Gt = np.swapaxes(kin.gamma, 1, 2)
    H = Gt @ N[1:]  # G_{i+1}^T N_{i+1}
    rhs = np.zeros((n, 6, 12))
    rhs[:, :, :6] = N
    rhs[:-1, :, 6:] = H
    X = np.linalg.solve(J, rhs)
    Nt = np.swapaxes(N, 1, 2)
    diag = Nt @ X[:, :, :6]
    diag[1:] += np.swapaxes(H, 1, 2) @ X[:-1, :, 6:]
    diag = 0.5 * (diag + np.swapaxes(diag, 1, 2))
    off = -(Nt[:-1] @ X[:-1, :, 6:])
    A = SymBlockTriDiagSystem(diag[:, :5, :5], off[:, :5, :5])
    return CfaOperators(A, diag[:, :5, 5], off[:, :5, 5], off[:, 5, :5],
                        diag[:, 5, 5], off[:, 5, 5])


def cfa_forward_dynamics(chain, q, qd, tau, workers=1, refine=1):
    """Constraint-force forward dynamics.

    Solves ``A F_c = -B tau_delta`` by odd-even elimination and returns
    ``C tau_delta + B^T F_c``. ``qdd`` is a small difference of two large
    terms, so ``refine`` steps of iterative refinement on the constraint
    forces (residual by block tri-diagonal product, correction by reusing
    the elimination) are applied; each keeps the logarithmic depth.
    """
    kin = assemble_kinematics(chain, q)
    tau_delta = diff_torques(tau, bias_torque(chain, q, qd, kin=kin, workers=workers))
    ops = build_cfa_operators(chain, kin)
    rhs = -ops.B_matvec(tau_delta)
    fac = oee_factor(ops.A, workers)
    Fc = fac.solve(rhs, workers)
    for _ in range(refine):
        Fc = Fc + fac.solve(rhs - ops.A.matvec(Fc), workers)
    return ops.C_matvec(tau_delta) + ops.BT_matvec(Fc)


# -- dispatch and batches ----------------------------------------------------

ALGORITHMS = {
    "jsiia": jsiia_forward_dynamics,
    "abia": abia_forward_dynamics,
    "cfa": cfa_forward_dynamics,
}


def forward_dynamics(chain, q, qd, tau, algo="cfa", workers=1):
    try:
        fn = ALGORITHMS[algo]
    except KeyError:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(chain, q, qd, tau, workers=workers)


@dataclass
class BatchResult:
    """Per-problem outputs; ``errors[k]`` is set when problem ``k`` failed."""

    results: list
    errors: list

    @property
    def ok(self):
        return all(e is None for e in self.errors)


def batch_forward_dynamics(problems, algo="cfa", workers=1):
    """Solve independent ``(chain, q, qd, tau)`` problems concurrently.

    A failing problem leaves ``None`` in its result slot and the exception
    in its error slot; the others are unaffected.
    """
    problems = list(problems)
    if not problems:
        raise ValueError("batch must contain at least one problem")
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")

    def run(prob):
        try:
            return forward_dynamics(*prob, algo=algo), None
        except (np.linalg.LinAlgError, ValueError) as exc:
            return None, exc

    if workers <= 1:
        out = [run(p) for p in problems]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(run, problems))
    return BatchResult([r for r, _ in out], [e for _, e in out])
