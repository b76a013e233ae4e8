"""Odd-even elimination for symmetric block tri-diagonal systems.

The system has symmetric diagonal blocks ``D_i`` and super-diagonal blocks
``U_i`` (the sub-diagonal blocks are ``U_i^T``). Round ``j`` (``s = 2^(j-1)``)
removes from every row ``i`` the coupling to rows ``i + s`` and ``i - s``
using the coefficients

    E_i = U_i D_{i+s}^{-1}          K_i = U_{i-s}^T D_{i-s}^{-1}

and updates

    D_i <- D_i - E_i U_i^T - K_i U_{i-s}
    U_i <- -E_i U_{i+s}                      (couples i and i + 2s)
    R_i <- R_i - E_i R_{i+s} - K_i R_{i-s}

Terms whose partner row falls outside the system are dropped. After
``ceil(log2 n)`` rounds the matrix is block diagonal and every block row is
solved independently. Each round reads only the previous round's state,
so rows update independently; rounds are instrumented as ``oee_rounds``.

Coefficients are obtained by solving ``D E^T = U^T`` rather than by
forming inverses.
"""

from dataclasses import dataclass

import numpy as np

from . import instrument
from ._parallel import parallel_for
from .scan import scan_depth

__all__ = [
    "SymBlockTriDiagSystem",
    "SingularPivotError",
    "OEEState",
    "coefficient_solve",
    "eliminate_round",
    "oee_solve",
    "oee_factor",
    "OEEFactorization",
    "oee_rounds",
    "block_thomas_solve",
]

oee_rounds = scan_depth


class SingularPivotError(np.linalg.LinAlgError):
    """A diagonal block could not be factorised during elimination."""

    def __init__(self, round_index, block_index):
        self.round_index = round_index
        self.block_index = block_index
        super().__init__(f"singular pivot block at round {round_index}, index {block_index}")


@dataclass(frozen=True)
class SymBlockTriDiagSystem:
    D: np.ndarray  # (n, b, b)
    U: np.ndarray  # (n-1, b, b)

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        U = np.asarray(self.U, dtype=float).reshape((-1,) + D.shape[1:])
        if D.ndim != 3 or D.shape[1] != D.shape[2]:
            raise ValueError("D must have shape (n, b, b)")
        if U.shape[0] != D.shape[0] - 1:
            raise ValueError("U must hold n - 1 blocks")
        scale = max(1.0, float(np.max(np.abs(D))))
        if np.max(np.abs(D - np.swapaxes(D, 1, 2))) > 1e-12 * scale:
            raise ValueError("diagonal blocks must be symmetric")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "U", U)

    @property
    def n(self):
        return self.D.shape[0]

    @property
    def b(self):
        return self.D.shape[1]

    def dense(self):
        n, b = self.n, self.b
        A = np.zeros((n * b, n * b))
        for i in range(n):
            A[i * b:(i + 1) * b, i * b:(i + 1) * b] = self.D[i]
        for i in range(n - 1):
            A[i * b:(i + 1) * b, (i + 1) * b:(i + 2) * b] = self.U[i]
            A[(i + 1) * b:(i + 2) * b, i * b:(i + 1) * b] = self.U[i].T
        return A

    def matvec(self, x):
        """``A @ x`` for ``x`` of shape ``(n, b)`` or ``(n, b, m)``."""
        x = np.asarray(x, dtype=float)
        vec = x.ndim == 2
        if vec:
            x = x[..., None]
        y = self.D @ x
        y[:-1] += self.U @ x[1:]
        y[1:] += np.swapaxes(self.U, 1, 2) @ x[:-1]
        return y[..., 0] if vec else y


@dataclass
class OEEState:
    """Elimination state after ``round`` rounds.

    ``U[i]`` couples rows ``i`` and ``i + 2^round``; only the first
    ``n - 2^round`` entries are live. ``E`` and ``K`` are the coefficients
    of the round that produced this state.
    """

    D: np.ndarray
    U: np.ndarray
    R: np.ndarray
    round: int = 0
    E: np.ndarray = None
    K: np.ndarray = None

    @property
    def distance(self):
        return 1 << self.round


def coefficient_solve(D, Ut, round_index=0, block_indices=None):
    """Solve ``D @ X = Ut`` for stacked blocks without forming ``D^{-1}``.

    Uses LU with partial pivoting, which is valid for the symmetric but
    possibly indefinite pivots met during elimination.
    """
    D = np.asarray(D, dtype=float)
    Ut = np.asarray(Ut, dtype=float)
    try:
        X = np.linalg.solve(D, Ut)
    except np.linalg.LinAlgError:
        X = None
    if X is None or not np.all(np.isfinite(X)):
        stack = D.reshape((-1,) + D.shape[-2:])
        for k, blk in enumerate(stack):
            if not np.all(np.isfinite(blk)) or np.linalg.matrix_rank(blk) < blk.shape[0]:
                idx = k if block_indices is None else int(block_indices[k])
                raise SingularPivotError(round_index, idx)
        raise SingularPivotError(round_index, -1)
    return X


def _update_rhs(R, E, K, s, workers):
    Rn = R.copy()
    m = R.shape[0] - s

    def below(sl):
        i = np.arange(sl.start, sl.stop)
        Rn[i] -= E[i] @ R[i + s]

    def above(sl):
        i = np.arange(sl.start, sl.stop)
        Rn[i + s] -= K[i] @ R[i]

    parallel_for(below, m, workers)
    parallel_for(above, m, workers)
    return Rn


def eliminate_round(state, workers=1):
    """Advance ``state`` by one elimination round; the input is not modified."""
    D, U = state.D, state.U
    n = D.shape[0]
    s = state.distance
    j = state.round + 1
    m = n - s  # rows that still couple at distance s
    if m <= 0:
        raise ValueError("system is already block diagonal")
    Dn = D.copy()
    Un = np.zeros_like(U)
    Ut = np.swapaxes(U[:m], 1, 2)
    idx = np.arange(s, n)
    # E_i^T for i < m (partner below) and K_{i+s}^T (partner above) for the same pairs
    E = np.swapaxes(coefficient_solve(D[s:], Ut, j, idx), 1, 2)
    K = np.swapaxes(coefficient_solve(D[:m], U[:m], j, idx - s), 1, 2)

    def below(sl):
        # rows i in sl (i < m) eliminate their partner i + s
        i = np.arange(sl.start, sl.stop)
        Dn[i] -= E[i] @ Ut[i]
        live = i[i + 2 * s < n]
        Un[live] = -E[live] @ U[live + s]

    def above(sl):
        # rows i + s eliminate their partner i
        i = np.arange(sl.start, sl.stop)
        Dn[i + s] -= K[i] @ U[i]

    # chunks of one pass write disjoint rows; the passes run one after the other
    parallel_for(below, m, workers)
    parallel_for(above, m, workers)
    Rn = _update_rhs(state.R, E, K, s, workers)
    instrument.bump("oee_rounds")
    return OEEState(Dn, Un, Rn, j, E, K)


@dataclass(frozen=True)
class OEEFactorization:
    """Recorded elimination of a system, reusable for further right-hand sides."""

    coefficients: tuple  # (distance, E, K) per round
    D: np.ndarray        # final block-diagonal pivots

    def solve(self, rhs, workers=1):
        R = np.asarray(rhs, dtype=float)
        vec = R.ndim == 2
        if vec:
            R = R[..., None]
        for s, E, K in self.coefficients:
            R = _update_rhs(R, E, K, s, workers)
        x = coefficient_solve(self.D, R, len(self.coefficients))
        return x[..., 0] if vec else x


def oee_factor(system, workers=1, history=None):
    """Run every elimination round on ``system``.

    If ``history`` is a list it receives every intermediate
    :class:`OEEState`.
    """
    b = system.b
    state = OEEState(system.D.copy(), system.U.copy(), np.zeros((system.n, b, 0)), 0)
    if history is not None:
        history.append(state)
    coeffs = []
    for _ in range(oee_rounds(system.n)):
        state = eliminate_round(state, workers)
        coeffs.append((state.distance // 2, state.E, state.K))
        if history is not None:
            history.append(state)
    return OEEFactorization(tuple(coeffs), state.D)


def oee_solve(system, rhs, workers=1, history=None):
    """Solve ``A x = rhs`` by odd-even elimination.

    ``rhs`` has shape ``(n, b)`` or ``(n, b, m)``. If ``history`` is a list
    it receives every intermediate :class:`OEEState`, right-hand side
    included.
    """
    R = np.asarray(rhs, dtype=float)
    vec = R.ndim == 2
    if vec:
        R = R[..., None]
    state = OEEState(system.D.copy(), system.U.copy(), R.copy(), 0)
    if history is not None:
        history.append(state)
    for _ in range(oee_rounds(system.n)):
        state = eliminate_round(state, workers)
        if history is not None:
            history.append(state)
    x = coefficient_solve(state.D, state.R, state.round)
    return x[..., 0] if vec else x


def block_thomas_solve(system, rhs):
    """Sequential block forward elimination and back substitution."""
    R = np.asarray(rhs, dtype=float)
    vec = R.ndim == 2
    if vec:
        R = R[..., None]
    D, U = system.D, system.U
    n = system.n
    Dp = np.empty_like(D)
    Rp = np.empty_like(R)
    Dp[0] = D[0]
    Rp[0] = R[0]
    for i in range(1, n):
        L = np.linalg.solve(Dp[i - 1], U[i - 1]).T  # U^T Dp^{-1}
        Dp[i] = D[i] - L @ U[i - 1]
        Rp[i] = R[i] - L @ Rp[i - 1]
        instrument.bump("sequential_link_steps")
    x = np.empty_like(R)
    x[n - 1] = np.linalg.solve(Dp[n - 1], Rp[n - 1])
    for i in range(n - 2, -1, -1):
        x[i] = np.linalg.solve(Dp[i], Rp[i] - U[i] @ x[i + 1])
        instrument.bump("sequential_link_steps")
    return x[..., 0] if vec else x
