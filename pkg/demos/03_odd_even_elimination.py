"""Diagonalise a symmetric block tri-diagonal system by odd-even elimination.

Each round removes the couplings at distance 2^j and creates new ones at
distance 2^(j+1); after ceil(log2 n) rounds only the diagonal is left.
"""

import numpy as np

from artidyn import SymBlockTriDiagSystem, block_thomas_solve, oee_solve

rng = np.random.default_rng(1)
n, b = 12, 3
D = np.empty((n, b, b))
for i in range(n):
    X = rng.normal(size=(b, b))
    D[i] = X @ X.T + 2 * b * np.eye(b)
U = 0.4 * rng.normal(size=(n - 1, b, b))
system = SymBlockTriDiagSystem(D, U)
rhs = rng.normal(size=(n, b))

history = []
x = oee_solve(system, rhs, history=history)
for state in history:
    live = max(n - state.distance, 0)
    print(f"round {state.round}: couplings at distance {state.distance}, "
          f"{live} still live")

thomas = block_thomas_solve(system, rhs)
print(f"difference to block Thomas: {np.abs(x - thomas).max():.1e}")
