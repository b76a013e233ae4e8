"""Solve a linear recursion over a chain with a parallel scan.

``x_i = B x_{i-1} + c_i`` is a block bi-diagonal system. The scan solves it
in ceil(log2 n) rounds, each of which could run fully in parallel.
"""

import numpy as np

from artidyn import instrument
from artidyn.scan import scan_inclusive, solve_lower_bidiag, solve_lower_bidiag_sequential

# Prefix sums are the smallest example of a scan.
print(scan_inclusive([1, 2, 3, 4], lambda a, b: a + b, 0))

# A 100-link recursion with random 6x6 couplings.
rng = np.random.default_rng(0)
n = 100
blocks = rng.normal(size=(n - 1, 6, 6)) / np.sqrt(6)
rhs = rng.normal(size=(n, 6))

with instrument.track() as counts:
    x = solve_lower_bidiag(blocks, rhs)
ref = solve_lower_bidiag_sequential(blocks, rhs)
print(f"scan rounds: {counts['scan_rounds']} for n = {n}")
print(f"relative difference to the link-by-link loop: "
      f"{np.linalg.norm(x - ref) / np.linalg.norm(ref):.1e}")

# Extra leading axes are independent right-hand sides sharing the blocks.
many = solve_lower_bidiag(blocks, rng.normal(size=(8, n, 6)))
print("batched solution shape:", many.shape)
