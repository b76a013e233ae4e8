"""Inclusive scans and block bi-diagonal solves built on them.

The linear recursion ``x_0 = c_0``, ``x_i = B_{i-1} x_{i-1} + c_i`` is the
solution of a unit-diagonal block lower bi-diagonal system. Writing each
step as an affine element ``a_i = (B_{i-1}, c_i)`` (homogeneous matrix
``[[B, c], [0, 1]]``), ``x_i`` is the offset part of the prefix
``a_0 (+) a_1 (+) ... (+) a_i``, where

    a_{i-1} (+) a_i  :=  a_i @ a_{i-1}

i.e. the *later* element multiplies from the left. Reversing the order
gives silently wrong prefixes.

Scans use the Hillis-Steele schedule over a length padded with identity
elements to the next power of two, so a length-``n`` scan runs exactly
``ceil(log2 n)`` combine rounds. Each round reads only the previous
round's state, and the rounds are instrumented as ``scan_rounds``.
"""

from dataclasses import dataclass

import numpy as np

from . import instrument
from ._parallel import parallel_for

__all__ = [
    "scan_inclusive",
    "affine_scan",
    "combine_affine",
    "BlockBiDiagSystem",
    "solve_lower_bidiag",
    "solve_upper_bidiag",
    "solve_lower_bidiag_sequential",
    "solve_upper_bidiag_sequential",
    "scan_depth",
]


def scan_depth(n):
    """Number of combine rounds for a length-``n`` scan."""
    return 0 if n <= 1 else int(n - 1).bit_length()


def scan_inclusive(elements, combine, identity, workers=1):
    """Inclusive scan of ``elements`` under the associative ``combine``.

    ``combine(a, b)`` computes ``a (+) b`` with ``a`` the earlier element.
    Returns a list ``[a_0, a_0 (+) a_1, ...]``.
    """
    elements = list(elements)
    n = len(elements)
    if n == 0:
        return []
    size = 1 << scan_depth(n)
    cur = elements + [identity] * (size - n)
    shift = 1
    while shift < size:
        nxt = list(cur)

        def step(sl, cur=cur, nxt=nxt, shift=shift):
            for i in range(sl.start + shift, sl.stop + shift):
                nxt[i] = combine(cur[i - shift], cur[i])

        parallel_for(step, size - shift, workers)
        instrument.bump("scan_rounds")
        cur = nxt
        shift *= 2
    return cur[:n]


def combine_affine(earlier, later):
    """``earlier (+) later`` for affine elements ``(B, c)``."""
    B0, c0 = earlier
    B1, c1 = later
    return B1 @ B0, B1 @ c0 + c1


def affine_scan(B, c, workers=1):
    """Vectorised scan of affine elements.

    Parameters
    ----------
    B : ndarray, shape (n, d, d)
        Linear parts; ``B[i]`` is the coupling that multiplies ``x_{i-1}``
        (``B[0]`` is ignored and treated as the identity).
    c : ndarray, shape (..., n, d)
        Offsets. Leading axes are independent right-hand sides sharing the
        same couplings.

    Returns
    -------
    ndarray, shape (..., n, d)
        The offset parts of every prefix, i.e. the recursion's solution.
    """
    B = np.asarray(B, dtype=float)
    c = np.asarray(c, dtype=float)
    n, d = B.shape[0], B.shape[-1]
    if n == 0:
        return c.copy()
    size = 1 << scan_depth(n)
    Bp = np.empty((size, d, d))
    Bp[:] = np.eye(d)
    Bp[1:n] = B[1:]
    cp = np.zeros(c.shape[:-2] + (size, d))
    cp[..., :n, :] = c
    shift = 1
    while shift < size:
        # nothing downstream needs the linear parts after the last round
        last_round = shift * 2 >= size
        Bn = Bp if last_round else Bp.copy()
        cn = cp.copy()

        def step(sl, Bp=Bp, cp=cp, Bn=Bn, cn=cn, shift=shift, last_round=last_round):
            dst = slice(sl.start + shift, sl.stop + shift)
            Bl = Bp[dst]
            cn[..., dst, :] += (Bl @ cp[..., sl, :, None])[..., 0]
            if not last_round:
                Bn[dst] = Bl @ Bp[sl]

        parallel_for(step, size - shift, workers)
        instrument.bump("scan_rounds")
        Bp, cp = Bn, cn
        shift *= 2
    return cp[..., :n, :]


def solve_lower_bidiag(blocks, rhs, workers=1):
    """Solve ``x_0 = c_0``, ``x_i = blocks[i-1] @ x_{i-1} + c_i`` by scan.

    ``blocks`` has shape ``(n-1, d, d)``; ``rhs`` has shape ``(..., n, d)``.
    """
    rhs = np.asarray(rhs, dtype=float)
    n, d = rhs.shape[-2], rhs.shape[-1]
    B = np.empty((n, d, d))
    B[0] = np.eye(d)
    B[1:] = blocks
    return affine_scan(B, rhs, workers)


def solve_upper_bidiag(blocks, rhs, workers=1):
    """Solve ``x_{n-1} = c_{n-1}``, ``x_i = blocks[i] @ x_{i+1} + c_i`` by scan."""
    rhs = np.asarray(rhs, dtype=float)
    blocks = np.asarray(blocks, dtype=float)
    rev = solve_lower_bidiag(blocks[::-1], rhs[..., ::-1, :], workers)
    return rev[..., ::-1, :]


def solve_lower_bidiag_sequential(blocks, rhs):
    """Reference forward substitution, one link at a time."""
    rhs = np.asarray(rhs, dtype=float)
    x = np.empty_like(rhs)
    x[..., 0, :] = rhs[..., 0, :]
    for i in range(1, rhs.shape[-2]):
        x[..., i, :] = (blocks[i - 1] @ x[..., i - 1, :, None])[..., 0] + rhs[..., i, :]
        instrument.bump("sequential_link_steps")
    return x


def solve_upper_bidiag_sequential(blocks, rhs):
    """Reference back substitution, one link at a time."""
    rhs = np.asarray(rhs, dtype=float)
    x = np.empty_like(rhs)
    n = rhs.shape[-2]
    x[..., n - 1, :] = rhs[..., n - 1, :]
    for i in range(n - 2, -1, -1):
        x[..., i, :] = (blocks[i] @ x[..., i + 1, :, None])[..., 0] + rhs[..., i, :]
        instrument.bump("sequential_link_steps")
    return x


@dataclass(frozen=True)
class BlockBiDiagSystem:
    """Unit-diagonal block bi-diagonal system.

    ``lower``: ``x_i - blocks[i-1] x_{i-1} = rhs_i``.
    ``upper``: ``x_i - blocks[i] x_{i+1} = rhs_i``.
    """

    orientation: str
    blocks: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        if self.orientation not in ("lower", "upper"):
            raise ValueError("orientation must be 'lower' or 'upper'")

    def solve(self, workers=1):
        if self.orientation == "lower":
            return solve_lower_bidiag(self.blocks, self.rhs, workers)
        return solve_upper_bidiag(self.blocks, self.rhs, workers)

    def dense(self):
        """Assembled ``(n d) x (n d)`` coefficient matrix."""
        rhs = np.asarray(self.rhs)
        n, d = rhs.shape[-2], rhs.shape[-1]
        A = np.eye(n * d)
        for k, blk in enumerate(self.blocks):
            if self.orientation == "lower":
                r, col = k + 1, k
            else:
                r, col = k, k + 1
            A[r * d:(r + 1) * d, col * d:(col + 1) * d] = -blk
        return A
