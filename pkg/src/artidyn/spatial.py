"""Spatial (Lie group) algebra on SE(3).

Twists and wrenches are plain length-6 arrays ordered ``(angular, linear)``
and ``(moment, force)``. Every 6x6 operator here follows the same block
order. Functions accept stacked inputs where noted, with the 6-vector or
6x6 block in the trailing axes.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SE3",
    "hat",
    "twist",
    "wrench",
    "small_adjoint",
    "bracket",
    "cobracket",
    "adjoint_of",
    "screw_exp",
    "screw_exp_batch",
    "spatial_inertia_from",
]

_ORTHO_TOL = 1e-12


def hat(w):
    """Cross-product matrix of a 3-vector (stacked inputs allowed)."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def twist(angular=(0.0, 0.0, 0.0), linear=(0.0, 0.0, 0.0)):
    return np.concatenate([np.asarray(angular, float), np.asarray(linear, float)])


def wrench(moment=(0.0, 0.0, 0.0), force=(0.0, 0.0, 0.0)):
    return np.concatenate([np.asarray(moment, float), np.asarray(force, float)])


@dataclass(frozen=True, eq=False)
class SE3:
    """Rigid transform ``x -> R x + p``.

    Composition is ``T1 @ T2`` (apply ``T2`` first).
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        p = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(p))):
            raise ValueError("SE3 entries must be finite")
        if np.max(np.abs(R.T @ R - np.eye(3))) > _ORTHO_TOL:
            raise ValueError("rotation is not orthogonal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation must have det +1")
        R.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", p)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, H):
        H = np.asarray(H, dtype=float)
        return cls(H[:3, :3], H[:3, 3])

    def matrix(self):
        H = np.eye(4)
        H[:3, :3] = self.rotation
        H[:3, 3] = self.translation
        return H

    def inverse(self):
        Rt = self.rotation.T
        return SE3(Rt, -Rt @ self.translation)

    def __matmul__(self, other):
        if not isinstance(other, SE3):
            return NotImplemented
        R = self.rotation @ other.rotation
        return SE3(R, self.rotation @ other.translation + self.translation)

    def __eq__(self, other):
        if not isinstance(other, SE3):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))

    def __repr__(self):
        return f"SE3(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def small_adjoint(V):
    """Lie bracket operator ``ad_V = [[w^, 0], [v^, w^]]``.

    ``small_adjoint(V) @ W`` is the bracket ``[V, W]``; the transpose acts
    on wrenches. Stacked twists of shape ``(..., 6)`` give ``(..., 6, 6)``.
    """
    V = np.asarray(V, dtype=float)
    w_hat = hat(V[..., :3])
    out = np.zeros(V.shape[:-1] + (6, 6))
    out[..., :3, :3] = w_hat
    out[..., 3:, 3:] = w_hat
    out[..., 3:, :3] = hat(V[..., 3:])
    return out


# small_adjoint(V) == V @ _AD_BASIS reshaped to 6x6; the entries are 0 and +-1,
# so contracting with it performs exactly the products of the cross-product form
_AD_BASIS = np.stack([small_adjoint(e) for e in np.eye(6)]).reshape(6, 36)


def _ad_stack(V):
    return (V @ _AD_BASIS).reshape(V.shape[:-1] + (6, 6))


def bracket(V, W):
    """``small_adjoint(V) @ W`` for stacked twists."""
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    return (_ad_stack(V) @ W[..., None])[..., 0]


def cobracket(V, F):
    """``small_adjoint(V).T @ F`` for a wrench ``F``."""
    V = np.asarray(V, dtype=float)
    F = np.asarray(F, dtype=float)
    return (F[..., None, :] @ _ad_stack(V))[..., 0, :]


def _adjoint(R, p):
    out = np.zeros(R.shape[:-2] + (6, 6))
    out[..., :3, :3] = R
    out[..., 3:, 3:] = R
    out[..., 3:, :3] = hat(p) @ R
    return out


def adjoint_of(T):
    """Twist change-of-frame map ``Ad(T) = [[R, 0], [p^ R, R]]``."""
    return _adjoint(T.rotation, T.translation)


def _exp_parts(S, q):
    # Closed-form exponential of the twist S*q; S is (..., 6), q is (...).
    S = np.asarray(S, dtype=float)
    q = np.asarray(q, dtype=float)
    w, v = S[..., :3], S[..., 3:]
    wn = np.linalg.norm(w, axis=-1)
    rot = wn > 1e-12
    safe = np.where(rot, wn, 1.0)
    axis = w / safe[..., None]
    theta = np.where(rot, wn * q, 0.0)
    K = hat(axis)
    K2 = K @ K
    s, c = np.sin(theta), np.cos(theta)
    eye = np.broadcast_to(np.eye(3), K.shape)
    R = eye + s[..., None, None] * K + (1 - c)[..., None, None] * K2
    # translation for the rotating case: (I th + (1-c) K + (th - s) K^2) v / |w|
    G = (theta[..., None, None] * eye + (1 - c)[..., None, None] * K
         + (theta - s)[..., None, None] * K2)
    p_rot = (G @ (v / safe[..., None])[..., None])[..., 0]
    p_lin = v * q[..., None]
    p = np.where(rot[..., None], p_rot, p_lin)
    R = np.where(rot[..., None, None], R, eye)
    return R, p


def screw_exp(S, q):
    """Exponential of the screw ``S`` scaled by ``q`` as an :class:`SE3`."""
    R, p = _exp_parts(S, q)
    return SE3(R, p)


def screw_exp_batch(S, q):
    """Stacked ``screw_exp``: returns rotations ``(n, 3, 3)`` and translations ``(n, 3)``."""
    return _exp_parts(S, q)


def spatial_inertia_from(mass, com, inertia_rot):
    """6x6 spatial inertia about the link frame origin.

    ``inertia_rot`` is the rotational inertia about the centre of mass,
    expressed in link-frame axes.
    """
    m = float(mass)
    if not np.isfinite(m) or m <= 0:
        raise ValueError("mass must be positive")
    c = np.asarray(com, dtype=float).reshape(3)
    Ic = np.asarray(inertia_rot, dtype=float).reshape(3, 3)
    if not np.all(np.isfinite(c)) or not np.all(np.isfinite(Ic)):
        raise ValueError("inertia parameters must be finite")
    if np.max(np.abs(Ic - Ic.T)) > 1e-12 * max(1.0, np.max(np.abs(Ic))):
        raise ValueError("rotational inertia must be symmetric")
    if np.min(np.linalg.eigvalsh(Ic)) <= 0:
        raise ValueError("rotational inertia must be positive definite")
    C = hat(c)
    J = np.empty((6, 6))
    J[:3, :3] = Ic - m * C @ C
    J[:3, 3:] = m * C
    J[3:, :3] = -m * C
    J[3:, 3:] = m * np.eye(3)
    return J
