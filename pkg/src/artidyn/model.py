"""Serial-chain robot description and configuration-dependent kinematics.

Frame conventions
-----------------
Link ``i`` carries a body frame. ``home_transform`` is the pose of link
``i`` in the frame of link ``i - 1`` (the fixed base for the first link)
at zero joint angle, and ``joint_screw`` is the joint axis expressed in
link ``i``'s own frame. The relative pose at angle ``q_i`` is therefore::

    T_{i-1,i}(q_i) = home_i @ exp(S_i q_i)

and body velocities obey ``V_i = Ad(T_{i,i-1}) V_{i-1} + S_i qd_i`` where
``T_{i,i-1} = T_{i-1,i}^{-1}``. The adjoints ``Ad(T_{i,i-1})`` are the
blocks of the propagation operator: ``base_adjoint`` couples the fixed base
to link 0 and ``gamma[k]`` couples link ``k`` to link ``k + 1``.
"""

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.transform import Rotation

from .spatial import SE3, _adjoint, screw_exp_batch, spatial_inertia_from

__all__ = [
    "LinkSpec",
    "RobotChain",
    "ChainKinematics",
    "ChainFormatError",
    "assemble_kinematics",
    "random_chain",
    "load_chain",
    "save_chain",
    "chain_to_dict",
    "chain_from_dict",
]

DEFAULT_GRAVITY = (0.0, 0.0, -9.81)
_SCREW_NORM_TOL = 1e-9


class ChainFormatError(ValueError):
    """Malformed or invalid robot model description."""


@dataclass(frozen=True, eq=False)
class LinkSpec:
    mass: float
    com: np.ndarray
    inertia_rot: np.ndarray
    joint_screw: np.ndarray
    home_transform: SE3

    def __post_init__(self):
        com = np.array(self.com, dtype=float).reshape(3)
        Irot = np.array(self.inertia_rot, dtype=float).reshape(3, 3)
        S = np.array(self.joint_screw, dtype=float).reshape(6)
        for arr in (com, Irot, S):
            arr.flags.writeable = False
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "inertia_rot", Irot)
        object.__setattr__(self, "joint_screw", S)
        if not isinstance(self.home_transform, SE3):
            raise TypeError("home_transform must be an SE3")
        if not np.all(np.isfinite(S)) or abs(np.linalg.norm(S) - 1.0) > _SCREW_NORM_TOL:
            raise ValueError("joint screw must be a unit 6-vector")
        # raises on m <= 0 or a non-SPD rotational inertia
        object.__setattr__(self, "spatial_inertia",
                           spatial_inertia_from(self.mass, com, Irot))

    def __eq__(self, other):
        if not isinstance(other, LinkSpec):
            return NotImplemented
        return (self.mass == other.mass
                and np.array_equal(self.com, other.com)
                and np.array_equal(self.inertia_rot, other.inertia_rot)
                and np.array_equal(self.joint_screw, other.joint_screw)
                and self.home_transform == other.home_transform)


@dataclass(frozen=True, eq=False)
class RobotChain:
    """Serial, branchless chain of links ordered base-proximal first."""

    links: tuple
    gravity: np.ndarray = DEFAULT_GRAVITY

    def __post_init__(self):
        links = tuple(self.links)
        if len(links) < 1:
            raise ValueError("a chain needs at least one link")
        g = np.array(self.gravity, dtype=float).reshape(3)
        g.flags.writeable = False
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "gravity", g)

    @property
    def n(self):
        return len(self.links)

    def __len__(self):
        return len(self.links)

    def __eq__(self, other):
        if not isinstance(other, RobotChain):
            return NotImplemented
        return (np.array_equal(self.gravity, other.gravity)
                and len(self.links) == len(other.links)
                and all(a == b for a, b in zip(self.links, other.links)))

    # stacked per-link arrays, computed once per chain
    @cached_property
    def screws(self):
        return _frozen(np.stack([lk.joint_screw for lk in self.links]))

    @cached_property
    def inertias(self):
        return _frozen(np.stack([lk.spatial_inertia for lk in self.links]))

    @cached_property
    def home_rotations(self):
        return _frozen(np.stack([lk.home_transform.rotation for lk in self.links]))

    @cached_property
    def home_translations(self):
        return _frozen(np.stack([lk.home_transform.translation for lk in self.links]))

    @cached_property
    def base_acceleration(self):
        """Fictitious base acceleration that reproduces gravity."""
        return _frozen(np.concatenate([np.zeros(3), -self.gravity]))


def _frozen(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ChainKinematics:
    """Joint-angle-dependent relative transforms and propagation blocks.

    ``rotations[i]``, ``translations[i]`` hold ``T_{i,i-1}`` (the pose of
    link ``i - 1``, or the base, seen from link ``i``).
    """

    rotations: np.ndarray
    translations: np.ndarray
    adjoints: np.ndarray

    @property
    def n(self):
        return self.adjoints.shape[0]

    @property
    def base_adjoint(self):
        return self.adjoints[0]

    @property
    def gamma(self):
        """Sub-diagonal blocks ``Ad(T_{k+1,k})`` for ``k = 0 .. n-2``."""
        return self.adjoints[1:]

    @property
    def transforms(self):
        return [SE3(R, p) for R, p in zip(self.rotations, self.translations)]


def assemble_kinematics(chain, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.n,):
        raise ValueError(f"q must have shape ({chain.n},), got {q.shape}")
    Re, pe = screw_exp_batch(chain.screws, q)
    # T_{i-1,i} = home @ exp(S q); invert to get T_{i,i-1}
    H_R, H_p = chain.home_rotations, chain.home_translations
    R_fwd = H_R @ Re
    p_fwd = (H_R @ pe[..., None])[..., 0] + H_p
    R = np.swapaxes(R_fwd, -1, -2)
    p = -(R @ p_fwd[..., None])[..., 0]
    return ChainKinematics(R, p, _adjoint(R, p))


def _random_rotation(rng):
    return Rotation.random(random_state=rng).as_matrix()


def random_chain(n, seed=0, gravity=DEFAULT_GRAVITY):
    """Random revolute chain with ``n`` links, deterministic in ``seed``.

    Masses are uniform in [0.1, 10] kg, home translations have length
    uniform in [0.1, 1] m, and joint axes are revolute screws passing
    through a point near the link origin, scaled to unit 6-norm.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    links = []
    for _ in range(n):
        mass = rng.uniform(0.1, 10.0)
        com = rng.uniform(-0.2, 0.2, size=3)
        Q = _random_rotation(rng)
        principal = mass * rng.uniform(0.005, 0.05, size=3)
        inertia = Q @ np.diag(principal) @ Q.T
        inertia = 0.5 * (inertia + inertia.T)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        point = rng.uniform(-0.1, 0.1, size=3)
        screw = np.concatenate([axis, -np.cross(axis, point)])
        screw /= np.linalg.norm(screw)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        home = SE3(_random_rotation(rng), rng.uniform(0.1, 1.0) * direction)
        links.append(LinkSpec(mass, com, inertia, screw, home))
    return RobotChain(tuple(links), gravity)


# -- file I/O ---------------------------------------------------------------

def chain_to_dict(chain):
    return {
        "n": chain.n,
        "gravity": chain.gravity.tolist(),
        "links": [
            {
                "mass": lk.mass,
                "com": lk.com.tolist(),
                "inertia_rot": lk.inertia_rot.ravel().tolist(),
                "joint_screw": lk.joint_screw.tolist(),
                "home_transform": {
                    "rotation": lk.home_transform.rotation.ravel().tolist(),
                    "translation": lk.home_transform.translation.tolist(),
                },
            }
            for lk in chain.links
        ],
    }


def _field(obj, key, where, length=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ChainFormatError(f"{where}: missing field '{key}'")
    val = obj[key]
    if length is None:
        return val
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise ChainFormatError(f"{where}: field '{key}' must be numeric") from None
    if arr.shape != (length,):
        raise ChainFormatError(f"{where}: field '{key}' must have {length} numbers")
    return arr


def chain_from_dict(doc):
    if not isinstance(doc, dict):
        raise ChainFormatError("top level: expected an object")
    n = _field(doc, "n", "top level")
    gravity = _field(doc, "gravity", "top level", 3)
    raw_links = _field(doc, "links", "top level")
    if not isinstance(raw_links, list):
        raise ChainFormatError("top level: field 'links' must be a list")
    if not isinstance(n, int) or n != len(raw_links):
        raise ChainFormatError(f"top level: field 'n' ({n}) does not match "
                               f"{len(raw_links)} links")
    links = []
    for k, raw in enumerate(raw_links):
        where = f"link {k}"
        mass = _field(raw, "mass", where)
        if not isinstance(mass, (int, float)) or isinstance(mass, bool):
            raise ChainFormatError(f"{where}: field 'mass' must be a number")
        if not mass > 0:
            raise ChainFormatError(f"{where}: mass must be positive")
        com = _field(raw, "com", where, 3)
        inertia = _field(raw, "inertia_rot", where, 9).reshape(3, 3)
        screw = _field(raw, "joint_screw", where, 6)
        home = _field(raw, "home_transform", where)
        rot = _field(home, "rotation", f"{where}.home_transform", 9).reshape(3, 3)
        trans = _field(home, "translation", f"{where}.home_transform", 3)
        try:
            links.append(LinkSpec(mass, com, inertia, screw, SE3(rot, trans)))
        except ValueError as exc:
            raise ChainFormatError(f"{where}: {exc}") from None
    return RobotChain(tuple(links), gravity)


def save_chain(chain, path):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(chain_to_dict(chain), fh, indent=1)
        fh.write("\n")


def load_chain(path):
    with open(path, encoding="ascii") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChainFormatError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return chain_from_dict(doc)
