"""Build a robot chain, store it as JSON and look at its kinematics.

Run with ``python3 demos/01_chain_and_kinematics.py``.
"""

import os
import tempfile

import numpy as np

from artidyn import assemble_kinematics, load_chain, random_chain, save_chain
from artidyn.dynid import propagate_velocities

# A random seven-link revolute chain. The seed fixes every mass, inertia,
# joint axis and home pose, so the same call always returns the same robot.
chain = random_chain(7, seed=3)
print(f"{chain.n} links, masses {[round(lk.mass, 2) for lk in chain.links]}")

# Chains round-trip through a small JSON document without loss.
with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "arm.json")
    save_chain(chain, path)
    assert load_chain(path) == chain
    print(f"saved and reloaded {os.path.getsize(path)} bytes of JSON")

# Kinematics at a configuration: relative transforms and the adjoint blocks
# that carry twists from one link to the next.
q = np.linspace(-1.0, 1.0, chain.n)
kin = assemble_kinematics(chain, q)
print("adjoint block linking links 0 and 1:\n", np.round(kin.gamma[0], 3))

# Link velocities follow from the joint rates by one scan over the chain.
qd = np.ones(chain.n)
V = propagate_velocities(chain, kin, qd)
print("tip twist (angular, linear):", np.round(V[-1], 3))
