import numpy as np
import pytest

from artidyn import instrument
from artidyn.dynfd import (
    ALGORITHMS,
    NotPositiveDefiniteError,
    abia_forward_dynamics,
    batch_forward_dynamics,
    build_cfa_operators,
    build_constraint_basis,
    cfa_forward_dynamics,
    forward_dynamics,
    jsi_by_columns,
)
from artidyn.dynid import bias_torque, inverse_dynamics
from artidyn.model import LinkSpec, RobotChain, assemble_kinematics, random_chain
from artidyn.spatial import SE3
from oracles import (
    arm_chain,
    arm_terms,
    dense_cfa,
    dense_mass_matrix,
    pendulum_accel,
    pendulum_chain,
    rel_err,
)

ALGOS = sorted(ALGORITHMS)


@pytest.mark.parametrize("algo", ALGOS)
def test_pendulum(algo, rng):
    chain = pendulum_chain()
    for q, qd, tau in rng.uniform(-2, 2, size=(20, 3)):
        qdd = forward_dynamics(chain, [q], [qd], [tau], algo=algo)
        assert qdd[0] == pytest.approx(pendulum_accel(q, tau), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("algo", ALGOS)
def test_free_fall_holding_torque_gives_rest(algo):
    chain = pendulum_chain()
    hold = inverse_dynamics(chain, [0.3], [0.0], [0.0])
    assert abs(forward_dynamics(chain, [0.3], [0.0], hold, algo=algo)[0]) < 1e-12


@pytest.mark.parametrize("algo", ALGOS)
def test_two_link_arm(algo, rng):
    chain = arm_chain()
    for _ in range(20):
        q, qd, tau = rng.uniform(-2, 2, size=(3, 2))
        M, h = arm_terms(q, qd)
        ref = np.linalg.solve(M, tau - h)
        assert rel_err(forward_dynamics(chain, q, qd, tau, algo=algo), ref) < 1e-10


def test_mass_matrix_matches_closed_form_and_dense(rng):
    chain = arm_chain()
    q = rng.uniform(-2, 2, 2)
    np.testing.assert_allclose(jsi_by_columns(chain, q), arm_terms(q, np.zeros(2))[0],
                               rtol=1e-12)
    chain = random_chain(15, seed=4)
    q = rng.uniform(-1, 1, 15)
    M = jsi_by_columns(chain, q, symmetrize=False)
    assert rel_err(M, dense_mass_matrix(chain, assemble_kinematics(chain, q))) < 1e-12
    assert np.abs(M - M.T).max() <= 1e-12 * np.abs(M).max()
    assert np.linalg.eigvalsh(M).min() > 0


@pytest.mark.parametrize("algo", ALGOS)
def test_against_dense_mass_matrix(algo, rng):
    chain = random_chain(30, seed=7)
    q, qd, tau = rng.uniform(-1, 1, size=(3, 30))
    M = dense_mass_matrix(chain, assemble_kinematics(chain, q))
    ref = np.linalg.solve(M, tau - bias_torque(chain, q, qd))
    assert rel_err(forward_dynamics(chain, q, qd, tau, algo=algo), ref) < 1e-9


def test_constraint_basis_examples():
    chain = pendulum_chain()
    W = build_constraint_basis(chain)[0]
    S = chain.screws[0]
    assert W.shape == (6, 5)
    np.testing.assert_allclose(W.T @ S, 0.0, atol=1e-15)
    np.testing.assert_allclose(W.T @ W, np.eye(5), atol=1e-15)
    # a z revolute: the constraint directions span everything except w_z
    np.testing.assert_allclose(W @ W.T + np.outer(S, S), np.eye(6), atol=1e-15)


def test_constraint_basis_random(rng):
    chain = random_chain(20, seed=9)
    W = build_constraint_basis(chain)
    N = np.concatenate([W, chain.screws[:, :, None]], axis=2)
    np.testing.assert_allclose(np.swapaxes(N, 1, 2) @ N, np.broadcast_to(np.eye(6), N.shape),
                               atol=1e-14)


def test_cfa_operators_match_dense_assembly(rng):
    chain = random_chain(6, seed=1)
    kin = assemble_kinematics(chain, rng.uniform(-1, 1, 6))
    W = build_constraint_basis(chain)
    ops = build_cfa_operators(chain, kin, W)
    A, B, C = dense_cfa(chain, kin, W)
    assert rel_err(ops.A.dense(), A) < 1e-12
    assert rel_err(ops.dense_B(), B) < 1e-12
    assert rel_err(ops.dense_C(), C) < 1e-12
    tau = rng.normal(size=6)
    F = rng.normal(size=(6, 5))
    np.testing.assert_allclose(ops.B_matvec(tau).ravel(), B @ tau, atol=1e-12)
    np.testing.assert_allclose(ops.BT_matvec(F), B.T @ F.ravel(), atol=1e-12)
    np.testing.assert_allclose(ops.C_matvec(tau), C @ tau, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_schur_complement_inverts_mass_matrix(rng, n):
    chain = random_chain(n, seed=n)
    q = rng.uniform(-1, 1, n)
    kin = assemble_kinematics(chain, q)
    ops = build_cfa_operators(chain, kin)
    A, B, C = ops.A.dense(), ops.dense_B(), ops.dense_C()
    schur = C - B.T @ np.linalg.solve(A, B)
    M = jsi_by_columns(chain, q)
    assert np.abs(schur @ M - np.eye(n)).max() < 1e-7


def test_cfa_without_refinement_is_close(rng):
    chain = random_chain(50, seed=3)
    q, qd, tau = rng.uniform(-1, 1, size=(3, 50))
    ref = abia_forward_dynamics(chain, q, qd, tau)
    assert rel_err(cfa_forward_dynamics(chain, q, qd, tau, refine=0), ref) < 1e-8
    assert rel_err(cfa_forward_dynamics(chain, q, qd, tau), ref) < 1e-10


def test_abia_articulated_inertias(rng):
    chain = random_chain(4, seed=2)
    q, qd, tau = rng.uniform(-1, 1, size=(3, 4))
    _, Jh = abia_forward_dynamics(chain, q, qd, tau, return_inertias=True)
    # the tip has nothing outboard of it
    np.testing.assert_allclose(Jh[-1], chain.inertias[-1], atol=1e-14)
    for blk in Jh:
        np.testing.assert_allclose(blk, blk.T, atol=1e-12)
        assert np.linalg.eigvalsh(blk).min() > -1e-12


def test_dependency_counters(rng):
    n = 24
    chain = random_chain(n, seed=0)
    q, qd, tau = rng.uniform(-1, 1, size=(3, n))
    depth = int(np.ceil(np.log2(n)))
    with instrument.track() as c:
        cfa_forward_dynamics(chain, q, qd, tau)
    assert c["sequential_link_steps"] == 0
    assert c["oee_rounds"] == depth
    with instrument.track() as c:
        abia_forward_dynamics(chain, q, qd, tau)
    assert c["sequential_link_steps"] == n - 1
    with instrument.track() as c:
        forward_dynamics(chain, q, qd, tau, algo="jsiia")
    assert c["sequential_link_steps"] == 0


def test_unknown_algorithm():
    with pytest.raises(ValueError, match="unknown algorithm"):
        forward_dynamics(pendulum_chain(), [0.0], [0.0], [0.0], algo="rnea")


def test_non_positive_definite_mass_matrix_raises(monkeypatch):
    import artidyn.dynfd as dynfd

    monkeypatch.setattr(dynfd, "jsi_by_columns", lambda *a, **k: -np.eye(2))
    with pytest.raises(NotPositiveDefiniteError):
        forward_dynamics(arm_chain(), [0.0, 0.0], [0.0, 0.0], [1.0, 1.0], algo="jsiia")


@pytest.mark.parametrize("algo", ALGOS)
def test_batch_isolates_failures(algo, rng):
    good = random_chain(5, seed=1)
    problems = [(good, *rng.uniform(-1, 1, size=(3, 5))),
                (good, np.zeros(4), np.zeros(5), np.zeros(5)),  # wrong length
                (good, *rng.uniform(-1, 1, size=(3, 5)))]
    out = batch_forward_dynamics(problems, algo=algo, workers=2)
    assert not out.ok
    assert out.results[1] is None and isinstance(out.errors[1], ValueError)
    for k in (0, 2):
        assert out.errors[k] is None
        np.testing.assert_array_equal(out.results[k], forward_dynamics(*problems[k], algo=algo))


def test_batch_rejects_empty():
    with pytest.raises(ValueError):
        batch_forward_dynamics([], "cfa")


@pytest.mark.parametrize("algo", ALGOS)
def test_workers_are_bitwise_identical(algo, rng):
    chain = random_chain(40, seed=2)
    q, qd, tau = rng.uniform(-1, 1, size=(3, 40))
    ref = forward_dynamics(chain, q, qd, tau, algo=algo, workers=1)
    for w in (2, 4, 8):
        assert np.array_equal(forward_dynamics(chain, q, qd, tau, algo=algo, workers=w), ref)


def test_pendulum_mass_matrix_is_joint_inertia():
    M = jsi_by_columns(pendulum_chain(), [0.7])
    assert M[0, 0] == pytest.approx(0.03 + 1.7 * 0.4 ** 2, rel=1e-14)


def test_mass_matrix_quadratic_form_positive(rng):
    chain = random_chain(12, seed=8)
    M = jsi_by_columns(chain, rng.uniform(-1, 1, 12))
    x = rng.normal(size=(100, 12))
    assert (np.einsum("ki,ij,kj->k", x, M, x) > 0).all()


@pytest.mark.parametrize("algo", ALGOS)
def test_bias_torque_gives_zero_acceleration(algo, rng):
    chain = random_chain(10, seed=5)
    q, qd = rng.uniform(-1, 1, size=(2, 10))
    tau = bias_torque(chain, q, qd)
    scale = np.linalg.norm(tau) / np.linalg.norm(jsi_by_columns(chain, q), 2)
    assert np.abs(forward_dynamics(chain, q, qd, tau, algo=algo)).max() <= 1e-10 * scale


def test_single_link_abia_matches_jsiia(rng):
    chain = random_chain(1, seed=3)
    q, qd, tau = rng.uniform(-1, 1, size=(3, 1))
    qdd, Jh = abia_forward_dynamics(chain, q, qd, tau, return_inertias=True)
    np.testing.assert_array_equal(Jh[0], chain.inertias[0])
    assert qdd[0] == pytest.approx(forward_dynamics(chain, q, qd, tau, "jsiia")[0], rel=1e-13)


def test_axis_aligned_screw_complement():
    link = LinkSpec(1.0, [0, 0, 0], np.eye(3), [1, 0, 0, 0, 0, 0], SE3.identity())
    W = build_constraint_basis(RobotChain((link,)))[0]
    np.testing.assert_array_equal(np.abs(W), np.eye(6)[:, 1:])
    chain = random_chain(25, seed=6)
    W = build_constraint_basis(chain)
    N = np.concatenate([W, chain.screws[:, :, None]], axis=2)
    np.testing.assert_allclose(np.abs(np.linalg.det(N)), 1.0, atol=1e-12)


def test_single_link_cfa_blocks(rng):
    chain = random_chain(1, seed=2)
    kin = assemble_kinematics(chain, rng.uniform(-1, 1, 1))
    W = build_constraint_basis(chain)[0]
    S = chain.screws[0]
    Jinv = np.linalg.inv(chain.inertias[0])
    ops = build_cfa_operators(chain, kin)
    np.testing.assert_allclose(ops.A.D[0], W.T @ Jinv @ W, atol=1e-12)
    np.testing.assert_allclose(ops.B_diag[0], W.T @ Jinv @ S, atol=1e-12)
    assert ops.C_diag[0] == pytest.approx(S @ Jinv @ S, rel=1e-12)


def test_cfa_dense_assembly_up_to_sixteen_links(rng):
    for n in (2, 9, 16):
        chain = random_chain(n, seed=20 + n)
        kin = assemble_kinematics(chain, rng.uniform(-1, 1, n))
        W = build_constraint_basis(chain)
        ops = build_cfa_operators(chain, kin, W)
        A = dense_cfa(chain, kin, W)[0]
        assert np.abs(ops.A.dense() - A).max() <= 1e-11 * np.abs(A).max()
        assert min(np.linalg.eigvalsh(blk).min() for blk in ops.A.D) > 0


def test_batch_of_one_and_identical_batch(rng):
    chain = random_chain(3, seed=1)
    prob = (chain, *rng.uniform(-1, 1, size=(3, 3)))
    single = forward_dynamics(*prob, algo="cfa")
    assert np.array_equal(batch_forward_dynamics([prob], "cfa").results[0], single)
    out = batch_forward_dynamics([prob] * 1000, "cfa", workers=4)
    assert out.ok and all(np.array_equal(r, single) for r in out.results)


def test_mixed_batch_agrees_across_algorithms(rng):
    problems = [(random_chain(n, seed=n), *rng.uniform(-1, 1, size=(3, n)))
                for n in (1, 4, 11, 30)]
    outs = {a: batch_forward_dynamics(problems, a, workers=2).results for a in ALGOS}
    for k in range(len(problems)):
        for a in ALGOS[1:]:
            assert rel_err(outs[a][k], outs[ALGOS[0]][k]) < 1e-8
