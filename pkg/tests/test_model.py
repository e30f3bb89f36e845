"""System assembly checks: scatter, joints, bodies, director transport."""

import numpy as np
import pytest

from ancf14.element import BeamSpec, mass_matrix
from ancf14.errors import JointConfigError, ModelError
from ancf14.framing import FrameTriad
from ancf14.model import (
    LinearRows,
    Model,
    OffsetSpherical,
    QuaternionUnit,
    WeldBody,
    assemble_energy,
    assemble_forces,
    assemble_mass,
    assemble_tangent_fd,
    clamp_node,
    constraint_eval,
    cylindrical_about_axis,
    external_force,
    kinetic_energy_total,
    kinetic_gradient,
    link_nodes,
    pin_node,
    quat_matrix,
    quat_rotate,
    quat_rotate_jacobian,
    revolute_about_axis,
    transport_directors,
    weld_disk,
    weld_sections,
)


def spec(l=0.5):
    r = 0.01
    A = np.pi * r**2
    I = np.pi * r**4 / 4
    return BeamSpec(E=2.0e11, nu=0.3, rho=7800.0, A=A, I_y=I, I_z=I,
                    J=2 * I, J_t=2 * I, l=l)


def two_element_model(gravity=(0.0, 0.0, -9.81)):
    m = Model(gravity=gravity)
    s = spec()
    n0 = m.add_node([0, 0, 0], [1, 0, 0])
    n1 = m.add_node([0.5, 0, 0], [1, 0, 0])
    n2 = m.add_node([1.0, 0, 0], [1, 0, 0])
    m.add_beam(s, n0, n1)
    m.add_beam(s, n1, n2)
    return m


def perturb(state, rng, amp=0.02):
    st = state.copy()
    st.q = st.q + amp * rng.standard_normal(len(st.q))
    # keep quaternions roughly unit so frames stay sane
    return st


class TestQuaternions:
    def test_rotation_matrix_orthogonal(self):
        p = np.array([0.9, 0.2, -0.3, 0.1])
        p /= np.linalg.norm(p)
        r = quat_matrix(p)
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0)

    def test_rotate_jacobian_matches_fd(self):
        rng = np.random.default_rng(3)
        p = rng.standard_normal(4)
        v = rng.standard_normal(3)
        jac = quat_rotate_jacobian(p, v)
        h = 1e-7
        for k in range(4):
            pp, pm = p.copy(), p.copy()
            pp[k] += h
            pm[k] -= h
            fd = (quat_rotate(pp, v) - quat_rotate(pm, v)) / (2 * h)
            assert np.allclose(jac[:, k], fd, atol=1e-6)


class TestMassAssembly:
    def test_single_element_identity_map(self):
        m = Model()
        s = spec()
        n0 = m.add_node([0, 0, 0], [1, 0, 0])
        n1 = m.add_node([0.5, 0, 0], [1, 0, 0])
        m.add_beam(s, n0, n1)
        state = m.initial_state()
        assert np.allclose(assemble_mass(m, state.q), mass_matrix(s))

    def test_shared_node_block_sums(self):
        m = two_element_model()
        state = m.initial_state()
        big = assemble_mass(m, state.q)
        single = mass_matrix(spec())
        shared = big[7:14, 7:14]
        assert np.allclose(shared, single[7:14, 7:14] + single[0:7, 0:7])

    def test_uniform_translation_mass(self):
        m = two_element_model()
        state = m.initial_state()
        v = np.zeros(m.n_q)
        for k in range(m.n_nodes):
            v[m.node_pos(k).start] = 1.0
        s = spec()
        total = s.rho * s.A * s.l * 2
        assert v @ assemble_mass(m, state.q) @ v == pytest.approx(total)

    def test_body_spin_energy(self):
        m = Model()
        inertia = np.diag([2.0, 1.0, 1.5]) * 1e-3
        b = m.add_body(0.8, inertia, [0, 0, 0])
        state = m.initial_state()
        omega = np.array([3.0, -1.0, 0.5])
        p = state.q[m.body_quat(b)]
        # p_dot giving body angular velocity omega: omega = 2 G(p) p_dot
        from ancf14.model import quat_rate_matrix
        g = quat_rate_matrix(p)
        state.q_dot[m.body_quat(b)] = 0.5 * g.T @ omega
        t_ref = 0.5 * omega @ inertia @ omega
        assert kinetic_energy_total(m, state.q, state.q_dot) == \
            pytest.approx(t_ref)

    def test_kinetic_gradient_matches_fd(self):
        rng = np.random.default_rng(5)
        m = Model()
        m.add_body(0.8, np.diag([2.0, 1.0, 1.5]) * 1e-3, [0, 0, 0])
        state = m.initial_state()
        q = state.q + 0.1 * rng.standard_normal(m.n_q)
        qd = rng.standard_normal(m.n_q)
        grad = kinetic_gradient(m, q, qd)
        h = 1e-7
        for k in range(m.n_q):
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            fd = (kinetic_energy_total(m, qp, qd)
                  - kinetic_energy_total(m, qm, qd)) / (2 * h)
            assert grad[k] == pytest.approx(fd, abs=1e-6)


class TestForceAssembly:
    def test_undeformed_gravity_free_zero(self):
        m = two_element_model(gravity=(0, 0, 0))
        state = m.initial_state()
        f = assemble_forces(m, state.q, state.directors)
        assert np.max(np.abs(f)) < 1e-14 * 2e11

    def test_matches_energy_gradient(self):
        rng = np.random.default_rng(11)
        m = two_element_model()
        state = m.initial_state()
        q = state.q + 0.02 * rng.standard_normal(m.n_q)
        for mode in ("small", "large"):
            f = assemble_forces(m, q, state.directors, mode)
            h = 1e-7
            g = np.zeros(m.n_q)
            for k in range(m.n_q):
                qp, qm = q.copy(), q.copy()
                qp[k] += h
                qm[k] -= h
                g[k] = (assemble_energy(m, qp, state.directors, mode)
                        - assemble_energy(m, qm, state.directors, mode)) \
                    / (2 * h)
            scale = np.max(np.abs(g))
            assert np.max(np.abs(f - g)) / scale < 1e-6

    def test_permutation_consistency(self):
        # same physical model, nodes numbered in reverse order
        s = spec()
        m1 = two_element_model()
        m2 = Model(gravity=(0.0, 0.0, -9.81))
        n2 = m2.add_node([1.0, 0, 0], [1, 0, 0])
        n1 = m2.add_node([0.5, 0, 0], [1, 0, 0])
        n0 = m2.add_node([0, 0, 0], [1, 0, 0])
        m2.add_beam(s, n0, n1)
        m2.add_beam(s, n1, n2)
        st1 = m1.initial_state()
        st2 = m2.initial_state()
        perm = np.r_[np.arange(14, 21), np.arange(7, 14), np.arange(0, 7)]
        rng = np.random.default_rng(2)
        dq = 0.02 * rng.standard_normal(m1.n_q)
        f1 = assemble_forces(m1, st1.q + dq, st1.directors)
        f2 = assemble_forces(m2, st2.q[perm] * 0 + (st1.q + dq), st2.directors)
        # mapping: model2 node k holds model1 node (2-k); scatter respects it
        q2 = st2.q.copy()
        q2[m2.node_slice(0)] = (st1.q + dq)[m1.node_slice(2)]
        q2[m2.node_slice(1)] = (st1.q + dq)[m1.node_slice(1)]
        q2[m2.node_slice(2)] = (st1.q + dq)[m1.node_slice(0)]
        f2 = assemble_forces(m2, q2, st2.directors)
        assert np.allclose(f2[m2.node_slice(0)], f1[m1.node_slice(2)])
        assert np.allclose(f2[m2.node_slice(1)], f1[m1.node_slice(1)])
        assert np.allclose(f2[m2.node_slice(2)], f1[m1.node_slice(0)])

    def test_external_point_load(self):
        m = two_element_model()
        m.add_load(2, lambda t: np.array([0.0, 0.0, -5.0 * t]))
        f = external_force(m, 2.0)
        assert np.allclose(f[m.node_pos(2)], [0, 0, -10.0])
        assert np.count_nonzero(f) == 1

    def test_tangent_matches_global_fd(self):
        rng = np.random.default_rng(7)
        m = two_element_model()
        state = m.initial_state()
        q = state.q + 0.02 * rng.standard_normal(m.n_q)
        k = assemble_tangent_fd(m, q, state.directors)
        h = 1e-6
        cols = rng.choice(m.n_q, size=6, replace=False)
        for c in cols:
            qp, qm = q.copy(), q.copy()
            qp[c] += h
            qm[c] -= h
            fd = (assemble_forces(m, qp, state.directors)
                  - assemble_forces(m, qm, state.directors)) / (2 * h)
            scale = max(np.max(np.abs(fd)), 1.0)
            assert np.max(np.abs(k[:, c] - fd)) / scale < 2e-4


def fd_constraint_jacobian(model, joint_free_eval, q, h=1e-7):
    g0 = joint_free_eval(q)
    jac = np.zeros((len(g0), len(q)))
    for k in range(len(q)):
        qp, qm = q.copy(), q.copy()
        qp[k] += h
        qm[k] -= h
        jac[:, k] = (joint_free_eval(qp) - joint_free_eval(qm)) / (2 * h)
    return jac


class TestJoints:
    def test_linear_rows_validation(self):
        m = two_element_model()
        with pytest.raises(JointConfigError):
            m.add_joint(LinearRows(np.zeros((1, m.n_q))))
        with pytest.raises(JointConfigError):
            m.add_joint(LinearRows(np.ones((1, 3))))

    def test_pin_at_initial_position_zero_residual(self):
        m = two_element_model()
        m.add_joint(pin_node(m, 0))
        state = m.initial_state()
        g, _ = constraint_eval(m, state.q, 0.0, state.directors)
        assert np.max(np.abs(g)) == 0.0

    def test_clamp_residual_is_gap(self):
        m = two_element_model()
        m.add_joint(clamp_node(m, 0))
        state = m.initial_state()
        state.q[m.node_theta_index(0)] = 0.3
        g, _ = constraint_eval(m, state.q, 0.0, state.directors)
        assert g[6] == pytest.approx(0.3)

    def test_revolute_and_cylindrical_row_counts(self):
        m = two_element_model()
        for j in revolute_about_axis(m, 0, [1, 0, 0]):
            m.add_joint(j)
        for j in cylindrical_about_axis(m, 2, [1, 0, 0]):
            m.add_joint(j)
        assert m.n_constraints == 5 + 4

    def test_driven_revolute_angle(self):
        m = two_element_model()
        for j in revolute_about_axis(m, 0, [1, 0, 0],
                                     angle=lambda t: 0.5 * t):
            m.add_joint(j)
        state = m.initial_state()
        g, _ = constraint_eval(m, state.q, 2.0, state.directors)
        assert g[-1] == pytest.approx(-1.0)   # theta(0) - 0.5*2

    def test_zero_axis_rejected(self):
        m = two_element_model()
        with pytest.raises(JointConfigError):
            revolute_about_axis(m, 0, [0, 0, 0])

    def test_offset_spherical_jacobian_fd(self):
        rng = np.random.default_rng(13)
        m = two_element_model()
        n3 = m.add_node([1.0, 1e-4, 0.0], [0, 0, 1])
        m.add_beam(spec(), n3, m.add_node([1.0, 1e-4, 0.5], [0, 0, 1]))
        joint = OffsetSpherical(1, "j", [0.0, 1e-4, 0.0], n3)
        m.add_joint(joint)
        state = m.initial_state()
        q = state.q + 0.02 * rng.standard_normal(m.n_q)
        jac = joint.jacobian(m, q, 0.0, state.directors)
        fd = fd_constraint_jacobian(
            m, lambda qq: joint.residual(m, qq, 0.0, state.directors), q)
        assert np.max(np.abs(jac - fd)) < 1e-6

    def test_weld_jacobian_fd(self):
        rng = np.random.default_rng(17)
        m = two_element_model()
        pre = m.initial_state()
        from ancf14.element import station_frame_with_sensitivity
        el = m.beams[1]
        mat, _, _, _ = station_frame_with_sensitivity(
            pre.q[m.element_dofs(1)], el.spec, 0.0, pre.directors[1])
        center = pre.q[m.node_pos(1)] + 0.05 * mat.a2
        b = m.add_body(0.5, np.diag([2.0, 1.0, 1.0]) * 1e-3, center)
        state0 = m.initial_state()
        joint = weld_disk(m, 1, "i", [0.0, 0.05, 0.0], b,
                          q=state0.q, directors=state0.directors)
        state = m.initial_state()
        g0, _ = constraint_eval(m, state.q, 0.0, state.directors)
        assert np.max(np.abs(g0)) < 1e-12   # captured rel rotation
        q = state.q + 0.02 * rng.standard_normal(m.n_q)
        jac = joint.jacobian(m, q, 0.0, state.directors)
        fd = fd_constraint_jacobian(
            m, lambda qq: joint.residual(m, qq, 0.0, state.directors), q)
        assert np.max(np.abs(jac - fd)) < 1e-6

    def test_weld_sections_jacobian_fd(self):
        # two chained elements with separate end nodes, meeting at an
        # angle, welded section-to-section at the junction
        rng = np.random.default_rng(23)
        m = Model()
        s = spec()
        m.add_node([0.0, 0.0, 0.0], [1, 0, 0])
        m.add_node([s.l, 0.0, 0.0], [1, 0, 0])
        d = np.array([0.8, 0.6, 0.0])
        m.add_node([s.l, 0.0, 0.0], d)
        m.add_node(np.array([s.l, 0.0, 0.0]) + s.l * d, d)
        m.add_beam(s, 0, 1)
        m.add_beam(s, 2, 3)
        state0 = m.initial_state()
        joint = weld_sections(m, 0, "j", 1, "i",
                              state0.q, state0.directors)
        state = m.initial_state()
        g0, _ = constraint_eval(m, state.q, 0.0, state.directors)
        assert np.max(np.abs(g0)) < 1e-12   # captured relative pose
        q = state.q + 0.02 * rng.standard_normal(m.n_q)
        jac = joint.jacobian(m, q, 0.0, state.directors)
        fd = fd_constraint_jacobian(
            m, lambda qq: joint.residual(m, qq, 0.0, state.directors), q)
        assert np.max(np.abs(jac - fd)) < 1e-6

    def test_quaternion_unit_jacobian(self):
        m = Model()
        m.add_body(1.0, np.eye(3) * 1e-3, [0, 0, 0])
        state = m.initial_state()
        g, jac = constraint_eval(m, state.q, 0.0, state.directors)
        assert g[0] == pytest.approx(0.0)
        assert np.allclose(jac[0, m.body_quat(0)], [2, 0, 0, 0])

    def test_link_nodes_residual(self):
        m = two_element_model()
        m.add_joint(link_nodes(m, 0, 2))
        state = m.initial_state()
        g, _ = constraint_eval(m, state.q, 0.0, state.directors)
        assert np.allclose(g, [-1.0, 0.0, 0.0])


class TestDirectorTransport:
    def test_static_tangent_unchanged(self):
        m = two_element_model()
        state = m.initial_state()
        new = transport_directors(m, state.q, state.q, state.directors)
        for old, upd in zip(state.directors, new):
            assert np.allclose(old.as_matrix(), upd.as_matrix(), atol=1e-14)

    def test_rigid_rotation_equivariance(self):
        m = two_element_model()
        state = m.initial_state()
        ang = 0.7
        rot = np.array([[np.cos(ang), -np.sin(ang), 0],
                        [np.sin(ang), np.cos(ang), 0],
                        [0, 0, 1.0]])
        q_new = state.q.copy()
        for k in range(m.n_nodes):
            q_new[m.node_pos(k)] = rot @ state.q[m.node_pos(k)]
            q_new[m.node_slope_slice(k)] = rot @ state.q[m.node_slope_slice(k)]
        new = transport_directors(m, state.q, q_new, state.directors)
        for old, upd in zip(state.directors, new):
            assert np.allclose(upd.as_matrix(), rot @ old.as_matrix(),
                               atol=1e-10)

    def test_full_turn_closure(self):
        # rotate the model slowly through 360 degrees about an axis
        # perpendicular to the tangent; directors must come back
        m = Model()
        s = spec()
        n0 = m.add_node([0, 0, 0], [1, 0, 0])
        n1 = m.add_node([s.l, 0, 0], [1, 0, 0])
        m.add_beam(s, n0, n1)
        state = m.initial_state()
        n_steps = 1000
        directors = state.directors
        q_old = state.q.copy()
        for k in range(1, n_steps + 1):
            ang = 2 * np.pi * k / n_steps
            rot = np.array([[np.cos(ang), 0, np.sin(ang)],
                            [0, 1.0, 0],
                            [-np.sin(ang), 0, np.cos(ang)]])
            q_new = state.q.copy()
            for n in range(2):
                q_new[m.node_pos(n)] = rot @ state.q[m.node_pos(n)]
                q_new[m.node_slope_slice(n)] = \
                    rot @ state.q[m.node_slope_slice(n)]
            directors = transport_directors(m, q_old, q_new, directors)
            q_old = q_new
        assert np.max(np.abs(directors[0].as_matrix()
                             - state.directors[0].as_matrix())) < 1e-6


class TestModelValidation:
    def test_bad_node_reference(self):
        m = Model()
        with pytest.raises(ModelError):
            m.add_beam(spec(), 0, 1)

    def test_bad_load_node(self):
        m = two_element_model()
        with pytest.raises(ModelError):
            m.add_load(9, lambda t: np.zeros(3))
