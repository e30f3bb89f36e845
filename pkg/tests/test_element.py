"""Element-level checks: shapes, mass, gravity, strains, forces."""

import numpy as np
import pytest

from ancf14.element import (
    BeamSpec,
    CrossSectionPoint,
    N_DOF,
    QuadratureRule,
    default_directors,
    elastic_energy_large,
    elastic_energy_small,
    gravity_force,
    internal_force_large,
    internal_force_small,
    kinetic_energy,
    mass_matrix,
    node_material_frame,
    position_field,
    shape_eval,
    element_kinematics,
    natural_strain_state,
)
from ancf14.errors import DegenerateTangentError, DomainError, ModelError


def round_spec(l=1.0, E=2.0e11, rho=7800.0, r=0.01):
    A = np.pi * r**2
    I = np.pi * r**4 / 4.0
    return BeamSpec(E=E, nu=0.3, rho=rho, A=A, I_y=I, I_z=I,
                    J=2 * I, J_t=2 * I, l=l)


def straight_q(l, direction=(1.0, 0.0, 0.0), stretch=1.0):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    q = np.zeros(N_DOF)
    q[0:3] = 0.0
    q[3:6] = stretch * d
    q[7:10] = stretch * l * d
    q[10:13] = stretch * d
    return q


def bent_q(l, amp=0.15, twist=0.3):
    """Mildly curved and twisted configuration used as a generic test point."""
    q = straight_q(l)
    q[7:10] += amp * np.array([0.0, 1.0, 0.4])
    q[10:13] += amp * np.array([0.0, 0.8, -0.3])
    q[3:6] += amp * np.array([0.0, -0.2, 0.5])
    q[6] = 0.1
    q[13] = twist
    return q


class TestBeamSpec:
    def test_shear_modulus_default(self):
        spec = round_spec()
        assert spec.G == pytest.approx(spec.E / 2.6)

    def test_explicit_shear_modulus_kept(self):
        spec = BeamSpec(E=1.0, nu=0.3, rho=1.0, A=1.0, I_y=0.1, I_z=0.1,
                        J=0.2, J_t=0.2, l=1.0, G=0.7)
        assert spec.G == 0.7

    def test_rejects_nonpositive(self):
        with pytest.raises(ModelError):
            BeamSpec(E=-1.0, nu=0.3, rho=1.0, A=1.0, I_y=0.1, I_z=0.1,
                     J=0.2, J_t=0.2, l=1.0)

    def test_rejects_polar_below_planar(self):
        with pytest.raises(ModelError):
            BeamSpec(E=1.0, nu=0.3, rho=1.0, A=1.0, I_y=0.3, I_z=0.1,
                     J=0.2, J_t=0.2, l=1.0)


class TestShapeFunctions:
    def test_endpoint_interpolation(self):
        l = 1.7
        q = bent_q(l)
        s0, sp0, _, sb0, _ = shape_eval(0.0, l)
        sl, spl, _, sbl, _ = shape_eval(l, l)
        assert np.allclose(s0 @ q, q[0:3])
        assert np.allclose(sp0 @ q, q[3:6])
        assert np.allclose(sl @ q, q[7:10])
        assert np.allclose(spl @ q, q[10:13])
        assert sb0 @ q == pytest.approx(q[6])
        assert sbl @ q == pytest.approx(q[13])

    def test_midpoint_values(self):
        l = 2.0
        s, _, _, sbar, _ = shape_eval(l / 2, l)
        assert s[0, 0] == pytest.approx(0.5)
        assert s[0, 7] == pytest.approx(0.5)
        assert s[0, 3] == pytest.approx(l / 8)
        assert s[0, 10] == pytest.approx(-l / 8)
        assert sbar[6] == pytest.approx(0.5)
        assert sbar[13] == pytest.approx(0.5)

    def test_derivatives_match_finite_differences(self):
        l = 1.3
        h = 1e-6
        for x in (0.2, 0.61, 1.1):
            s_m, sp_m, spp_m, sb_m, sbp_m = shape_eval(x - h, l)
            s_p, sp_p, spp_p, sb_p, sbp_p = shape_eval(x + h, l)
            _, sp, spp, _, sbp = shape_eval(x, l)
            assert np.allclose((s_p - s_m) / (2 * h), sp, atol=1e-7)
            assert np.allclose((sp_p - sp_m) / (2 * h), spp, atol=1e-6)
            assert np.allclose((sb_p - sb_m) / (2 * h), sbp, atol=1e-7)

    def test_outside_domain_raises(self):
        with pytest.raises(DomainError):
            shape_eval(-0.1, 1.0)
        with pytest.raises(DomainError):
            shape_eval(1.2, 1.0)


class TestMassMatrix:
    def test_matches_quadrature_oracle(self):
        # independent oracle: rho int(A S^T S + J Sbar Sbar^T) dx,
        # 10-point Gauss (exact for the degree-6 integrand)
        spec = round_spec(l=1.37)
        quad = QuadratureRule.gauss(10, spec.l)
        m_ref = np.zeros((N_DOF, N_DOF))
        for x, w in quad.points:
            s, _, _, sbar, _ = shape_eval(x, spec.l)
            m_ref += w * spec.rho * (spec.A * s.T @ s
                                     + spec.J * np.outer(sbar, sbar))
        m = mass_matrix(spec)
        assert np.max(np.abs(m - m_ref)) <= 1e-12 * np.max(np.abs(m_ref))

    def test_symmetric_positive_definite(self):
        m = mass_matrix(round_spec())
        assert np.allclose(m, m.T)
        assert np.min(np.linalg.eigvalsh(m)) > 0.0

    def test_total_mass(self):
        spec = round_spec(l=2.3)
        m = mass_matrix(spec)
        # rigid translation recovers rho A l
        v = np.zeros(N_DOF)
        v[0] = v[7] = 1.0
        assert v @ m @ v == pytest.approx(spec.rho * spec.A * spec.l)

    def test_kinetic_energy_rigid_spin(self):
        spec = round_spec(l=1.0)
        omega = 3.1
        q_dot = np.zeros(N_DOF)
        q_dot[6] = q_dot[13] = omega
        t_ref = 0.5 * spec.rho * spec.J * spec.l * omega**2
        assert kinetic_energy(q_dot, spec) == pytest.approx(t_ref)


class TestGravity:
    def test_matches_quadrature_oracle(self):
        spec = round_spec(l=1.9)
        g = np.array([0.0, 0.0, -9.81])
        quad = QuadratureRule.gauss(6, spec.l)
        f_ref = np.zeros(N_DOF)
        for x, w in quad.points:
            s, _, _, _, _ = shape_eval(x, spec.l)
            f_ref += w * spec.rho * spec.A * (s.T @ g)
        assert np.allclose(gravity_force(spec, g), f_ref, atol=1e-14)

    def test_twist_rows_zero(self):
        f = gravity_force(round_spec(), [0.0, -9.81, 0.0])
        assert f[6] == 0.0 and f[13] == 0.0

    def test_resultant_is_weight(self):
        spec = round_spec(l=0.7)
        g = np.array([0.0, 0.0, -9.81])
        f = gravity_force(spec, g)
        assert np.allclose(f[0:3] + f[7:10], spec.rho * spec.A * spec.l * g)


class TestStrainMeasures:
    def test_undeformed_is_strain_free(self):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        q = straight_q(spec.l)
        for kin in element_kinematics(q, spec, quad):
            st = kin.strain
            assert st.stretch == pytest.approx(1.0)
            assert abs(st.gamma1) < 1e-14
            assert abs(st.gamma2) < 1e-14
            assert st.tau_m == 0.0

    def test_pure_stretch(self):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        lam = 1.03
        q = straight_q(spec.l, stretch=lam)
        for kin in element_kinematics(q, spec, quad):
            assert kin.strain.stretch == pytest.approx(lam)

    def test_pure_twist_rate(self):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        q = straight_q(spec.l)
        q[13] = 0.4
        for kin in element_kinematics(q, spec, quad):
            assert kin.strain.tau_m == pytest.approx(0.4 / spec.l)

    def test_collapsed_tangent_raises(self):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        q = np.zeros(N_DOF)
        with pytest.raises(DegenerateTangentError):
            element_kinematics(q, spec, quad)


class TestElasticEnergy:
    def test_rigid_motion_zero_energy(self):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        q = straight_q(spec.l, direction=(0.3, -0.2, 0.93))
        q[0:3] += [1.0, 2.0, -0.5]
        q[7:10] += [1.0, 2.0, -0.5]
        dirs = default_directors(q, spec.l)
        assert elastic_energy_small(q, spec, quad, dirs) < 1e-18
        assert elastic_energy_large(q, spec, quad, dirs) < 1e-18

    def test_pure_stretch_closed_forms(self):
        spec = round_spec(l=1.4)
        quad = QuadratureRule.gauss(5, spec.l)
        lam = 1.02
        q = straight_q(spec.l, stretch=lam)
        u_small = spec.E * spec.A / 2.0 * (lam - 1.0) ** 2 * spec.l
        u_large = spec.E * spec.A / 8.0 * (lam**2 - 1.0) ** 2 * spec.l
        assert elastic_energy_small(q, spec, quad) == pytest.approx(u_small)
        assert elastic_energy_large(q, spec, quad) == pytest.approx(u_large)

    def test_pure_twist_closed_form(self):
        spec = round_spec(l=1.4)
        quad = QuadratureRule.gauss(5, spec.l)
        phi = 0.6
        q = straight_q(spec.l)
        q[13] = phi
        u_ref = spec.G * spec.J_t * phi**2 / (2.0 * spec.l)
        assert elastic_energy_small(q, spec, quad) == pytest.approx(u_ref)
        assert elastic_energy_large(q, spec, quad) == pytest.approx(u_ref)

    def test_small_and_large_agree_at_small_strain(self):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        q = bent_q(spec.l, amp=1e-3, twist=1e-3)
        dirs = default_directors(q, spec.l)
        u_s = elastic_energy_small(q, spec, quad, dirs)
        u_l = elastic_energy_large(q, spec, quad, dirs)
        assert u_l == pytest.approx(u_s, rel=5e-3)


def fd_gradient(fn, q, h=1e-7):
    g = np.zeros_like(q)
    for k in range(len(q)):
        qp = q.copy()
        qm = q.copy()
        qp[k] += h
        qm[k] -= h
        g[k] = (fn(qp) - fn(qm)) / (2 * h)
    return g


class TestInternalForces:
    @pytest.mark.parametrize("seed", range(4))
    def test_small_force_matches_energy_gradient(self, seed):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        rng = np.random.default_rng(seed)
        q = bent_q(spec.l) + 0.05 * rng.standard_normal(N_DOF)
        dirs = default_directors(q, spec.l)
        f = internal_force_small(q, spec, quad, dirs)
        g = fd_gradient(lambda qq: elastic_energy_small(qq, spec, quad, dirs),
                        q)
        scale = max(np.max(np.abs(g)), 1.0)
        assert np.max(np.abs(f - g)) / scale < 1e-6

    @pytest.mark.parametrize("seed", range(4))
    def test_large_force_matches_energy_gradient(self, seed):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        rng = np.random.default_rng(seed + 10)
        q = bent_q(spec.l) + 0.05 * rng.standard_normal(N_DOF)
        dirs = default_directors(q, spec.l)
        f = internal_force_large(q, spec, quad, dirs)
        g = fd_gradient(lambda qq: elastic_energy_large(qq, spec, quad, dirs),
                        q)
        scale = max(np.max(np.abs(g)), 1.0)
        assert np.max(np.abs(f - g)) / scale < 1e-6

    def test_undeformed_force_vanishes(self):
        spec = round_spec()
        quad = QuadratureRule.gauss(5, spec.l)
        q = straight_q(spec.l)
        # rounding in ||r'|| is amplified by EA; bound relative to it
        tol = 1e-14 * spec.E * spec.A
        assert np.max(np.abs(internal_force_small(q, spec, quad))) < tol
        assert np.max(np.abs(internal_force_large(q, spec, quad))) < tol


class TestPositionField:
    def test_centerline_point(self):
        spec = round_spec(l=2.0)
        q = straight_q(spec.l)
        r = position_field(q, spec.l / 2, spec)
        assert np.allclose(r, [1.0, 0.0, 0.0])

    def test_offset_rotates_with_twist(self):
        spec = round_spec(l=1.0)
        q = straight_q(spec.l)
        q[6] = q[13] = np.pi / 2
        dirs = default_directors(straight_q(spec.l), spec.l)
        p = CrossSectionPoint(y_bar=0.01, z_bar=0.0)
        r0 = position_field(straight_q(spec.l), spec.l, spec, p, dirs)
        r1 = position_field(q, spec.l, spec, p, dirs)
        off0 = r0 - [1.0, 0.0, 0.0]
        off1 = r1 - [1.0, 0.0, 0.0]
        # quarter twist maps the y offset onto the z director
        assert abs(off0 @ off1) < 1e-12
        assert np.linalg.norm(off1) == pytest.approx(0.01)

    def test_node_frames_orthonormal(self):
        spec = round_spec()
        q = bent_q(spec.l)
        for node in ("i", "j"):
            tri = node_material_frame(q, spec, node=node)
            m = tri.as_matrix()
            assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)


class TestNaturalStrain:
    """Elements whose stress-free shape is curved (natural strains)."""

    def setup_method(self):
        self.spec = round_spec(l=0.5)
        self.quad = QuadratureRule.gauss(5, self.spec.l)
        self.q0 = bent_q(self.spec.l, amp=0.08, twist=0.15)
        self.directors = default_directors(self.q0, self.spec.l)
        self.natural = natural_strain_state(self.q0, self.spec, self.quad,
                                            self.directors)

    def test_captured_shape_has_zero_energy_and_force(self):
        scale = self.spec.E * self.spec.A * self.spec.l
        for energy, force in ((elastic_energy_small, internal_force_small),
                              (elastic_energy_large, internal_force_large)):
            u = energy(self.q0, self.spec, self.quad, self.directors,
                       self.natural)
            f = force(self.q0, self.spec, self.quad, self.directors,
                      self.natural)
            assert abs(u) < 1e-14 * scale
            assert np.max(np.abs(f)) < 1e-10 * self.spec.E * self.spec.A

    @pytest.mark.parametrize("mode", ["small", "large"])
    def test_force_matches_energy_gradient(self, mode):
        rng = np.random.default_rng(12)
        q = self.q0 + 0.03 * rng.standard_normal(N_DOF)
        energy = elastic_energy_small if mode == "small" \
            else elastic_energy_large
        force = internal_force_small if mode == "small" \
            else internal_force_large
        f = force(q, self.spec, self.quad, self.directors, self.natural)
        g = fd_gradient(lambda qq: energy(qq, self.spec, self.quad,
                                          self.directors, self.natural), q)
        assert np.max(np.abs(f - g)) / max(np.max(np.abs(g)), 1.0) < 1e-6

    def test_restoring_toward_natural_shape(self):
        # straightening the naturally curved element must cost energy
        qs = straight_q(self.spec.l)
        u = elastic_energy_large(qs, self.spec, self.quad,
                                 default_directors(qs, self.spec.l),
                                 self.natural)
        assert u > 0.0
