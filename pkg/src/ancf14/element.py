"""Per-element quantities of the 14-DOF torsion-deformable beam element.

Nodal coordinates of one element (length l in the undeformed state):

    q = [r_i (3), r_i' (3), theta_i, r_j (3), r_j' (3), theta_j]

The center-line is interpolated with cubic Hermite polynomials, the
cross-section rotation linearly.  Bending curvatures are measured in the
material frame obtained by marching a Bishop frame from the element's
stored reference directors and rotating it by theta about the tangent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateTangentError, DomainError, ModelError
from .framing import (
    CurveSample,
    FrameTriad,
    bishop_march,
    bishop_march_with_sensitivities,
    material_frame,
    tangent_prime,
    tangent_prime_sensitivity,
)

N_DOF = 14
DEGENERATE_TANGENT_TOL = 1e-9

# index blocks into the 14-vector
POS_I = slice(0, 3)
SLOPE_I = slice(3, 6)
THETA_I = 6
POS_J = slice(7, 10)
SLOPE_J = slice(10, 13)
THETA_J = 13


@dataclass(frozen=True)
class BeamSpec:
    """Material and cross-section constants of one element.

    J is the second polar moment of area (rotary inertia), J_t the
    torsion constant (torsional stiffness); they coincide only for
    circular sections.  G defaults to E / (2 (1 + nu)).
    """

    E: float
    nu: float
    rho: float
    A: float
    I_y: float
    I_z: float
    J: float
    J_t: float
    l: float
    G: float | None = None

    def __post_init__(self):
        if self.G is None:
            object.__setattr__(self, "G", self.E / (2.0 * (1.0 + self.nu)))
        for name in ("E", "G", "rho", "A", "I_y", "I_z", "J", "J_t", "l"):
            if getattr(self, name) <= 0.0:
                raise ModelError(f"BeamSpec.{name} must be positive")
        if self.J < self.I_y - 1e-12 * self.J or self.J < self.I_z - 1e-12 * self.J:
            raise ModelError("polar moment J must be >= I_y and I_z")


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre points and weights mapped onto [0, l]."""

    points: tuple  # of (x, w)

    @classmethod
    def gauss(cls, order: int, l: float) -> "QuadratureRule":
        xi, w = np.polynomial.legendre.leggauss(order)
        xs = 0.5 * l * (xi + 1.0)
        ws = 0.5 * l * w
        return cls(points=tuple(zip(xs.tolist(), ws.tolist())))

    @property
    def xs(self):
        return [p[0] for p in self.points]

    @property
    def ws(self):
        return [p[1] for p in self.points]


@dataclass(frozen=True)
class StrainState:
    """Strain measures at one station along the center-line."""

    stretch: float
    eps_bar: float          # ||r'||^2 - 1
    gamma1: float
    gamma2: float
    tau_m: float

    def __post_init__(self):
        if self.stretch <= 0.0:
            raise DegenerateTangentError("non-positive stretch")


@dataclass(frozen=True)
class NaturalStrain:
    """Stress-free strain measures at the element's quadrature points.

    Members whose undeformed shape is curved (a helix, an arc) carry
    these per-station values; the elastic energy then penalizes the
    deviation from them instead of from the straight configuration.
    Each array has one entry per quadrature point, in station order.
    The curvature components are expressed in the material frame, which
    co-rotates with the cross-section, so the values stay valid while
    the stored directors are transported.
    """

    stretch: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    tau_m: np.ndarray


def natural_strain_state(q, spec: BeamSpec, quad: QuadratureRule,
                         directors: FrameTriad | None = None
                         ) -> NaturalStrain:
    """Capture the configuration q as the element's stress-free shape."""
    kins = element_kinematics(q, spec, quad, directors)
    return NaturalStrain(
        stretch=np.array([k.strain.stretch for k in kins]),
        gamma1=np.array([k.strain.gamma1 for k in kins]),
        gamma2=np.array([k.strain.gamma2 for k in kins]),
        tau_m=np.array([k.strain.tau_m for k in kins]))


@dataclass(frozen=True)
class CrossSectionPoint:
    y_bar: float
    z_bar: float


@lru_cache(maxsize=4096)
def _shape_cached(x: float, l: float):
    if not 0.0 <= x <= l:
        raise DomainError(f"x = {x} outside element domain [0, {l}]")
    xi = x / l
    s = np.array([1 - 3 * xi**2 + 2 * xi**3,
                  l * (xi - 2 * xi**2 + xi**3),
                  3 * xi**2 - 2 * xi**3,
                  l * (xi**3 - xi**2)])
    sp = np.array([(-6 * xi + 6 * xi**2) / l,
                   1 - 4 * xi + 3 * xi**2,
                   (6 * xi - 6 * xi**2) / l,
                   3 * xi**2 - 2 * xi])
    spp = np.array([(-6 + 12 * xi) / l**2,
                    (-4 + 6 * xi) / l,
                    (6 - 12 * xi) / l**2,
                    (6 * xi - 2) / l])

    def build(coeff):
        m = np.zeros((3, N_DOF))
        m[:, POS_I] = coeff[0] * np.eye(3)
        m[:, SLOPE_I] = coeff[1] * np.eye(3)
        m[:, POS_J] = coeff[2] * np.eye(3)
        m[:, SLOPE_J] = coeff[3] * np.eye(3)
        return m

    sbar = np.zeros(N_DOF)
    sbar[THETA_I] = 1 - xi
    sbar[THETA_J] = xi
    sbar_p = np.zeros(N_DOF)
    sbar_p[THETA_I] = -1.0 / l
    sbar_p[THETA_J] = 1.0 / l
    out = (build(s), build(sp), build(spp), sbar, sbar_p)
    for arr in out:
        arr.setflags(write=False)
    return out


def shape_eval(x: float, l: float):
    """(S, S', S'', Sbar, Sbar') at station x of an element of length l."""
    return _shape_cached(float(x), float(l))


def mass_matrix(spec: BeamSpec) -> np.ndarray:
    """Closed-form constant 14x14 mass matrix."""
    l, A, J = spec.l, spec.A, spec.J
    m = np.zeros((N_DOF, N_DOF))
    eye = np.eye(3)
    blocks = [
        (POS_I, POS_I, 156 * A),
        (SLOPE_I, POS_I, 22 * A * l),
        (SLOPE_I, SLOPE_I, 4 * A * l**2),
        (POS_J, POS_I, 54 * A),
        (POS_J, SLOPE_I, 13 * A * l),
        (POS_J, POS_J, 156 * A),
        (SLOPE_J, POS_I, -13 * A * l),
        (SLOPE_J, SLOPE_I, -3 * A * l**2),
        (SLOPE_J, POS_J, -22 * A * l),
        (SLOPE_J, SLOPE_J, 4 * A * l**2),
    ]
    for rows, cols, coeff in blocks:
        m[rows, cols] = coeff * eye
    m[THETA_I, THETA_I] = 140 * J
    m[THETA_J, THETA_I] = 70 * J
    m[THETA_J, THETA_J] = 140 * J
    m = np.tril(m)
    m = m + np.tril(m, -1).T
    return spec.rho * l / 420.0 * m


def gravity_force(spec: BeamSpec, g_vec) -> np.ndarray:
    """Generalized gravity load rho*A*int(S^T) dx . g (twist rows zero).

    This is the applied force, i.e. minus the gradient of the gravity
    potential with respect to q.
    """
    g_vec = np.asarray(g_vec, dtype=float)
    f = np.zeros(N_DOF)
    coeff = spec.rho * spec.A * spec.l / 12.0
    f[POS_I] = 6.0 * coeff * g_vec
    f[SLOPE_I] = spec.l * coeff * g_vec
    f[POS_J] = 6.0 * coeff * g_vec
    f[SLOPE_J] = -spec.l * coeff * g_vec
    return f


def kinetic_energy(q_dot, spec: BeamSpec) -> float:
    q_dot = np.asarray(q_dot, dtype=float)
    return 0.5 * float(q_dot @ mass_matrix(spec) @ q_dot)


def default_directors(q, l: float) -> FrameTriad:
    """Deterministic reference directors from the tangent at x = 0."""
    from .framing import frame_from_tangent

    _, sp, _, _, _ = shape_eval(0.0, l)
    rp = sp @ np.asarray(q, dtype=float)
    if np.linalg.norm(rp) < DEGENERATE_TANGENT_TOL:
        raise DegenerateTangentError("collapsed tangent at x = 0")
    return frame_from_tangent(rp)


def position_field(q, x: float, spec: BeamSpec,
                   p: CrossSectionPoint | None = None,
                   directors: FrameTriad | None = None) -> np.ndarray:
    """Global position of cross-section point (y_bar, z_bar) at station x.

    With p omitted (or zero offsets) this is just the center-line point.
    """
    q = np.asarray(q, dtype=float)
    s, _, _, _, _ = shape_eval(x, spec.l)
    r = s @ q
    if p is None or (p.y_bar == 0.0 and p.z_bar == 0.0):
        return r
    if x <= 0.0:
        mat = node_material_frame(q, spec, directors, node="i")
    else:
        quad = QuadratureRule(points=((float(x), 1.0),))
        mat = element_kinematics(q, spec, quad, directors)[0].material
    return r + p.y_bar * mat.a2 + p.z_bar * mat.a3


def station_frame_with_sensitivity(q, spec: BeamSpec, x: float,
                                   directors: FrameTriad | None = None):
    """Material frame at station x plus d_t, d_y, d_z (each 3 x 14).

    Used by joints that attach at a cross-section offset and therefore
    need the frame's dependence on the element coordinates.
    """
    q = np.asarray(q, dtype=float)
    l = spec.l
    if directors is None:
        directors = default_directors(q, l)
    curve, d_curve = _curve_functions(q, l)
    stations = [0.0] if x <= 0.0 else [0.0, float(x)]
    frames, sens = bishop_march_with_sensitivities(
        curve, d_curve, directors, stations)
    bishop, bsens = frames[-1], sens[-1]
    _, _, _, sbar, _ = shape_eval(x, l)
    theta = float(sbar @ q)
    mat = material_frame(bishop, theta)
    c, s = np.cos(theta), np.sin(theta)
    d_y = (np.outer(-s * bishop.a2 + c * bishop.a3, sbar)
           + c * bsens.d_a2 + s * bsens.d_a3)
    d_z = (np.outer(-c * bishop.a2 - s * bishop.a3, sbar)
           - s * bsens.d_a2 + c * bsens.d_a3)
    return mat, bsens.d_t, d_y, d_z


def node_material_frame(q, spec: BeamSpec,
                        directors: FrameTriad | None = None,
                        node: str = "i") -> FrameTriad:
    """Material frame at node i (x = 0) or node j (x = l)."""
    q = np.asarray(q, dtype=float)
    if directors is None:
        directors = default_directors(q, spec.l)
    if node == "i":
        curve, _ = _curve_functions(q, spec.l)
        frames = bishop_march(curve, directors, [0.0])
        return material_frame(frames[0], float(q[THETA_I]))
    quad = QuadratureRule(points=((spec.l, 1.0),))
    kin = element_kinematics(q, spec, quad, directors)[0]
    return kin.material


def _curve_functions(q, l: float):
    q = np.asarray(q, dtype=float)

    def curve(x):
        _, sp, spp, _, _ = shape_eval(x, l)
        rp = sp @ q
        if np.linalg.norm(rp) < DEGENERATE_TANGENT_TOL:
            raise DegenerateTangentError(
                f"collapsed tangent at x = {x} (||r'|| ~ 0)")
        return CurveSample(x, rp, spp @ q)

    def d_curve(x):
        _, sp, spp, _, _ = shape_eval(x, l)
        return sp, spp

    return curve, d_curve


@dataclass
class StationKinematics:
    """Frames, strain measures and their q-derivatives at one station."""

    x: float
    strain: StrainState
    r_prime: np.ndarray
    material: FrameTriad
    d_r_prime: np.ndarray = None       # S'(x), (3, 14)
    d_tau_m: np.ndarray = None         # Sbar'(x), (14,)
    d_gamma1: np.ndarray = None
    d_gamma2: np.ndarray = None


def element_kinematics(q, spec: BeamSpec, quad: QuadratureRule,
                       directors: FrameTriad | None = None,
                       with_sensitivities: bool = False
                       ) -> list[StationKinematics]:
    """Strain pipeline at the quadrature points.

    Marches the Bishop frame (optionally with sensitivities) over
    [0] + quadrature stations from the stored reference directors,
    rotates by the interpolated theta and evaluates stretch, bending
    curvatures and twist rate.
    """
    q = np.asarray(q, dtype=float)
    l = spec.l
    if directors is None:
        directors = default_directors(q, l)
    curve, d_curve = _curve_functions(q, l)
    stations = [0.0] + list(quad.xs)
    if with_sensitivities:
        frames, sens = bishop_march_with_sensitivities(
            curve, d_curve, directors, stations)
    else:
        frames = bishop_march(curve, directors, stations)
        sens = [None] * len(frames)

    out = []
    for x, bishop, bsens in zip(stations[1:], frames[1:], sens[1:]):
        _, sp, spp, sbar, sbar_p = shape_eval(x, l)
        rp = sp @ q
        rpp = spp @ q
        stretch = float(np.linalg.norm(rp))
        theta = float(sbar @ q)
        theta_p = float(sbar_p @ q)
        mat = material_frame(bishop, theta)
        tp = tangent_prime(rp, rpp)
        st = StrainState(stretch=stretch, eps_bar=stretch**2 - 1.0,
                         gamma1=float(tp @ mat.a2),
                         gamma2=float(tp @ mat.a3),
                         tau_m=theta_p)
        kin = StationKinematics(x=x, strain=st, r_prime=rp, material=mat)
        if with_sensitivities:
            d_tp = tangent_prime_sensitivity(rp, rpp, sp, spp)
            c, s = np.cos(theta), np.sin(theta)
            d_y = (np.outer(-s * bishop.a2 + c * bishop.a3, sbar)
                   + c * bsens.d_a2 + s * bsens.d_a3)
            d_z = (np.outer(-c * bishop.a2 - s * bishop.a3, sbar)
                   - s * bsens.d_a2 + c * bsens.d_a3)
            kin.d_r_prime = sp
            kin.d_tau_m = sbar_p
            kin.d_gamma1 = mat.a2 @ d_tp + tp @ d_y
            kin.d_gamma2 = mat.a3 @ d_tp + tp @ d_z
        out.append(kin)
    return out


def strain_measures(q, x: float, spec: BeamSpec,
                    directors: FrameTriad | None = None):
    """Strain state and sensitivity rows at a single station x."""
    quad = QuadratureRule(points=((float(x), 1.0),)) if x > 0 else None
    if x <= 0.0:
        raise DomainError("strain_measures requires 0 < x <= l")
    kin = element_kinematics(q, spec, quad, directors,
                             with_sensitivities=True)[0]
    return kin


def _natural_at(natural: NaturalStrain | None, k: int):
    """(stretch0, gamma1_0, gamma2_0, tau0) at quadrature point k."""
    if natural is None:
        return 1.0, 0.0, 0.0, 0.0
    return (float(natural.stretch[k]), float(natural.gamma1[k]),
            float(natural.gamma2[k]), float(natural.tau_m[k]))


def elastic_energy_small(q, spec: BeamSpec, quad: QuadratureRule,
                         directors: FrameTriad | None = None,
                         natural: NaturalStrain | None = None) -> float:
    """Small-strain elastic energy: axial + two bending + torsion terms."""
    kins = element_kinematics(q, spec, quad, directors)
    u = 0.0
    for k, (kin, w) in enumerate(zip(kins, quad.ws)):
        st = kin.strain
        s0, g1_0, g2_0, t0 = _natural_at(natural, k)
        u += w * (spec.E * spec.A / 2.0 * (st.stretch - s0) ** 2
                  + spec.E * spec.I_z / 2.0 * (st.gamma1 - g1_0) ** 2
                  + spec.E * spec.I_y / 2.0 * (st.gamma2 - g2_0) ** 2
                  + spec.G * spec.J_t / 2.0 * (st.tau_m - t0) ** 2)
    return u


def elastic_energy_large(q, spec: BeamSpec, quad: QuadratureRule,
                         directors: FrameTriad | None = None,
                         natural: NaturalStrain | None = None) -> float:
    """Large-deformation elastic energy with stretch-bending-twist coupling."""
    kins = element_kinematics(q, spec, quad, directors)
    u = 0.0
    for k, (kin, w) in enumerate(zip(kins, quad.ws)):
        st = kin.strain
        s0, g1_0, g2_0, t0 = _natural_at(natural, k)
        s2 = st.stretch**2
        e_ax = s2 - s0**2
        g1 = st.gamma1 - g1_0
        g2 = st.gamma2 - g2_0
        tm = st.tau_m - t0
        u += w * (spec.E * spec.A / 8.0 * e_ax**2
                  + spec.E * spec.I_z / 4.0 * g1**2 * (3 * s2 - 1.0)
                  + spec.E * spec.I_y / 4.0 * g2**2 * (3 * s2 - 1.0)
                  + spec.G * spec.J_t / 2.0 * tm**2
                  + spec.E * spec.J_t / 4.0 * tm**2 * e_ax)
    return u


def internal_force_small(q, spec: BeamSpec, quad: QuadratureRule,
                         directors: FrameTriad | None = None,
                         natural: NaturalStrain | None = None) -> np.ndarray:
    """dU/dq of the small-strain energy (resisting force)."""
    kins = element_kinematics(q, spec, quad, directors,
                              with_sensitivities=True)
    f = np.zeros(N_DOF)
    for k, (kin, w) in enumerate(zip(kins, quad.ws)):
        st = kin.strain
        s0, g1_0, g2_0, t0 = _natural_at(natural, k)
        f += w * (spec.E * spec.A * (1.0 - s0 / st.stretch)
                  * (kin.r_prime @ kin.d_r_prime)
                  + spec.E * spec.I_z * (st.gamma1 - g1_0) * kin.d_gamma1
                  + spec.E * spec.I_y * (st.gamma2 - g2_0) * kin.d_gamma2
                  + spec.G * spec.J_t * (st.tau_m - t0) * kin.d_tau_m)
    return f


def internal_force_large(q, spec: BeamSpec, quad: QuadratureRule,
                         directors: FrameTriad | None = None,
                         natural: NaturalStrain | None = None) -> np.ndarray:
    """dU/dq of the large-deformation energy, all coupling rows included."""
    kins = element_kinematics(q, spec, quad, directors,
                              with_sensitivities=True)
    f = np.zeros(N_DOF)
    for k, (kin, w) in enumerate(zip(kins, quad.ws)):
        st = kin.strain
        s0, g1_0, g2_0, t0 = _natural_at(natural, k)
        s2 = st.stretch**2
        e_ax = s2 - s0**2
        g1 = st.gamma1 - g1_0
        g2 = st.gamma2 - g2_0
        tm = st.tau_m - t0
        rp_row = kin.r_prime @ kin.d_r_prime
        f += w * (spec.E * spec.A / 2.0 * e_ax * rp_row
                  + spec.E * spec.I_z / 2.0
                  * ((3 * s2 - 1.0) * g1 * kin.d_gamma1
                     + 3.0 * g1**2 * rp_row)
                  + spec.E * spec.I_y / 2.0
                  * ((3 * s2 - 1.0) * g2 * kin.d_gamma2
                     + 3.0 * g2**2 * rp_row)
                  + spec.E * spec.J_t / 2.0
                  * (e_ax * tm * kin.d_tau_m + tm**2 * rp_row)
                  + spec.G * spec.J_t * tm * kin.d_tau_m)
    return f


def elastic_energy(q, spec, quad, directors=None, mode="large",
                   natural=None):
    fn = elastic_energy_large if mode == "large" else elastic_energy_small
    return fn(q, spec, quad, directors, natural)


def internal_force(q, spec, quad, directors=None, mode="large",
                   natural=None):
    fn = internal_force_large if mode == "large" else internal_force_small
    return fn(q, spec, quad, directors, natural)
