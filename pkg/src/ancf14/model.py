"""Global multibody system: DOF map, assembly, joints, rigid bodies.

A model holds beam elements (7 DOFs per node: position, slope, twist),
rigid bodies (3 position + 4 quaternion coordinates each) and a list of
holonomic constraints.  Prescribed motion is expressed as constraint
rows whose right-hand side is a function of time (or of the load factor
in a quasi-static solve).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .element import (
    BeamSpec,
    N_DOF,
    NaturalStrain,
    QuadratureRule,
    default_directors,
    elastic_energy,
    gravity_force,
    internal_force,
    mass_matrix,
    natural_strain_state,
    shape_eval,
    station_frame_with_sensitivity,
)
from .errors import JointConfigError, ModelError
from .framing import FrameTriad, minimal_rotation, orthonormalize

NODE_DOF = 7
BODY_DOF = 7  # 3 position + 4 quaternion


# ---------------------------------------------------------------------------
# quaternion helpers (scalar-first convention p = (w, x, y, z))

def quat_rotate(p, v):
    """R(p) v for a unit quaternion p."""
    w, u = p[0], np.asarray(p[1:])
    v = np.asarray(v, dtype=float)
    return (w * w - u @ u) * v + 2.0 * (u @ v) * u + 2.0 * w * np.cross(u, v)


def quat_matrix(p):
    """Rotation matrix of the unit quaternion p."""
    return np.column_stack([quat_rotate(p, e) for e in np.eye(3)])


def quat_rotate_jacobian(p, v):
    """d(R(p) v)/dp as a 3x4 matrix (p not assumed normalized)."""
    w, u = p[0], np.asarray(p[1:])
    v = np.asarray(v, dtype=float)
    col_w = 2.0 * w * v + 2.0 * np.cross(u, v)
    vx = np.array([[0.0, -v[2], v[1]],
                   [v[2], 0.0, -v[0]],
                   [-v[1], v[0], 0.0]])
    d_u = (-2.0 * np.outer(v, u) + 2.0 * np.outer(u, v)
           + 2.0 * (u @ v) * np.eye(3) - 2.0 * w * vx)
    return np.column_stack([col_w, d_u])


def quat_rate_matrix(p):
    """G(p) with body angular velocity omega = 2 G(p) p_dot."""
    w, x, y, z = p
    return np.array([[-x, w, z, -y],
                     [-y, -z, w, x],
                     [-z, y, -x, w]])


# ---------------------------------------------------------------------------
# model containers

@dataclass
class BeamElement:
    spec: BeamSpec
    node_i: int
    node_j: int
    quad: QuadratureRule
    natural: NaturalStrain | None = None  # stress-free shape if curved


@dataclass
class RigidBody:
    mass: float
    inertia: np.ndarray        # body-frame tensor, 3x3

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        if self.mass <= 0.0:
            raise ModelError("body mass must be positive")
        if not np.allclose(self.inertia, self.inertia.T):
            raise ModelError("inertia tensor must be symmetric")
        if np.min(np.linalg.eigvalsh(self.inertia)) <= 0.0:
            raise ModelError("inertia tensor must be positive definite")


@dataclass
class SystemState:
    q: np.ndarray
    q_dot: np.ndarray
    lam: np.ndarray
    time: float
    directors: list  # per-element FrameTriad at node i
    momentum: np.ndarray = None  # discrete momentum of the last interval

    def copy(self):
        return SystemState(self.q.copy(), self.q_dot.copy(),
                           self.lam.copy(), self.time,
                           list(self.directors), self.momentum)


class Model:
    """Elements, bodies, joints, loads and the global DOF numbering.

    Beam nodes occupy DOFs [7 k, 7 k + 7); bodies follow after all
    nodes, 7 coordinates each.
    """

    def __init__(self, gravity=(0.0, 0.0, 0.0)):
        self.gravity = np.asarray(gravity, dtype=float)
        self.node_r = []
        self.node_slope = []
        self.node_theta = []
        self.beams: list[BeamElement] = []
        self.bodies: list[RigidBody] = []
        self.body_r0 = []
        self.body_p0 = []
        self.joints: list = []
        self.loads: list = []       # (node, callable t -> 3-vector)
        self.dof_loads: list = []   # (global dof, callable t -> scalar)

    # -- building ----------------------------------------------------------
    def add_node(self, r, slope, theta=0.0) -> int:
        self.node_r.append(np.asarray(r, dtype=float))
        self.node_slope.append(np.asarray(slope, dtype=float))
        self.node_theta.append(float(theta))
        return len(self.node_r) - 1

    def add_beam(self, spec: BeamSpec, node_i: int, node_j: int,
                 quad_order: int = 5) -> int:
        for n in (node_i, node_j):
            if not 0 <= n < len(self.node_r):
                raise ModelError(f"beam references unknown node {n}")
        self.beams.append(BeamElement(
            spec, node_i, node_j, QuadratureRule.gauss(quad_order, spec.l)))
        return len(self.beams) - 1

    def add_body(self, mass, inertia, r0, p0=(1.0, 0.0, 0.0, 0.0)) -> int:
        self.bodies.append(RigidBody(mass, inertia))
        self.body_r0.append(np.asarray(r0, dtype=float))
        self.body_p0.append(np.asarray(p0, dtype=float))
        b = len(self.bodies) - 1
        self.joints.append(QuaternionUnit(b))
        return b

    def add_joint(self, joint) -> None:
        joint.validate(self)
        self.joints.append(joint)

    def add_load(self, node, force) -> None:
        """Point load on a node's position DOFs; force is t -> 3-vector."""
        if not 0 <= node < len(self.node_r):
            raise ModelError(f"load references unknown node {node}")
        self.loads.append((node, force))

    def add_dof_load(self, dof: int, force) -> None:
        """Generalized scalar load on one DOF (e.g. a twist torque)."""
        if not 0 <= dof < self.n_q:
            raise ModelError(f"load references unknown DOF {dof}")
        self.dof_loads.append((dof, force))

    # -- numbering ---------------------------------------------------------
    @property
    def n_nodes(self):
        return len(self.node_r)

    @property
    def n_q(self):
        return NODE_DOF * self.n_nodes + BODY_DOF * len(self.bodies)

    @property
    def n_constraints(self):
        return sum(j.rows for j in self.joints)

    def node_slice(self, k) -> slice:
        return slice(NODE_DOF * k, NODE_DOF * (k + 1))

    def node_pos(self, k) -> slice:
        return slice(NODE_DOF * k, NODE_DOF * k + 3)

    def node_slope_slice(self, k) -> slice:
        return slice(NODE_DOF * k + 3, NODE_DOF * k + 6)

    def node_theta_index(self, k) -> int:
        return NODE_DOF * k + 6

    def body_slice(self, b) -> slice:
        base = NODE_DOF * self.n_nodes + BODY_DOF * b
        return slice(base, base + BODY_DOF)

    def body_pos(self, b) -> slice:
        base = NODE_DOF * self.n_nodes + BODY_DOF * b
        return slice(base, base + 3)

    def body_quat(self, b) -> slice:
        base = NODE_DOF * self.n_nodes + BODY_DOF * b
        return slice(base + 3, base + 7)

    def element_dofs(self, e) -> np.ndarray:
        el = self.beams[e]
        return np.r_[np.arange(NODE_DOF * el.node_i,
                               NODE_DOF * (el.node_i + 1)),
                     np.arange(NODE_DOF * el.node_j,
                               NODE_DOF * (el.node_j + 1))]

    # -- state -------------------------------------------------------------
    def initial_state(self) -> SystemState:
        q = np.zeros(self.n_q)
        for k in range(self.n_nodes):
            q[self.node_pos(k)] = self.node_r[k]
            q[self.node_slope_slice(k)] = self.node_slope[k]
            q[self.node_theta_index(k)] = self.node_theta[k]
        for b in range(len(self.bodies)):
            q[self.body_pos(b)] = self.body_r0[b]
            q[self.body_quat(b)] = self.body_p0[b]
        directors = [default_directors(q[self.element_dofs(e)],
                                       self.beams[e].spec.l)
                     for e in range(len(self.beams))]
        return SystemState(q=q, q_dot=np.zeros(self.n_q),
                           lam=np.zeros(self.n_constraints),
                           time=0.0, directors=directors)


# ---------------------------------------------------------------------------
# joints

class Joint:
    rows = 0

    def validate(self, model: Model) -> None:
        pass

    def residual(self, model, q, t):
        raise NotImplementedError

    def jacobian(self, model, q, t):
        raise NotImplementedError

    # nonlinear joints contribute d(G^T lam)/dq; linear ones do not
    nonlinear = False


class LinearRows(Joint):
    """g = A q - rhs(t) with a constant coefficient matrix A.

    Covers clamps, prescribed displacements, axis locks and any other
    constraint that is linear in the coordinates.
    """

    def __init__(self, a_rows, rhs=None):
        self.a = np.atleast_2d(np.asarray(a_rows, dtype=float))
        self.rows = self.a.shape[0]
        if rhs is None:
            self.rhs = lambda t: np.zeros(self.rows)
        elif callable(rhs):
            self.rhs = rhs
        else:
            const = np.asarray(rhs, dtype=float).reshape(self.rows)
            self.rhs = lambda t: const

    def validate(self, model):
        if self.a.shape[1] != model.n_q:
            raise JointConfigError("row width does not match model DOFs")
        if np.max(np.abs(self.a)) == 0.0:
            raise JointConfigError("zero constraint row")

    def residual(self, model, q, t):
        return self.a @ q - np.asarray(self.rhs(t), dtype=float)

    def jacobian(self, model, q, t):
        return self.a


def clamp_node(model: Model, node: int, r=None, slope=None, theta=None,
               rhs=None) -> LinearRows:
    """7-row clamp fixing r, r' and theta of a node.

    Targets default to the node's initial values; rhs may be a callable
    t -> 7-vector for a driven (rotating) clamp.
    """
    a = np.zeros((NODE_DOF, model.n_q))
    a[:, model.node_slice(node)] = np.eye(NODE_DOF)
    if rhs is None:
        target = np.r_[model.node_r[node] if r is None else np.asarray(r),
                       model.node_slope[node] if slope is None
                       else np.asarray(slope),
                       model.node_theta[node] if theta is None else theta]
        return LinearRows(a, target)
    return LinearRows(a, rhs)


def pin_node(model: Model, node: int, target=None) -> LinearRows:
    """Spherical joint to ground: fixes the node position (3 rows).

    target may be a callable t -> 3-vector for displacement control.
    """
    a = np.zeros((3, model.n_q))
    a[:, model.node_pos(node)] = np.eye(3)
    if target is None:
        target = model.node_r[node].copy()
    return LinearRows(a, target)


def link_nodes(model: Model, node_a: int, node_b: int) -> LinearRows:
    """Spherical joint between two beam nodes (shared point, 3 rows)."""
    a = np.zeros((3, model.n_q))
    a[:, model.node_pos(node_a)] = np.eye(3)
    a[:, model.node_pos(node_b)] = -np.eye(3)
    return LinearRows(a, np.zeros(3))


def revolute_about_axis(model: Model, node: int, axis,
                        angle=None) -> list:
    """Revolute to ground for a node whose tangent lies along ``axis``.

    Pins the position (3 rows) and keeps the slope parallel to the axis
    (2 rows).  With ``angle`` given (callable t -> rad) the twist DOF is
    driven as well, turning the joint into a rotary drive.
    """
    axis = np.asarray(axis, dtype=float)
    if np.linalg.norm(axis) < 1e-12:
        raise JointConfigError("zero-length revolute axis")
    axis = axis / np.linalg.norm(axis)
    e1, e2 = _axis_complement(axis)
    joints = [pin_node(model, node)]
    a = np.zeros((2, model.n_q))
    a[0, model.node_slope_slice(node)] = e1
    a[1, model.node_slope_slice(node)] = e2
    joints.append(LinearRows(a, np.zeros(2)))
    if angle is not None:
        row = np.zeros((1, model.n_q))
        row[0, model.node_theta_index(node)] = 1.0
        joints.append(LinearRows(row, lambda t: np.array([angle(t)])))
    return joints


def cylindrical_about_axis(model: Model, node: int, axis) -> list:
    """Cylindrical joint to ground: node slides/rotates along ``axis``.

    Two point-on-line rows plus two slope-parallel rows (4 rows total).
    """
    axis = np.asarray(axis, dtype=float)
    if np.linalg.norm(axis) < 1e-12:
        raise JointConfigError("zero-length cylindrical axis")
    axis = axis / np.linalg.norm(axis)
    e1, e2 = _axis_complement(axis)
    r0 = model.node_r[node]
    a = np.zeros((4, model.n_q))
    a[0, model.node_pos(node)] = e1
    a[1, model.node_pos(node)] = e2
    a[2, model.node_slope_slice(node)] = e1
    a[3, model.node_slope_slice(node)] = e2
    return [LinearRows(a, np.array([e1 @ r0, e2 @ r0, 0.0, 0.0]))]


def _axis_complement(axis):
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(axis)))] = 1.0
    e1 = np.cross(helper, axis)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


class OffsetSpherical(Joint):
    """Spherical joint at a cross-section offset of a beam element end.

    Ties r(x_end) + R_material h to the position of another node, so the
    constraint force acts with a moment arm about the section.  h is
    given in material coordinates (t, y, z).
    """

    rows = 3
    nonlinear = True

    def __init__(self, element: int, end: str, h, node_other: int):
        self.element = element
        self.end = end
        self.h = np.asarray(h, dtype=float)
        self.node_other = node_other

    def validate(self, model):
        if not 0 <= self.element < len(model.beams):
            raise JointConfigError("unknown element")
        if self.end not in ("i", "j"):
            raise JointConfigError("end must be 'i' or 'j'")
        if not 0 <= self.node_other < model.n_nodes:
            raise JointConfigError("unknown node")

    def _station(self, model):
        el = model.beams[self.element]
        return 0.0 if self.end == "i" else el.spec.l

    def residual(self, model, q, t, directors=None):
        el = model.beams[self.element]
        idx = model.element_dofs(self.element)
        q_el = q[idx]
        x = self._station(model)
        d = directors[self.element] if directors is not None else None
        mat, _, _, _ = station_frame_with_sensitivity(q_el, el.spec, x, d)
        s, _, _, _, _ = shape_eval(x, el.spec.l)
        point = s @ q_el + mat.as_matrix() @ self.h
        return point - q[model.node_pos(self.node_other)]

    def jacobian(self, model, q, t, directors=None):
        el = model.beams[self.element]
        idx = model.element_dofs(self.element)
        q_el = q[idx]
        x = self._station(model)
        d = directors[self.element] if directors is not None else None
        mat, d_t, d_y, d_z = station_frame_with_sensitivity(
            q_el, el.spec, x, d)
        s, _, _, _, _ = shape_eval(x, el.spec.l)
        local = s + self.h[0] * d_t + self.h[1] * d_y + self.h[2] * d_z
        g = np.zeros((3, model.n_q))
        g[:, idx] = local
        g[:, model.node_pos(self.node_other)] -= np.eye(3)
        return g


class WeldSections(Joint):
    """6-row rigid weld between two beam element ends.

    Ties the end positions together and locks the two cross-section
    material frames into the relative rotation captured at construction,
    so bending and torsion are both transmitted across the junction.
    Used to assemble curved members (coils, arcs, frames) from straight
    elements meeting at a kink angle.  Axial strains on either side stay
    independent, as at a physical weld.
    """

    rows = 6
    nonlinear = True

    def __init__(self, element_a: int, end_a: str,
                 element_b: int, end_b: str):
        self.element_a = element_a
        self.end_a = end_a
        self.element_b = element_b
        self.end_b = end_b
        self.rel = np.eye(3)

    def validate(self, model):
        for e in (self.element_a, self.element_b):
            if not 0 <= e < len(model.beams):
                raise JointConfigError("unknown element")
        for end in (self.end_a, self.end_b):
            if end not in ("i", "j"):
                raise JointConfigError("end must be 'i' or 'j'")
        if self.element_a == self.element_b:
            raise JointConfigError("cannot weld an element to itself")

    def _side(self, model, q, directors, element, end):
        el = model.beams[element]
        idx = model.element_dofs(element)
        x = 0.0 if end == "i" else el.spec.l
        d = directors[element] if directors is not None else None
        frame = station_frame_with_sensitivity(q[idx], el.spec, x, d)
        s, _, _, _, _ = shape_eval(x, el.spec.l)
        return idx, s, frame

    def capture(self, model, q, directors) -> None:
        """Record the current relative rotation as the welded one."""
        _, _, (ma, _, _, _) = self._side(model, q, directors,
                                         self.element_a, self.end_a)
        _, _, (mb, _, _, _) = self._side(model, q, directors,
                                         self.element_b, self.end_b)
        self.rel = mb.as_matrix().T @ ma.as_matrix()

    def residual(self, model, q, t, directors=None):
        idx_a, s_a, (ma, _, _, _) = self._side(model, q, directors,
                                               self.element_a, self.end_a)
        idx_b, s_b, (mb, _, _, _) = self._side(model, q, directors,
                                               self.element_b, self.end_b)
        # b-side frame pre-rotated by the captured relative rotation
        b = mb.as_matrix() @ self.rel
        g = np.empty(6)
        g[:3] = s_b @ q[idx_b] - s_a @ q[idx_a]
        g[3] = ma.t @ b[:, 1]
        g[4] = ma.t @ b[:, 2]
        g[5] = ma.a2 @ b[:, 2]
        return g

    def jacobian(self, model, q, t, directors=None):
        idx_a, s_a, (ma, d_ta, d_ya, _) = self._side(
            model, q, directors, self.element_a, self.end_a)
        idx_b, s_b, (mb, d_tb, d_yb, d_zb) = self._side(
            model, q, directors, self.element_b, self.end_b)
        b = mb.as_matrix() @ self.rel
        d_b1 = (self.rel[0, 1] * d_tb + self.rel[1, 1] * d_yb
                + self.rel[2, 1] * d_zb)
        d_b2 = (self.rel[0, 2] * d_tb + self.rel[1, 2] * d_yb
                + self.rel[2, 2] * d_zb)
        g = np.zeros((6, model.n_q))
        g[:3, idx_b] += s_b
        g[:3, idx_a] -= s_a
        g[3, idx_a] += b[:, 1] @ d_ta
        g[3, idx_b] += ma.t @ d_b1
        g[4, idx_a] += b[:, 2] @ d_ta
        g[4, idx_b] += ma.t @ d_b2
        g[5, idx_a] += b[:, 2] @ d_ya
        g[5, idx_b] += ma.a2 @ d_b2
        return g


def weld_sections(model: Model, element_a: int, end_a: str,
                  element_b: int, end_b: str, q=None,
                  directors=None) -> WeldSections:
    """Weld two element ends, capturing their current relative rotation.

    With q and directors given the joint starts at zero residual in that
    configuration; otherwise the initial nodal coordinates are used.
    """
    joint = WeldSections(element_a, end_a, element_b, end_b)
    if q is not None:
        joint.capture(model, q, directors)
    model.add_joint(joint)
    return joint


class WeldBody(Joint):
    """6-row weld of a rigid body to a beam element end.

    Position rows tie the body center to r(x_end) + R_material h; the
    orientation rows lock the body axes to the material frame via three
    orthogonality conditions, allowing an arbitrary fixed relative
    rotation captured at construction.
    """

    rows = 6
    nonlinear = True

    def __init__(self, element: int, end: str, h, body: int,
                 rel_rotation=None):
        self.element = element
        self.end = end
        self.h = np.asarray(h, dtype=float)
        self.body = body
        self.rel = np.eye(3) if rel_rotation is None else \
            np.asarray(rel_rotation, dtype=float)

    def validate(self, model):
        if not 0 <= self.element < len(model.beams):
            raise JointConfigError("unknown element")
        if not 0 <= self.body < len(model.bodies):
            raise JointConfigError("unknown body")

    def _frame(self, model, q, directors):
        el = model.beams[self.element]
        idx = model.element_dofs(self.element)
        x = 0.0 if self.end == "i" else el.spec.l
        d = directors[self.element] if directors is not None else None
        return idx, x, el, station_frame_with_sensitivity(
            q[idx], el.spec, x, d)

    def residual(self, model, q, t, directors=None):
        idx, x, el, (mat, _, _, _) = self._frame(model, q, directors)
        s, _, _, _, _ = shape_eval(x, el.spec.l)
        p = q[model.body_quat(self.body)]
        # body axes pre-rotated by the captured relative rotation
        b = quat_matrix(p) @ self.rel.T
        g = np.empty(6)
        g[:3] = (q[model.body_pos(self.body)]
                 - s @ q[idx] - mat.as_matrix() @ self.h)
        g[3] = mat.t @ b[:, 1]
        g[4] = mat.t @ b[:, 2]
        g[5] = mat.a2 @ b[:, 2]
        return g

    def jacobian(self, model, q, t, directors=None):
        idx, x, el, (mat, d_t, d_y, d_z) = self._frame(model, q, directors)
        s, _, _, _, _ = shape_eval(x, el.spec.l)
        p = q[model.body_quat(self.body)]
        b = quat_matrix(p) @ self.rel.T
        g = np.zeros((6, model.n_q))
        g[:3, model.body_pos(self.body)] = np.eye(3)
        g[:3, idx] = -(s + self.h[0] * d_t + self.h[1] * d_y
                       + self.h[2] * d_z)
        # rotation rows: beam-side via frame sensitivities,
        # body-side via the quaternion rotation Jacobian
        e_rel = self.rel.T @ np.eye(3)
        g[3, idx] = b[:, 1] @ d_t
        g[4, idx] = b[:, 2] @ d_t
        g[5, idx] = b[:, 2] @ d_y
        g[3, model.body_quat(self.body)] = mat.t @ quat_rotate_jacobian(
            p, e_rel[:, 1])
        g[4, model.body_quat(self.body)] = mat.t @ quat_rotate_jacobian(
            p, e_rel[:, 2])
        g[5, model.body_quat(self.body)] = mat.a2 @ quat_rotate_jacobian(
            p, e_rel[:, 2])
        return g


class QuaternionUnit(Joint):
    """Unit-norm constraint of one body quaternion."""

    rows = 1
    nonlinear = True

    def __init__(self, body: int):
        self.body = body

    def residual(self, model, q, t):
        p = q[model.body_quat(self.body)]
        return np.array([p @ p - 1.0])

    def jacobian(self, model, q, t):
        g = np.zeros((1, model.n_q))
        g[0, model.body_quat(self.body)] = 2.0 * q[model.body_quat(self.body)]
        return g


def weld_disk(model: Model, element: int, end: str, offset, body: int,
              q=None, directors=None) -> WeldBody:
    """Weld a body to a beam end at a material-frame offset.

    Captures the current relative rotation between the material frame
    and the body so the joint starts at zero residual.
    """
    if q is None:
        rel = None
    else:
        el = model.beams[element]
        x = 0.0 if end == "i" else el.spec.l
        idx = model.element_dofs(element)
        d = directors[element] if directors is not None else None
        mat, _, _, _ = station_frame_with_sensitivity(q[idx], el.spec, x, d)
        p = q[model.body_quat(body)]
        rel = quat_matrix(p).T @ mat.as_matrix()
    joint = WeldBody(element, end, offset, body, rel_rotation=rel)
    model.add_joint(joint)
    return joint


# ---------------------------------------------------------------------------
# assembly

def assemble_mass(model: Model, q) -> np.ndarray:
    """Global mass matrix; constant except for the body quaternion blocks."""
    m = np.zeros((model.n_q, model.n_q))
    for e in range(len(model.beams)):
        idx = model.element_dofs(e)
        m[np.ix_(idx, idx)] += mass_matrix(model.beams[e].spec)
    for b, body in enumerate(model.bodies):
        m[model.body_pos(b), model.body_pos(b)] = \
            m[model.body_pos(b), model.body_pos(b)] + body.mass * np.eye(3)
        p = q[model.body_quat(b)]
        gq = quat_rate_matrix(p)
        m[model.body_quat(b), model.body_quat(b)] = \
            m[model.body_quat(b), model.body_quat(b)] \
            + 4.0 * gq.T @ body.inertia @ gq
    return m


def kinetic_energy_total(model: Model, q, q_dot) -> float:
    return 0.5 * float(q_dot @ assemble_mass(model, q) @ q_dot)


def kinetic_gradient(model: Model, q, q_dot) -> np.ndarray:
    """dT/dq; nonzero only on body quaternion blocks."""
    out = np.zeros(model.n_q)
    for b, body in enumerate(model.bodies):
        p = q[model.body_quat(b)]
        pd = q_dot[model.body_quat(b)]
        gd = quat_rate_matrix(pd)
        # G(p) p_dot = -G(p_dot) p makes dT/dp = 4 G(p_dot)^T I G(p_dot) p
        out[model.body_quat(b)] = 4.0 * gd.T @ body.inertia @ gd @ p
    return out


def assemble_energy(model: Model, q, directors, mode="large") -> float:
    """Total potential energy: elastic plus gravity."""
    u = 0.0
    for e, el in enumerate(model.beams):
        q_el = q[model.element_dofs(e)]
        u += elastic_energy(q_el, el.spec, el.quad, directors[e], mode,
                            el.natural)
        u -= gravity_force(el.spec, model.gravity) @ q_el
    for b, body in enumerate(model.bodies):
        u -= body.mass * model.gravity @ q[model.body_pos(b)]
    return u


def external_force(model: Model, t) -> np.ndarray:
    f = np.zeros(model.n_q)
    for node, force in model.loads:
        f[model.node_pos(node)] += np.asarray(force(t), dtype=float)
    for dof, force in model.dof_loads:
        f[dof] += float(force(t))
    return f


def assemble_forces(model: Model, q, directors, mode="large") -> np.ndarray:
    """dU/dq of the assembled potential (resisting convention)."""
    f = np.zeros(model.n_q)
    for e, el in enumerate(model.beams):
        idx = model.element_dofs(e)
        f[idx] += internal_force(q[idx], el.spec, el.quad, directors[e],
                                 mode, el.natural)
        f[idx] -= gravity_force(el.spec, model.gravity)
    for b, body in enumerate(model.bodies):
        f[model.body_pos(b)] -= body.mass * model.gravity
    return f


def constraint_eval(model: Model, q, t, directors=None):
    """Stacked residuals g and analytic Jacobian G of all joints."""
    n_c = model.n_constraints
    g = np.zeros(n_c)
    big_g = np.zeros((n_c, model.n_q))
    row = 0
    for joint in model.joints:
        if joint.nonlinear and not isinstance(joint, QuaternionUnit):
            g[row:row + joint.rows] = joint.residual(model, q, t, directors)
            big_g[row:row + joint.rows] = joint.jacobian(model, q, t,
                                                         directors)
        else:
            g[row:row + joint.rows] = joint.residual(model, q, t)
            big_g[row:row + joint.rows] = joint.jacobian(model, q, t)
        row += joint.rows
    return g, big_g


def assemble_tangent_fd(model: Model, q, directors, mode="large",
                        lam=None, t=0.0, fd_step=1e-7) -> np.ndarray:
    """Tangent stiffness d(force + G^T lam)/dq by local finite differences.

    Element blocks are differentiated element-locally (28 evaluations of
    the analytic local force each); nonlinear joints contribute the
    d(G^T lam)/dq term the same way.  Linear joints drop out.
    """
    n = model.n_q
    k = np.zeros((n, n))
    for e, el in enumerate(model.beams):
        idx = model.element_dofs(e)
        q_el = q[idx].copy()
        k_el = np.zeros((N_DOF, N_DOF))
        for c in range(N_DOF):
            h = fd_step * max(1.0, abs(q_el[c]))
            qp = q_el.copy()
            qm = q_el.copy()
            qp[c] += h
            qm[c] -= h
            fp = internal_force(qp, el.spec, el.quad, directors[e], mode,
                                el.natural)
            fm = internal_force(qm, el.spec, el.quad, directors[e], mode,
                                el.natural)
            k_el[:, c] = (fp - fm) / (2.0 * h)
        k[np.ix_(idx, idx)] += 0.5 * (k_el + k_el.T)
    if lam is not None:
        row = 0
        for joint in model.joints:
            lam_j = lam[row:row + joint.rows]
            row += joint.rows
            if not joint.nonlinear or not np.any(lam_j):
                continue
            cols = _joint_dofs(model, joint)
            for c in cols:
                h = fd_step * max(1.0, abs(q[c]))
                qp = q.copy()
                qm = q.copy()
                qp[c] += h
                qm[c] -= h
                if isinstance(joint, QuaternionUnit):
                    gp = joint.jacobian(model, qp, t)
                    gm = joint.jacobian(model, qm, t)
                else:
                    gp = joint.jacobian(model, qp, t, directors)
                    gm = joint.jacobian(model, qm, t, directors)
                k[:, c] += (gp - gm).T @ lam_j / (2.0 * h)
    return k


def _joint_dofs(model: Model, joint) -> np.ndarray:
    if isinstance(joint, QuaternionUnit):
        return np.arange(model.body_quat(joint.body).start,
                         model.body_quat(joint.body).stop)
    if isinstance(joint, WeldSections):
        cols = set(model.element_dofs(joint.element_a))
        cols |= set(model.element_dofs(joint.element_b))
        return np.asarray(sorted(cols))
    cols = list(model.element_dofs(joint.element))
    if isinstance(joint, OffsetSpherical):
        s = model.node_pos(joint.node_other)
        cols += list(range(s.start, s.stop))
    if isinstance(joint, WeldBody):
        s = model.body_slice(joint.body)
        cols += list(range(s.start, s.stop))
    return np.asarray(cols)


def capture_natural_shape(model: Model, state: SystemState) -> None:
    """Mark the state's geometry as stress-free for every beam element.

    Stores per-element natural strain measures (stretch, curvatures,
    twist rate at the quadrature points) so members meshed along a
    curved center-line carry no prestress.
    """
    for e, el in enumerate(model.beams):
        q_el = state.q[model.element_dofs(e)]
        el.natural = natural_strain_state(q_el, el.spec, el.quad,
                                          state.directors[e])


def transport_directors(model: Model, q_old, q_new, directors) -> list:
    """Carry each element's stored node-i directors to the new tangent.

    One minimal rotation from the old to the new tangent at x = 0,
    applied once per accepted step (never inside Newton iterations).
    """
    out = []
    for e, el in enumerate(model.beams):
        _, sp, _, _, _ = shape_eval(0.0, el.spec.l)
        t_old = sp @ q_old[model.element_dofs(e)]
        t_new = sp @ q_new[model.element_dofs(e)]
        t_old = t_old / np.linalg.norm(t_old)
        t_new = t_new / np.linalg.norm(t_new)
        rot = minimal_rotation(t_old, t_new)
        out.append(orthonormalize(directors[e].rotated(rot)))
    return out
