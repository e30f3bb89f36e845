"""Shared meshing and signal-analysis helpers for the benchmarks."""

from __future__ import annotations

import numpy as np

from ..errors import ModelError
from ..framing import FrameTriad, orthonormalize
from ..model import LinearRows, Model


def straight_member(model: Model, r_a, r_b, n_el, spec_of_l,
                    theta: float = 0.0):
    """Mesh a straight member from r_a to r_b with n_el equal elements.

    spec_of_l is a callable mapping an element length to its BeamSpec.
    Returns (node ids, element ids).
    """
    r_a = np.asarray(r_a, dtype=float)
    r_b = np.asarray(r_b, dtype=float)
    length = float(np.linalg.norm(r_b - r_a))
    if length <= 0.0:
        raise ModelError("member endpoints coincide")
    direction = (r_b - r_a) / length
    spec = spec_of_l(length / n_el)
    nodes = [model.add_node(r_a + k * spec.l * direction, direction,
                            theta=theta)
             for k in range(n_el + 1)]
    elements = [model.add_beam(spec, nodes[k], nodes[k + 1])
                for k in range(n_el)]
    return nodes, elements


def set_directors(state, model: Model, elements, hint) -> None:
    """Orient the stored reference directors of the given elements.

    The first director is the unit component of ``hint`` orthogonal to
    each element's tangent at x = 0, so with theta = 0 the material
    y axis points along ``hint``.
    """
    hint = np.asarray(hint, dtype=float)
    for e in elements:
        el = model.beams[e]
        t = state.q[model.element_dofs(e)][3:6].copy()
        t /= np.linalg.norm(t)
        u = hint - (hint @ t) * t
        n = np.linalg.norm(u)
        if n < 1e-9:
            raise ModelError("director hint is parallel to the tangent")
        u /= n
        state.directors[e] = orthonormalize(
            FrameTriad(t=t, a2=u, a3=np.cross(t, u)))


def lock_torsion(model: Model, state=None) -> None:
    """Pin every node's twist DOF at its current value.

    Used by the torsion-disabled ablation runs.  Twist DOFs that an
    existing linear row already pins (clamps, driven rotations) are
    skipped, so the constraint Jacobian keeps full rank.  Resizes
    state.lam if a state is passed, since this adds constraint rows
    after assembly.
    """
    pinned = set()
    for joint in model.joints:
        if isinstance(joint, LinearRows):
            for row in joint.a:
                nz = np.flatnonzero(row)
                if len(nz) == 1:
                    pinned.add(int(nz[0]))
    free = [k for k in range(model.n_nodes)
            if model.node_theta_index(k) not in pinned]
    rows = np.zeros((len(free), model.n_q))
    rhs = []
    for i, k in enumerate(free):
        idx = model.node_theta_index(k)
        rows[i, idx] = 1.0
        rhs.append(float(state.q[idx]) if state is not None
                   else model.node_theta[k])
    model.add_joint(LinearRows(rows, rhs))
    if state is not None:
        state.lam = np.zeros(model.n_constraints)


def first_crossing(t, y, threshold: float) -> float | None:
    """First time |y| exceeds threshold, linearly interpolated."""
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    above = np.nonzero(y > threshold)[0]
    if len(above) == 0:
        return None
    i = above[0]
    if i == 0:
        return float(t[0])
    frac = (threshold - y[i - 1]) / (y[i] - y[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def moving_max(y, window: int):
    """Trailing moving maximum of |y| over the given sample window."""
    y = np.abs(np.asarray(y, dtype=float))
    out = np.empty_like(y)
    for i in range(len(y)):
        out[i] = y[max(0, i - window + 1):i + 1].max()
    return out


def fit_loglog_slope(n_values, errors) -> float:
    """Least-squares slope of log(error) against log(n)."""
    coeffs = np.polyfit(np.log(np.asarray(n_values, dtype=float)),
                        np.log(np.asarray(errors, dtype=float)), 1)
    return float(coeffs[0])
