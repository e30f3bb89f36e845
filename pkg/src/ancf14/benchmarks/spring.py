"""Helical spring pulled between ball joints: stiffness and convergence.

The spring center-line is a helix with tanh-tapered end coils.  It is
meshed with two-node elements whose ends sit on the curve with the true
curve tangents, at equal arc-length increments; the meshed shape is
captured as the stress-free state of every element.  Consecutive
elements carry their own end nodes, rigidly welded section-to-section,
which transmits bending and torsion across the junctions.  Node A is
held by a spherical joint, Node B is pulled along +X under displacement
control, and the linear stiffness is fitted on the initial (visibly
linear) regime of the force-displacement curve.
"""

from __future__ import annotations

import numpy as np

from ..element import BeamSpec
from ..framing import FrameTriad, minimal_rotation, orthonormalize
from ..model import Model, pin_node, LinearRows, weld_sections, \
    capture_natural_shape
from ..reporting import ResultSeries
from ..solvers import SolverSettings, static_solve
from .common import fit_loglog_slope
from .config import BenchmarkConfig, BenchmarkResult, CheckResult

SHEAR_MODULUS = 80.0e9          # Pa
POISSON = 0.3
DENSITY = 7850.0                # kg/m^3 (statics only; inertia unused)
WIRE_DIAMETER = 2.0e-3          # m
COIL_DIAMETER = 40.0e-3         # m
ACTIVE_COILS = 1.5
PARAM_END = 0.5                 # curve parameter range [0, 0.5]
PULL_MAX = 6.0e-3               # m, displacement-controlled pull at B
FIT_WINDOW = 5.0e-3             # m, linear-regime fit window
STANDARD_MESHES = (10, 15, 20, 25)

K_THEORY = SHEAR_MODULUS * WIRE_DIAMETER**4 \
    / (8.0 * ACTIVE_COILS * COIL_DIAMETER**3)       # ~1666.7 N/m
K_PAPER = 1.674e3                                   # N/m, 20 elements


def taper(x: float) -> float:
    """Amplitude blend: ramps the end coils in and out smoothly."""
    if x < 0.15:
        return 0.5 * (1.0 + np.tanh(50.0 * x - 3.0))
    if x <= 0.35:
        return 1.0
    return 0.5 * (1.0 + np.tanh(22.0 - 50.0 * x))


def center_line(x: float) -> np.ndarray:
    a = taper(x)
    return np.array([0.05 * x,
                     0.02 * a * np.cos(8.0 * np.pi * x),
                     0.02 * a * np.sin(8.0 * np.pi * x)])


def _wire_spec(l: float) -> BeamSpec:
    r = WIRE_DIAMETER / 2.0
    area = np.pi * r**2
    i_sec = np.pi * r**4 / 4.0
    e_mod = 2.0 * SHEAR_MODULUS * (1.0 + POISSON)
    return BeamSpec(E=e_mod, nu=POISSON, rho=DENSITY, A=area,
                    I_y=i_sec, I_z=i_sec, J=2.0 * i_sec, J_t=2.0 * i_sec,
                    l=l, G=SHEAR_MODULUS)


def _arc_length_params(n_el: int, samples: int = 20000):
    """Junction parameters at equal arc-length increments.

    Returns (params, piece arc lengths).
    """
    xs = np.linspace(0.0, PARAM_END, samples + 1)
    rs = np.array([center_line(x) for x in xs])
    seg = np.linalg.norm(np.diff(rs, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    marks = np.linspace(0.0, s[-1], n_el + 1)
    params = np.interp(marks, s, xs)
    return params, np.diff(marks)


def _tangent(x: float) -> np.ndarray:
    h = 1e-6
    lo, hi = max(0.0, x - h), min(PARAM_END, x + h)
    d = (center_line(hi) - center_line(lo)) / (hi - lo)
    return d / np.linalg.norm(d)


def build_spring(n_el: int):
    """Mesh the helix as a welded chain and attach the joints.

    Each element spans one arc-length increment of the curve, with its
    end nodes on the curve and unit slopes along the true tangents; the
    meshed shape is captured as stress-free.  Consecutive elements get
    their own end nodes, welded section-to-section.  Returns (model,
    initial state, index of node B).  Constraint rows: 0-2 pin A, 3-5
    displacement-controlled pin B, 6 azimuth gauge, then the welds.
    """
    params, lengths = _arc_length_params(n_el)
    points = [center_line(x) for x in params]
    tangents = [_tangent(x) for x in params]

    model = Model()
    node_a, node_b, elements = [], [], []
    for k in range(n_el):
        node_a.append(model.add_node(points[k], tangents[k]))
        node_b.append(model.add_node(points[k + 1], tangents[k + 1]))
        spec = _wire_spec(float(lengths[k]))
        elements.append(model.add_beam(spec, node_a[k], node_b[k]))

    model.add_joint(pin_node(model, node_a[0]))
    b0 = points[-1].copy()
    model.add_joint(pin_node(
        model, node_b[-1],
        target=lambda t: b0 + np.array([PULL_MAX * t, 0.0, 0.0])))

    # one gauge row killing the near-rigid rotation about the pull axis:
    # holds the azimuth of an interior node (its multiplier stays ~0)
    mid = n_el // 2
    radial = points[mid].copy()
    radial[0] = 0.0
    radial /= np.linalg.norm(radial)
    azimuth = np.cross([1.0, 0.0, 0.0], radial)
    row = np.zeros((1, model.n_q))
    row[0, model.node_pos(node_a[mid])] = azimuth
    model.add_joint(LinearRows(row, [azimuth @ points[mid]]))

    state = model.initial_state()
    # directors chained along the junction tangents, so the wire's
    # twist-free reference frame carries over from element to element
    helper = np.array([0.0, 0.0, 1.0])
    u = helper - (helper @ tangents[0]) * tangents[0]
    u /= np.linalg.norm(u)
    triad = orthonormalize(FrameTriad(t=tangents[0], a2=u,
                                      a3=np.cross(tangents[0], u)))
    state.directors[0] = triad
    for k in range(1, n_el):
        triad = orthonormalize(
            triad.rotated(minimal_rotation(tangents[k - 1], tangents[k])))
        state.directors[k] = triad
    capture_natural_shape(model, state)
    for k in range(1, n_el):
        weld_sections(model, elements[k - 1], "j", elements[k], "i",
                      state.q, state.directors)
    state.lam = np.zeros(model.n_constraints)
    return model, state, node_b[-1]


def force_displacement(n_el: int, deformation: str = "large",
                       load_steps: int = 10):
    """Pull the spring; returns arrays (tip displacement, pull force)."""
    model, state, node_b = build_spring(n_el)
    x0 = state.q[model.node_pos(node_b)][0]
    us, fs = [0.0], [0.0]

    def record(gamma, st):
        us.append(st.q[model.node_pos(node_b)][0] - x0)
        fs.append(-st.lam[3])   # multiplier of the x row of pin B

    static_solve(model, state,
                 SolverSettings(load_steps=load_steps,
                                deformation=deformation),
                 record=record)
    return np.array(us), np.array(fs)


def fit_stiffness(us, fs) -> float:
    """Least-squares slope N/m on the linear fit window."""
    mask = us <= FIT_WINDOW + 1e-12
    return float(np.polyfit(us[mask], fs[mask], 1)[0])


def run_spring(config: BenchmarkConfig) -> BenchmarkResult:
    result = BenchmarkResult(name="spring")
    meshes = [config.n_elements] if config.n_elements else \
        list(STANDARD_MESHES)
    load_steps = config.load_steps or 10

    stiffness = {}
    for n in meshes:
        us, fs = force_displacement(n, config.deformation, load_steps)
        stiffness[n] = fit_stiffness(us, fs)
        result.series.append(ResultSeries(
            name=f"spring_force_displacement_{n}el",
            columns=["tip_displacement_m", "pull_force_N"],
            data=np.column_stack([us, fs])))
        result.scalars[f"stiffness_{n}el_N_per_m"] = stiffness[n]

    errors = {n: abs(k - K_THEORY) / K_THEORY for n, k in stiffness.items()}
    if len(meshes) > 1:
        result.series.append(ResultSeries(
            name="spring_stiffness_convergence",
            columns=["n_elements", "stiffness_N_per_m",
                     "rel_error_vs_theory"],
            data=np.array([[n, stiffness[n], errors[n]] for n in meshes])))

    if 20 in stiffness:
        dev = abs(stiffness[20] - K_PAPER) / K_PAPER
        result.checks.append(CheckResult(
            "stiffness_20el_vs_reported", dev <= 0.01, stiffness[20],
            f"within 1% of {K_PAPER} N/m"))
        dev_th = errors[20]
        result.checks.append(CheckResult(
            "stiffness_20el_vs_theory", dev_th <= 0.015, stiffness[20],
            f"within 1.5% of {K_THEORY:.1f} N/m"))
    if len(meshes) >= 3:
        slope = -fit_loglog_slope(meshes, [errors[n] for n in meshes])
        result.scalars["convergence_slope"] = slope
        result.checks.append(CheckResult(
            "convergence_slope", 3.0 <= slope <= 4.5, slope,
            "log-log error slope in [3.0, 4.5]"))
    return result
