"""Princeton beam: coupled bending-torsion of a tip-loaded blade.

A slender cantilever with a thin rectangular section is clamped at the
root with its section rotated by an angle phi about the beam axis, and
a vertical tip force is applied.  At phi = 0 the load bends the beam
about its weak axis with no twist; at phi = 90 deg it bends about the
strong axis; in between the response couples bending and torsion and
the tip twists.  Three load levels are swept over phi = 0..90 deg.
"""

from __future__ import annotations

import numpy as np

from ..element import BeamSpec
from ..errors import Ancf14Error
from ..model import Model, clamp_node
from ..reporting import ResultSeries
from ..solvers import SolverSettings, static_solve
from .common import lock_torsion, set_directors
from .config import BenchmarkConfig, BenchmarkResult, CheckResult

YOUNG = 71.7e9                  # Pa
POISSON = 0.31
DENSITY = 2700.0                # kg/m^3 (statics only)
LENGTH = 0.5080                 # m
THICKNESS = 3.2024e-3           # m, section width (weak direction)
HEIGHT = 12.377e-3              # m, section height (strong direction)
TORSION_CONSTANT = 113.3872e-12  # m^4

TIP_LOADS = (4.448, 8.896, 13.345)          # N, applied along -Z
ANGLES_DEG = tuple(range(0, 91, 15))
DEFAULT_ELEMENTS = 8

AREA = THICKNESS * HEIGHT
I_STRONG = THICKNESS * HEIGHT**3 / 12.0     # pairs the section y axis
I_WEAK = HEIGHT * THICKNESS**3 / 12.0


def _blade_spec(l: float) -> BeamSpec:
    return BeamSpec(E=YOUNG, nu=POISSON, rho=DENSITY, A=AREA,
                    I_y=I_WEAK, I_z=I_STRONG,
                    J=I_WEAK + I_STRONG, J_t=TORSION_CONSTANT, l=l)


def build_blade(n_el: int, phi: float):
    """Cantilever along X with every section pre-rotated by phi.

    The stored directors put the material y axis along global Y at
    theta = 0, so setting theta = phi at all nodes rotates the section
    height from Y toward Z.  Returns (model, state, tip node).
    """
    model = Model()
    l = LENGTH / n_el
    spec = _blade_spec(l)
    nodes = [model.add_node(np.array([k * l, 0.0, 0.0]),
                            np.array([1.0, 0.0, 0.0]), theta=phi)
             for k in range(n_el + 1)]
    elements = [model.add_beam(spec, nodes[k], nodes[k + 1])
                for k in range(n_el)]
    model.add_joint(clamp_node(model, nodes[0], np.zeros(3),
                               np.array([1.0, 0.0, 0.0]), phi))
    state = model.initial_state()
    set_directors(state, model, elements, np.array([0.0, 1.0, 0.0]))
    return model, state, nodes[-1]


def tip_response(n_el: int, phi: float, load: float,
                 deformation: str = "large", load_steps: int = 10,
                 no_torsion: bool = False):
    """Solve one (phi, load) case; returns (u_y, u_z, twist).

    u_y and u_z are the tip displacement components along the rotated
    section axes (0, cos phi, sin phi) and (0, -sin phi, cos phi);
    twist is the tip section rotation minus phi.
    """
    model, state, tip = build_blade(n_el, phi)
    if no_torsion:
        lock_torsion(model, state)
    model.add_load(tip, lambda t: np.array([0.0, 0.0, -load * t]))
    r0 = state.q[model.node_pos(tip)].copy()
    settings = SolverSettings(load_steps=load_steps,
                              deformation=deformation)
    final = static_solve(model, state, settings)[-1]
    disp = final.q[model.node_pos(tip)] - r0
    e_y = np.array([0.0, np.cos(phi), np.sin(phi)])
    e_z = np.array([0.0, -np.sin(phi), np.cos(phi)])
    twist = final.q[model.node_theta_index(tip)] - phi
    return float(disp @ e_y), float(disp @ e_z), float(twist)


def run_princeton(config: BenchmarkConfig) -> BenchmarkResult:
    result = BenchmarkResult(name="princeton")
    n_el = config.n_elements or DEFAULT_ELEMENTS
    load_steps = config.load_steps or 10

    converged = 0
    curves = {}
    for p_index, load in enumerate(TIP_LOADS, start=1):
        rows = []
        for deg in ANGLES_DEG:
            phi = np.deg2rad(deg)
            try:
                u_y, u_z, twist = tip_response(
                    n_el, phi, load, config.deformation, load_steps,
                    config.no_torsion)
            except Ancf14Error:
                continue
            converged += 1
            rows.append([deg, u_y, u_z, twist])
        curves[p_index] = np.array(rows)
        result.series.append(ResultSeries(
            name=f"princeton_sweep_P{p_index}",
            columns=["load_angle_deg", "tip_u_y_m", "tip_u_z_m",
                     "tip_twist_rad"],
            data=np.array(rows)))

    n_cases = len(TIP_LOADS) * len(ANGLES_DEG)
    result.checks.append(CheckResult(
        "all_cases_converge", converged == n_cases, converged,
        f"{n_cases} static solves converge"))

    flat = curves[1]
    if len(flat) and flat[0, 0] == 0:
        worst = max(abs(curves[p][0, 3]) for p in curves
                    if len(curves[p]) and curves[p][0, 0] == 0)
        result.checks.append(CheckResult(
            "no_twist_at_zero_angle", worst < 1e-4, worst,
            "tip twist < 1e-4 rad when the load is in the weak plane"))

    strong = curves[1][curves[1][:, 0] == 90]
    if len(strong):
        oracle = TIP_LOADS[0] * LENGTH**3 / (3.0 * YOUNG * I_STRONG)
        value = abs(strong[0, 1])
        result.scalars["strong_axis_deflection_m"] = value
        result.scalars["strong_axis_oracle_m"] = oracle
        result.checks.append(CheckResult(
            "strong_axis_deflection", abs(value - oracle) <= 0.05 * oracle,
            value, f"within 5% of {oracle:.4e} m"))

    heavy = curves[len(TIP_LOADS)]
    if len(heavy) == len(ANGLES_DEG):
        tw = heavy[:, 3]
        interior_peak = np.argmax(np.abs(tw)) not in (0, len(tw) - 1)
        single_signed = np.all(tw >= -1e-6) or np.all(tw <= 1e-6)
        result.checks.append(CheckResult(
            "twist_peak_interior", bool(interior_peak and single_signed),
            float(ANGLES_DEG[int(np.abs(tw).argmax())]),
            "largest twist at an interior angle, one sign over the sweep"))
    return result
