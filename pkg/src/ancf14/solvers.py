"""Quasi-static Newton solver, variational time stepper, modal analysis.

The dynamic integrator discretizes the Lagrangian at the interval
midpoint, L_d(a, b) = h L((a+b)/2, (b-a)/h), and solves the discrete
Euler-Lagrange equations with the holonomic constraints enforced at the
new configuration.  Momenta are carried between steps through the
discrete Legendre transforms of L_d, which gives the scheme its
bounded-energy and momentum-conserving behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, lu_factor, lu_solve, null_space

from .errors import (Ancf14Error, ConstraintDriftError, IndefiniteError,
                     NonConvergence)
from .model import (
    Model,
    SystemState,
    assemble_energy,
    assemble_forces,
    assemble_mass,
    assemble_tangent_fd,
    constraint_eval,
    external_force,
    kinetic_gradient,
    transport_directors,
)


@dataclass
class SolverSettings:
    newton_tol: float = 1e-9
    max_iter: int = 50
    dt: float = 1e-3
    load_steps: int = 10
    fd_step: float = 1e-7
    max_bisect: int = 8
    deformation: str = "large"

    def __post_init__(self):
        if self.newton_tol <= 0 or self.max_iter < 1 or self.dt <= 0 \
                or self.load_steps < 1 or self.fd_step <= 0:
            raise ValueError("solver settings must be positive")


def _force_scale(model: Model) -> float:
    if not model.beams:
        return 1.0
    return max(el.spec.E * el.spec.A for el in model.beams)


# ---------------------------------------------------------------------------
# statics

def static_solve(model: Model, state0: SystemState,
                 settings: SolverSettings | None = None,
                 record=None) -> list[SystemState]:
    """Incremental equilibrium solve over load factor in (0, 1].

    Joint right-hand sides and loads receive the load factor as their
    time argument.  On Newton failure the increment is bisected (up to
    ``max_bisect`` times).  Directors are transported once per accepted
    increment.
    """
    settings = settings or SolverSettings()
    scale = _force_scale(model)
    states = [state0.copy()]
    state = state0.copy()
    gamma = 0.0
    d_nominal = 1.0 / settings.load_steps
    d_gamma = d_nominal
    bisections = 0
    step = 0
    prev_q, prev_d = None, None
    while gamma < 1.0 - 1e-12:
        target = min(1.0, gamma + d_gamma)
        guess = None
        if prev_q is not None and prev_d > 0.0:
            # secant predictor from the last accepted increment
            guess = state.q + (target - gamma) / prev_d * (state.q - prev_q)
        try:
            new = _equilibrium(model, state, target, settings, scale, step,
                               q_guess=guess)
        except NonConvergence:
            bisections += 1
            if bisections > settings.max_bisect:
                raise
            d_gamma *= 0.5
            prev_q = None
            continue
        new.directors = transport_directors(model, state.q, new.q,
                                            state.directors)
        prev_q, prev_d = state.q, target - gamma
        gamma = target
        state = new
        states.append(new.copy())
        step += 1
        if record is not None:
            record(gamma, new)
        # recover toward the nominal increment after bisections
        d_gamma = min(2.0 * d_gamma, d_nominal)
    return states


def _equilibrium(model, state, gamma, settings, scale, step, q_guess=None):
    """One load increment; Newton with a lazily refreshed KKT tangent.

    The factorized tangent is reused across iterations (residuals stay
    exact) and rebuilt whenever the residual fails to drop by 10x, so
    the final iterations run on a fresh Jacobian.
    """
    n_q, n_c = model.n_q, model.n_constraints

    def residual(q, lam):
        f = assemble_forces(model, q, state.directors, settings.deformation)
        g, big_g = constraint_eval(model, q, gamma, state.directors)
        r1 = f + big_g.T @ lam - external_force(model, gamma)
        res = max(np.max(np.abs(r1)) / scale,
                  np.max(np.abs(g)) if n_c else 0.0)
        return res, r1, g, big_g

    q = state.q.copy()
    lam = state.lam.copy()
    if q_guess is not None:
        try:
            res, r1, g, big_g = residual(q_guess, lam)
            q = q_guess.copy()
        except Ancf14Error:
            res, r1, g, big_g = residual(q, lam)
    else:
        res, r1, g, big_g = residual(q, lam)
    lu = None
    fresh = False
    res_prev = np.inf
    polished = False
    for it in range(settings.max_iter):
        if res < settings.newton_tol:
            if polished or res < 1e-3 * settings.newton_tol:
                return SystemState(q=q, q_dot=np.zeros(n_q), lam=lam,
                                   time=gamma,
                                   directors=list(state.directors))
            # one full-Newton step on a fresh tangent sharpens the
            # just-converged state well past the tolerance
            polished = True
            lu = None
            res_prev = np.inf
        stalled = res > 0.1 * res_prev
        if lu is None or (stalled and not fresh):
            k = assemble_tangent_fd(model, q, state.directors,
                                    settings.deformation, lam=lam, t=gamma,
                                    fd_step=settings.fd_step)
            kkt = np.zeros((n_q + n_c, n_q + n_c))
            kkt[:n_q, :n_q] = k
            kkt[:n_q, n_q:] = big_g.T
            kkt[n_q:, :n_q] = big_g
            lu = lu_factor(kkt)
            fresh = True
        res_prev = res
        delta = lu_solve(lu, -np.r_[r1, g])
        if not np.all(np.isfinite(delta)):
            raise NonConvergence(step, it, res, "singular KKT matrix")
        # halve the update while it leaves the evaluable region, or (on
        # a reused tangent only) while it blows the residual up; a full
        # step on a fresh tangent is trusted even if the residual grows
        # transiently, which is normal for Newton far from the solution
        alpha = 1.0
        for _ in range(8):
            try:
                cand = residual(q + alpha * delta[:n_q],
                                lam + alpha * delta[n_q:])
            except Ancf14Error:
                alpha *= 0.5
                continue
            if not np.isfinite(cand[0]):
                alpha *= 0.5
                continue
            if not fresh and cand[0] > 10.0 * res and alpha > 1.0 / 64.0:
                alpha *= 0.5
                continue
            break
        else:
            raise NonConvergence(step, it, res, "line search failed")
        # any accepted step moves q away from where the LU was built
        fresh = False
        q = q + alpha * delta[:n_q]
        lam = lam + alpha * delta[n_q:]
        res, r1, g, big_g = cand
    raise NonConvergence(step, settings.max_iter, res)


# ---------------------------------------------------------------------------
# dynamics

def _lagrangian_gradients(model, mid, v, directors, mode):
    """(Lq, Lv) of L = T - U at the midpoint configuration/velocity."""
    lq = kinetic_gradient(model, mid, v) \
        - assemble_forces(model, mid, directors, mode)
    lv = assemble_mass(model, mid) @ v
    return lq, lv


def discrete_momentum(model, q_a, q_b, h, directors, mode):
    """D2 of the midpoint discrete Lagrangian on the step a -> b."""
    mid = 0.5 * (q_a + q_b)
    v = (q_b - q_a) / h
    lq, lv = _lagrangian_gradients(model, mid, v, directors, mode)
    return 0.5 * h * lq + lv


def startup_state(model: Model, state0: SystemState,
                  settings: SolverSettings) -> SystemState:
    """Synthesize the pre-initial configuration from q0 and q0_dot.

    q_minus = q0 - dt q0_dot, projected onto the constraint manifold at
    t = -dt (minimum-norm correction).
    """
    h = settings.dt
    q = state0.q - h * state0.q_dot
    for _ in range(20):
        g, big_g = constraint_eval(model, q, -h, state0.directors)
        if model.n_constraints == 0 or np.max(np.abs(g)) < 1e-12:
            break
        mu = np.linalg.lstsq(big_g @ big_g.T, -g, rcond=None)[0]
        q = q + big_g.T @ mu
    out = state0.copy()
    out.q = q
    out.time = -h
    return out


def _build_kkt_lu(model, q_k, q, g_k, big_g, h, settings, directors, mode):
    n_q, n_c = model.n_q, model.n_constraints
    mid = 0.5 * (q_k + q)
    k_mid = assemble_tangent_fd(model, mid, directors, mode,
                                fd_step=settings.fd_step)
    jac = -0.25 * h * k_mid - assemble_mass(model, mid) / h
    if model.bodies:
        jac = jac + _body_momentum_jacobian(model, q_k, q, h, settings)
    kkt = np.zeros((n_q + n_c, n_q + n_c))
    kkt[:n_q, :n_q] = jac
    kkt[:n_q, n_q:] = -h * g_k.T
    kkt[n_q:, :n_q] = big_g
    return lu_factor(kkt), kkt


def _del_solve(model, q_k, t_k, p_k, q0, lam0, settings, directors,
               cache=None):
    """Newton solve of the discrete Euler-Lagrange step from q_k.

    The residual is always exact; the KKT Jacobian may be reused across
    iterations and steps (modified Newton) via ``cache``, rebuilt when
    convergence stalls.
    """
    h = settings.dt
    mode = settings.deformation
    scale = _force_scale(model) * h
    n_c = model.n_constraints
    _, g_k = constraint_eval(model, q_k, t_k, directors)
    f_ext = external_force(model, t_k + 0.5 * h)
    step_id = int(round(t_k / h))
    def evaluate(q, lam):
        mid = 0.5 * (q_k + q)
        v = (q - q_k) / h
        lq, lv = _lagrangian_gradients(model, mid, v, directors, mode)
        r1 = p_k + 0.5 * h * lq - lv + h * f_ext - h * g_k.T @ lam
        g, big_g = constraint_eval(model, q, t_k + h, directors)
        res = max(np.max(np.abs(r1)) / scale,
                  np.max(np.abs(g)) if n_c else 0.0)
        return res, r1, g, big_g, lq, lv

    q = q0.copy()
    lam = lam0.copy()
    since_rebuild = 0
    res, r1, g, big_g, lq, lv = evaluate(q, lam)
    it = 0
    while it < settings.max_iter:
        if res < settings.newton_tol:
            p_next = 0.5 * h * lq + lv
            return q, lam, g, p_next
        if not np.isfinite(res):
            raise NonConvergence(step_id, it, res,
                                 "non-finite step residual")
        if cache is None or "lu" not in cache or since_rebuild > 0:
            lu, kkt = _build_kkt_lu(model, q_k, q, g_k, big_g, h,
                                    settings, directors, mode)
            if cache is not None:
                cache["lu"], cache["kkt"] = lu, kkt
            fresh = True
            since_rebuild = 0
        else:
            lu, kkt = cache["lu"], cache["kkt"]
            fresh = False
        rhs = -np.r_[r1, g]
        try:
            delta = lu_solve(lu, rhs)
        except np.linalg.LinAlgError:
            delta = None
        if delta is None or not np.all(np.isfinite(delta)):
            # exactly singular tangent, e.g. a force-free neutral
            # direction on a symmetry manifold: take the minimum-norm
            # Newton step, which leaves the null direction untouched
            delta = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        alpha = 1.0
        while True:
            cand = evaluate(q + alpha * delta[:len(q)],
                            lam + alpha * delta[len(q):])
            grew = not np.isfinite(cand[0]) or cand[0] > 2.0 * res
            if grew and alpha > 1.0 / 32.0:
                alpha *= 0.5
                continue
            if grew and not fresh:
                # stale tangent cannot make progress here: refresh it
                # at the current point and retry a full step
                since_rebuild = 1
                cand = None
            break
        if cand is not None:
            prev = res
            q = q + alpha * delta[:len(q)]
            lam = lam + alpha * delta[len(q):]
            res, r1, g, big_g, lq, lv = cand
            if res > 0.5 * prev:
                # poor contraction: refresh the tangent next pass
                since_rebuild = 1
        it += 1
    raise NonConvergence(step_id, settings.max_iter, res)


def dynamic_step(model: Model, state_prev: SystemState,
                 state: SystemState,
                 settings: SolverSettings,
                 p_k=None, cache=None) -> SystemState:
    """One step of the constrained midpoint variational integrator.

    Solves p_k + D1 L_d(q_k, q_next) - h G(q_k)^T lam + h f_ext = 0 and
    g(q_next) = 0 for (q_next, lam), with p_k the discrete momentum of
    the previous interval (recomputed from the two states unless passed
    in).  Directors are transported on acceptance.
    """
    h = settings.dt
    q_k = state.q
    t_k = state.time
    if p_k is None:
        p_k = discrete_momentum(model, state_prev.q, q_k, h,
                                state.directors, settings.deformation)
    q, lam, g, p_next = _del_solve(model, q_k, t_k, p_k,
                                   q_k + h * state.q_dot, state.lam,
                                   settings, state.directors, cache)
    if model.n_constraints and np.max(np.abs(g)) > 10.0 * settings.newton_tol:
        raise ConstraintDriftError(
            f"constraint residual {np.max(np.abs(g)):.3e} after step")
    return SystemState(q=q, q_dot=(q - q_k) / h, lam=lam,
                       time=t_k + h,
                       directors=transport_directors(model, q_k, q,
                                                     state.directors),
                       momentum=p_next)


def _body_momentum_jacobian(model, q_k, q, h, settings):
    """FD correction for the quaternion kinetic terms, body DOFs only."""
    n_q = model.n_q
    corr = np.zeros((n_q, n_q))

    def body_terms(q_new):
        mid = 0.5 * (q_k + q_new)
        v = (q_new - q_k) / h
        out = 0.5 * h * kinetic_gradient(model, mid, v)
        m = assemble_mass(model, mid)
        out -= m @ v
        return out

    base_m = assemble_mass(model, 0.5 * (q_k + q))
    cols = []
    for b in range(len(model.bodies)):
        s = model.body_slice(b)
        cols.extend(range(s.start, s.stop))
    f0_lin = -base_m / h   # linear part already in the main Jacobian
    for c in cols:
        step = settings.fd_step * max(1.0, abs(q[c]))
        qp, qm = q.copy(), q.copy()
        qp[c] += step
        qm[c] -= step
        col = (body_terms(qp) - body_terms(qm)) / (2.0 * step)
        corr[:, c] = col - f0_lin[:, c]
    return corr


def simulate(model: Model, state0: SystemState, t_end: float,
             settings: SolverSettings | None = None,
             observer=None) -> SystemState:
    """Run the integrator from state0 to t_end; observer(state) per step."""
    settings = settings or SolverSettings()
    prev = startup_state(model, state0, settings)
    state = state0.copy()
    n_steps = int(round(t_end / settings.dt))
    cache = {}
    if observer is not None:
        observer(state)
    for _ in range(n_steps):
        new = dynamic_step(model, prev, state, settings,
                           p_k=state.momentum, cache=cache)
        prev, state = state, new
        if observer is not None:
            observer(state)
    return state


# ---------------------------------------------------------------------------
# modal analysis

def modal_analysis(model: Model, state_eq: SystemState,
                   settings: SolverSettings | None = None,
                   n_modes: int | None = None):
    """Natural frequencies and mode shapes about an equilibrium.

    Tangent stiffness by central differences of the assembled analytic
    force (including the constraint-curvature term), projected onto the
    null space of the constraint Jacobian; solves the reduced symmetric
    generalized eigenproblem.
    """
    settings = settings or SolverSettings()
    q = state_eq.q
    k = assemble_tangent_fd(model, q, state_eq.directors,
                            settings.deformation, lam=state_eq.lam,
                            t=state_eq.time, fd_step=settings.fd_step)
    m = assemble_mass(model, q)
    _, big_g = constraint_eval(model, q, state_eq.time, state_eq.directors)
    z = null_space(big_g) if model.n_constraints else np.eye(model.n_q)
    k_r = z.T @ k @ z
    k_r = 0.5 * (k_r + k_r.T)
    m_r = z.T @ m @ z
    m_r = 0.5 * (m_r + m_r.T)
    vals, vecs = eigh(k_r, m_r)
    tol = 1e-8 * max(np.max(np.abs(vals)), 1.0)
    if np.min(vals) < -tol:
        raise IndefiniteError(
            f"projected stiffness has negative eigenvalue {np.min(vals):.3e}")
    freqs = np.sqrt(np.clip(vals, 0.0, None))
    modes = [(float(freqs[i]), z @ vecs[:, i]) for i in range(len(freqs))]
    if n_modes is not None:
        modes = modes[:n_modes]
    return modes


# ---------------------------------------------------------------------------
# derivative verification

def check_gradients(model: Model, state: SystemState,
                    settings: SolverSettings | None = None) -> dict:
    """Max relative FD error of every analytic derivative surface."""
    settings = settings or SolverSettings()
    h = settings.fd_step
    q = state.q
    report = {}

    for mode in ("small", "large"):
        f = assemble_forces(model, q, state.directors, mode)
        g = np.zeros(model.n_q)
        for c in range(model.n_q):
            qp, qm = q.copy(), q.copy()
            qp[c] += h
            qm[c] -= h
            g[c] = (assemble_energy(model, qp, state.directors, mode)
                    - assemble_energy(model, qm, state.directors, mode)) \
                / (2 * h)
        scale = max(np.max(np.abs(g)), 1.0)
        report[f"internal_force_{mode}"] = float(
            np.max(np.abs(f - g)) / scale)

    if model.n_constraints:
        _, big_g = constraint_eval(model, q, state.time, state.directors)
        fd = np.zeros_like(big_g)
        for c in range(model.n_q):
            qp, qm = q.copy(), q.copy()
            qp[c] += h
            qm[c] -= h
            gp, _ = constraint_eval(model, qp, state.time, state.directors)
            gm, _ = constraint_eval(model, qm, state.time, state.directors)
            fd[:, c] = (gp - gm) / (2 * h)
        scale = max(np.max(np.abs(fd)), 1.0)
        report["constraint_jacobian"] = float(
            np.max(np.abs(big_g - fd)) / scale)

    return report
