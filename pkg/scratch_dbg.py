import numpy as np
from ancf14.benchmarks.buckling import build_mechanism, BEAM_ELEMENTS
from ancf14.benchmarks.common import lock_torsion
from ancf14.solvers import (SolverSettings, simulate, startup_state,
                            dynamic_step, _del_solve, _lagrangian_gradients,
                            _force_scale, _build_kkt_lu)
from ancf14.model import constraint_eval, external_force
from ancf14.errors import NonConvergence

model, state, mid = build_mechanism(BEAM_ELEMENTS)
lock_torsion(model, state)
settings = SolverSettings(dt=1e-3)
hist = []
def obs(st):
    hist.append(st)
try:
    simulate(model, state, 0.5, settings, observer=obs)
except NonConvergence as e:
    print("fail:", e, flush=True)

prev, cur = hist[-2].copy(), hist[-1].copy()
print("t =", cur.time, flush=True)
h = settings.dt
mode = "large"
scale = _force_scale(model) * h
q_k = cur.q
t_k = cur.time
# recompute p_k as dynamic_step does
from ancf14.solvers import discrete_momentum
p_k = discrete_momentum(model, prev.q, cur.q, h, cur.directors, mode)
_, g_k = constraint_eval(model, q_k, t_k, cur.directors)
f_ext = external_force(model, t_k + 0.5 * h)
q = q_k.copy(); lam = cur.lam.copy()
from scipy.linalg import lu_solve
for it in range(12):
    midq = 0.5 * (q_k + q)
    v = (q - q_k) / h
    lq, lv = _lagrangian_gradients(model, midq, v, cur.directors, mode)
    r1 = p_k + 0.5 * h * lq - lv + h * f_ext - h * g_k.T @ lam
    g, big_g = constraint_eval(model, q, t_k + h, cur.directors)
    i1 = int(np.argmax(np.abs(r1))); i2 = int(np.argmax(np.abs(g)))
    print(f"it={it} res_r1={np.max(np.abs(r1))/scale:.3e}@{i1} "
          f"res_g={np.max(np.abs(g)):.3e}@{i2}", flush=True)
    lu, kkt = _build_kkt_lu(model, q_k, q, g_k, big_g, h, settings,
                            cur.directors, mode)
    sv = np.linalg.svd(kkt, compute_uv=False)
    print(f"   cond={sv[0]/sv[-1]:.2e} smin={sv[-1]:.2e}", flush=True)
    delta = lu_solve(lu, -np.r_[r1, g])
    print(f"   |dq|max={np.max(np.abs(delta[:model.n_q])):.3e} "
          f"finite={np.all(np.isfinite(delta))}", flush=True)
    q = q + delta[:model.n_q]
    lam = lam + delta[model.n_q:]
