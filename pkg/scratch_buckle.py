import time
import numpy as np
from ancf14.benchmarks.buckling import run_buckling
from ancf14.benchmarks.config import BenchmarkConfig

for no_t in (True, False):
    t0 = time.time()
    res = run_buckling(BenchmarkConfig(name="buckling", no_torsion=no_t))
    print(f"no_torsion={no_t} elapsed={time.time()-t0:.1f}", flush=True)
    for c in res.checks:
        print(" ", c.name, "PASS" if c.passed else "FAIL", c.value, flush=True)
    print(" ", res.scalars, flush=True)
    if not no_t:
        d = res.series[0].data
        for tq in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5):
            i = np.searchsorted(d[:, 0], tq) - 1
            print(f"  t={d[i,0]:.3f} uY={d[i,1]:+.4e} uZ={d[i,2]:+.4e} "
                  f"tw={d[i,3]:+.4e}", flush=True)
