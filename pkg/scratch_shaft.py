import time
from ancf14.benchmarks.shaft import run_shaft
from ancf14.benchmarks.config import BenchmarkConfig

t0 = time.time()
res = run_shaft(BenchmarkConfig(name="shaft"))
print("elapsed", time.time() - t0)
for c in res.checks:
    print(c.name, "PASS" if c.passed else "FAIL", c.value)
print(res.scalars)
