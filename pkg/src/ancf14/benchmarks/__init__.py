"""Validation benchmarks: spring, princeton, shaft and buckling."""

from .buckling import run_buckling
from .config import (BENCHMARK_NAMES, BenchmarkConfig, BenchmarkResult,
                     CheckResult)
from .princeton import run_princeton
from .shaft import run_shaft
from .spring import run_spring

_RUNNERS = {
    "spring": run_spring,
    "princeton": run_princeton,
    "shaft": run_shaft,
    "buckling": run_buckling,
}


def run_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    """Dispatch a configuration to the matching benchmark runner."""
    return _RUNNERS[config.name](config)


__all__ = ["BENCHMARK_NAMES", "BenchmarkConfig", "BenchmarkResult",
           "CheckResult", "run_benchmark", "run_spring", "run_princeton",
           "run_shaft", "run_buckling"]
