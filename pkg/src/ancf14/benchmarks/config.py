"""Benchmark configuration and result containers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import ModelError

BENCHMARK_NAMES = ("spring", "princeton", "shaft", "buckling")

# JSON config keys (units spelled out in the names) -> config attributes
_JSON_KEYS = {
    "benchmark": "name",
    "n_elements": "n_elements",
    "deformation_mode": "deformation",
    "dt_s": "dt",
    "load_steps": "load_steps",
    "output_dir": "output_dir",
    "disable_torsion": "no_torsion",
}


@dataclass
class BenchmarkConfig:
    """Settings of one benchmark run; None fields take per-case defaults."""

    name: str
    n_elements: int | None = None
    deformation: str = "large"
    dt: float | None = None
    load_steps: int | None = None
    output_dir: str | None = None
    no_torsion: bool = False

    def __post_init__(self):
        if self.name not in BENCHMARK_NAMES:
            raise ModelError(
                f"unknown benchmark {self.name!r}; pick one of "
                + ", ".join(BENCHMARK_NAMES))
        if self.n_elements is not None and self.n_elements < 1:
            raise ModelError("n_elements must be >= 1")
        if self.deformation not in ("small", "large"):
            raise ModelError("deformation must be 'small' or 'large'")
        if self.dt is not None and self.dt <= 0.0:
            raise ModelError("dt must be positive")
        if self.load_steps is not None and self.load_steps < 1:
            raise ModelError("load_steps must be >= 1")

    @classmethod
    def from_json(cls, path: str) -> "BenchmarkConfig":
        with open(path) as fh:
            raw = json.load(fh)
        unknown = sorted(set(raw) - set(_JSON_KEYS))
        if unknown:
            raise ModelError(f"unknown config keys: {', '.join(unknown)}")
        if "benchmark" not in raw:
            raise ModelError("config is missing the 'benchmark' key")
        return cls(**{_JSON_KEYS[k]: v for k, v in raw.items()})


@dataclass(frozen=True)
class CheckResult:
    """One pass/fail comparison against a reference value."""

    name: str
    passed: bool
    value: float
    target: str


@dataclass
class BenchmarkResult:
    name: str
    series: list = field(default_factory=list)       # of ResultSeries
    checks: list = field(default_factory=list)       # of CheckResult
    scalars: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)
