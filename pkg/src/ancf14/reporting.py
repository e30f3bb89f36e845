"""Result serialization: CSV series, JSON summaries and figures.

CSV files are RFC-4180 with LF line endings, a header row and '.' as
the decimal separator; floats are written with shortest round-trip
precision so parse(emit(s)) == s exactly.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

_SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "benchmarks",
                            "summary_schema.json")


@dataclass
class ResultSeries:
    """A named table of sampled quantities.

    The first column is the running variable (time or load factor) and
    must be non-decreasing.
    """

    name: str
    columns: list
    data: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.size == 0:
            self.data = np.empty((0, len(self.columns)))
        if self.data.shape[1] != len(self.columns):
            raise ValueError("data width does not match column names")
        if len(self.data) > 1 and np.any(np.diff(self.data[:, 0]) < 0):
            raise ValueError("first column must be non-decreasing")

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


def write_csv(series: ResultSeries, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(series.columns)
        for row in series.data:
            writer.writerow([repr(float(v)) for v in row])


def read_csv(path: str) -> ResultSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    name = os.path.splitext(os.path.basename(path))[0]
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body]) \
        if body else np.empty((0, len(header)))
    return ResultSeries(name=name, columns=header, data=data)


def render_figure(series: ResultSeries, path: str) -> None:
    """Plot every column against the first one and save a PNG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.2), dpi=130)
    x = series.data[:, 0]
    for k, label in enumerate(series.columns[1:], start=1):
        ax.plot(x, series.data[:, k], label=label, linewidth=1.2)
    ax.set_xlabel(series.columns[0])
    ax.set_title(series.name)
    ax.grid(True, alpha=0.3)
    if len(series.columns) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def summary_dict(result) -> dict:
    """JSON-ready summary of a BenchmarkResult."""
    return {
        "schema_version": 1,
        "benchmark": result.name,
        "passed": result.all_passed,
        "checks": [
            {"name": c.name, "passed": c.passed, "value": float(c.value),
             "target": c.target}
            for c in result.checks
        ],
        "scalars": {k: float(v) for k, v in result.scalars.items()},
    }


def load_schema() -> dict:
    with open(_SCHEMA_PATH) as fh:
        return json.load(fh)


def validate_summary(summary: dict) -> None:
    """Validate a summary dict against the shipped schema."""
    import jsonschema

    jsonschema.validate(summary, load_schema())


def emit_results(result, out_dir: str) -> list:
    """Write CSVs, figures and the JSON summary; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    summary = summary_dict(result)
    summary["series_files"] = []
    summary["figure_files"] = []
    for series in result.series:
        csv_path = os.path.join(out_dir, f"{series.name}.csv")
        write_csv(series, csv_path)
        written.append(csv_path)
        summary["series_files"].append(os.path.basename(csv_path))
        if len(series.data):
            png_path = os.path.join(out_dir, f"{series.name}.png")
            render_figure(series, png_path)
            written.append(png_path)
            summary["figure_files"].append(os.path.basename(png_path))
    validate_summary(summary)
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(summary_path)
    return written
