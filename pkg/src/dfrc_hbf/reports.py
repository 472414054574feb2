"""Delimited and JSON report files with deterministic formatting.

No report contains timestamps or wall-clock data, so reruns with identical
arguments produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cadmm import RunTrace
from .metrics import BeampatternGrid


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_trace_csv(trace: RunTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "res1", "res2", "res3", "res4", "min_rate", "mean_rate"])
        for i in range(trace.n_iterations):
            writer.writerow(
                [i + 1, _fmt(trace.objective[i])]
                + [_fmt(r) for r in trace.residual_norms[i]]
                + [_fmt(trace.min_rate[i]), _fmt(trace.mean_rate[i])]
            )


def write_summary_json(trace: RunTrace, cfg_data: dict, seed: int, path) -> None:
    summary = {
        "termination": trace.termination,
        "iterations": trace.n_iterations,
        "final_objective": trace.final_objective,
        "final_min_rate": float(trace.final_rates.min()),
        "final_mean_rate": float(trace.final_rates.mean()),
        "final_rates": np.asarray(trace.final_rates).tolist(),
        "seed": int(seed),
        "config": cfg_data,
    }
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")


def write_beampattern_csv(grid: BeampatternGrid, path) -> None:
    """Per-angle spectrum rows; dB column is normalized to each subcarrier's peak."""
    peaks = grid.values.max(axis=1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subcarrier_index", "f_k_Hz", "angle_deg", "power_linear", "power_dB_normalized"])
        for k in range(grid.values.shape[0]):
            with np.errstate(divide="ignore"):
                db = 10.0 * np.log10(grid.values[k] / peaks[k])
            for p in range(grid.angles.size):
                writer.writerow(
                    [k + 1, _fmt(grid.freqs[k]), _fmt(grid.angles[p]), _fmt(grid.values[k, p]), _fmt(db[p])]
                )


def write_rates_csv(rates: np.ndarray, chi: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subcarrier_index", "user", "rate_bits", "chi"])
        for k in range(rates.shape[0]):
            for u in range(rates.shape[1]):
                writer.writerow([k + 1, u + 1, _fmt(rates[k, u]), _fmt(chi[k, u])])


def write_sweep_csv(rows: list[tuple[float, float, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chi", "final_objective", "min_rate"])
        for chi, obj, min_rate in rows:
            writer.writerow([_fmt(chi), _fmt(obj), _fmt(min_rate)])


def write_baseline_csv(rows: list[tuple[str, str, float, float, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "task", "chi", "objective", "min_rate"])
        for variant, task, chi, obj, min_rate in rows:
            writer.writerow([variant, task, _fmt(chi), _fmt(obj), _fmt(min_rate)])
