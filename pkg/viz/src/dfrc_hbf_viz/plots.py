"""Figure rendering for the solver CLI's delimited reports.

Each plot function reads one CSV, draws one figure, saves it, and returns the
Figure so callers (and tests) can inspect axes. Everything here is a pure
file-to-file transform; nothing imports the solver.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure


class SchemaError(Exception):
    """A CSV is missing columns or rows the figure needs."""


TRACE_COLUMNS = ["iteration", "objective", "res1", "res2", "res3", "res4", "min_rate", "mean_rate"]
BEAMPATTERN_COLUMNS = ["subcarrier_index", "f_k_Hz", "angle_deg", "power_linear", "power_dB_normalized"]
SWEEP_COLUMNS = ["chi", "final_objective", "min_rate"]


def _read_columns(path, required: list[str]) -> dict[str, np.ndarray]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path.name}: file is empty") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(
                f"{path.name}: missing columns {', '.join(missing)} (header has {', '.join(header)})"
            )
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path.name}: no data rows")
    idx = {c: header.index(c) for c in required}
    out = {}
    for c in required:
        try:
            out[c] = np.array([float(r[idx[c]]) for r in rows])
        except (ValueError, IndexError) as err:
            raise SchemaError(f"{path.name}: column '{c}' has a non-numeric or short row: {err}") from err
    return out


def plot_trace(trace_csv, out_image) -> Figure:
    """Convergence curves: objective and rates on top, residual norms below."""
    cols = _read_columns(trace_csv, TRACE_COLUMNS)
    fig = Figure(figsize=(7.0, 6.0))
    ax_obj, ax_res = fig.subplots(2, 1, sharex=True)

    it = cols["iteration"]
    ax_obj.plot(it, cols["objective"], color="tab:blue", label="objective")
    ax_obj.set_ylabel("beampattern objective")
    ax_rate = ax_obj.twinx()
    ax_rate.plot(it, cols["min_rate"], color="tab:green", ls="--", label="min rate")
    ax_rate.plot(it, cols["mean_rate"], color="tab:olive", ls=":", label="mean rate")
    ax_rate.set_ylabel("rate (bits/s/Hz)")
    lines = ax_obj.get_lines() + ax_rate.get_lines()
    ax_obj.legend(lines, [ln.get_label() for ln in lines], loc="best", fontsize=8)

    for name, style in (("res1", "-"), ("res2", "--"), ("res3", "-."), ("res4", ":")):
        ax_res.semilogy(it, np.maximum(cols[name], 1e-16), ls=style, label=name)
    ax_res.set_xlabel("iteration")
    ax_res.set_ylabel("consensus residual")
    ax_res.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_image)
    return fig


def plot_beampattern(beampattern_csv, out_image) -> Figure:
    """Space-frequency heatmap of the normalized transmit spectrum in dB.

    The dB values are plotted exactly as emitted (the writer normalizes per
    subcarrier); axis limits equal the CSV's angle and subcarrier ranges.
    """
    cols = _read_columns(beampattern_csv, BEAMPATTERN_COLUMNS)
    k_idx = cols["subcarrier_index"].astype(int)
    angles = cols["angle_deg"]
    k_vals = np.unique(k_idx)
    a_vals = np.unique(angles)
    grid = np.full((k_vals.size, a_vals.size), np.nan)
    k_pos = {k: i for i, k in enumerate(k_vals)}
    a_pos = {a: j for j, a in enumerate(a_vals)}
    for k, a, db in zip(k_idx, angles, cols["power_dB_normalized"]):
        grid[k_pos[k], a_pos[a]] = db
    if np.isnan(grid).any():
        raise SchemaError(
            f"{Path(beampattern_csv).name}: angle grid is ragged across subcarriers"
        )

    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    extent = [float(a_vals.min()), float(a_vals.max()), float(k_vals.min()), float(k_vals.max())]
    # a single subcarrier (or angle) would collapse the image to zero height
    if extent[2] == extent[3]:
        extent[2] -= 0.5
        extent[3] += 0.5
    if extent[0] == extent[1]:
        extent[0] -= 0.5
        extent[1] += 0.5
    image = ax.imshow(
        grid,
        origin="lower",
        aspect="auto",
        extent=extent,
        vmax=0.0,
        vmin=max(-60.0, float(np.min(grid[np.isfinite(grid)], initial=-60.0))),
        cmap="viridis",
        interpolation="nearest",
    )
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("subcarrier index")
    fig.colorbar(image, ax=ax, label="power (dB, per-subcarrier peak)")
    fig.tight_layout()
    fig.savefig(out_image)
    return fig


def plot_sweep(sweep_csv, out_image) -> Figure:
    """Final objective and minimum rate against the rate threshold."""
    cols = _read_columns(sweep_csv, SWEEP_COLUMNS)
    order = np.argsort(cols["chi"])
    chi = cols["chi"][order]

    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.subplots()
    ax.plot(chi, cols["final_objective"][order], "o-", color="tab:blue", label="objective")
    ax.set_xlabel("rate threshold (bits/s/Hz)")
    ax.set_ylabel("beampattern objective")
    ax_rate = ax.twinx()
    ax_rate.plot(chi, cols["min_rate"][order], "s--", color="tab:green", label="min rate")
    ax_rate.set_ylabel("min achieved rate (bits/s/Hz)")
    lines = ax.get_lines() + ax_rate.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_image)
    return fig


_RENDERERS = {
    "trace.csv": (plot_trace, "trace.png"),
    "beampattern.csv": (plot_beampattern, "beampattern.png"),
    "sweep.csv": (plot_sweep, "sweep.png"),
}


def render_run_dir(run_dir) -> list[Path]:
    """Render a figure next to every known CSV in a solver output directory."""
    run_dir = Path(run_dir)
    written = []
    for name, (fn, image_name) in _RENDERERS.items():
        src = run_dir / name
        if src.is_file():
            fn(src, run_dir / image_name)
            written.append(run_dir / image_name)
    return written
