"""Standalone figure rendering for solver CSV reports."""

from dfrc_hbf_viz.plots import (
    SchemaError,
    plot_beampattern,
    plot_sweep,
    plot_trace,
    render_run_dir,
)

__all__ = [
    "SchemaError",
    "plot_beampattern",
    "plot_sweep",
    "plot_trace",
    "render_run_dir",
]
