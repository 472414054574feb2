"""Config file loading, strict validation, and shipped scenario presets."""

from __future__ import annotations

import copy
import json
from pathlib import Path

from .errors import ConfigError
from .model import AngleGrids, ScenarioConfig, Tolerances

_TOP_KEYS = {
    "M_t",
    "N_t",
    "M_r",
    "U",
    "K",
    "f_c",
    "B",
    "d",
    "P_k",
    "sigma_n2",
    "chi",
    "grid",
    "rho",
    "task",
    "max_iter",
    "ccd_max",
    "seed",
    "L",
    "N_ray",
    "tolerances",
}
_REQUIRED = {"M_t", "N_t", "M_r", "U", "K", "f_c", "B", "P_k", "sigma_n2", "chi", "grid"}
_GRID_KEYS = {"mainlobe", "sidelobe", "n_points"}
_TOL_KEYS = {"res", "power", "root", "zero"}

_GRID_A = {"mainlobe": [-5.0, 5.0], "sidelobe": [[-90.0, -8.0], [8.0, 90.0]], "n_points": 361}
_GRID_B = {"mainlobe": [-10.0, 10.0], "sidelobe": [[-90.0, -13.0], [13.0, 90.0]], "n_points": 361}

_SINGLE_CARRIER = {
    "M_t": 32,
    "N_t": 4,
    "M_r": 4,
    "U": 4,
    "K": 1,
    "f_c": 1.0e10,
    "B": 2.0e7,
    "P_k": 4.0,
    "sigma_n2": 1.0,
    "chi": 1.0,
    "rho": [1.0, 1.0, 1.0, 1.0],
    "task": "sd",
    "max_iter": 1000,
    "ccd_max": 10,
    "seed": 0,
}
_OFDM = dict(_SINGLE_CARRIER, K=32, B=2.56e9, d=0.0133)

PRESETS: dict[str, dict] = {
    "single_carrier_A": dict(_SINGLE_CARRIER, grid=_GRID_A),
    "single_carrier_B": dict(_SINGLE_CARRIER, grid=_GRID_B),
    "ofdm_A": dict(_OFDM, grid=_GRID_A),
    "ofdm_B": dict(_OFDM, grid=_GRID_B),
}


def load_config_data(name_or_path: str) -> dict:
    """Return the raw config dict for a preset name or a JSON file path."""
    if name_or_path in PRESETS:
        return copy.deepcopy(PRESETS[name_or_path])
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(
            f"'{name_or_path}' is neither a preset ({', '.join(sorted(PRESETS))}) nor a config file"
        )
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def apply_overrides(data: dict, assignments: list[str]) -> dict:
    """Apply key=value overrides, with dots for nested keys; values parse as JSON."""
    out = copy.deepcopy(data)
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = out
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override '{key}' indexes into a non-object field")
        target[parts[-1]] = value
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    """Validate a raw config dict and build the scenario; unknown keys are rejected."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    missing = _REQUIRED - set(data)
    if missing:
        raise ConfigError(f"missing config fields: {', '.join(sorted(missing))}")

    grid_data = data["grid"]
    if not isinstance(grid_data, dict):
        raise ConfigError("grid must be an object with mainlobe/sidelobe bounds")
    unknown = set(grid_data) - _GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown grid fields: {', '.join(sorted(unknown))}")
    if "mainlobe" not in grid_data or "sidelobe" not in grid_data:
        raise ConfigError("grid needs both mainlobe and sidelobe bounds")

    tol_data = data.get("tolerances", {})
    unknown = set(tol_data) - _TOL_KEYS
    if unknown:
        raise ConfigError(f"unknown tolerance fields: {', '.join(sorted(unknown))}")

    try:
        grid = AngleGrids.from_bounds(
            tuple(grid_data["mainlobe"]),
            [tuple(iv) for iv in grid_data["sidelobe"]],
            int(grid_data.get("n_points", 361)),
        )
        kwargs = {k: v for k, v in data.items() if k not in ("grid", "tolerances")}
        return ScenarioConfig(grid=grid, tolerances=Tolerances(**tol_data), **kwargs)
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err
