"""Trajectory files: ``#``-commented header with version and config echo, then columns.

CSV and JSON-lines carry the same fields. Floats are written with 17
significant digits; nothing time- or host-dependent goes into a file, so
identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, parse_config

__all__ = ["columns_for", "read_config_echo", "read_csv", "trajectory_table", "write_trajectory"]

CONFIG_BEGIN = "--- config ---"
CONFIG_END = "--- end config ---"


def columns_for(kind: str, extras=()) -> list[str]:
    cols = ["t_s", "tau"]
    if kind == "pure":
        cols += ["c1_re", "c1_im", "c2_re", "c2_im"]
    cols += ["rho11", "rho22", "rho12_re", "rho12_im", "Sx", "Sy", "Sz",
             "energy_J", "omega_m_rad_s", "Gamma_sp_inv_s"]
    return cols + list(extras)


def trajectory_table(traj, extras=()) -> tuple[list[str], np.ndarray]:
    """Column names and an ``(n, ncols)`` float array."""
    n = len(traj.t)
    if traj.kind == "pure":
        c = traj.states
        rho11 = np.abs(c[:, 0]) ** 2
        rho22 = np.abs(c[:, 1]) ** 2
        rho12 = c[:, 0] * c[:, 1].conj()
    else:
        r = traj.states
        rho11, rho22, rho12 = r[:, 0, 0].real, r[:, 1, 1].real, r[:, 0, 1]
    cols = [traj.t, traj.tau]
    if traj.kind == "pure":
        cols += [c[:, 0].real, c[:, 0].imag, c[:, 1].real, c[:, 1].imag]
    cols += [rho11, rho22, rho12.real, rho12.imag, traj.bloch[:, 0], traj.bloch[:, 1], traj.bloch[:, 2],
             traj.energy, traj.omega_m, traj.Gamma_sp]
    for name in extras:
        if name == "t_over_Tmin":
            cols.append(traj.t / traj.t_min)
        elif name == "rho12_phase_rad":
            cols.append(np.unwrap(np.angle(rho12)))
        else:
            raise ValueError(f"unknown extra column {name!r}")
    data = np.column_stack(cols) if n else np.empty((0, len(cols)))
    return columns_for(traj.kind, extras), data


def _fmt(x: float) -> str:
    return "%.17g" % x


def _header_lines(fmt: str, sc: ScenarioConfig | None, meta: dict) -> list[str]:
    lines = [f"kramers {__version__}", f"format: {fmt}"]
    if sc is not None:
        lines.append(CONFIG_BEGIN)
        lines += sc.to_ini().rstrip("\n").splitlines()
        lines.append(CONFIG_END)
    for k in sorted(meta):
        v = meta[k]
        if isinstance(v, float):
            v = _fmt(v)
        elif isinstance(v, complex):
            v = f"{_fmt(v.real)} {_fmt(v.imag)}"
        lines.append(f"{k}: {v}")
    return lines


def write_trajectory(path, traj, sc: ScenarioConfig | None = None, meta: dict | None = None,
                     fmt: str = "csv", extras=()) -> Path:
    """Write a trajectory as CSV or JSON lines; returns the path written."""
    path = Path(path)
    meta = dict(meta or {})
    names, data = trajectory_table(traj, extras)
    if fmt == "csv":
        out = ["# " + ln if ln else "#" for ln in _header_lines("csv", sc, meta)]
        out.append(",".join(names))
        out += [",".join(_fmt(x) for x in row) for row in data]
        text = "\n".join(out) + "\n"
    elif fmt == "jsonl":
        head = {"kramers": __version__, "format": "jsonl",
                "config": sc.to_ini() if sc is not None else None,
                "meta": {k: _jsonable(v) for k, v in sorted(meta.items())}, "columns": names}
        out = [json.dumps(head, sort_keys=True)]
        out += [json.dumps(dict(zip(names, (float(x) for x in row)))) for row in data]
        text = "\n".join(out) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    return v


def read_config_echo(path) -> ScenarioConfig:
    """Parse the config echoed in a CSV or JSON-lines trajectory header."""
    text = Path(path).read_text()
    first = text.split("\n", 1)[0]
    if first.startswith("{"):
        cfg = json.loads(first)["config"]
        if cfg is None:
            raise ValueError(f"{path}: header carries no config echo")
        return parse_config(cfg, source=f"{path} (header)")
    body, inside = [], False
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        content = line[2:] if line.startswith("# ") else line[1:]
        if content == CONFIG_BEGIN:
            inside = True
        elif content == CONFIG_END:
            inside = False
        elif inside:
            body.append(content)
    if not body:
        raise ValueError(f"{path}: header carries no config echo")
    return parse_config("\n".join(body) + "\n", source=f"{path} (header)")


def read_csv(path) -> dict:
    """Columns of a CSV trajectory as float arrays keyed by name."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    names = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(names))
    return {n: data[:, i] for i, n in enumerate(names)}
