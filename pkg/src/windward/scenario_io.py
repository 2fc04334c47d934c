"""Scenario files, obstacle rasters, result export and the run manifest.

Scenario files are YAML with sections grid / modes / wind / polar / costs /
target / obstacles / solver.  Obstacle rasters are plain text: a header
"cols rows x1origin x2origin cellsize" followed by 0/1 tokens, row-major,
north-up.  All exports are deterministic, full-precision text.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .domain import (CostSpec, GridSpec, ModeSet, ObstacleMask, PolarModel,
                     Scenario, SwitchCostTable, TargetSpec, WindModel,
                     validate_scenario)
from .simulate import Trajectory
from .solver import CONTINUE, PolicyField, SolverConfig, ValueField

__all__ = [
    "ScenarioError",
    "load_scenario",
    "load_preset",
    "preset_path",
    "write_scenario",
    "load_mask",
    "export_value",
    "import_value",
    "export_policy",
    "import_policy",
    "export_trajectory",
    "export_stats",
    "write_manifest",
    "solver_config_from_scenario",
]

PRESETS = ("test1", "test2", "test3")

FMT = "%.17g"


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"missing field {where}.{key}")
    return section[key]


def _build_scenario(doc: dict, base: Path) -> tuple[Scenario, SolverConfig]:
    for sec in ("grid", "modes", "wind", "polar", "costs", "target"):
        if sec not in doc:
            raise ScenarioError(f"missing section '{sec}'")
    g, w, p, c, t = doc["grid"], doc["wind"], doc["polar"], doc["costs"], doc["target"]

    theta_box = tuple(float(v) for v in _need(w, "theta_box", "wind"))
    wind = WindModel(mean_speed=float(_need(w, "mean_speed", "wind")),
                     drift=float(_need(w, "drift", "wind")),
                     diffusion=float(_need(w, "diffusion", "wind")),
                     theta_box=theta_box)

    steps = tuple(float(v) for v in _need(g, "dx", "grid"))
    grid = GridSpec(bounds=(tuple(float(v) for v in _need(g, "x1", "grid")),
                            tuple(float(v) for v in _need(g, "x2", "grid")),
                            theta_box),
                    steps=steps,
                    dt=float(_need(g, "dt", "grid")))

    labels = tuple(doc["modes"].get("labels", ()))
    modes = ModeSet(count=int(doc["modes"].get("count", len(labels))), labels=labels)

    kind = _need(p, "kind", "polar")
    polar = PolarModel(
        kind=kind,
        speed=float(p.get("speed", 0.0)),
        coefficient=float(p.get("coefficient", 0.0)),
        peak=float(p.get("peak", math.pi / 4)),
        angles=np.array(p["table"])[:, 0] if "table" in p else None,
        speeds=np.array(p["table"])[:, 1] if "table" in p else None,
        control_interval=tuple(float(v) for v in p.get("control_interval",
                                                       (0.0, math.pi / 2))),
        frozen_angle=(float(p["frozen_angle"])
                      if p.get("frozen_angle") is not None else None),
    )

    costs = CostSpec(discount=float(_need(c, "discount", "costs")),
                     boundary=float(_need(c, "boundary", "costs")),
                     switch=SwitchCostTable(np.array(_need(c, "switch", "costs"),
                                                     dtype=float)))
    target = TargetSpec(center=tuple(float(v) for v in _need(t, "center", "target")),
                        radius=float(_need(t, "radius", "target")))

    mask = None
    obst = doc.get("obstacles") or {}
    if obst.get("mask"):
        mask = load_mask(base / obst["mask"], grid)

    sol = doc.get("solver") or {}
    scenario = Scenario(modes=modes, wind=wind, polar=polar, grid=grid,
                        costs=costs, target=target, obstacles=mask,
                        n_controls=int(sol.get("controls", 32)))
    config = SolverConfig(
        tolerance=float(sol.get("tolerance", 1e-6)),
        max_iterations=int(sol.get("max_iterations", 100_000)),
        sweep=sol.get("sweep", "jacobi"),
    )
    return scenario, config


def load_scenario(path, **overrides) -> Scenario:
    """Load and validate a scenario file (or preset name).

    Keyword overrides patch single parameters before validation:
    sigma, drift, dx, dt, controls.
    """
    scenario, _ = load_scenario_with_config(path, **overrides)
    return scenario


def load_scenario_with_config(path, *, sigma=None, drift=None, dx=None,
                              dt=None, controls=None) -> tuple[Scenario, SolverConfig]:
    path = preset_path(path) if str(path) in PRESETS else Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ScenarioError(f"cannot parse {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path} is not a scenario document")
    if sigma is not None:
        doc["wind"]["diffusion"] = sigma
    if drift is not None:
        doc["wind"]["drift"] = drift
    if dx is not None:
        doc["grid"]["dx"] = [dx, dx, dx]
    if dt is not None:
        doc["grid"]["dt"] = dt
    if controls is not None:
        doc.setdefault("solver", {})["controls"] = controls
    scenario, config = _build_scenario(doc, path.parent)
    bad = validate_scenario(scenario)
    if bad:
        raise ScenarioError("; ".join(bad))
    return scenario, config


def solver_config_from_scenario(path) -> SolverConfig:
    return load_scenario_with_config(path)[1]


def preset_path(name: str) -> Path:
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r} (have {', '.join(PRESETS)})")
    return Path(str(importlib.resources.files("windward") / "presets" / f"{name}.yaml"))


def load_preset(name: str, **overrides) -> Scenario:
    """Shipped scenario presets: test1, test2, test3."""
    return load_scenario(preset_path(name), **overrides)


def write_scenario(scenario: Scenario, path) -> None:
    """Write a scenario back to YAML (obstacle masks are not re-exported)."""
    p = scenario.polar
    doc = {
        "grid": {"x1": list(scenario.grid.bounds[0]),
                 "x2": list(scenario.grid.bounds[1]),
                 "dx": list(scenario.grid.steps),
                 "dt": scenario.grid.dt},
        "modes": {"count": scenario.modes.count,
                  "labels": list(scenario.modes.labels)},
        "wind": {"mean_speed": scenario.wind.mean_speed,
                 "drift": scenario.wind.drift,
                 "diffusion": scenario.wind.diffusion,
                 "theta_box": list(scenario.wind.theta_box)},
        "polar": {"kind": p.kind,
                  "control_interval": list(p.control_interval)},
        "costs": {"discount": scenario.costs.discount,
                  "boundary": scenario.costs.boundary,
                  "switch": scenario.costs.switch.cost.tolist()},
        "target": {"center": list(scenario.target.center),
                   "radius": scenario.target.radius},
        "solver": {"controls": scenario.n_controls},
    }
    if p.kind == "constant":
        doc["polar"]["speed"] = p.speed
    if p.kind == "parabolic":
        doc["polar"]["coefficient"] = p.coefficient
        doc["polar"]["peak"] = p.peak
    if p.kind == "tabulated":
        doc["polar"]["table"] = np.column_stack([p.angles, p.speeds]).tolist()
    if p.frozen_angle is not None:
        doc["polar"]["frozen_angle"] = p.frozen_angle
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


# ---------------------------------------------------------------------------
# obstacle raster

def load_mask(path, grid: GridSpec) -> ObstacleMask:
    """Resample a 0/1 raster file onto the scenario grid (nearest cell;
    nodes outside the raster extent are free water)."""
    tokens = Path(path).read_text().split()
    if len(tokens) < 5:
        raise ScenarioError(f"{path}: malformed mask header")
    cols, rows = int(tokens[0]), int(tokens[1])
    x1o, x2o, cell = float(tokens[2]), float(tokens[3]), float(tokens[4])
    if cell <= 0:
        raise ScenarioError(f"{path}: cell size must be positive")
    data = tokens[5:]
    if len(data) != cols * rows:
        raise ScenarioError(
            f"{path}: expected {cols * rows} raster tokens, found {len(data)}")
    raster = np.array(data, dtype=int).reshape(rows, cols)  # row 0 = north

    n1, n2 = grid.shape[:2]
    out = np.zeros((n1, n2), dtype=bool)
    x1g, x2g = grid.axis(0), grid.axis(1)
    col = np.floor((x1g - x1o) / cell).astype(int)
    row_s = np.floor((x2g - x2o) / cell).astype(int)   # from the south edge
    row = rows - 1 - row_s
    ok1 = (col >= 0) & (col < cols)
    ok2 = (row >= 0) & (row < rows)
    for i, (c_i, good1) in enumerate(zip(col, ok1)):
        if not good1:
            continue
        sel = ok2
        out[i, sel] = raster[row[sel], c_i] != 0
    return ObstacleMask(out)


# ---------------------------------------------------------------------------
# exports

def _grid_meta(grid: GridSpec) -> str:
    b = grid.bounds
    return (f"n1={grid.shape[0]} n2={grid.shape[1]} n3={grid.shape[2]} "
            f"x1min={b[0][0]!r} x2min={b[1][0]!r} x3min={b[2][0]!r} "
            f"dx1={grid.steps[0]!r} dx2={grid.steps[1]!r} dx3={grid.steps[2]!r} "
            f"dt={grid.dt!r}")


def _node_columns(grid: GridSpec, n_modes: int) -> np.ndarray:
    x1, x2, x3 = (grid.axis(k) for k in range(3))
    q = np.arange(1, n_modes + 1)
    qq, g1, g2, g3 = np.meshgrid(q, x1, x2, x3, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel(), g3.ravel(), qq.ravel()])


def export_value(field: ValueField, path, extra_meta: str = "") -> None:
    """Rows "x1 x2 x3 q value" at full round-trip precision."""
    nq = field.values.shape[0]
    cols = np.column_stack([_node_columns(field.grid, nq), field.values.ravel()])
    header = (f"x1 x2 x3 q value | {_grid_meta(field.grid)} nq={nq} "
              f"boundary={field.boundary!r} iterations={field.iterations} "
              f"residual={field.residual!r} converged={int(field.converged)}"
              + extra_meta)
    np.savetxt(path, cols, fmt=(FMT, FMT, FMT, "%d", FMT), header=header)


def _parse_meta(header: str) -> dict:
    meta = {}
    for tok in header.split("|", 1)[1].split():
        k, _, v = tok.partition("=")
        meta[k] = v
    return meta


def _grid_from_meta(meta: dict) -> tuple[GridSpec, int]:
    n = [int(meta[f"n{k}"]) for k in (1, 2, 3)]
    lo = [float(meta[f"x{k}min"]) for k in (1, 2, 3)]
    dx = [float(meta[f"dx{k}"]) for k in (1, 2, 3)]
    bounds = tuple((lo[k], lo[k] + (n[k] - 1) * dx[k]) for k in range(3))
    return GridSpec(bounds=bounds, steps=tuple(dx), dt=float(meta["dt"])), int(meta["nq"])


def import_value(path) -> ValueField:
    with open(path) as fh:
        header = fh.readline().lstrip("# ").strip()
    meta = _parse_meta(header)
    grid, nq = _grid_from_meta(meta)
    data = np.loadtxt(path, usecols=4)
    values = data.reshape((nq,) + grid.shape)
    return ValueField(values=values, grid=grid, boundary=float(meta["boundary"]),
                      frozen=np.zeros(grid.shape[:2], dtype=bool),
                      iterations=int(meta["iterations"]),
                      residual=float(meta["residual"]),
                      converged=bool(int(meta["converged"])))


def export_policy(policy: PolicyField, path) -> None:
    """Rows "x1 x2 x3 q kind u" where kind 0 continues with angle u and
    kind q' switches to mode q'."""
    nq = policy.kind.shape[0]
    cols = np.column_stack([_node_columns(policy.grid, nq),
                            policy.kind.ravel(), policy.u.ravel()])
    header = f"x1 x2 x3 q kind u | {_grid_meta(policy.grid)} nq={nq}"
    np.savetxt(path, cols, fmt=(FMT, FMT, FMT, "%d", "%d", FMT), header=header)


def import_policy(path) -> PolicyField:
    with open(path) as fh:
        header = fh.readline().lstrip("# ").strip()
    meta = _parse_meta(header)
    grid, nq = _grid_from_meta(meta)
    data = np.loadtxt(path, usecols=(4, 5))
    shape = (nq,) + grid.shape
    return PolicyField(kind=data[:, 0].astype(np.int8).reshape(shape),
                       u=data[:, 1].reshape(shape), grid=grid)


def export_trajectory(traj: Trajectory, path) -> None:
    """Rows "t x1 x2 x3 q u event"; events are switch:a>b and the terminal label."""
    events = {}
    for t, qa, qb in traj.switches:
        events[t] = f"switch:{qa}>{qb}"
    lines = ["# t x1 x2 x3 q u event"]
    for k, s in enumerate(traj.samples):
        ev = events.pop(s.t, "-")
        if k == len(traj.samples) - 1:
            ev = traj.termination if ev == "-" else f"{ev};{traj.termination}"
        lines.append(" ".join([FMT % s.t, FMT % s.x[0], FMT % s.x[1],
                               FMT % s.x[2], str(s.q), FMT % s.u, ev]))
    if not traj.samples:
        lines[0] += f" | {traj.termination} cost={traj.cost!r}"
    Path(path).write_text("\n".join(lines) + "\n")


def export_stats(stats: dict, path) -> None:
    """Key-value rows, one per line, keys in insertion order."""
    lines = [f"{k} {FMT % v if isinstance(v, float) else v}"
             for k, v in stats.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(path, **entries) -> None:
    """Record everything needed to reproduce a run byte-for-byte."""
    doc = {"windward_version": __version__}
    doc.update(entries)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
