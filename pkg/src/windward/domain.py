"""Hybrid sailing dynamics: modes, wind, polar speed, costs, grid geometry.

State is (x1, x2, x3) where (x1, x2) is the boat position and x3 the wind
direction (radians, not wrapped).  The discrete mode q in {1, ..., N} selects
the tack: odd modes sail with heading -x3 - u, even modes with -x3 + u.
All types are immutable; all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ModeSet",
    "SwitchCostTable",
    "WindModel",
    "PolarModel",
    "GridSpec",
    "CostSpec",
    "TargetSpec",
    "ObstacleMask",
    "Scenario",
    "mode_sign",
    "polar_speed",
    "masked_speed",
    "drift",
    "diffusion",
    "validate_scenario",
]


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeSet:
    """Discrete mode set q = 1..count (port tack = 1, starboard = 2)."""

    count: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels",
                               tuple(f"mode{q}" for q in range(1, self.count + 1)))


@dataclass(frozen=True)
class SwitchCostTable:
    """Nonnegative switch costs C[q, q'] (time units), zero diagonal."""

    cost: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cost", _readonly(np.array(self.cost, dtype=float)))

    @classmethod
    def symmetric(cls, n_modes: int, c: float) -> "SwitchCostTable":
        m = np.full((n_modes, n_modes), float(c))
        np.fill_diagonal(m, 0.0)
        return cls(m)


@dataclass(frozen=True)
class WindModel:
    """Constant-speed wind whose direction follows dx3 = drift dt + diffusion dW."""

    mean_speed: float
    drift: float
    diffusion: float
    theta_box: tuple[float, float]


@dataclass(frozen=True)
class PolarModel:
    """Boat speed r as a function of the true wind angle u.

    kind = "constant":   r = speed, legal only with a frozen angle
    kind = "parabolic":  r = coefficient * (peak**2 - (u - peak)**2), floored at 0
    kind = "tabulated":  piecewise-linear interpolation of (angles, speeds)
    """

    kind: str
    speed: float = 0.0
    coefficient: float = 0.0
    peak: float = math.pi / 4
    angles: np.ndarray | None = None
    speeds: np.ndarray | None = None
    control_interval: tuple[float, float] = (0.0, math.pi / 2)
    frozen_angle: float | None = None

    def __post_init__(self):
        if self.angles is not None:
            object.__setattr__(self, "angles", _readonly(np.array(self.angles, dtype=float)))
            object.__setattr__(self, "speeds", _readonly(np.array(self.speeds, dtype=float)))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [x1min,x1max] x [x2min,x2max] x theta_box plus a time step."""

    bounds: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    steps: tuple[float, float, float]
    dt: float

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(
            int(round((hi - lo) / h)) + 1
            for (lo, hi), h in zip(self.bounds, self.steps)
        )

    def axis(self, k: int) -> np.ndarray:
        lo, _ = self.bounds[k]
        return lo + self.steps[k] * np.arange(self.shape[k])

    def nearest_index(self, k: int, y: float) -> int:
        i = int(round((y - self.bounds[k][0]) / self.steps[k]))
        return min(max(i, 0), self.shape[k] - 1)


@dataclass(frozen=True)
class CostSpec:
    """Discount rate, boundary stopping cost and the switch-cost table."""

    discount: float
    boundary: float
    switch: SwitchCostTable


@dataclass(frozen=True)
class TargetSpec:
    """Target disc in the (x1, x2) plane."""

    center: tuple[float, float]
    radius: float

    def contains(self, x1: float, x2: float) -> bool:
        return (x1 - self.center[0]) ** 2 + (x2 - self.center[1]) ** 2 <= self.radius ** 2


@dataclass(frozen=True)
class ObstacleMask:
    """Boolean (n1, n2) array on the grid nodes; True marks forbidden water."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.array(self.values, dtype=bool)))

    def contains(self, grid: GridSpec, x1: float, x2: float) -> bool:
        return bool(self.values[grid.nearest_index(0, x1), grid.nearest_index(1, x2)])


@dataclass(frozen=True)
class Scenario:
    """Full problem description consumed by the solver and the simulator."""

    modes: ModeSet
    wind: WindModel
    polar: PolarModel
    grid: GridSpec
    costs: CostSpec
    target: TargetSpec
    obstacles: ObstacleMask | None = None
    n_controls: int = 32

    def with_(self, **kw) -> "Scenario":
        """Return a copy with top-level fields replaced."""
        return replace(self, **kw)


def mode_sign(q: int) -> float:
    """(-1)**q: -1 on odd (port) modes, +1 on even (starboard) modes."""
    return -1.0 if q % 2 else 1.0


def polar_speed(polar: PolarModel, s: float, q: int, u: float) -> float:
    """Boat speed for wind speed s, mode q and wind angle u."""
    lo, hi = polar.control_interval
    if not lo <= u <= hi:
        raise ValueError(f"control angle {u} outside interval [{lo}, {hi}]")
    if polar.kind == "constant":
        return polar.speed
    if polar.kind == "parabolic":
        return max(0.0, polar.coefficient * (polar.peak ** 2 - (u - polar.peak) ** 2))
    if polar.kind == "tabulated":
        return float(np.interp(u, polar.angles, polar.speeds))
    raise ValueError(f"unknown polar kind {polar.kind!r}")


def masked_speed(polar: PolarModel, mask: ObstacleMask | None, grid: GridSpec,
                 x: np.ndarray, s: float, q: int, u: float) -> float:
    """polar_speed, forced to 0 inside the obstacle region."""
    if mask is not None and mask.contains(grid, x[0], x[1]):
        return 0.0
    return polar_speed(polar, s, q, u)


def drift(scenario: Scenario, x: np.ndarray, q: int, u: float) -> np.ndarray:
    """Deterministic state velocity (f1, f2, f3) at state x, mode q, control u."""
    if not 1 <= q <= scenario.modes.count:
        raise ValueError(f"mode {q} outside 1..{scenario.modes.count}")
    r = masked_speed(scenario.polar, scenario.obstacles, scenario.grid,
                     x, scenario.wind.mean_speed, q, u)
    s = mode_sign(q)
    x3 = x[2]
    return np.array([
        r * math.sin(-x3 + s * u),
        r * math.cos(-x3 + s * u),
        scenario.wind.drift,
    ])


def diffusion(scenario: Scenario, x=None, q=None) -> np.ndarray:
    """Noise loading (0, 0, sigma): only the wind direction is stochastic."""
    return np.array([0.0, 0.0, scenario.wind.diffusion])


def _check_switch_costs(table: SwitchCostTable, out: list[str]) -> None:
    c = table.cost
    n = c.shape[0]
    if c.shape != (n, n):
        out.append("switch cost table is not square")
        return
    if np.any(np.diag(c) != 0.0):
        out.append("switch cost diagonal not zero")
    off = c[~np.eye(n, dtype=bool)]
    if off.size and off.min() <= 0.0:
        out.append("switch cost infimum not positive")
    for q1 in range(n):
        for q2 in range(n):
            for q3 in range(n):
                if len({q1, q2, q3}) == 3 and c[q1, q3] >= c[q1, q2] + c[q2, q3]:
                    out.append(
                        f"triangle inequality not strict for modes "
                        f"({q1 + 1},{q2 + 1},{q3 + 1})")
                    return


def validate_scenario(scenario: Scenario) -> list[str]:
    """Return the list of invariant violations (empty list = valid)."""
    bad: list[str] = []
    modes, wind, polar, grid = (scenario.modes, scenario.wind,
                                scenario.polar, scenario.grid)

    if modes.count < 2:
        bad.append("mode set needs at least 2 modes")
    if len(set(modes.labels)) != len(modes.labels):
        bad.append("mode labels not unique")

    c = scenario.costs.switch.cost
    if c.shape[0] != modes.count:
        bad.append("switch cost table size does not match mode count")
    else:
        _check_switch_costs(scenario.costs.switch, bad)

    if wind.diffusion < 0:
        bad.append("wind diffusion negative")
    if wind.theta_box[1] <= wind.theta_box[0]:
        bad.append("theta box empty")

    lo, hi = polar.control_interval
    if not (0.0 <= lo < hi <= math.pi):
        bad.append("control interval not contained in [0, pi]")
    if polar.frozen_angle is not None and not lo <= polar.frozen_angle <= hi:
        bad.append("frozen angle outside control interval")
    if polar.kind == "constant" and polar.frozen_angle is None:
        bad.append("constant polar requires a frozen angle")
    if polar.kind == "tabulated":
        if polar.angles is None or polar.speeds is None:
            bad.append("tabulated polar without sample table")
        else:
            if np.any(polar.speeds < 0):
                bad.append("tabulated polar speed negative")
            if polar.angles[0] <= 0.0 and abs(np.interp(0.0, polar.angles, polar.speeds)) > 0:
                bad.append("polar speed at u=0 not zero")
    if polar.kind == "parabolic" and polar.coefficient <= 0:
        bad.append("parabolic polar coefficient not positive")

    for k, ((blo, bhi), h) in enumerate(zip(grid.bounds, grid.steps)):
        if h <= 0:
            bad.append(f"grid step on axis {k + 1} not positive")
        elif bhi <= blo or grid.shape[k] < 2:
            bad.append(f"grid axis {k + 1} has fewer than 2 nodes")
    if grid.dt <= 0:
        bad.append("time step not positive")
    if (grid.bounds[2][0], grid.bounds[2][1]) != wind.theta_box:
        bad.append("grid x3 axis does not match theta box")

    if scenario.costs.discount <= 0:
        bad.append("discount rate not positive")
    if scenario.costs.boundary <= 0:
        bad.append("boundary stopping cost not positive")

    tgt = scenario.target
    if tgt.radius <= 0:
        bad.append("target radius not positive")
    elif not (grid.bounds[0][0] < tgt.center[0] < grid.bounds[0][1]
              and grid.bounds[1][0] < tgt.center[1] < grid.bounds[1][1]):
        bad.append("target disc does not meet the domain interior")

    if scenario.obstacles is not None:
        m = scenario.obstacles.values
        if m.shape != grid.shape[:2]:
            bad.append("obstacle mask shape does not match the (x1, x2) grid")
        else:
            x1g, x2g = grid.axis(0), grid.axis(1)
            ii, jj = np.nonzero(m)
            if ii.size and np.any(
                    (x1g[ii] - tgt.center[0]) ** 2 + (x2g[jj] - tgt.center[1]) ** 2
                    <= tgt.radius ** 2):
                bad.append("target disc intersects the obstacle region")

    if scenario.n_controls < 1:
        bad.append("control sample count not positive")
    return bad
