"""Diagnostics over solved fields: switching maps, tacking-triangle widths,
lay lines, and a closed-form value oracle for deterministic frozen-angle runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Scenario, mode_sign, polar_speed
from .solver import CONTINUE, PolicyField

__all__ = [
    "SwitchingMap",
    "NO_SWITCH",
    "switching_map",
    "triangle_width",
    "triangle_profile",
    "analytic_value",
    "tack_directions",
    "lay_lines",
]

NO_SWITCH = 0
INFEASIBLE = math.inf


@dataclass(frozen=True)
class SwitchingMap:
    """(n1, n2) labels for one mode and one x3 plane: 0 = no switch,
    q' = switch to mode q'."""

    labels: np.ndarray
    q: int
    x3: float


def switching_map(policy: PolicyField, q: int, x3_slice: float) -> SwitchingMap:
    """Relabel the x3 grid plane nearest to x3_slice."""
    g = policy.grid
    lo, hi = g.bounds[2]
    if not lo <= x3_slice <= hi:
        raise ValueError(f"x3 slice {x3_slice} outside theta box [{lo}, {hi}]")
    i3 = g.nearest_index(2, x3_slice)
    labels = policy.kind[q - 1, :, :, i3].astype(int)
    return SwitchingMap(labels=labels, q=q, x3=lo + i3 * g.steps[2])


def _band_width(no_switch_row: np.ndarray, i_center: int, dx: float) -> float:
    if not no_switch_row[i_center]:
        return 0.0
    lo = i_center
    while lo > 0 and no_switch_row[lo - 1]:
        lo -= 1
    hi = i_center
    while hi < no_switch_row.size - 1 and no_switch_row[hi + 1]:
        hi += 1
    return (hi - lo) * dx


def triangle_width(map_q1: SwitchingMap, map_q2: SwitchingMap, grid,
                   x2_row: float) -> float:
    """Width (x1 units) of the contiguous band around x1 = 0 where neither
    mode wants to switch."""
    lo, hi = grid.bounds[1]
    if not lo <= x2_row <= hi:
        raise ValueError(f"x2 row {x2_row} outside domain [{lo}, {hi}]")
    i2 = grid.nearest_index(1, x2_row)
    ok = (map_q1.labels[:, i2] == NO_SWITCH) & (map_q2.labels[:, i2] == NO_SWITCH)
    return _band_width(ok, grid.nearest_index(0, 0.0), grid.steps[0])


def triangle_profile(map_q1: SwitchingMap, map_q2: SwitchingMap, grid) -> np.ndarray:
    """Triangle width at every x2 row."""
    return np.array([
        triangle_width(map_q1, map_q2, grid, x2) for x2 in grid.axis(1)])


def _check_oracle_preconditions(scenario: Scenario) -> None:
    if scenario.wind.diffusion != 0.0 or scenario.wind.drift != 0.0:
        raise ValueError("oracle requires a deterministic wind (sigma = a = 0)")
    if scenario.polar.frozen_angle is None:
        raise ValueError("oracle requires a frozen control angle")
    if scenario.obstacles is not None:
        raise ValueError("oracle does not handle obstacles")


def tack_directions(scenario: Scenario, theta: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Unit-time displacement vectors of the two tacks at the frozen angle."""
    _check_oracle_preconditions(scenario)
    u = scenario.polar.frozen_angle
    out = []
    for q in (1, 2):
        r = polar_speed(scenario.polar, scenario.wind.mean_speed, q, u)
        s = mode_sign(q)
        out.append(np.array([r * math.sin(-theta + s * u),
                             r * math.cos(-theta + s * u)]))
    return out[0], out[1]


def analytic_value(x0, q0: int, scenario: Scenario) -> float:
    """Two-leg geometric cost to the target for the deterministic
    frozen-angle dynamics.

    Decomposes the displacement to the target center into nonnegative times
    along the two tack directions, sails the starting tack first, charges
    one switch at the leg change, and credits the target radius along the
    final heading.  Returns +inf when the target cone is unreachable.
    """
    x0 = np.asarray(x0, dtype=float)
    if scenario.target.contains(x0[0], x0[1]):
        return 0.0
    d1, d2 = tack_directions(scenario, theta=x0[2] if x0.size > 2 else 0.0)
    rhs = np.array(scenario.target.center) - x0[:2]
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(det) < 1e-14:
        return INFEASIBLE
    t1 = (rhs[0] * d2[1] - rhs[1] * d2[0]) / det
    t2 = (d1[0] * rhs[1] - d1[1] * rhs[0]) / det
    tol = 1e-12 * (1.0 + abs(t1) + abs(t2))
    if t1 < -tol or t2 < -tol:
        return INFEASIBLE
    t1 = 0.0 if t1 < tol else t1
    t2 = 0.0 if t2 < tol else t2

    t_own = t1 if q0 == 1 else t2
    t_other = t2 if q0 == 1 else t1
    switches = 1 if t_other > 0.0 else 0
    t_switch = t_own if switches else 0.0

    d_own, d_other = (d1, d2) if q0 == 1 else (d2, d1)
    final_speed = np.linalg.norm(d_other if switches else d_own)
    total = t1 + t2 - scenario.target.radius / final_speed
    total = max(total, 0.0)

    lam = scenario.costs.discount
    value = -math.expm1(-lam * total) / lam
    if switches:
        c = scenario.costs.switch.cost[q0 - 1, (2 if q0 == 1 else 1) - 1]
        value += c * math.exp(-lam * min(t_switch, total))
    return value


def lay_lines(scenario: Scenario) -> tuple[tuple, tuple]:
    """The two half-lines from the target center along the reversed tack
    directions; points on them reach the mark on a single leg."""
    d1, d2 = tack_directions(scenario)
    c = np.array(scenario.target.center)
    return (c, -d1 / np.linalg.norm(d1)), (c, -d2 / np.linalg.norm(d2))
