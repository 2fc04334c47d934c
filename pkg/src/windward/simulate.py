"""Closed-loop trajectory simulation under a computed feedback policy.

Continuous motion uses the Euler-Maruyama step; switches are instantaneous
and charged at the discounted switch cost.  Every run is a pure function of
(scenario, policy, start, mode, seed, horizon).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Scenario, drift
from .solver import CONTINUE, PolicyField

__all__ = [
    "SimState",
    "Trajectory",
    "McSummary",
    "NoiseSource",
    "PolicyCycleError",
    "Continue",
    "Switch",
    "TARGET_HIT",
    "TIMEOUT",
    "BOUNDARY_EXIT",
    "em_step",
    "lookup_action",
    "simulate",
    "mc_stats",
    "trajectory_cost",
]

TARGET_HIT = "target-hit"
TIMEOUT = "timeout"
BOUNDARY_EXIT = "boundary-exit"


@dataclass(frozen=True)
class Continue:
    u: float


@dataclass(frozen=True)
class Switch:
    to_mode: int


@dataclass(frozen=True)
class SimState:
    t: float
    x: np.ndarray        # (x1, x2, x3)
    q: int
    u: float = 0.0


@dataclass
class Trajectory:
    samples: list[SimState] = field(default_factory=list)
    switches: list[tuple[float, int, int]] = field(default_factory=list)
    termination: str = TIMEOUT
    cost: float = 0.0


class NoiseSource:
    """Seeded stream of standard Gaussian increments, one per step."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def next(self) -> float:
        return float(self._rng.standard_normal())


class PolicyCycleError(RuntimeError):
    """Two switches with no motion in between: the policy cycles."""


def em_step(state: SimState, action, scenario: Scenario, dt: float,
            xi: float) -> SimState:
    """Advance one step: a Switch changes mode in place, a Continue moves the
    boat by drift*dt and the wind by a*dt + sigma*sqrt(dt)*xi."""
    if isinstance(action, Switch):
        return SimState(t=state.t, x=state.x, q=action.to_mode, u=state.u)
    u = action.u
    f = drift(scenario, state.x, state.q, u)
    w = scenario.wind
    lo3, hi3 = w.theta_box
    x3 = state.x[2] + w.drift * dt + w.diffusion * math.sqrt(dt) * xi
    x = np.array([state.x[0] + f[0] * dt,
                  state.x[1] + f[1] * dt,
                  min(max(x3, lo3), hi3)])
    return SimState(t=state.t + dt, x=x, q=state.q, u=u)


def lookup_action(policy: PolicyField, state: SimState):
    """Policy at the grid node nearest to the state, mode-exact.

    Returns the termination label instead of an action once the state has
    left the spatial box (target arrival is checked by the caller first).
    """
    g = policy.grid
    x1, x2 = state.x[0], state.x[1]
    if not (g.bounds[0][0] <= x1 <= g.bounds[0][1]
            and g.bounds[1][0] <= x2 <= g.bounds[1][1]):
        return BOUNDARY_EXIT
    i = tuple(g.nearest_index(k, state.x[k]) for k in range(3))
    k = int(policy.kind[(state.q - 1,) + i])
    if k == CONTINUE:
        return Continue(float(policy.u[(state.q - 1,) + i]))
    return Switch(k)


def simulate(scenario: Scenario, policy: PolicyField, x0, q0: int,
             seed: int = 0, t_max: float = 200.0,
             dt: float | None = None) -> Trajectory:
    """Run the feedback loop until target arrival, domain exit or t_max."""
    if dt is None:
        dt = scenario.grid.dt
    lam = scenario.costs.discount
    cmat = scenario.costs.switch.cost
    noise = NoiseSource(seed)
    state = SimState(t=0.0, x=np.asarray(x0, dtype=float), q=int(q0))
    traj = Trajectory()
    just_switched = False
    first = True
    comp = 0.0  # Kahan compensation for the running cost

    def accrue(term):
        nonlocal comp
        y = term - comp
        s = traj.cost + y
        comp = (s - traj.cost) - y
        traj.cost = s

    while True:
        if scenario.target.contains(state.x[0], state.x[1]):
            traj.termination = TARGET_HIT
            return traj
        if state.t >= t_max:
            traj.termination = TIMEOUT
            return traj
        action = lookup_action(policy, state)
        if action == BOUNDARY_EXIT:
            traj.termination = BOUNDARY_EXIT
            return traj
        if first:
            traj.samples.append(state)
            first = False
        if isinstance(action, Switch):
            if just_switched:
                raise PolicyCycleError(
                    f"policy switches twice at x={state.x}, t={state.t}")
            traj.switches.append((state.t, state.q, action.to_mode))
            accrue(cmat[state.q - 1, action.to_mode - 1] * math.exp(-lam * state.t))
            state = em_step(state, action, scenario, dt, 0.0)
            just_switched = True
        else:
            # exact integral of e^(-lambda s) over the step
            accrue(math.exp(-lam * state.t) * -math.expm1(-lam * dt) / lam)
            state = em_step(state, action, scenario, dt, noise.next())
            just_switched = False
        traj.samples.append(state)


def trajectory_cost(scenario: Scenario, traj: Trajectory) -> float:
    """Discounted cost recomputed from the recorded events alone."""
    lam = scenario.costs.discount
    arrival = traj.samples[-1].t if traj.samples else 0.0
    cost = -math.expm1(-lam * arrival) / lam
    cmat = scenario.costs.switch.cost
    for t, q_from, q_to in traj.switches:
        cost += cmat[q_from - 1, q_to - 1] * math.exp(-lam * t)
    return cost


@dataclass(frozen=True)
class McSummary:
    n_runs: int
    seeds: tuple[int, ...]
    fraction_reached: float
    arrival_mean: float
    arrival_std: float
    switches_mean: float
    switches_std: float


def mc_stats(scenario: Scenario, policy: PolicyField, x0, q0: int,
             n_runs: int, seed0: int = 0, t_max: float = 200.0,
             dt: float | None = None) -> McSummary:
    """Monte Carlo summary over runs with seeds seed0, seed0+1, ..."""
    arrivals, switches, reached = [], [], 0
    for i in range(n_runs):
        traj = simulate(scenario, policy, x0, q0, seed=seed0 + i,
                        t_max=t_max, dt=dt)
        switches.append(len(traj.switches))
        if traj.termination == TARGET_HIT:
            reached += 1
            arrivals.append(traj.samples[-1].t)
    arr = np.array(arrivals) if arrivals else np.array([math.nan])
    sw = np.array(switches, dtype=float)
    return McSummary(
        n_runs=n_runs,
        seeds=tuple(range(seed0, seed0 + n_runs)),
        fraction_reached=reached / n_runs,
        arrival_mean=float(arr.mean()),
        arrival_std=float(arr.std()),
        switches_mean=float(sw.mean()),
        switches_std=float(sw.std()),
    )
