"""Monotone value iteration for the discrete switching/continuation system.

At every grid node (x_j, q) the fixed point satisfies

    V(x_j, q) = min( N V(x_j, q),  Sigma(x_j, q, V) )

where N is the exact switching operator (pointwise minimum over modes of
value plus switch cost) and Sigma is a semi-Lagrangian one-step operator:
discounted average of the interpolated field at the six reachable points
x_j + dt*f +- sqrt(3*dt)*sigma*e_i.  Iterating from a constant supersolution
gives a monotone nonincreasing, bounded sequence, hence convergence.

The bulk sweeps are numba kernels; `interpolate`, `switch_operator` and
`sl_operator` are plain-Python single-node versions of the same operators,
usable as building blocks and cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .domain import GridSpec, Scenario, mode_sign, polar_speed

__all__ = [
    "SolverConfig",
    "ValueField",
    "PolicyField",
    "NonConvergedError",
    "control_samples",
    "initial_value",
    "target_nodes",
    "interpolate",
    "switch_operator",
    "sl_operator",
    "bellman_update",
    "solve",
    "extract_policy",
]

CONTINUE = 0  # PolicyField.kind value for "keep sailing"


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls; n_controls=None defers to the scenario."""

    n_controls: int | None = None
    tolerance: float = 1e-6
    max_iterations: int = 100_000
    sweep: str = "jacobi"  # or "in-place"
    tie_epsilon: float = 1e-12
    check_monotone: bool = False


@dataclass(frozen=True)
class ValueField:
    """Per-mode grid of approximate values, with convergence metadata."""

    values: np.ndarray           # (n_modes, n1, n2, n3)
    grid: GridSpec
    boundary: float              # stopping cost returned outside the spatial box
    frozen: np.ndarray           # (n1, n2) bool, True on Dirichlet-pinned
                                 # nodes: target disc (value 0) and, for
                                 # solve(), obstacle cells (boundary cost)
    iterations: int = 0
    residual: float = float("inf")
    converged: bool = False


@dataclass(frozen=True)
class PolicyField:
    """Feedback policy: kind == 0 means Continue(u), kind == q' means Switch(q')."""

    kind: np.ndarray             # (n_modes, n1, n2, n3) int8
    u: np.ndarray                # (n_modes, n1, n2, n3) float64
    grid: GridSpec


class NonConvergedError(RuntimeError):
    """Raised by callers that require a converged field."""


def control_samples(scenario: Scenario, config: SolverConfig) -> np.ndarray:
    """Discretized control set: the frozen angle, or N_u uniform samples."""
    if scenario.polar.frozen_angle is not None:
        return np.array([scenario.polar.frozen_angle])
    n = config.n_controls if config.n_controls is not None else scenario.n_controls
    lo, hi = scenario.polar.control_interval
    return np.linspace(lo, hi, n)


def initial_value(scenario: Scenario) -> float:
    """Smallest constant K with K >= dt + e^(-lambda dt) K, the supersolution seed."""
    lam, dt = scenario.costs.discount, scenario.grid.dt
    return dt / -math.expm1(-lam * dt)


def target_nodes(scenario: Scenario) -> np.ndarray:
    """(n1, n2) bool mask of nodes inside the target disc."""
    g = scenario.grid
    x1 = g.axis(0)[:, None]
    x2 = g.axis(1)[None, :]
    cx, cy = scenario.target.center
    return (x1 - cx) ** 2 + (x2 - cy) ** 2 <= scenario.target.radius ** 2


# ---------------------------------------------------------------------------
# single-node operators (plain Python)

def interpolate(V: ValueField, q: int, x) -> float:
    """Trilinear interpolation of mode q; boundary cost outside the spatial
    box, wind direction clamped to its axis."""
    g = V.grid
    y1, y2, y3 = float(x[0]), float(x[1]), float(x[2])
    (l1, h1), (l2, h2), (l3, h3) = (
        (g.bounds[k][0], g.bounds[k][0] + (g.shape[k] - 1) * g.steps[k])
        for k in range(3))
    if y1 < l1 or y1 > h1 or y2 < l2 or y2 > h2:
        return V.boundary
    y3 = min(max(y3, l3), h3)

    arr = V.values[q - 1]
    idx, wt = [], []
    for y, lo, h, n in ((y1, l1, g.steps[0], g.shape[0]),
                        (y2, l2, g.steps[1], g.shape[1]),
                        (y3, l3, g.steps[2], g.shape[2])):
        t = (y - lo) / h
        i = min(int(t), n - 2)
        idx.append(i)
        wt.append(min(max(t - i, 0.0), 1.0))
    i1, i2, i3 = idx
    w1, w2, w3 = wt
    out = 0.0
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                w = ((w1 if a else 1 - w1) * (w2 if b else 1 - w2)
                     * (w3 if c else 1 - w3))
                out += w * arr[i1 + a, i2 + b, i3 + c]
    return out


def switch_operator(V: ValueField, node, q: int, costs) -> float:
    """min over q' (q' = q included at zero cost) of V(x_j, q') + C(q, q')."""
    i1, i2, i3 = node
    c = costs.cost
    return float(min(V.values[qp, i1, i2, i3] + c[q - 1, qp]
                     for qp in range(V.values.shape[0])))


def sl_operator(V: ValueField, node, q: int, scenario: Scenario,
                config: SolverConfig = SolverConfig()) -> tuple[float, float]:
    """Semi-Lagrangian continuation value at a node and its minimizing control.

    The interpolated field is taken as 0 wherever the reachable point lands
    inside the target disc itself, matching the Dirichlet condition on the
    whole target set rather than only at its grid nodes.
    """
    g = scenario.grid
    i1, i2, i3 = node
    x1 = g.bounds[0][0] + i1 * g.steps[0]
    x2 = g.bounds[1][0] + i2 * g.steps[1]
    x3 = g.bounds[2][0] + i3 * g.steps[2]
    dt = g.dt
    disc = math.exp(-scenario.costs.discount * dt)
    sig = scenario.wind.diffusion
    shift = math.sqrt(3.0 * dt) * sig
    free = (scenario.obstacles is None
            or not scenario.obstacles.contains(g, x1, x2))
    sq = mode_sign(q)
    y3 = x3 + dt * scenario.wind.drift

    cx, cy = scenario.target.center
    rad2 = scenario.target.radius ** 2
    best, best_u = math.inf, None
    for u in control_samples(scenario, config):
        r = polar_speed(scenario.polar, scenario.wind.mean_speed, q, u) if free else 0.0
        y1 = x1 + dt * r * math.sin(-x3 + sq * u)
        y2 = x2 + dt * r * math.cos(-x3 + sq * u)
        if (y1 - cx) ** 2 + (y2 - cy) ** 2 <= rad2:
            acc = 0.0
        else:
            acc = 4.0 * interpolate(V, q, (y1, y2, y3))
            acc += interpolate(V, q, (y1, y2, y3 + shift))
            acc += interpolate(V, q, (y1, y2, y3 - shift))
        val = dt + disc * acc / 6.0
        if val < best:
            best, best_u = val, u
    return best, best_u


# ---------------------------------------------------------------------------
# bulk kernels

@njit(cache=True)
def _interp(arr, y1, y2, y3, l1, h1, d1, l2, h2, d2, l3, h3, d3, bbar):
    if y1 < l1 or y1 > h1 or y2 < l2 or y2 > h2:
        return bbar
    if y3 < l3:
        y3 = l3
    elif y3 > h3:
        y3 = h3
    t1 = (y1 - l1) / d1
    t2 = (y2 - l2) / d2
    t3 = (y3 - l3) / d3
    i1 = min(int(t1), arr.shape[0] - 2)
    i2 = min(int(t2), arr.shape[1] - 2)
    i3 = min(int(t3), arr.shape[2] - 2)
    w1 = min(max(t1 - i1, 0.0), 1.0)
    w2 = min(max(t2 - i2, 0.0), 1.0)
    w3 = min(max(t3 - i3, 0.0), 1.0)
    c00 = arr[i1, i2, i3] * (1 - w3) + arr[i1, i2, i3 + 1] * w3
    c01 = arr[i1, i2 + 1, i3] * (1 - w3) + arr[i1, i2 + 1, i3 + 1] * w3
    c10 = arr[i1 + 1, i2, i3] * (1 - w3) + arr[i1 + 1, i2, i3 + 1] * w3
    c11 = arr[i1 + 1, i2 + 1, i3] * (1 - w3) + arr[i1 + 1, i2 + 1, i3 + 1] * w3
    return ((c00 * (1 - w2) + c01 * w2) * (1 - w1)
            + (c10 * (1 - w2) + c11 * w2) * w1)


@njit(cache=True)
def _node_value(V, q, i1, i2, i3, x1, x2, y3, A1, A2, free, dt, disc, shift,
                C, bbar, cx, cy, rad2, l1, h1, d1, l2, h2, d2, l3, h3, d3):
    arr = V[q]
    best = np.inf
    for k in range(A1.shape[1]):
        y1 = x1 + dt * free * A1[q, k, i3]
        y2 = x2 + dt * free * A2[q, k, i3]
        if (y1 - cx) ** 2 + (y2 - cy) ** 2 <= rad2:
            val = dt
        elif shift > 0.0:
            acc = 4.0 * _interp(arr, y1, y2, y3, l1, h1, d1, l2, h2, d2,
                                l3, h3, d3, bbar)
            acc += _interp(arr, y1, y2, y3 + shift, l1, h1, d1, l2, h2, d2,
                           l3, h3, d3, bbar)
            acc += _interp(arr, y1, y2, y3 - shift, l1, h1, d1, l2, h2, d2,
                           l3, h3, d3, bbar)
            val = dt + disc * acc / 6.0
        else:
            val = dt + disc * _interp(arr, y1, y2, y3, l1, h1, d1, l2, h2, d2,
                                      l3, h3, d3, bbar)
        if val < best:
            best = val
    sw = np.inf
    for qp in range(V.shape[0]):
        v = V[qp, i1, i2, i3] + C[q, qp]
        if v < sw:
            sw = v
    if sw < best:
        return sw
    return best


@njit(cache=True, parallel=True)
def _sweep_jacobi(V, Vnew, frozen, free2d, x1g, x2g, x3g, A1, A2, dt, disc,
                  abar, shift, C, bbar, cx, cy, rad2,
                  l1, h1, d1, l2, h2, d2, l3, h3, d3):
    nq, n1, n2, n3 = V.shape
    up = np.zeros(n1)
    down = np.zeros(n1)
    for i1 in prange(n1):
        x1 = x1g[i1]
        mxu = 0.0
        mxd = 0.0
        for q in range(nq):
            for i2 in range(n2):
                if frozen[i1, i2]:
                    # Dirichlet nodes keep their pinned value (0 on the
                    # target, the stopping cost on obstacle cells).
                    for i3 in range(n3):
                        Vnew[q, i1, i2, i3] = V[q, i1, i2, i3]
                    continue
                x2 = x2g[i2]
                free = free2d[i1, i2]
                for i3 in range(n3):
                    y3 = x3g[i3] + dt * abar
                    v = _node_value(V, q, i1, i2, i3, x1, x2, y3, A1, A2,
                                    free, dt, disc, shift, C, bbar,
                                    cx, cy, rad2,
                                    l1, h1, d1, l2, h2, d2, l3, h3, d3)
                    Vnew[q, i1, i2, i3] = v
                    diff = v - V[q, i1, i2, i3]
                    if diff > mxu:
                        mxu = diff
                    elif -diff > mxd:
                        mxd = -diff
        up[i1] = mxu
        down[i1] = mxd
    return up.max(), down.max()


@njit(cache=True)
def _sweep_inplace(V, frozen, free2d, x1g, x2g, x3g, A1, A2, dt, disc,
                   abar, shift, C, bbar, cx, cy, rad2,
                   l1, h1, d1, l2, h2, d2, l3, h3, d3):
    nq, n1, n2, n3 = V.shape
    mxu = 0.0
    mxd = 0.0
    for q in range(nq):
        for i1 in range(n1):
            x1 = x1g[i1]
            for i2 in range(n2):
                if frozen[i1, i2]:
                    continue
                x2 = x2g[i2]
                free = free2d[i1, i2]
                for i3 in range(n3):
                    y3 = x3g[i3] + dt * abar
                    v = _node_value(V, q, i1, i2, i3, x1, x2, y3, A1, A2,
                                    free, dt, disc, shift, C, bbar,
                                    cx, cy, rad2,
                                    l1, h1, d1, l2, h2, d2, l3, h3, d3)
                    diff = v - V[q, i1, i2, i3]
                    if diff > mxu:
                        mxu = diff
                    elif -diff > mxd:
                        mxd = -diff
                    V[q, i1, i2, i3] = v
    return mxu, mxd


@njit(cache=True, parallel=True)
def _extract(V, kind, uout, frozen, free2d, x1g, x2g, x3g, A1, A2, uvals,
             dt, disc, abar, shift, C, bbar, cx, cy, rad2, tie_eps,
             l1, h1, d1, l2, h2, d2, l3, h3, d3):
    nq, n1, n2, n3 = V.shape
    for i1 in prange(n1):
        x1 = x1g[i1]
        for q in range(nq):
            for i2 in range(n2):
                x2 = x2g[i2]
                free = free2d[i1, i2]
                if frozen[i1, i2]:
                    for i3 in range(n3):
                        kind[q, i1, i2, i3] = CONTINUE
                        uout[q, i1, i2, i3] = uvals[0]
                    continue
                arr = V[q]
                for i3 in range(n3):
                    y3 = x3g[i3] + dt * abar
                    best = np.inf
                    best_u = uvals[0]
                    for k in range(uvals.shape[0]):
                        y1 = x1 + dt * free * A1[q, k, i3]
                        y2 = x2 + dt * free * A2[q, k, i3]
                        if (y1 - cx) ** 2 + (y2 - cy) ** 2 <= rad2:
                            val = dt
                        elif shift > 0.0:
                            acc = 4.0 * _interp(arr, y1, y2, y3, l1, h1, d1,
                                                l2, h2, d2, l3, h3, d3, bbar)
                            acc += _interp(arr, y1, y2, y3 + shift, l1, h1, d1,
                                           l2, h2, d2, l3, h3, d3, bbar)
                            acc += _interp(arr, y1, y2, y3 - shift, l1, h1, d1,
                                           l2, h2, d2, l3, h3, d3, bbar)
                            val = dt + disc * acc / 6.0
                        else:
                            val = dt + disc * _interp(arr, y1, y2, y3, l1, h1,
                                                      d1, l2, h2, d2, l3, h3,
                                                      d3, bbar)
                        if val < best:
                            best = val
                            best_u = uvals[k]
                    # best switch among the other modes, smallest index wins ties
                    sw = np.inf
                    sw_q = 0
                    for qp in range(nq):
                        if qp == q:
                            continue
                        v = V[qp, i1, i2, i3] + C[q, qp]
                        if v < sw:
                            sw = v
                            sw_q = qp + 1
                    if sw < best - tie_eps:
                        kind[q, i1, i2, i3] = sw_q
                        uout[q, i1, i2, i3] = best_u
                    else:
                        kind[q, i1, i2, i3] = CONTINUE
                        uout[q, i1, i2, i3] = best_u


# ---------------------------------------------------------------------------
# driver

def _tables(scenario: Scenario, config: SolverConfig):
    """Precomputed per-(mode, control, x3) drift factors plus kernel scalars."""
    g = scenario.grid
    uvals = control_samples(scenario, config)
    x3g = g.axis(2)
    nq, nu = scenario.modes.count, uvals.size
    A1 = np.empty((nq, nu, x3g.size))
    A2 = np.empty((nq, nu, x3g.size))
    for q in range(1, nq + 1):
        sq = mode_sign(q)
        for k, u in enumerate(uvals):
            r = polar_speed(scenario.polar, scenario.wind.mean_speed, q, u)
            A1[q - 1, k] = r * np.sin(-x3g + sq * u)
            A2[q - 1, k] = r * np.cos(-x3g + sq * u)
    if scenario.obstacles is not None:
        free2d = (~scenario.obstacles.values).astype(np.float64)
    else:
        free2d = np.ones(g.shape[:2])
    bounds = []
    for k in range(3):
        lo = g.bounds[k][0]
        bounds += [lo, lo + (g.shape[k] - 1) * g.steps[k], g.steps[k]]
    dt = g.dt
    scalars = dict(
        dt=dt,
        disc=math.exp(-scenario.costs.discount * dt),
        abar=scenario.wind.drift,
        shift=math.sqrt(3.0 * dt) * scenario.wind.diffusion,
        C=np.ascontiguousarray(scenario.costs.switch.cost),
        bbar=scenario.costs.boundary,
        cx=scenario.target.center[0],
        cy=scenario.target.center[1],
        rad2=scenario.target.radius ** 2,
    )
    return uvals, A1, A2, free2d, g.axis(0), g.axis(1), x3g, bounds, scalars


def bellman_update(V: ValueField, scenario: Scenario,
                   config: SolverConfig = SolverConfig()) -> ValueField:
    """One application of min(N, Sigma) at every non-frozen node."""
    uvals, A1, A2, free2d, x1g, x2g, x3g, b, sc = _tables(scenario, config)
    vals = np.ascontiguousarray(V.values)
    if config.sweep == "in-place":
        vals = vals.copy()
        _sweep_inplace(vals, V.frozen, free2d, x1g, x2g, x3g, A1, A2,
                       sc["dt"], sc["disc"], sc["abar"], sc["shift"],
                       sc["C"], sc["bbar"], sc["cx"], sc["cy"],
                       sc["rad2"], *b)
        new = vals
    else:
        new = np.empty_like(vals)
        _sweep_jacobi(vals, new, V.frozen, free2d, x1g, x2g, x3g, A1, A2,
                      sc["dt"], sc["disc"], sc["abar"], sc["shift"],
                      sc["C"], sc["bbar"], sc["cx"], sc["cy"],
                      sc["rad2"], *b)
    return ValueField(values=new, grid=V.grid, boundary=V.boundary,
                      frozen=V.frozen, iterations=V.iterations + 1)


def solve(scenario: Scenario,
          config: SolverConfig = SolverConfig(),
          monitor=None) -> tuple[ValueField, PolicyField]:
    """Value iteration from the constant supersolution down to the fixed point.

    Returns the value field (flagged non-converged if the iteration cap is
    hit) and the extracted feedback policy.  `monitor(k, residual)` is called
    after every sweep when provided.
    """
    uvals, A1, A2, free2d, x1g, x2g, x3g, b, sc = _tables(scenario, config)
    g = scenario.grid
    frozen = target_nodes(scenario)
    v0 = initial_value(scenario)
    V = np.full((scenario.modes.count,) + g.shape, v0)
    V[:, frozen] = 0.0
    if scenario.obstacles is not None:
        # Obstacle cells carry the same weak-Dirichlet stopping cost as the
        # domain boundary.  Leaving them to the speed penalization alone is
        # exact but useless in practice: landlocked cells have the no-motion
        # fixed point 1/lambda, which plain value iteration approaches at
        # O(1) per sweep from the 1/lambda-sized supersolution.
        blocked = scenario.obstacles.values & ~frozen
        V[:, blocked] = scenario.costs.boundary
        frozen = frozen | blocked

    inplace = config.sweep == "in-place"
    residual = math.inf
    iters = 0
    buf = np.empty_like(V)
    while iters < config.max_iterations:
        if inplace:
            up, down = _sweep_inplace(V, frozen, free2d, x1g, x2g, x3g, A1, A2,
                                      sc["dt"], sc["disc"], sc["abar"],
                                      sc["shift"], sc["C"], sc["bbar"],
                                      sc["cx"], sc["cy"], sc["rad2"], *b)
        else:
            up, down = _sweep_jacobi(V, buf, frozen, free2d, x1g, x2g, x3g,
                                     A1, A2, sc["dt"], sc["disc"], sc["abar"],
                                     sc["shift"], sc["C"], sc["bbar"],
                                     sc["cx"], sc["cy"], sc["rad2"], *b)
            V, buf = buf, V
        iters += 1
        residual = max(up, down)
        if config.check_monotone and up > 0.0:
            raise AssertionError(f"iterate increased by {up} at sweep {iters}")
        if monitor is not None:
            monitor(iters, residual)
        if residual <= config.tolerance:
            break

    field = ValueField(values=V, grid=g, boundary=scenario.costs.boundary,
                       frozen=frozen, iterations=iters, residual=residual,
                       converged=residual <= config.tolerance)
    return field, extract_policy(field, scenario, config)


def extract_policy(V: ValueField, scenario: Scenario,
                   config: SolverConfig = SolverConfig()) -> PolicyField:
    """Per node: Switch(q') when strictly better than continuing, else
    Continue with the minimizing control."""
    uvals, A1, A2, free2d, x1g, x2g, x3g, b, sc = _tables(scenario, config)
    kind = np.empty(V.values.shape, dtype=np.int8)
    u = np.empty(V.values.shape)
    _extract(np.ascontiguousarray(V.values), kind, u, V.frozen, free2d,
             x1g, x2g, x3g, A1, A2, uvals, sc["dt"], sc["disc"], sc["abar"],
             sc["shift"], sc["C"], sc["bbar"], sc["cx"], sc["cy"], sc["rad2"],
             config.tie_epsilon, *b)
    return PolicyField(kind=kind, u=u, grid=V.grid)
