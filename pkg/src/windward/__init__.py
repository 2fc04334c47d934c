"""Stochastic hybrid route planning for sailing boats.

Solves the switching/continuation dynamic programming system for minimum
expected arrival time under a stochastic wind-direction model, extracts the
feedback policy (sail on, or tack) and simulates closed-loop trajectories.
"""

__version__ = "0.1.0"

from .domain import (CostSpec, GridSpec, ModeSet, ObstacleMask, PolarModel,
                     Scenario, SwitchCostTable, TargetSpec, WindModel,
                     diffusion, drift, masked_speed, mode_sign, polar_speed,
                     validate_scenario)
from .solver import (PolicyField, SolverConfig, ValueField, bellman_update,
                     control_samples, extract_policy, initial_value,
                     interpolate, sl_operator, solve, switch_operator,
                     target_nodes)
from .simulate import (BOUNDARY_EXIT, Continue, McSummary, NoiseSource,
                       PolicyCycleError, SimState, Switch, TARGET_HIT,
                       TIMEOUT, Trajectory, em_step, lookup_action, mc_stats,
                       simulate, trajectory_cost)
from .analysis import (NO_SWITCH, SwitchingMap, analytic_value, lay_lines,
                       switching_map,
                       tack_directions, triangle_profile, triangle_width)
from .scenario_io import (load_mask, load_preset, load_scenario,
                          write_scenario)
