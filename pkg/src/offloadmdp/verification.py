"""Randomized optimality checks: exact solver against the brute-force oracle.

Instances are kept tiny so the unmemoized tree search stays cheap; the solver
must match it exactly (up to float tolerance from mobility probabilities) at
every start location.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dp import backward_induction
from .model import (
    ActionMode,
    CostParams,
    FlowSpec,
    LocationProfile,
    Scenario,
    enumerate_actions,
)
from .mobility import build_grid_mobility
from .sim import brute_force_value

ORACLE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class OracleCase:
    scenario_id: str
    n_locations: int
    n_flows: int
    horizon: int
    start_location: int
    dp_value: float
    brute_force: float

    @property
    def abs_diff(self) -> float:
        return abs(self.dp_value - self.brute_force)


@dataclass(frozen=True)
class OracleCheckResult:
    instances: int
    cases: tuple[OracleCase, ...]
    max_abs_diff: float
    passed: bool


def random_tiny_scenario(rng: np.random.Generator, max_tree_nodes: int = 200_000) -> Scenario:
    """A small random instance the exhaustive recursion can afford."""
    while True:
        grid = rng.choice(np.array([(1, 1), (2, 1), (2, 2)], dtype=int))
        width, height = int(grid[0]), int(grid[1])
        n = width * height
        m = int(rng.integers(1, 3))
        horizon = int(rng.integers(1, 5))
        deadlines = sorted(int(rng.integers(1, horizon + 1)) for _ in range(m))
        deadlines[-1] = horizon
        sizes = [int(rng.integers(1, 5)) for _ in range(m)]
        flows = tuple(
            FlowSpec(id=j, total_size=float(sizes[j]), deadline=deadlines[j])
            for j in range(m)
        )
        locations = []
        for l in range(n):
            wlan_units = int(rng.integers(0, 3))
            locations.append(
                LocationProfile(
                    id=l,
                    wlan_available=wlan_units > 0,
                    cellular_rate=float(rng.integers(1, 3)),
                    wlan_rate=float(wlan_units),
                    cellular_energy_rate=float(rng.uniform(0.3, 1.0)),
                    wlan_energy_rate=float(rng.uniform(0.2, 0.8)) if wlan_units else 0.0,
                )
            )
        stay = 1.0 if n == 1 else float(rng.uniform(0.3, 0.9))
        scenario = Scenario(
            grid_width=width,
            grid_height=height,
            locations=tuple(locations),
            mobility=build_grid_mobility(width, height, stay),
            flows=flows,
            horizon=horizon,
            costs=CostParams(
                price_per_mbit=0.1875,
                energy_preference=float(rng.choice([0.0, 0.5, 1.0])),
                penalty_coefficient=2.0,
            ),
            sigma=1.0,
            rng_seed=int(rng.integers(0, 2**31)),
        )
        max_actions = max(
            len(
                enumerate_actions(
                    scenario.initial_state(l),
                    scenario.locations[l],
                    1,
                    scenario.flows,
                    ActionMode.EXHAUSTIVE,
                )
            )
            for l in range(n)
        )
        if (max_actions * n) ** horizon <= max_tree_nodes:
            return scenario


def oracle_check(instances: int = 25, seed: int = 0) -> OracleCheckResult:
    """Solve each random instance both ways and compare at every start location."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(instances):
        scenario = random_tiny_scenario(rng)
        value_table, _ = backward_induction(scenario, ActionMode.EXHAUSTIVE)
        for start in range(scenario.n_locations):
            dp_v = value_table.value(1, scenario.initial_state(start))
            bf_v = brute_force_value(scenario, start)
            cases.append(
                OracleCase(
                    scenario_id=scenario.scenario_id,
                    n_locations=scenario.n_locations,
                    n_flows=scenario.n_flows,
                    horizon=scenario.horizon,
                    start_location=start,
                    dp_value=dp_v,
                    brute_force=bf_v,
                )
            )
    max_diff = max(c.abs_diff for c in cases)
    return OracleCheckResult(
        instances=instances,
        cases=tuple(cases),
        max_abs_diff=max_diff,
        passed=max_diff <= ORACLE_TOLERANCE,
    )
