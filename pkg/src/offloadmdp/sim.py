"""Episode execution, Monte Carlo aggregation, and verification oracles.

Episode seeds derive from a base seed by a counter-based split
(``SeedSequence(base_seed, spawn_key=(episode_index,))``), so episode i's
random stream does not depend on execution order. Aggregation reduces
per-episode arrays with exactly rounded summation (math.fsum), making the
report independent of summation order at double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dp import ValueTable, _boundary_values, size_space, stage_unit_cost
from .exceptions import PolicyLookupError, SizingError
from .heuristic import Policy
from .mobility import next_location
from .model import (
    Action,
    ActionMode,
    Scenario,
    State,
    apply_action,
    check_action_feasible,
    energy_cost,
    enumerate_actions,
    monetary_cost,
    penalty,
    raw_energy,
    stage_reward,
)


@dataclass(frozen=True)
class TraceStep:
    epoch: int
    location: int
    action: Action
    remaining_after: tuple[int, ...]


@dataclass(frozen=True)
class EpisodeResult:
    """Realized per-run metrics; all totals are recomputable from the trace."""

    monetary_cost: float
    raw_energy: float
    weighted_energy: float
    penalty_paid: float
    finished_flags: tuple[bool, ...]
    trace: tuple[TraceStep, ...]

    @property
    def objective(self) -> float:
        return self.monetary_cost + self.weighted_energy + self.penalty_paid

    @property
    def finish_rate(self) -> float:
        return sum(self.finished_flags) / len(self.finished_flags)


@dataclass(frozen=True)
class AggregateReport:
    """Monte Carlo summary for one (scenario, policy) pair."""

    scenario_id: str
    policy: str
    theta: float
    n_flows: int
    n_aps: int
    episodes: int
    mean_monetary_yen: float
    sd_monetary: float
    mean_energy_joule: float
    sd_energy: float
    mean_objective: float
    finish_rate: float
    seed: int
    sd_objective: float = 0.0
    mean_penalty: float = 0.0
    mean_weighted_energy: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.finish_rate <= 1.0:
            raise ValueError("finish_rate must lie in [0, 1]")
        if min(self.sd_monetary, self.sd_energy, self.sd_objective) < 0:
            raise ValueError("standard deviations must be >= 0")

    def stderr_monetary(self) -> float:
        return self.sd_monetary / math.sqrt(self.episodes)

    def stderr_energy(self) -> float:
        return self.sd_energy / math.sqrt(self.episodes)


def run_episode(
    scenario: Scenario,
    policy: Policy,
    start_location: int,
    rng: np.random.Generator,
) -> EpisodeResult:
    """Simulate one horizon: query the policy, accrue costs, move, charge
    deadline penalties, stopping early once nothing remains."""
    flows = scenario.flows
    sigma = scenario.sigma
    costs = scenario.costs
    remaining = list(scenario.size_units)
    finished = [u == 0 for u in remaining]
    location = start_location
    total_monetary = 0.0
    total_raw = 0.0
    total_weighted = 0.0
    total_penalty = 0.0
    trace: list[TraceStep] = []

    for t in range(1, scenario.horizon + 1):
        if not any(remaining):
            break
        state = State(location, tuple(remaining))
        try:
            action = policy(t, state)
        except PolicyLookupError as exc:
            raise PolicyLookupError(f"slot {t}, location {location}: {exc}") from exc
        profile = scenario.locations[location]
        check_action_feasible(state, action, profile, flows, t, sigma)
        theta = scenario.theta_at(t)
        total_monetary += monetary_cost(state, action, costs, sigma)
        total_raw += raw_energy(state, action, profile, sigma)
        total_weighted += energy_cost(state, action, profile, costs, sigma, theta)
        after = apply_action(state, action)
        trace.append(TraceStep(t, location, action, after))
        due = [after[j] for j, f in enumerate(flows) if f.deadline == t]
        if due:
            total_penalty += penalty(due, costs, sigma)
        for j in range(len(flows)):
            if not finished[j] and after[j] == 0 and t <= flows[j].deadline:
                finished[j] = True
        remaining = list(after)
        if t < scenario.horizon and any(remaining):
            location = next_location(scenario.mobility, location, rng)

    return EpisodeResult(
        monetary_cost=total_monetary,
        raw_energy=total_raw,
        weighted_energy=total_weighted,
        penalty_paid=total_penalty,
        finished_flags=tuple(finished),
        trace=tuple(trace),
    )


def episode_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent stream for episode ``index``, order-insensitive."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(index,)))


def episode_start(scenario: Scenario, rng: np.random.Generator) -> int:
    if scenario.start_location is not None:
        return scenario.start_location
    return int(rng.integers(scenario.n_locations))


def run_episodes(
    scenario: Scenario, policy: Policy, episodes: int, base_seed: int
) -> list[EpisodeResult]:
    out = []
    for i in range(episodes):
        rng = episode_rng(base_seed, i)
        start = episode_start(scenario, rng)
        out.append(run_episode(scenario, policy, start, rng))
    return out


def _fsum_mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _fsum_std(values: Sequence[float], mean: float) -> float:
    if len(values) < 2:
        return 0.0
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1))


def monte_carlo(
    scenario: Scenario,
    policy: Policy,
    episodes: int,
    base_seed: int,
    label: str = "policy",
) -> AggregateReport:
    """Independent seeded episodes aggregated into one report.

    Deterministic for a fixed (scenario, base_seed, episodes) no matter how
    the episodes would be scheduled.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    monetary = np.empty(episodes)
    energy = np.empty(episodes)
    objective = np.empty(episodes)
    weighted = np.empty(episodes)
    pen = np.empty(episodes)
    finish = np.empty(episodes)
    for i in range(episodes):
        rng = episode_rng(base_seed, i)
        start = episode_start(scenario, rng)
        ep = run_episode(scenario, policy, start, rng)
        monetary[i] = ep.monetary_cost
        energy[i] = ep.raw_energy
        objective[i] = ep.objective
        weighted[i] = ep.weighted_energy
        pen[i] = ep.penalty_paid
        finish[i] = ep.finish_rate
    mean_monetary = _fsum_mean(monetary)
    mean_energy = _fsum_mean(energy)
    mean_objective = _fsum_mean(objective)
    return AggregateReport(
        scenario_id=scenario.scenario_id,
        policy=label,
        theta=scenario.costs.energy_preference,
        n_flows=scenario.n_flows,
        n_aps=scenario.n_aps,
        episodes=episodes,
        mean_monetary_yen=mean_monetary,
        sd_monetary=_fsum_std(monetary, mean_monetary),
        mean_energy_joule=mean_energy,
        sd_energy=_fsum_std(energy, mean_energy),
        mean_objective=mean_objective,
        finish_rate=_fsum_mean(finish),
        seed=base_seed,
        sd_objective=_fsum_std(objective, mean_objective),
        mean_penalty=_fsum_mean(pen),
        mean_weighted_energy=_fsum_mean(weighted),
    )


def trace_monetary(trace: Sequence[TraceStep], scenario: Scenario) -> float:
    """Recompute the payment total from a trace (consistency check)."""
    total = 0.0
    for step in trace:
        before = tuple(b + a for b, a in zip(step.remaining_after, step.action.allocation))
        total += monetary_cost(State(step.location, before), step.action, scenario.costs, scenario.sigma)
    return total


def trace_raw_energy(trace: Sequence[TraceStep], scenario: Scenario) -> float:
    """Recompute raw energy from a trace against (possibly different) profiles.

    Passing a scenario with the same geometry but another energy curve
    reprices the identical transmission schedule.
    """
    total = 0.0
    for step in trace:
        before = tuple(b + a for b, a in zip(step.remaining_after, step.action.allocation))
        profile = scenario.locations[step.location]
        total += raw_energy(State(step.location, before), step.action, profile, scenario.sigma)
    return total


def trace_objective(trace: Sequence[TraceStep], scenario: Scenario) -> float:
    """Recompute the full realized objective (stage costs plus penalties)."""
    total = 0.0
    for step in trace:
        before = tuple(b + a for b, a in zip(step.remaining_after, step.action.allocation))
        state = State(step.location, before)
        profile = scenario.locations[step.location]
        total += stage_reward(
            state, step.action, profile, scenario.costs, scenario.sigma,
            scenario.theta_at(step.epoch),
        )
        due = [
            step.remaining_after[j]
            for j, f in enumerate(scenario.flows)
            if f.deadline == step.epoch
        ]
        if due:
            total += penalty(due, scenario.costs, scenario.sigma)
    return total


def brute_force_value(
    scenario: Scenario,
    start_location: int,
    action_mode: ActionMode = ActionMode.EXHAUSTIVE,
    node_budget: int = 1_000_000,
) -> float:
    """Minimum expected cost by direct recursion over the full decision tree.

    Deliberately independent of the dynamic-programming solver: no value
    table, penalties charged at every deadline on the post-action remaining.
    Unmemoized, so only tiny instances fit the node budget.
    """
    space_states = int(np.prod(scenario.size_dims))
    max_actions = max(
        len(
            enumerate_actions(
                scenario.initial_state(loc),
                scenario.locations[loc],
                1,
                scenario.flows,
                action_mode,
                scenario.sigma,
            )
        )
        for loc in range(scenario.n_locations)
    )
    est = scenario.n_locations * space_states * scenario.horizon * max_actions
    if est > node_budget:
        raise SizingError(
            f"instance too large for the exhaustive oracle: "
            f"{scenario.n_locations} x {space_states} x {scenario.horizon} x "
            f"{max_actions} = {est} > budget {node_budget}"
        )
    hard_cap = 200 * node_budget
    counter = {"nodes": 0}
    p_matrix = scenario.mobility.transition_matrix
    pen_unit = scenario.costs.penalty_coefficient * scenario.sigma
    flows = scenario.flows
    sigma = scenario.sigma

    def recurse(t: int, location: int, remaining: tuple[int, ...]) -> float:
        counter["nodes"] += 1
        if counter["nodes"] > hard_cap:
            raise SizingError("exhaustive oracle exceeded its hard node cap")
        if t > scenario.horizon or not any(remaining):
            return 0.0
        state = State(location, remaining)
        profile = scenario.locations[location]
        best = math.inf
        for action in enumerate_actions(state, profile, t, flows, action_mode, sigma):
            after = apply_action(state, action)
            stage = stage_reward(
                state, action, profile, scenario.costs, sigma, scenario.theta_at(t)
            )
            pen = pen_unit * sum(
                after[j] for j, f in enumerate(flows) if f.deadline == t
            )
            expected = 0.0
            for l_next, p in enumerate(p_matrix[location]):
                if p > 0.0:
                    expected += float(p) * recurse(t + 1, l_next, after)
            best = min(best, stage + pen + expected)
        return best

    return float(recurse(1, start_location, scenario.size_units))


def exact_policy_evaluation(
    scenario: Scenario,
    policy: Policy,
    memory_budget: int = 2 << 30,
) -> ValueTable:
    """Expected objective of a fixed policy, by the same backward recursion as
    the solver but with the action pinned at every state."""
    space = size_space(scenario)
    n_loc, nb = scenario.n_locations, space.n_states
    horizon = scenario.horizon
    est = (horizon + 1) * n_loc * nb * 8
    if est > memory_budget:
        raise SizingError(
            f"evaluation table too large: {n_loc} locations x sizes "
            f"{scenario.size_dims} x {horizon + 1} epochs"
        )
    p_matrix = scenario.mobility.transition_matrix
    pen_unit = scenario.costs.penalty_coefficient * scenario.sigma
    values = np.empty((horizon + 1, n_loc, nb))
    values[horizon] = _boundary_values(scenario, space)
    flows = scenario.flows

    for t in range(horizon, 0, -1):
        ev = p_matrix @ values[t]
        due = (
            [j for j, f in enumerate(flows) if f.deadline == t] if t < horizon else []
        )
        for location in range(n_loc):
            profile = scenario.locations[location]
            ev_row = ev[location]
            for flat in range(nb):
                remaining = space.tuple_of(flat)
                state = State(location, remaining)
                action = policy(t, state)
                check_action_feasible(state, action, profile, flows, t, scenario.sigma)
                after = apply_action(state, action)
                unit = stage_unit_cost(scenario, location, action.network, t)
                stage = action.total * unit
                pen = pen_unit * sum(after[j] for j in due) if due else 0.0
                values[t - 1, location, flat] = stage + pen + ev_row[space.flat_of(after)]

    return ValueTable(
        sigma=scenario.sigma,
        horizon=horizon,
        dims=scenario.size_dims,
        n_locations=n_loc,
        values=values,
        fingerprint=scenario.fingerprint,
    )
