"""Online policies: deadline/size-weighted offloading, always-offload baseline,
and a price-only comparator that plans while ignoring energy.

The weighted policy works in O(M) per slot: flows closer to their deadline and
flows with more data left get proportionally more of the chosen network's
capacity. WLAN is preferred whenever its speed clears a threshold; otherwise
cellular engages only once the tightest remaining deadline drops below a
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .dp import PolicyTable, backward_induction, lookup_action
from .exceptions import ConfigurationError
from .model import (
    Action,
    ActionMode,
    FlowSpec,
    LocationProfile,
    Network,
    Scenario,
    State,
    active_flow_mask,
    edf_allocation,
)


class Policy(Protocol):
    """Anything that maps (epoch, state) to an action."""

    def __call__(self, epoch: int, state: State) -> Action: ...


@dataclass(frozen=True)
class HeuristicParams:
    """Concrete thresholds: slots for the deadline trigger, Mbit/slot for WLAN speed."""

    deadline_threshold: float
    wlan_speed_threshold: float

    def __post_init__(self):
        if self.deadline_threshold < 0 or self.wlan_speed_threshold < 0:
            raise ConfigurationError("heuristic thresholds must be >= 0")


def _normalize(values: Sequence[float]) -> list[float]:
    total = sum(values)
    if total == 0:
        return [0.0] * len(values)
    return [v / total for v in values]


def deadline_weights(
    epoch: int, flows: Sequence[FlowSpec], remaining: Sequence[int]
) -> tuple[list[float], list[int]]:
    """Allocation weights and the list of remaining deadline gaps.

    A flow still strictly ahead of its deadline with data left weighs
    1/(deadline - epoch); expired or finished flows weigh zero. The raw
    weights and the remaining sizes are each normalized, multiplied
    elementwise, and renormalized.
    """
    raw = []
    gaps = []
    for f, b in zip(flows, remaining):
        if epoch < f.deadline:
            gaps.append(f.deadline - epoch)
            raw.append(1.0 / (f.deadline - epoch) if b > 0 else 0.0)
        else:
            raw.append(0.0)
    w_bar = _normalize(raw)
    b_bar = _normalize([float(b) for b in remaining])
    return _normalize([w * b for w, b in zip(w_bar, b_bar)]), gaps


def proportional_allocation(
    weights: Sequence[float], capacity: int, remaining: Sequence[int]
) -> tuple[int, ...]:
    """Split capacity by weight, quantized by largest-remainder rounding.

    Shares are capped at each flow's remaining size; spilled units are
    redistributed in descending weight order (ties to the lower flow index).
    """
    n = len(weights)
    alloc = [0] * n
    eligible = [j for j in range(n) if weights[j] > 0]
    if not eligible or capacity <= 0:
        return tuple(alloc)
    quotas = [weights[j] * capacity for j in range(n)]
    fracs = [0.0] * n
    for j in eligible:
        base = math.floor(quotas[j] + 1e-12)
        alloc[j] = base
        fracs[j] = quotas[j] - base
    extra = capacity - sum(alloc)
    for j in sorted(eligible, key=lambda j: (-fracs[j], j)):
        if extra <= 0:
            break
        alloc[j] += 1
        extra -= 1
    spill = 0
    for j in eligible:
        if alloc[j] > remaining[j]:
            spill += alloc[j] - remaining[j]
            alloc[j] = remaining[j]
    if spill > 0:
        for j in sorted(eligible, key=lambda j: (-weights[j], j)):
            room = remaining[j] - alloc[j]
            if room <= 0:
                continue
            take = min(room, spill)
            alloc[j] += take
            spill -= take
            if spill == 0:
                break
    return tuple(alloc)


def heuristic_decide(
    epoch: int,
    state: State,
    location: LocationProfile,
    flows: Sequence[FlowSpec],
    params: HeuristicParams,
    sigma: float = 1.0,
) -> Action:
    """One online decision: WLAN above the speed threshold, else cellular under
    deadline pressure, else wait."""
    weights, gaps = deadline_weights(epoch, flows, state.remaining)
    n = len(flows)
    if location.wlan_available and location.wlan_rate > params.wlan_speed_threshold:
        cap = int(location.wlan_rate / sigma + 1e-9)
        alloc = proportional_allocation(weights, cap, state.remaining)
        if sum(alloc) > 0:
            return Action(Network.WLAN, alloc)
        return Action.idle(n)
    if gaps and min(gaps) < params.deadline_threshold:
        cap = int(location.cellular_rate / sigma + 1e-9)
        alloc = proportional_allocation(weights, cap, state.remaining)
        if sum(alloc) > 0:
            return Action(Network.CELLULAR, alloc)
    return Action.idle(n)


def default_deadline_threshold(scenario: Scenario, epoch: int, remaining: Sequence[int]) -> float:
    """Safety margin in slots: 1.5x the time the smallest unfinished, unexpired
    flow would need on an average cellular link, floored at one slot."""
    live = [
        b * scenario.sigma
        for b, f in zip(remaining, scenario.flows)
        if b > 0 and epoch <= f.deadline
    ]
    if not live:
        return 1.0
    return max(1.0, math.ceil(1.5 * min(live) / scenario.mean_cellular_rate))


def default_wlan_speed_threshold(theta: float) -> float:
    """Monotone map from energy preference to the minimum acceptable WLAN speed."""
    return 9.0 + 3.0 * min(theta, 2.0)


class HeuristicPolicy:
    """Adapter resolving per-slot default thresholds against a scenario."""

    def __init__(self, scenario: Scenario, params: HeuristicParams | None = None):
        self.scenario = scenario
        self.params = params

    def __call__(self, epoch: int, state: State) -> Action:
        if self.params is not None:
            params = self.params
        else:
            params = HeuristicParams(
                deadline_threshold=default_deadline_threshold(
                    self.scenario, epoch, state.remaining
                ),
                wlan_speed_threshold=default_wlan_speed_threshold(
                    self.scenario.theta_at(epoch)
                ),
            )
        return heuristic_decide(
            epoch,
            state,
            self.scenario.locations[state.location],
            self.scenario.flows,
            params,
            self.scenario.sigma,
        )


def baseline_decide(
    epoch: int,
    state: State,
    location: LocationProfile,
    flows: Sequence[FlowSpec],
    sigma: float = 1.0,
) -> Action:
    """Offload whenever possible: WLAN if present, else cellular, at full
    usable rate split earliest-deadline-first."""
    active = active_flow_mask(epoch, flows, state.remaining)
    n = len(flows)
    if not any(active):
        return Action.idle(n)
    net = Network.WLAN if location.wlan_available else Network.CELLULAR
    cap = int(location.rate(net) / sigma + 1e-9)
    alloc = edf_allocation(state.remaining, active, cap)
    if sum(alloc) == 0:
        return Action.idle(n)
    return Action(net, alloc)


class BaselinePolicy:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def __call__(self, epoch: int, state: State) -> Action:
        return baseline_decide(
            epoch,
            state,
            self.scenario.locations[state.location],
            self.scenario.flows,
            self.scenario.sigma,
        )


class TablePolicy:
    def __init__(self, table: PolicyTable):
        self.table = table

    def __call__(self, epoch: int, state: State) -> Action:
        return lookup_action(self.table, epoch, state)


def price_only_policy(
    scenario: Scenario,
    action_mode: ActionMode | None = None,
    workers: int = 1,
) -> PolicyTable:
    """Plan with the energy preference forced to zero (payment and penalty only).

    Single-flow scenarios only; the table is then evaluated under the true
    preference so its energy overhead can be reported.
    """
    if scenario.n_flows != 1:
        raise ConfigurationError(
            "the price-only comparator is defined for single-flow scenarios"
        )
    _, table = backward_induction(scenario.with_theta(0.0), action_mode, workers)
    return table


POLICY_KINDS = ("dp", "heuristic", "baseline", "price_only")


def make_policy(
    scenario: Scenario,
    kind: str,
    table: PolicyTable | None = None,
    params: HeuristicParams | None = None,
    action_mode: ActionMode | None = None,
    workers: int = 1,
) -> Policy:
    """Build a policy callable by name, solving tables on demand."""
    if kind == "dp":
        if table is None:
            _, table = backward_induction(scenario, action_mode, workers)
        return TablePolicy(table)
    if kind == "heuristic":
        return HeuristicPolicy(scenario, params)
    if kind == "baseline":
        return BaselinePolicy(scenario)
    if kind == "price_only":
        if table is None:
            table = price_only_policy(scenario, action_mode, workers)
        return TablePolicy(table)
    raise ConfigurationError(f"unknown policy kind {kind!r}")
