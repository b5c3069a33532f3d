"""Domain types and per-slot cost/transition arithmetic.

All data sizes are tracked as integer counts of the discretization step
``sigma`` (Mbit). Keeping sizes integral makes the size transition exact and
lets value/policy tables be indexed without floating-point keys. Rates and
prices stay in Mbit/slot and yen/Mbit; operations that convert unit counts
back to yen or joule take ``sigma`` explicitly.

Epochs are 1-based: decisions happen at t = 1..horizon, and a flow with
deadline T may still be served at t = T (its penalty is charged on whatever
remains after that slot's action).
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

from .exceptions import ConfigurationError, FeasibilityError
from .mobility import MobilityModel


class Network(Enum):
    IDLE = "idle"
    CELLULAR = "cellular"
    WLAN = "wlan"


class ActionMode(Enum):
    """How the per-state action set is searched."""

    EXHAUSTIVE = "exhaustive"
    EDF_RESTRICTED = "edf"


@dataclass(frozen=True)
class FlowSpec:
    """One file download: total volume in Mbit and a deadline epoch.

    A zero-size flow is legal (already finished at the start); generated
    scenarios always use positive sizes.
    """

    id: int
    total_size: float
    deadline: int

    def __post_init__(self):
        if self.total_size < 0:
            raise ConfigurationError(f"flow {self.id}: total_size must be >= 0")
        if self.deadline < 1:
            raise ConfigurationError(f"flow {self.id}: deadline must be >= 1")


@dataclass(frozen=True)
class LocationProfile:
    """Per-cell radio environment: rates in Mbit/slot, energy rates in joule/Mbit."""

    id: int
    wlan_available: bool
    cellular_rate: float
    wlan_rate: float
    cellular_energy_rate: float
    wlan_energy_rate: float

    def __post_init__(self):
        if self.cellular_rate <= 0:
            raise ConfigurationError(f"location {self.id}: cellular rate must be > 0")
        if self.wlan_available != (self.wlan_rate > 0):
            raise ConfigurationError(
                f"location {self.id}: wlan_available must match wlan_rate > 0"
            )
        if self.cellular_energy_rate < 0 or self.wlan_energy_rate < 0:
            raise ConfigurationError(f"location {self.id}: energy rates must be >= 0")

    def rate(self, network: Network) -> float:
        return self.cellular_rate if network is Network.CELLULAR else self.wlan_rate

    def energy_rate(self, network: Network) -> float:
        if network is Network.CELLULAR:
            return self.cellular_energy_rate
        return self.wlan_energy_rate


@dataclass(frozen=True)
class State:
    """MDP state: location index plus per-flow remaining sizes in sigma counts."""

    location: int
    remaining: tuple[int, ...]

    def __post_init__(self):
        if self.location < 0:
            raise ConfigurationError("location index must be >= 0")
        if any(b < 0 for b in self.remaining):
            raise ConfigurationError("remaining sizes must be >= 0")


@dataclass(frozen=True)
class Action:
    """Network choice plus a per-flow allocation in sigma counts per slot."""

    network: Network
    allocation: tuple[int, ...]

    def __post_init__(self):
        if any(a < 0 for a in self.allocation):
            raise ConfigurationError("allocations must be >= 0")
        total = sum(self.allocation)
        if self.network is Network.IDLE and total != 0:
            raise ConfigurationError("idle action must have an all-zero allocation")
        if self.network is not Network.IDLE and total == 0:
            raise ConfigurationError("non-idle action must serve at least one unit")

    @staticmethod
    def idle(n_flows: int) -> "Action":
        return Action(Network.IDLE, (0,) * n_flows)

    @property
    def total(self) -> int:
        return sum(self.allocation)


@dataclass(frozen=True)
class CostParams:
    """Prices and preference weights of the per-slot objective."""

    price_per_mbit: float = 0.1875
    energy_preference: float = 0.0
    penalty_coefficient: float = 2.0

    def __post_init__(self):
        if min(self.price_per_mbit, self.energy_preference, self.penalty_coefficient) < 0:
            raise ConfigurationError("cost parameters must be >= 0")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable problem instance.

    Flows are kept sorted by non-decreasing deadline and the horizon equals the
    last deadline. ``theta_schedule`` optionally overrides the constant energy
    preference with a per-slot weight.
    """

    grid_width: int
    grid_height: int
    locations: tuple[LocationProfile, ...]
    mobility: MobilityModel
    flows: tuple[FlowSpec, ...]
    horizon: int
    costs: CostParams
    sigma: float
    rng_seed: int = 0
    theta_schedule: tuple[float, ...] | None = None
    start_location: int | None = None

    def __post_init__(self):
        n = self.grid_width * self.grid_height
        if len(self.locations) != n:
            raise ConfigurationError(
                f"expected {n} location profiles, got {len(self.locations)}"
            )
        if self.mobility.n_locations != n:
            raise ConfigurationError("mobility matrix size does not match the grid")
        if not self.flows:
            raise ConfigurationError("scenario needs at least one flow")
        deadlines = [f.deadline for f in self.flows]
        if deadlines != sorted(deadlines):
            raise ConfigurationError("flows must be sorted by non-decreasing deadline")
        if self.horizon != max(deadlines):
            raise ConfigurationError("horizon must equal the last flow deadline")
        if self.sigma <= 0:
            raise ConfigurationError("sigma must be > 0")
        for f in self.flows:
            if not _is_multiple(f.total_size, self.sigma):
                raise ConfigurationError(
                    f"flow {f.id} size {f.total_size} is not a multiple of sigma={self.sigma}"
                )
        if self.theta_schedule is not None and len(self.theta_schedule) < self.horizon:
            raise ConfigurationError("theta_schedule must cover every epoch")
        if self.start_location is not None and not (0 <= self.start_location < n):
            raise ConfigurationError("start_location out of range")

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    @property
    def n_flows(self) -> int:
        return len(self.flows)

    @property
    def n_aps(self) -> int:
        return sum(1 for loc in self.locations if loc.wlan_available)

    @cached_property
    def size_units(self) -> tuple[int, ...]:
        """Initial per-flow sizes as sigma counts."""
        return tuple(int(round(f.total_size / self.sigma)) for f in self.flows)

    @cached_property
    def size_dims(self) -> tuple[int, ...]:
        return tuple(u + 1 for u in self.size_units)

    @cached_property
    def mean_cellular_rate(self) -> float:
        return sum(loc.cellular_rate for loc in self.locations) / self.n_locations

    def initial_state(self, location: int) -> State:
        return State(location, self.size_units)

    def theta_at(self, epoch: int) -> float:
        if self.theta_schedule is not None:
            return self.theta_schedule[epoch - 1]
        return self.costs.energy_preference

    def rate_units(self, location: int, network: Network) -> int:
        """Capacity of a network at a location, in sigma counts per slot."""
        rate = self.locations[location].rate(network)
        return int(rate / self.sigma + 1e-9)

    def with_theta(self, theta: float) -> "Scenario":
        """Copy of this scenario with a constant energy preference."""
        costs = CostParams(self.costs.price_per_mbit, theta, self.costs.penalty_coefficient)
        return Scenario(
            grid_width=self.grid_width,
            grid_height=self.grid_height,
            locations=self.locations,
            mobility=self.mobility,
            flows=self.flows,
            horizon=self.horizon,
            costs=costs,
            sigma=self.sigma,
            rng_seed=self.rng_seed,
            theta_schedule=None,
            start_location=self.start_location,
        )

    @cached_property
    def fingerprint(self) -> str:
        """Content hash, stable across platforms for a fixed build."""
        payload = {
            "grid": [self.grid_width, self.grid_height],
            "locations": [
                [
                    loc.wlan_available,
                    repr(loc.cellular_rate),
                    repr(loc.wlan_rate),
                    repr(loc.cellular_energy_rate),
                    repr(loc.wlan_energy_rate),
                ]
                for loc in self.locations
            ],
            "mobility": hashlib.sha256(
                self.mobility.transition_matrix.tobytes()
            ).hexdigest(),
            "flows": [[repr(f.total_size), f.deadline] for f in self.flows],
            "horizon": self.horizon,
            "costs": [
                repr(self.costs.price_per_mbit),
                repr(self.costs.energy_preference),
                repr(self.costs.penalty_coefficient),
            ],
            "sigma": repr(self.sigma),
            "theta_schedule": None
            if self.theta_schedule is None
            else [repr(x) for x in self.theta_schedule],
            "seed": self.rng_seed,
            "start": self.start_location,
        }
        blob = json.dumps(payload, separators=(",", ":"), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def scenario_id(self) -> str:
        return self.fingerprint[:12]


def _is_multiple(value: float, step: float) -> bool:
    ratio = value / step
    return abs(ratio - round(ratio)) < 1e-9


def active_flow_mask(epoch: int, flows: Sequence[FlowSpec], remaining: Sequence[int]) -> tuple[bool, ...]:
    """Flows that may still be served: unexpired (t <= deadline) with data left."""
    return tuple(epoch <= f.deadline and b > 0 for f, b in zip(flows, remaining))


def check_action_feasible(
    state: State,
    action: Action,
    location: LocationProfile | None = None,
    flows: Sequence[FlowSpec] | None = None,
    epoch: int | None = None,
    sigma: float = 1.0,
) -> None:
    """Raise FeasibilityError if the action violates any constraint checkable here.

    Capacity is only checked when the location is supplied; expiry only when
    flows and the epoch are supplied.
    """
    if len(action.allocation) != len(state.remaining):
        raise FeasibilityError("allocation length does not match the flow count")
    for j, (a, b) in enumerate(zip(action.allocation, state.remaining)):
        if a > b:
            raise FeasibilityError(f"flow {j}: allocation {a} exceeds remaining {b}")
    if location is not None and action.network is not Network.IDLE:
        if action.network is Network.WLAN and not location.wlan_available:
            raise FeasibilityError(f"no WLAN at location {location.id}")
        cap = int(location.rate(action.network) / sigma + 1e-9)
        if action.total > cap:
            raise FeasibilityError(
                f"total allocation {action.total} exceeds capacity {cap} units"
            )
    if flows is not None and epoch is not None:
        for f, a in zip(flows, action.allocation):
            if a > 0 and epoch > f.deadline:
                raise FeasibilityError(f"flow {f.id} is past its deadline at t={epoch}")


def monetary_cost(state: State, action: Action, costs: CostParams, sigma: float = 1.0) -> float:
    """Usage-based payment for the slot: price times cellular data served, in yen.

    WLAN is free of charge and idling costs nothing.
    """
    check_action_feasible(state, action)
    if action.network is not Network.CELLULAR:
        return 0.0
    served = sum(min(b, a) for b, a in zip(state.remaining, action.allocation))
    return costs.price_per_mbit * sigma * served


def raw_energy(
    state: State, action: Action, location: LocationProfile, sigma: float = 1.0
) -> float:
    """Unweighted energy drawn this slot, in joule."""
    check_action_feasible(state, action, location=location, sigma=sigma)
    if action.network is Network.IDLE:
        return 0.0
    served = sum(min(b, a) for b, a in zip(state.remaining, action.allocation))
    return location.energy_rate(action.network) * sigma * served


def energy_cost(
    state: State,
    action: Action,
    location: LocationProfile,
    costs: CostParams,
    sigma: float = 1.0,
    theta: float | None = None,
) -> float:
    """Preference-weighted energy term of the slot objective.

    Both network terms are computed in the general form; under the
    one-network-at-a-time rule one of them is always zero.
    """
    check_action_feasible(state, action, location=location, sigma=sigma)
    weight = costs.energy_preference if theta is None else theta
    cell = wlan = 0.0
    if action.network is Network.CELLULAR:
        cell = sum(min(b, a) for b, a in zip(state.remaining, action.allocation))
    elif action.network is Network.WLAN:
        wlan = sum(min(b, a) for b, a in zip(state.remaining, action.allocation))
    return weight * sigma * (
        location.cellular_energy_rate * cell + location.wlan_energy_rate * wlan
    )


def penalty(remaining_at_deadline: Iterable[int], costs: CostParams, sigma: float = 1.0) -> float:
    """Charge on data left unfinished, over the flows whose deadline just elapsed."""
    return costs.penalty_coefficient * sigma * sum(remaining_at_deadline)


def stage_reward(
    state: State,
    action: Action,
    location: LocationProfile,
    costs: CostParams,
    sigma: float = 1.0,
    theta: float | None = None,
) -> float:
    """Per-slot cost: monetary payment plus weighted energy."""
    return monetary_cost(state, action, costs, sigma) + energy_cost(
        state, action, location, costs, sigma, theta
    )


def apply_action(state: State, action: Action) -> tuple[int, ...]:
    """Deterministic size transition: remaining minus served, floored at zero."""
    check_action_feasible(state, action)
    return tuple(max(b - a, 0) for b, a in zip(state.remaining, action.allocation))


def edf_allocation(
    remaining: Sequence[int], active: Sequence[bool], capacity: int
) -> tuple[int, ...]:
    """Fill capacity greedily in flow order (flows are deadline-sorted)."""
    out = []
    left = capacity
    for b, ok in zip(remaining, active):
        a = min(b, left) if ok else 0
        out.append(a)
        left -= a
    return tuple(out)


def enumerate_actions(
    state: State,
    location: LocationProfile,
    epoch: int,
    flows: Sequence[FlowSpec],
    mode: ActionMode,
    sigma: float = 1.0,
) -> list[Action]:
    """All candidate actions at a state, deterministic and duplicate-free.

    The list is ordered to match the solver's tie-break preference: Idle
    first, then WLAN, then cellular; allocations within a network ascend
    lexicographically.
    """
    n = len(flows)
    active = active_flow_mask(epoch, flows, state.remaining)
    caps = [b if ok else 0 for b, ok in zip(state.remaining, active)]
    actions = [Action.idle(n)]
    networks = []
    if location.wlan_available:
        networks.append(Network.WLAN)
    networks.append(Network.CELLULAR)
    for net in networks:
        capacity = int(location.rate(net) / sigma + 1e-9)
        if capacity <= 0 or not any(active):
            continue
        if mode is ActionMode.EDF_RESTRICTED:
            alloc = edf_allocation(state.remaining, active, capacity)
            if sum(alloc) > 0:
                actions.append(Action(net, alloc))
        else:
            bounds = [min(c, capacity) for c in caps]
            for alloc in _bounded_compositions(bounds, capacity):
                actions.append(Action(net, alloc))
    return actions


def _bounded_compositions(bounds: Sequence[int], capacity: int):
    """Nonzero vectors with 0 <= a_j <= bounds[j] and sum <= capacity, in lex order."""
    ranges = [range(b + 1) for b in bounds]
    for combo in itertools.product(*ranges):
        total = sum(combo)
        if 0 < total <= capacity:
            yield combo


def count_bounded_compositions(bounds: Sequence[int], capacity: int) -> int:
    """Direct combinatorial count matching _bounded_compositions."""
    return sum(1 for _ in _bounded_compositions(bounds, capacity))
