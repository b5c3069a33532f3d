"""Exact finite-horizon solver: Bellman backup, backward induction, policy tables.

Value and policy tables are dense over (epoch, location, size grid), with the
size grid indexed by integer sigma counts. Two search paths share the same
arithmetic kernels:

* an exhaustive path that enumerates every sigma-granular allocation
  (mandatory for optimality-oracle comparisons), and
* a vectorized path for the EDF-restricted action set, where each network
  contributes exactly one "pour capacity in deadline order" action and the
  whole size grid is backed up with array ops.

Penalty bookkeeping: a flow with deadline T is charged on its post-action
remaining size at epoch T. Flows whose deadline is the horizon live in the
boundary values; earlier deadlines are folded into the backup at their own
epoch, so the recursion telescopes to the episode objective.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from .exceptions import (
    InternalConsistencyError,
    PolicyLookupError,
    SizingError,
)
from .model import (
    Action,
    ActionMode,
    Network,
    Scenario,
    State,
    apply_action,
    enumerate_actions,
    stage_reward,
)

POLICY_FORMAT_VERSION = 1
DEFAULT_MEMORY_BUDGET = 2 << 30

_NET_CODES = {Network.IDLE: 0, Network.CELLULAR: 1, Network.WLAN: 2}
_CODE_NETS = {v: k for k, v in _NET_CODES.items()}


class SizeSpace:
    """Flat indexing over the product grid of per-flow remaining sizes."""

    def __init__(self, dims: tuple[int, ...]):
        self.dims = dims
        self.n_states = int(np.prod(dims))
        flat = np.arange(self.n_states)
        self.grids = tuple(g.astype(np.int64) for g in np.unravel_index(flat, dims))
        strides = []
        acc = 1
        for d in reversed(dims):
            strides.append(acc)
            acc *= d
        self.strides = tuple(reversed(strides))

    def flat_of(self, remaining: tuple[int, ...]) -> int:
        idx = 0
        for b, d, s in zip(remaining, self.dims, self.strides):
            if not 0 <= b < d:
                raise PolicyLookupError(
                    f"remaining {remaining} outside the size grid {self.dims} "
                    "(sigma misalignment?)"
                )
            idx += b * s
        return idx

    def tuple_of(self, flat: int) -> tuple[int, ...]:
        return tuple(int(g[flat]) for g in self.grids)


def size_space(scenario: Scenario) -> SizeSpace:
    return SizeSpace(scenario.size_dims)


def stage_unit_cost(scenario: Scenario, location: int, network: Network, epoch: int) -> float:
    """Cost of serving one sigma unit at a location on a network, in yen-equivalents."""
    if network is Network.IDLE:
        return 0.0
    loc = scenario.locations[location]
    theta = scenario.theta_at(epoch)
    if network is Network.CELLULAR:
        return scenario.sigma * (
            scenario.costs.price_per_mbit + theta * loc.cellular_energy_rate
        )
    return scenario.sigma * (theta * loc.wlan_energy_rate)


@dataclass(frozen=True, eq=False)
class ValueTable:
    """Expected cost-to-go per (epoch, location, remaining vector).

    ``values[t-1]`` holds epoch t for t = 1..horizon+1; the final slice is the
    terminal boundary (last-deadline penalties).
    """

    sigma: float
    horizon: int
    dims: tuple[int, ...]
    n_locations: int
    values: np.ndarray
    fingerprint: str

    @cached_property
    def _space(self) -> SizeSpace:
        return SizeSpace(self.dims)

    def value(self, epoch: int, state: State) -> float:
        if not 1 <= epoch <= self.horizon + 1:
            raise PolicyLookupError(f"epoch {epoch} outside 1..{self.horizon + 1}")
        if not 0 <= state.location < self.n_locations:
            raise PolicyLookupError(f"location {state.location} out of range")
        return float(self.values[epoch - 1, state.location, self._space.flat_of(state.remaining)])


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """Minimizing action per (epoch, location, remaining vector)."""

    sigma: float
    horizon: int
    dims: tuple[int, ...]
    n_locations: int
    networks: np.ndarray
    allocations: np.ndarray
    fingerprint: str
    action_mode: ActionMode

    @cached_property
    def _space(self) -> SizeSpace:
        return SizeSpace(self.dims)

    @property
    def n_flows(self) -> int:
        return len(self.dims)

    def lookup(self, epoch: int, state: State) -> Action:
        return lookup_action(self, epoch, state)


def lookup_action(policy: PolicyTable, epoch: int, state: State) -> Action:
    """Stored argmin action; raises PolicyLookupError off the table's domain."""
    if not 1 <= epoch <= policy.horizon:
        raise PolicyLookupError(
            f"epoch {epoch} outside the policy domain 1..{policy.horizon}"
        )
    if not 0 <= state.location < policy.n_locations:
        raise PolicyLookupError(f"location {state.location} out of range")
    flat = policy._space.flat_of(state.remaining)
    code = int(policy.networks[epoch - 1, state.location, flat])
    if code == 0:
        return Action.idle(policy.n_flows)
    alloc = tuple(int(a) for a in policy.allocations[epoch - 1, state.location, flat])
    return Action(_CODE_NETS[code], alloc)


def q_value(
    scenario: Scenario,
    epoch: int,
    state: State,
    action: Action,
    next_values: Mapping[State, float] | Callable[[State], float],
) -> float:
    """One Bellman backup term: stage cost plus expected next-epoch cost.

    Adds the deadline penalty of flows expiring at this epoch (on the
    post-action remaining size); flows expiring at the horizon are already
    carried by the boundary values.
    """
    loc = scenario.locations[state.location]
    stage = stage_reward(
        state, action, loc, scenario.costs, scenario.sigma, scenario.theta_at(epoch)
    )
    nxt = apply_action(state, action)
    pen = 0.0
    if epoch < scenario.horizon:
        pen_unit = scenario.costs.penalty_coefficient * scenario.sigma
        pen = pen_unit * sum(
            nxt[j] for j, f in enumerate(scenario.flows) if f.deadline == epoch
        )
    row = scenario.mobility.transition_matrix[state.location]
    expected = 0.0
    for l_next, p in enumerate(row):
        if p == 0.0:
            continue
        s_next = State(l_next, nxt)
        try:
            v = next_values(s_next) if callable(next_values) else next_values[s_next]
        except KeyError as exc:
            raise InternalConsistencyError(
                f"missing next-epoch value for state {s_next}"
            ) from exc
        expected += float(p) * v
    return stage + pen + expected


def estimate_table_bytes(scenario: Scenario) -> int:
    space_states = int(np.prod(scenario.size_dims))
    n = scenario.n_locations * space_states
    value_bytes = (scenario.horizon + 1) * n * 8
    policy_bytes = scenario.horizon * n * (1 + 4 * scenario.n_flows)
    return value_bytes + policy_bytes


def default_action_mode(scenario: Scenario) -> ActionMode:
    """Exhaustive search for a single flow; EDF-restricted for multi-flow."""
    return ActionMode.EXHAUSTIVE if scenario.n_flows == 1 else ActionMode.EDF_RESTRICTED


def _boundary_values(scenario: Scenario, space: SizeSpace) -> np.ndarray:
    pen_unit = scenario.costs.penalty_coefficient * scenario.sigma
    due = [j for j, f in enumerate(scenario.flows) if f.deadline == scenario.horizon]
    total = np.zeros(space.n_states, dtype=np.int64)
    for j in due:
        total = total + space.grids[j]
    row = pen_unit * total
    return np.broadcast_to(row, (scenario.n_locations, space.n_states)).copy()


class _PourCache:
    """Post-pour grids per (capacity, expiry mask), shared across epochs."""

    def __init__(self, space: SizeSpace):
        self.space = space
        self._cache: dict[tuple[int, tuple[bool, ...]], dict] = {}

    def get(self, capacity: int, active: tuple[bool, ...]) -> dict:
        key = (capacity, active)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        space = self.space
        left = np.full(space.n_states, capacity, dtype=np.int64)
        next_grids = []
        allocs = []
        for j, ok in enumerate(active):
            g = space.grids[j]
            if ok:
                a = np.minimum(g, left)
                left = left - a
            else:
                a = np.zeros_like(g)
            next_grids.append(g - a)
            allocs.append(a)
        next_flat = np.zeros(space.n_states, dtype=np.int64)
        for ng, s in zip(next_grids, space.strides):
            next_flat += ng * s
        served = np.zeros(space.n_states, dtype=np.int64)
        for a in allocs:
            served += a
        entry = {
            "next_flat": next_flat,
            "next_grids": next_grids,
            "allocs": allocs,
            "served": served,
        }
        self._cache[key] = entry
        return entry


def backward_induction(
    scenario: Scenario,
    action_mode: ActionMode | None = None,
    workers: int = 1,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> tuple[ValueTable, PolicyTable]:
    """Solve the finite-horizon problem exactly, from the last epoch back to 1.

    Ties break toward Idle, then WLAN, then cellular, then the
    lexicographically smallest allocation, so tables are reproducible.
    Within an epoch, locations are independent given the next-epoch values;
    ``workers`` > 1 distributes them over threads with bit-identical results.
    """
    mode = action_mode or default_action_mode(scenario)
    est = estimate_table_bytes(scenario)
    if est > memory_budget:
        raise SizingError(
            f"state space too large: {scenario.n_locations} locations x sizes "
            f"{scenario.size_dims} x {scenario.horizon + 1} epochs needs about "
            f"{est / 2**30:.2f} GiB (budget {memory_budget / 2**30:.2f} GiB)"
        )
    space = size_space(scenario)
    n_loc, nb, m = scenario.n_locations, space.n_states, scenario.n_flows
    horizon = scenario.horizon
    p_matrix = scenario.mobility.transition_matrix

    values = np.empty((horizon + 1, n_loc, nb))
    networks = np.zeros((horizon, n_loc, nb), dtype=np.int8)
    allocations = np.zeros((horizon, n_loc, nb, m), dtype=np.int32)
    values[horizon] = _boundary_values(scenario, space)

    pours = _PourCache(space)
    pen_unit = scenario.costs.penalty_coefficient * scenario.sigma

    for t in range(horizon, 0, -1):
        ev = p_matrix @ values[t]
        due = (
            [j for j, f in enumerate(scenario.flows) if f.deadline == t]
            if t < horizon
            else []
        )
        unexpired = tuple(t <= f.deadline for f in scenario.flows)

        def backup(location: int, t=t, ev=ev, due=due, unexpired=unexpired):
            if mode is ActionMode.EDF_RESTRICTED:
                _backup_location_edf(
                    scenario, space, pours, t, location, ev, due, unexpired,
                    pen_unit, values[t - 1], networks[t - 1], allocations[t - 1],
                )
            else:
                _backup_location_generic(
                    scenario, space, t, location, ev, due, pen_unit,
                    values[t - 1], networks[t - 1], allocations[t - 1], mode,
                )

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(backup, range(n_loc)))
        else:
            for location in range(n_loc):
                backup(location)

    vt = ValueTable(
        sigma=scenario.sigma,
        horizon=horizon,
        dims=scenario.size_dims,
        n_locations=n_loc,
        values=values,
        fingerprint=scenario.fingerprint,
    )
    pt = PolicyTable(
        sigma=scenario.sigma,
        horizon=horizon,
        dims=scenario.size_dims,
        n_locations=n_loc,
        networks=networks,
        allocations=allocations,
        fingerprint=scenario.fingerprint,
        action_mode=mode,
    )
    return vt, pt


def _backup_location_edf(
    scenario, space, pours, epoch, location, ev, due, unexpired,
    pen_unit, out_values, out_networks, out_allocations,
):
    ev_row = ev[location]
    profile = scenario.locations[location]
    pen_idle = 0.0
    if due:
        tot = np.zeros(space.n_states, dtype=np.int64)
        for j in due:
            tot = tot + space.grids[j]
        pen_idle = pen_unit * tot
    q_rows = [pen_idle + ev_row]
    codes = [0]
    pour_entries = [None]

    nets = []
    if profile.wlan_available:
        nets.append(Network.WLAN)
    nets.append(Network.CELLULAR)
    for net in nets:
        cap = scenario.rate_units(location, net)
        if cap <= 0 or not any(unexpired):
            continue
        pour = pours.get(cap, unexpired)
        unit = stage_unit_cost(scenario, location, net, epoch)
        pen = 0.0
        if due:
            tot = np.zeros(space.n_states, dtype=np.int64)
            for j in due:
                tot = tot + pour["next_grids"][j]
            pen = pen_unit * tot
        q = pour["served"] * unit + pen + ev_row[pour["next_flat"]]
        q_rows.append(q)
        codes.append(_NET_CODES[net])
        pour_entries.append(pour)

    stack = np.stack(q_rows)
    choice = np.argmin(stack, axis=0)
    out_values[location] = np.take_along_axis(stack, choice[None, :], axis=0)[0]
    # A pour that serves nothing is the idle action in disguise.
    chosen_codes = np.array(codes, dtype=np.int8)[choice]
    for k, pour in enumerate(pour_entries):
        if pour is None:
            continue
        mask = choice == k
        if not mask.any():
            continue
        for j in range(scenario.n_flows):
            out_allocations[location][mask, j] = pour["allocs"][j][mask]
        served_here = pour["served"][mask]
        if (served_here == 0).any():
            zero = mask.copy()
            zero[mask] = served_here == 0
            chosen_codes[zero] = 0
    out_networks[location] = chosen_codes


def _backup_location_generic(
    scenario, space, epoch, location, ev, due, pen_unit,
    out_values, out_networks, out_allocations, mode,
):
    ev_row = ev[location]
    profile = scenario.locations[location]
    sigma = scenario.sigma
    flows = scenario.flows
    for flat in range(space.n_states):
        remaining = space.tuple_of(flat)
        state = State(location, remaining)
        best_q = None
        best_action = None
        for action in enumerate_actions(state, profile, epoch, flows, mode, sigma):
            nxt = apply_action(state, action)
            unit = stage_unit_cost(scenario, location, action.network, epoch)
            stage = action.total * unit
            pen = pen_unit * sum(nxt[j] for j in due) if due else 0.0
            q = stage + pen + ev_row[space.flat_of(nxt)]
            if best_q is None or q < best_q:
                best_q = q
                best_action = action
        out_values[location, flat] = best_q
        out_networks[location, flat] = _NET_CODES[best_action.network]
        out_allocations[location, flat] = best_action.allocation


def save_policy(policy: PolicyTable, path_or_buf) -> None:
    """Write a policy table as a versioned npz bundle (arrays + JSON metadata)."""
    meta = json.dumps(
        {
            "format_version": POLICY_FORMAT_VERSION,
            "kind": "policy_table",
            "sigma": policy.sigma,
            "horizon": policy.horizon,
            "dims": list(policy.dims),
            "n_locations": policy.n_locations,
            "fingerprint": policy.fingerprint,
            "action_mode": policy.action_mode.value,
        }
    )
    np.savez_compressed(
        path_or_buf,
        meta=np.array(meta),
        networks=policy.networks,
        allocations=policy.allocations,
    )


def load_policy(path_or_buf) -> PolicyTable:
    with np.load(path_or_buf, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != POLICY_FORMAT_VERSION:
            raise InternalConsistencyError(
                f"unsupported policy file version {meta.get('format_version')}"
            )
        return PolicyTable(
            sigma=float(meta["sigma"]),
            horizon=int(meta["horizon"]),
            dims=tuple(int(d) for d in meta["dims"]),
            n_locations=int(meta["n_locations"]),
            networks=data["networks"],
            allocations=data["allocations"],
            fingerprint=str(meta["fingerprint"]),
            action_mode=ActionMode(meta["action_mode"]),
        )


def policy_to_bytes(policy: PolicyTable) -> bytes:
    buf = io.BytesIO()
    save_policy(policy, buf)
    return buf.getvalue()


def policy_from_bytes(blob: bytes) -> PolicyTable:
    return load_policy(io.BytesIO(blob))
