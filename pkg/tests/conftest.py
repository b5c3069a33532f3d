"""Shared builders for hand-crafted scenarios."""

from __future__ import annotations

import pytest

from offloadmdp.mobility import build_grid_mobility
from offloadmdp.model import CostParams, FlowSpec, LocationProfile, Scenario


def make_profile(
    idx: int,
    cellular_rate: float = 2.0,
    wlan_rate: float = 0.0,
    cellular_energy: float = 0.8,
    wlan_energy: float = 0.4,
) -> LocationProfile:
    return LocationProfile(
        id=idx,
        wlan_available=wlan_rate > 0,
        cellular_rate=cellular_rate,
        wlan_rate=wlan_rate,
        cellular_energy_rate=cellular_energy,
        wlan_energy_rate=wlan_energy if wlan_rate > 0 else 0.0,
    )


def make_scenario(
    grid=(2, 1),
    profiles=None,
    flows=((5.0, 3),),
    sigma=1.0,
    price=0.1875,
    theta=0.0,
    penalty_coefficient=2.0,
    stay_prob=0.6,
    seed=0,
    theta_schedule=None,
    start_location=None,
) -> Scenario:
    width, height = grid
    n = width * height
    if profiles is None:
        profiles = tuple(
            make_profile(i, wlan_rate=10.0 if i == n - 1 else 0.0) for i in range(n)
        )
    flow_specs = tuple(
        FlowSpec(id=j, total_size=float(size), deadline=int(deadline))
        for j, (size, deadline) in enumerate(flows)
    )
    return Scenario(
        grid_width=width,
        grid_height=height,
        locations=tuple(profiles),
        mobility=build_grid_mobility(width, height, stay_prob),
        flows=flow_specs,
        horizon=max(f.deadline for f in flow_specs),
        costs=CostParams(price, theta, penalty_coefficient),
        sigma=sigma,
        rng_seed=seed,
        theta_schedule=theta_schedule,
        start_location=start_location,
    )


@pytest.fixture
def wlan_profile():
    return make_profile(0, cellular_rate=10.0, wlan_rate=15.0,
                        cellular_energy=0.7107, wlan_energy=0.484)


@pytest.fixture
def cellular_profile():
    return make_profile(0, cellular_rate=10.0, cellular_energy=0.7107)
