"""Randomized scenario construction: AP placement and per-location throughputs.

The generator consumes its random stream in a fixed order regardless of
``ap_count`` (one full AP permutation, then one cellular and one WLAN draw per
cell), so scenarios generated from the same seed at different AP counts share
their rate landscape and their AP sets are nested. That makes sweeps over the
AP axis directly comparable.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr, ndtri

from .config import ScenarioConfig
from .energy import EnergyCurve, named_curve
from .exceptions import ConfigurationError
from .mobility import build_grid_mobility
from .model import CostParams, FlowSpec, LocationProfile, Scenario

_REJECTION_MIN_MASS = 0.01


def truncated_normal_sample(
    mean: float, stddev: float, lo: float, hi: float, rng: np.random.Generator
) -> float:
    """One draw from Normal(mean, stddev) conditioned on [lo, hi].

    Rejection sampling while the window keeps at least 1% of the mass;
    otherwise an inverse-CDF transform of a single uniform, which also covers
    degenerate windows.
    """
    if not lo < hi:
        raise ConfigurationError("truncation bounds must satisfy lo < hi")
    if stddev <= 0:
        raise ConfigurationError("stddev must be > 0")
    z_lo = (lo - mean) / stddev
    z_hi = (hi - mean) / stddev
    mass = float(ndtr(z_hi) - ndtr(z_lo))
    if mass < _REJECTION_MIN_MASS:
        if mass <= 0.0:
            return (lo + hi) / 2.0
        u = rng.random()
        x = mean + stddev * float(ndtri(ndtr(z_lo) + u * mass))
        return min(max(x, lo), hi)
    while True:
        x = rng.normal(mean, stddev)
        if lo <= x <= hi:
            return float(x)


def truncated_normal_mean(mean: float, stddev: float, lo: float, hi: float) -> float:
    """Analytic mean of the truncated distribution (test oracle and sanity checks)."""
    z_lo = (lo - mean) / stddev
    z_hi = (hi - mean) / stddev
    phi = lambda z: np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    mass = ndtr(z_hi) - ndtr(z_lo)
    return float(mean + stddev * (phi(z_lo) - phi(z_hi)) / mass)


def _resolve_curve(spec) -> EnergyCurve:
    if isinstance(spec, str):
        return named_curve(spec)
    if isinstance(spec, EnergyCurve):
        return spec
    return EnergyCurve(amplitude=spec.amplitude, decay=spec.decay)


def _quantize_rate(rate: float, sigma: float) -> float:
    units = max(1, int(round(rate / sigma)))
    return units * sigma


def generate_scenario(config: ScenarioConfig, rng: np.random.Generator | None = None) -> Scenario:
    """Materialize a scenario from a config, deterministic given the seed.

    WLAN cells are the first ``ap_count`` entries of a random permutation;
    every location draws both throughputs from their truncated normals; rates
    are snapped to the sigma grid (nearest multiple, at least one unit) and
    the energy rate of each link is the curve evaluated at its snapped rate.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    width, height = config.grid_width, config.grid_height
    n = width * height
    sigma = config.sigma_mbit
    curve = _resolve_curve(config.energy_curve)

    permutation = rng.permutation(n)
    ap_cells = set(int(c) for c in permutation[: config.ap_count])
    cellular_raw = [
        truncated_normal_sample(
            config.cellular_rate.mean,
            config.cellular_rate.stddev,
            config.cellular_rate.lo,
            config.cellular_rate.hi,
            rng,
        )
        for _ in range(n)
    ]
    wlan_raw = [
        truncated_normal_sample(
            config.wlan_rate.mean,
            config.wlan_rate.stddev,
            config.wlan_rate.lo,
            config.wlan_rate.hi,
            rng,
        )
        for _ in range(n)
    ]

    locations = []
    for l in range(n):
        cell_rate = _quantize_rate(cellular_raw[l], sigma)
        has_wlan = l in ap_cells
        wlan_rate = _quantize_rate(wlan_raw[l], sigma) if has_wlan else 0.0
        locations.append(
            LocationProfile(
                id=l,
                wlan_available=has_wlan,
                cellular_rate=cell_rate,
                wlan_rate=wlan_rate,
                cellular_energy_rate=curve(cell_rate),
                wlan_energy_rate=curve(wlan_rate) if has_wlan else 0.0,
            )
        )

    ordered = sorted(config.flows, key=lambda f: f.deadline)
    flows = tuple(
        FlowSpec(id=j, total_size=f.total_size_mbit, deadline=f.deadline)
        for j, f in enumerate(ordered)
    )
    horizon = max(f.deadline for f in flows)
    mobility = build_grid_mobility(width, height, config.stay_prob, config.adjacency)
    costs = CostParams(
        price_per_mbit=config.price_yen_per_mbit,
        energy_preference=config.theta,
        penalty_coefficient=config.penalty_yen_per_mbit,
    )
    return Scenario(
        grid_width=width,
        grid_height=height,
        locations=tuple(locations),
        mobility=mobility,
        flows=flows,
        horizon=horizon,
        costs=costs,
        sigma=sigma,
        rng_seed=config.seed,
        theta_schedule=tuple(config.theta_schedule) if config.theta_schedule else None,
        start_location=config.start_location,
    )
