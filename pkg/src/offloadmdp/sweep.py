"""Experiment sweeps: vary one scenario axis, run every policy, collect reports.

All values of a sweep reuse the same scenario seed, so draws are aligned
across the axis (see scenario_gen) and every policy sees the same episode
seed streams; comparisons across policies and axis levels are paired.
"""

from __future__ import annotations

from .config import ScenarioConfig
from .dp import backward_induction
from .exceptions import ConfigurationError
from .heuristic import (
    BaselinePolicy,
    HeuristicParams,
    HeuristicPolicy,
    TablePolicy,
    price_only_policy,
)
from .model import ActionMode, Scenario
from .sim import AggregateReport, monte_carlo

SWEEP_AXES = ("theta", "flows", "aps", "deadline")
POLICY_ORDER = ("dp", "heuristic", "baseline", "price_only")


def apply_axis(config: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Config copy with one axis changed; other fields untouched."""
    if axis == "theta":
        return config.model_copy(update={"theta": float(value)})
    if axis == "aps":
        return config.model_copy(update={"ap_count": int(value)})
    if axis == "flows":
        count = int(value)
        if not 1 <= count <= len(config.flows):
            raise ConfigurationError(
                f"flow count {count} outside 1..{len(config.flows)} configured flows"
            )
        return config.model_copy(update={"flows": config.flows[:count]})
    if axis == "deadline":
        # value is the new last deadline; earlier deadlines scale proportionally.
        last = max(f.deadline for f in config.flows)
        scaled = [
            f.model_copy(update={"deadline": max(1, round(f.deadline * value / last))})
            for f in config.flows
        ]
        return config.model_copy(update={"flows": scaled})
    raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def resolve_action_mode(config: ScenarioConfig) -> ActionMode | None:
    if config.action_mode == "exhaustive":
        return ActionMode.EXHAUSTIVE
    if config.action_mode == "edf":
        return ActionMode.EDF_RESTRICTED
    return None


def heuristic_params_from(config: ScenarioConfig) -> HeuristicParams | None:
    h = config.heuristic
    if h.deadline_threshold is None and h.wlan_speed_threshold is None:
        return None
    if h.deadline_threshold is None or h.wlan_speed_threshold is None:
        raise ConfigurationError(
            "set both heuristic thresholds or neither (dynamic defaults)"
        )
    return HeuristicParams(h.deadline_threshold, h.wlan_speed_threshold)


def default_policies(scenario: Scenario) -> list[str]:
    names = ["dp", "heuristic", "baseline"]
    if scenario.n_flows == 1:
        names.append("price_only")
    return names


def run_policies(
    scenario: Scenario,
    policies: list[str],
    episodes: int,
    base_seed: int,
    action_mode: ActionMode | None = None,
    heuristic_params: HeuristicParams | None = None,
    workers: int = 1,
) -> list[AggregateReport]:
    """Monte Carlo reports for the named policies on one scenario, in a fixed order."""
    reports = []
    dp_table = None
    for name in POLICY_ORDER:
        if name not in policies:
            continue
        if name == "dp":
            if dp_table is None:
                _, dp_table = backward_induction(scenario, action_mode, workers)
            policy = TablePolicy(dp_table)
        elif name == "heuristic":
            policy = HeuristicPolicy(scenario, heuristic_params)
        elif name == "baseline":
            policy = BaselinePolicy(scenario)
        else:
            policy = TablePolicy(price_only_policy(scenario, action_mode, workers))
        reports.append(monte_carlo(scenario, policy, episodes, base_seed, label=name))
    return reports


def run_sweep(
    config: ScenarioConfig,
    axis: str,
    values: list[float],
    policies: list[str] | None = None,
    episodes: int | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> list[AggregateReport]:
    """One report row per (axis value, policy), in deterministic order."""
    from .scenario_gen import generate_scenario

    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    base = config if seed is None else config.model_copy(update={"seed": seed})
    reports: list[AggregateReport] = []
    for value in values:
        cfg = apply_axis(base, axis, value)
        scenario = generate_scenario(cfg)
        names = policies if policies is not None else default_policies(scenario)
        for name in names:
            if name not in POLICY_ORDER:
                raise ConfigurationError(f"unknown policy {name!r}")
            if name == "price_only" and scenario.n_flows != 1:
                raise ConfigurationError(
                    "price_only requires a single-flow scenario"
                )
        reports.extend(
            run_policies(
                scenario,
                list(names),
                episodes if episodes is not None else cfg.episodes,
                cfg.seed,
                resolve_action_mode(cfg),
                heuristic_params_from(cfg),
                workers,
            )
        )
    return reports
