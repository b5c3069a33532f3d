"""Service operations: pure functions from request models to response models.

The FastAPI routes and the CLI both delegate here, so running through the
HTTP API or through the thin client in-process yields identical results.
"""

from __future__ import annotations

import base64
from dataclasses import asdict

from ..dp import backward_induction, policy_from_bytes, policy_to_bytes
from ..energy import fit_energy_curve
from ..heuristic import TablePolicy, make_policy
from ..reports import to_csv_text
from ..scenario_gen import generate_scenario
from ..sim import AggregateReport, monte_carlo
from ..sweep import heuristic_params_from, resolve_action_mode, run_sweep
from ..verification import oracle_check
from . import schemas


def _report_model(report: AggregateReport) -> schemas.ReportModel:
    return schemas.ReportModel(**asdict(report))


def solve(request: schemas.SolveRequest) -> schemas.SolveResponse:
    scenario = generate_scenario(request.config)
    mode = resolve_action_mode(request.config)
    value_table, policy_table = backward_induction(
        scenario, mode, workers=request.workers
    )
    starts = [
        value_table.value(1, scenario.initial_state(l))
        for l in range(scenario.n_locations)
    ]
    return schemas.SolveResponse(
        fingerprint=scenario.fingerprint,
        horizon=scenario.horizon,
        n_locations=scenario.n_locations,
        state_count=scenario.n_locations * int(value_table.values.shape[2]),
        action_mode=policy_table.action_mode.value,
        mean_start_value=sum(starts) / len(starts),
        start_values=starts,
        policy_b64=base64.b64encode(policy_to_bytes(policy_table)).decode(),
    )


def simulate(request: schemas.SimulateRequest) -> schemas.SimulateResponse:
    scenario = generate_scenario(request.config)
    mode = resolve_action_mode(request.config)
    episodes = request.episodes or request.config.episodes
    seed = request.seed if request.seed is not None else request.config.seed
    if request.policy_b64 is not None:
        table = policy_from_bytes(base64.b64decode(request.policy_b64))
        policy = TablePolicy(table)
    else:
        policy = make_policy(
            scenario,
            request.policy,
            params=heuristic_params_from(request.config),
            action_mode=mode,
            workers=request.workers,
        )
    report = monte_carlo(scenario, policy, episodes, seed, label=request.policy)
    return schemas.SimulateResponse(report=_report_model(report))


def sweep(request: schemas.SweepRequest) -> schemas.SweepResponse:
    reports = run_sweep(
        request.config,
        request.axis,
        request.values,
        policies=list(request.policies) if request.policies is not None else None,
        episodes=request.episodes,
        seed=request.seed,
        workers=request.workers,
    )
    return schemas.SweepResponse(
        reports=[_report_model(r) for r in reports],
        csv=to_csv_text(reports),
    )


def fit_energy(request: schemas.FitEnergyRequest) -> schemas.FitEnergyResponse:
    curve = fit_energy_curve(request.samples)
    return schemas.FitEnergyResponse(amplitude=curve.amplitude, decay=curve.decay)


def run_oracle_check(request: schemas.OracleCheckRequest) -> schemas.OracleCheckResponse:
    result = oracle_check(instances=request.instances, seed=request.seed)
    return schemas.OracleCheckResponse(
        instances=result.instances,
        comparisons=len(result.cases),
        max_abs_diff=result.max_abs_diff,
        passed=result.passed,
        cases=[
            schemas.OracleCaseModel(
                scenario_id=c.scenario_id,
                n_locations=c.n_locations,
                n_flows=c.n_flows,
                horizon=c.horizon,
                start_location=c.start_location,
                dp_value=c.dp_value,
                brute_force=c.brute_force,
                abs_diff=c.abs_diff,
            )
            for c in result.cases
        ],
    )
