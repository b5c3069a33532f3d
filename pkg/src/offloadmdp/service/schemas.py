"""Request/response models for the HTTP API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..config import ScenarioConfig

PolicyName = Literal["dp", "heuristic", "baseline", "price_only"]


class HealthResponse(BaseModel):
    status: str
    version: str


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    workers: int = Field(default=1, ge=1)


class SolveResponse(BaseModel):
    fingerprint: str
    horizon: int
    n_locations: int
    state_count: int
    action_mode: str
    mean_start_value: float
    start_values: list[float]
    policy_b64: str


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    policy: PolicyName = "dp"
    episodes: int | None = Field(default=None, ge=1)
    seed: int | None = None
    policy_b64: str | None = None
    workers: int = Field(default=1, ge=1)


class ReportModel(BaseModel):
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
    sd_objective: float
    mean_penalty: float
    mean_weighted_energy: float


class SimulateResponse(BaseModel):
    report: ReportModel


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ScenarioConfig
    axis: Literal["theta", "flows", "aps", "deadline"]
    values: list[float] = Field(min_length=1)
    policies: list[PolicyName] | None = None
    episodes: int | None = Field(default=None, ge=1)
    seed: int | None = None
    workers: int = Field(default=1, ge=1)


class SweepResponse(BaseModel):
    reports: list[ReportModel]
    csv: str


class FitEnergyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: list[tuple[float, float]] = Field(min_length=2)


class FitEnergyResponse(BaseModel):
    amplitude: float
    decay: float


class OracleCheckRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instances: int = Field(default=25, ge=1)
    seed: int = 0


class OracleCaseModel(BaseModel):
    scenario_id: str
    n_locations: int
    n_flows: int
    horizon: int
    start_location: int
    dp_value: float
    brute_force: float
    abs_diff: float


class OracleCheckResponse(BaseModel):
    instances: int
    comparisons: int
    max_abs_diff: float
    passed: bool
    cases: list[OracleCaseModel]
