"""Human-editable scenario configuration (versioned JSON schema).

The defaults reproduce the reference simulation setup: a 4x4 grid with eight
randomly placed WLAN APs, truncated-normal per-location throughputs, a
0.1875 yen/Mbit usage price (1.5 yen per Mbyte), and a linear lateness
penalty of 2 yen-equivalents per Mbit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = 1


class RateDistribution(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mean: float = Field(gt=0)
    stddev: float = Field(gt=0)
    lo: float = Field(ge=0)
    hi: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo < self.hi:
            raise ValueError("rate bounds must satisfy lo < hi")
        return self


class EnergyCurveSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    amplitude: float = Field(gt=0)
    decay: float = Field(gt=0)


class FlowConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    total_size_mbit: float = Field(gt=0)
    deadline: int = Field(ge=1)


class HeuristicConfig(BaseModel):
    """Fixed thresholds; leave unset to use the per-slot dynamic defaults."""

    model_config = ConfigDict(extra="forbid")

    deadline_threshold: float | None = Field(default=None, ge=0)
    wlan_speed_threshold: float | None = Field(default=None, ge=0)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    grid_width: int = Field(default=4, ge=1)
    grid_height: int = Field(default=4, ge=1)
    stay_prob: float = Field(default=0.6, ge=0.0, le=1.0)
    adjacency: Literal["von_neumann", "moore"] = "von_neumann"
    ap_count: int = Field(default=8, ge=0)
    wlan_rate: RateDistribution = RateDistribution(mean=15.0, stddev=6.0, lo=9.0, hi=21.0)
    cellular_rate: RateDistribution = RateDistribution(mean=10.0, stddev=5.0, lo=5.0, hi=15.0)
    energy_curve: Union[Literal["f1", "f2"], EnergyCurveSpec] = "f1"
    flows: list[FlowConfig] = Field(
        default=[
            FlowConfig(total_size_mbit=500, deadline=140),
            FlowConfig(total_size_mbit=550, deadline=280),
            FlowConfig(total_size_mbit=600, deadline=420),
            FlowConfig(total_size_mbit=650, deadline=560),
        ],
        min_length=1,
    )
    sigma_mbit: float = Field(default=1.0, gt=0)
    price_yen_per_mbit: float = Field(default=0.1875, ge=0)
    penalty_yen_per_mbit: float = Field(default=2.0, ge=0)
    theta: float = Field(default=0.0, ge=0)
    theta_schedule: list[float] | None = None
    start_location: int | None = Field(default=None, ge=0)
    heuristic: HeuristicConfig = HeuristicConfig()
    seed: int = 0
    episodes: int = Field(default=1000, ge=1)
    action_mode: Literal["auto", "exhaustive", "edf"] = "auto"

    @model_validator(mode="after")
    def _consistent(self):
        area = self.grid_width * self.grid_height
        if self.ap_count > area:
            raise ValueError(f"ap_count {self.ap_count} exceeds the {area}-cell grid")
        if self.start_location is not None and self.start_location >= area:
            raise ValueError("start_location outside the grid")
        horizon = max(f.deadline for f in self.flows)
        if self.theta_schedule is not None:
            if len(self.theta_schedule) < horizon:
                raise ValueError("theta_schedule must cover every epoch up to the horizon")
            if any(x < 0 for x in self.theta_schedule):
                raise ValueError("theta_schedule entries must be >= 0")
        for i, f in enumerate(self.flows):
            ratio = f.total_size_mbit / self.sigma_mbit
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(
                    f"flow {i} size {f.total_size_mbit} is not a multiple of "
                    f"sigma {self.sigma_mbit}"
                )
        return self


def load_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    return ScenarioConfig.model_validate(json.loads(text))


def save_config(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(config.model_dump_json(indent=2) + "\n")
