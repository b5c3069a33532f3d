"""Result emission: fixed-column CSV and structured JSON."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from .exceptions import ConfigurationError
from .sim import AggregateReport, EpisodeResult

CSV_COLUMNS = (
    "scenario_id",
    "policy",
    "theta",
    "n_flows",
    "n_aps",
    "episodes",
    "mean_monetary_yen",
    "sd_monetary",
    "mean_energy_joule",
    "sd_energy",
    "mean_objective",
    "finish_rate",
    "seed",
)

_INT_COLUMNS = {"n_flows", "n_aps", "episodes", "seed"}


def _format_value(column: str, value) -> str:
    if column in _INT_COLUMNS:
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".6g")


def to_csv_text(reports: Sequence[AggregateReport]) -> str:
    """Rows in input order, 6 significant digits, every line newline-terminated."""
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        row = asdict(r)
        lines.append(",".join(_format_value(c, row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def to_json_text(reports: Sequence[AggregateReport]) -> str:
    payload = {"schema_version": 1, "reports": [asdict(r) for r in reports]}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit_report(reports: Sequence[AggregateReport], format: str, path: str | Path) -> None:
    if format == "csv":
        text = to_csv_text(reports)
    elif format == "json":
        text = to_json_text(reports)
    else:
        raise ConfigurationError(f"unknown report format {format!r}")
    Path(path).write_text(text)


def episode_to_dict(episode: EpisodeResult) -> dict:
    """JSON-ready dump of one episode, per-slot trace included."""
    return {
        "monetary_cost": episode.monetary_cost,
        "raw_energy": episode.raw_energy,
        "weighted_energy": episode.weighted_energy,
        "penalty_paid": episode.penalty_paid,
        "objective": episode.objective,
        "finished_flags": list(episode.finished_flags),
        "trace": [
            {
                "epoch": step.epoch,
                "location": step.location,
                "network": step.action.network.value,
                "allocation": list(step.action.allocation),
                "remaining_after": list(step.remaining_after),
            }
            for step in episode.trace
        ],
    }


def emit_traces(episodes: Sequence[EpisodeResult], path: str | Path) -> None:
    """Write episodes as JSON lines, one episode per line."""
    lines = [json.dumps(episode_to_dict(ep), sort_keys=True) for ep in episodes]
    Path(path).write_text("\n".join(lines) + "\n" if lines else "")
