"""Energy-per-Mbit curves and their estimation from measurements.

Energy cost per Mbit falls off exponentially with link throughput: fast links
finish sooner and spend less radio-on time per bit. Two built-in curves are
available; both are strictly decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class EnergyCurve:
    """joule/Mbit as a function of throughput: amplitude * exp(-decay * x)."""

    amplitude: float
    decay: float

    def __post_init__(self):
        if self.amplitude <= 0 or self.decay <= 0:
            raise ConfigurationError("energy curve needs amplitude > 0 and decay > 0")

    def __call__(self, throughput: float) -> float:
        return self.amplitude * float(np.exp(-self.decay * throughput))


F1 = EnergyCurve(1.4274, 0.063)
F2 = EnergyCurve(1.4, 0.09)

NAMED_CURVES = {"f1": F1, "f2": F2}


def named_curve(name: str) -> EnergyCurve:
    try:
        return NAMED_CURVES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown energy curve {name!r}; expected one of {sorted(NAMED_CURVES)}"
        ) from None


def fit_energy_curve(samples: Sequence[tuple[float, float]]) -> EnergyCurve:
    """Least-squares exponential fit via the log-linearized model
    log(e) = log(amplitude) - decay * x."""
    if len(samples) < 2:
        raise ConfigurationError("need at least two (throughput, energy) samples")
    xs = np.array([s[0] for s in samples], dtype=float)
    ys = np.array([s[1] for s in samples], dtype=float)
    if (ys <= 0).any() or (xs < 0).any():
        raise ConfigurationError("samples must have positive energy and throughput >= 0")
    slope, intercept = np.polyfit(xs, np.log(ys), 1)
    return EnergyCurve(amplitude=float(np.exp(intercept)), decay=float(-slope))
