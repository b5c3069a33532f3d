"""Grid random-walk mobility: transition matrix construction and sampling.

Cells are indexed row-major over the grid. The walk stays put with a fixed
probability and otherwise moves to a uniformly chosen adjacent cell
(4-connected by default, 8-connected optionally); boundary cells renormalize
the move mass over their actual neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import ConfigurationError

_ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MobilityModel:
    transition_matrix: np.ndarray
    grid_width: int
    grid_height: int

    def __post_init__(self):
        p = np.asarray(self.transition_matrix, dtype=float)
        object.__setattr__(self, "transition_matrix", p)
        n = self.grid_width * self.grid_height
        if p.shape != (n, n):
            raise ConfigurationError(f"transition matrix must be {n}x{n}, got {p.shape}")
        if (p < 0).any():
            raise ConfigurationError("transition probabilities must be >= 0")
        if np.abs(p.sum(axis=1) - 1.0).max() > _ROW_TOL:
            raise ConfigurationError("every transition row must sum to 1")

    @property
    def n_locations(self) -> int:
        return self.grid_width * self.grid_height

    @cached_property
    def _row_cumulative(self) -> np.ndarray:
        return np.cumsum(self.transition_matrix, axis=1)


def grid_neighbors(width: int, height: int, index: int, adjacency: str = "von_neumann") -> list[int]:
    """In-grid neighbour indices of a cell, row-major."""
    r, c = divmod(index, width)
    if adjacency == "von_neumann":
        offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    elif adjacency == "moore":
        offsets = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    else:
        raise ConfigurationError(f"unknown adjacency {adjacency!r}")
    out = []
    for dr, dc in offsets:
        rr, cc = r + dr, c + dc
        if 0 <= rr < height and 0 <= cc < width:
            out.append(rr * width + cc)
    return out


def build_grid_mobility(
    width: int, height: int, stay_prob: float, adjacency: str = "von_neumann"
) -> MobilityModel:
    """Random-walk transition matrix on a grid.

    The diagonal carries ``stay_prob``; the rest of each row splits
    ``1 - stay_prob`` equally among that cell's neighbours.
    """
    if width < 1 or height < 1:
        raise ConfigurationError("grid dimensions must be >= 1")
    if not 0.0 <= stay_prob <= 1.0:
        raise ConfigurationError("stay_prob must lie in [0, 1]")
    n = width * height
    move = 1.0 - stay_prob
    p = np.zeros((n, n))
    for i in range(n):
        nbrs = grid_neighbors(width, height, i, adjacency)
        p[i, i] = stay_prob
        if move > 0:
            if not nbrs:
                raise ConfigurationError(
                    "single-cell grid cannot move: set stay_prob = 1"
                )
            for j in nbrs:
                p[i, j] = move / len(nbrs)
    return MobilityModel(p, width, height)


def next_location(model: MobilityModel, current: int, rng: np.random.Generator) -> int:
    """Sample the next cell from the row of the current one."""
    u = rng.random()
    idx = int(np.searchsorted(model._row_cumulative[current], u, side="right"))
    return min(idx, model.n_locations - 1)


def sample_trace(
    model: MobilityModel, start: int, horizon: int, rng: np.random.Generator
) -> list[int]:
    """Realized location path of length ``horizon`` beginning at ``start``."""
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    trace = [start]
    for _ in range(horizon - 1):
        trace.append(next_location(model, trace[-1], rng))
    return trace


def stationary_distribution(model: MobilityModel) -> np.ndarray:
    """Exact stationary vector by linear solve (replaces one balance equation
    with the normalization constraint)."""
    n = model.n_locations
    a = model.transition_matrix.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(a, b)
