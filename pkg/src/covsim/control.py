"""Centroid-seeking control law with speed saturation and deadband."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import bounded_voronoi
from .importance import ImportanceField
from .integration import DEFAULT_LOSS_TOL, cell_moments, sensor_loss_cell


class Layer(enum.Enum):
    GROUND = "ground"
    AERIAL = "aerial"
    DROPPED = "dropped"


@dataclass(frozen=True)
class AgentSpec:
    id: int
    layer: Layer
    v_max: float
    gain: float = 1.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if not self.v_max > 0:
            raise ValueError(f"v_max must be > 0, got {self.v_max}")


@dataclass(frozen=True)
class ControlParams:
    deadband: float = 0.02
    convergence_radius: float = 0.1  # airdrop trigger distance

    def __post_init__(self):
        if self.deadband < 0:
            raise ValueError(f"deadband must be >= 0, got {self.deadband}")


def command_velocity(p, c, spec: AgentSpec, params: ControlParams) -> np.ndarray:
    """Saturated proportional velocity toward the centroid, zero inside the deadband."""
    d = np.asarray(c, dtype=float) - np.asarray(p, dtype=float)
    dist = float(np.hypot(d[0], d[1]))
    if dist <= params.deadband:
        return np.zeros(2)
    speed = min(spec.gain * dist, spec.v_max)
    return (speed / dist) * d


def centroids_and_masses(positions, field: ImportanceField, tol: float = 1e-4):
    """Weighted centroid and cell mass per agent for the current tessellation."""
    tess = bounded_voronoi(positions, field.region)
    centroids = np.empty((len(tess.cells), 2))
    masses = np.empty(len(tess.cells))
    for i, cell in enumerate(tess.cells):
        cm = cell_moments(cell, field, tol=tol)
        centroids[i] = cm.centroid
        masses[i] = cm.mass
    return centroids, masses


def dynamics_rhs(
    positions, specs: list[AgentSpec], field: ImportanceField, params: ControlParams
) -> np.ndarray:
    """Commanded velocities for the whole team at the given positions."""
    p = np.asarray(positions, dtype=float).reshape(-1, 2)
    centroids, _ = centroids_and_masses(p, field)
    vel = np.empty_like(p)
    for i, spec in enumerate(specs):
        vel[i] = command_velocity(p[i], centroids[i], spec, params)
    return vel


def team_sensor_loss(positions, field: ImportanceField, tol: float = DEFAULT_LOSS_TOL) -> float:
    """Total quadratic sensing loss of the team over its tessellation."""
    p = np.asarray(positions, dtype=float).reshape(-1, 2)
    tess = bounded_voronoi(p, field.region)
    return sum(
        sensor_loss_cell(cell, p[i], field, tol=tol)
        for i, cell in enumerate(tess.cells)
    )
