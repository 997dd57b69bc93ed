"""Three-phase aerial/ground deployment with early-drop detection.

Phase 1 plans the aerial layer alone against the same importance field;
phase 2 runs the ground layer alone over the same interval; at the drop
time the aerial agents convert to slow ground sensors and phase 3 runs the
merged team.  Phases 1 and 2 share nothing, which is what prevents the
fast agents from being trapped by slow agents' cell boundaries.

The stitched loss series is normalized by the ground layer's initial loss
so it is directly comparable with a ground-only baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .control import AgentSpec, ControlParams, Layer, centroids_and_masses
from .importance import ImportanceField
from .simulation import (
    SimulationConfig,
    Trajectory,
    _solve,
    default_atol,
    integrate,
    spread_coincident,
    trajectory_from_states,
)

TRIGGER_DISTANCE = "distance"
TRIGGER_TIMEOUT = "timeout"


@dataclass(frozen=True)
class LayeredConfig:
    field: ImportanceField
    aerial_specs: list[AgentSpec]
    aerial_positions: np.ndarray
    ground_specs: list[AgentSpec]
    ground_positions: np.ndarray
    dropped_speed: float
    t_final: float
    output_samples: int = 100
    rtol: float = 1e-6
    atol: float | None = None
    control: ControlParams = dc_field(default_factory=ControlParams)

    def __post_init__(self):
        if self.atol is None:
            object.__setattr__(self, "atol", default_atol(self.field.region))
        if len(self.aerial_specs) < 1 or len(self.ground_specs) < 1:
            raise ValueError("two-layer mode needs >= 1 aerial and >= 1 ground agent")
        if not self.dropped_speed > 0:
            raise ValueError(f"dropped_speed must be > 0, got {self.dropped_speed}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        for name, pos, specs in (
            ("aerial", self.aerial_positions, self.aerial_specs),
            ("ground", self.ground_positions, self.ground_specs),
        ):
            p = np.asarray(pos, dtype=float).reshape(-1, 2)
            object.__setattr__(self, f"{name}_positions", p)
            if len(p) != len(specs):
                raise ValueError(f"{name}: {len(specs)} specs for {len(p)} positions")
            for xy in p:
                if not self.field.region.strictly_inside(xy):
                    raise ValueError(f"{name} position {xy} outside region")


@dataclass
class DropEvent:
    t_drop: float
    aerial_final_positions: np.ndarray
    trigger: str  # "distance" or "timeout"


@dataclass
class TwoLayerResult:
    aerial: Trajectory
    ground_pre: Trajectory
    merged: Trajectory
    drop: DropEvent
    times: np.ndarray       # global uniform sample grid over [0, t_final]
    loss_norm: np.ndarray   # stitched series / ground-layer initial loss
    ground_initial_loss: float
    merged_specs: list[AgentSpec]


def dropped_specs(aerial_specs: list[AgentSpec], dropped_speed: float) -> list[AgentSpec]:
    return [
        AgentSpec(id=s.id, layer=Layer.DROPPED, v_max=dropped_speed, gain=s.gain)
        for s in aerial_specs
    ]


def _mean_centroid_distance(positions, field) -> float:
    centroids, _ = centroids_and_masses(positions, field)
    return float(np.mean(np.hypot(*(centroids - positions).T)))


def _snapshot(t, positions, field, specs, params) -> Trajectory:
    return trajectory_from_states(
        np.array([t]), np.asarray(positions)[None, :, :], field, specs, params
    )


def run_two_layer(config: LayeredConfig) -> TwoLayerResult:
    field = config.field
    params = config.control
    grid = np.linspace(0.0, config.t_final, config.output_samples)

    aerial_p0 = spread_coincident(config.aerial_positions, field.region)
    ground_p0 = spread_coincident(config.ground_positions, field.region)

    # Phase 1: aerial layer alone, terminated when the team's mean
    # distance to centroid reaches the convergence radius.
    def drop_gate(t, p):
        return _mean_centroid_distance(p, field) - params.convergence_radius

    if drop_gate(0.0, aerial_p0) <= 0.0:
        t_drop = 0.0
        trigger = TRIGGER_DISTANCE
        aerial = _snapshot(0.0, aerial_p0, field, config.aerial_specs, params)
        aerial_final = aerial_p0
    else:
        times, states, t_event, y_event = _solve(
            field, config.aerial_specs, params, aerial_p0,
            (0.0, config.t_final), grid, config.rtol, config.atol, event_fn=drop_gate,
        )
        if t_event is not None:
            t_drop = t_event
            trigger = TRIGGER_DISTANCE
            aerial_final = y_event
            if len(times) == 0 or times[-1] < t_drop:
                times = np.append(times, t_drop)
                states = np.concatenate([states, y_event[None, :, :]])
        else:
            t_drop = config.t_final
            trigger = TRIGGER_TIMEOUT
            aerial_final = states[-1]
        aerial = trajectory_from_states(times, states, field, config.aerial_specs, params)

    # Phase 2: ground layer alone over [0, t_drop].
    if t_drop > 0.0:
        pre_grid = np.unique(np.concatenate([grid[grid < t_drop], [t_drop]]))
        g_times, g_states, _, _ = _solve(
            field, config.ground_specs, params, ground_p0,
            (0.0, t_drop), pre_grid, config.rtol, config.atol,
        )
        ground_pre = trajectory_from_states(
            g_times, g_states, field, config.ground_specs, params
        )
        ground_final = g_states[-1]
    else:
        ground_pre = _snapshot(0.0, ground_p0, field, config.ground_specs, params)
        ground_final = ground_p0

    # Phase 3: merged team, aerial agents re-typed as dropped sensors.
    merged_specs = list(config.ground_specs) + dropped_specs(
        config.aerial_specs, config.dropped_speed
    )
    merged_p0 = np.vstack([ground_final, aerial_final])
    if t_drop < config.t_final:
        post_grid = np.unique(np.concatenate([[t_drop], grid[grid > t_drop]]))
        m_times, m_states, _, _ = _solve(
            field, merged_specs, params, merged_p0,
            (t_drop, config.t_final), post_grid, config.rtol, config.atol,
        )
        merged = trajectory_from_states(m_times, m_states, field, merged_specs, params)
    else:
        merged = _snapshot(t_drop, merged_p0, field, merged_specs, params)

    # Stitch the loss series on the global grid, ground-layer baseline.
    h0 = ground_pre.initial_loss
    stitched = np.empty(len(grid))
    for k, t in enumerate(grid):
        if t < t_drop:
            stitched[k] = ground_pre.loss_raw[np.searchsorted(ground_pre.times, t)]
        else:
            idx = min(np.searchsorted(merged.times, t), len(merged.times) - 1)
            stitched[k] = merged.loss_raw[idx]
    stitched /= h0

    return TwoLayerResult(
        aerial=aerial,
        ground_pre=ground_pre,
        merged=merged,
        drop=DropEvent(t_drop=t_drop, aerial_final_positions=aerial_final, trigger=trigger),
        times=grid,
        loss_norm=stitched,
        ground_initial_loss=h0,
        merged_specs=merged_specs,
    )


def run_single_layer(config: LayeredConfig) -> Trajectory:
    """Baseline: all agents, mixed speeds, in one tessellation from t=0."""
    specs = list(config.ground_specs) + list(config.aerial_specs)
    raw = np.vstack([config.ground_positions, config.aerial_positions])
    positions = spread_coincident(raw, config.field.region)
    sim = SimulationConfig(
        field=config.field,
        specs=specs,
        initial_positions=positions,
        t_final=config.t_final,
        output_samples=config.output_samples,
        rtol=config.rtol,
        atol=config.atol,
        control=config.control,
    )
    return integrate(sim)
