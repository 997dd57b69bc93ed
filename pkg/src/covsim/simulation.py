"""Adaptive time integration of the coverage dynamics with sampled metrics.

The stepper is scipy's embedded RK45 pair; output is recorded on a uniform
sample grid through the stepper's dense interpolants rather than by forcing
steps.  A state guard rejects trial steps that would push an agent outside
the region or collapse two agents onto each other: the right-hand side
returns NaN for such states, which makes the stepper shrink the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp

from .control import AgentSpec, ControlParams, command_velocity, dynamics_rhs
from .errors import (
    DegeneratePolygon,
    DuplicateAgents,
    MassUnderflow,
    PositionOutsideRegion,
    StepFailure,
)
from .geometry import DUPLICATE_TOL, Region, bounded_voronoi
from .importance import ImportanceField
from .integration import cell_moments, sensor_loss_cell

# Tolerance used when recording the loss series; much tighter than the
# control-loop default so sampled descent can be checked to 1e-6.
LOSS_RECORD_TOL = 1e-6
# Default absolute position tolerance, as a fraction of the region extent.
# Anything much tighter makes the stepper grind along the deadband
# discontinuity whenever a centroid drifts slowly.
ATOL_FRACTION = 1e-5


def default_atol(region: Region) -> float:
    return max(1e-9, ATOL_FRACTION * max(region.width, region.height))


@dataclass(frozen=True)
class SimulationConfig:
    field: ImportanceField
    specs: list[AgentSpec]
    initial_positions: np.ndarray
    t_final: float
    output_samples: int = 100
    rtol: float = 1e-6
    atol: float | None = None
    control: ControlParams = dc_field(default_factory=ControlParams)

    def __post_init__(self):
        p = np.asarray(self.initial_positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "initial_positions", p)
        if self.atol is None:
            object.__setattr__(self, "atol", default_atol(self.field.region))
        if not self.t_final > 0:
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        if self.output_samples < 2:
            raise ValueError(f"need >= 2 output samples, got {self.output_samples}")
        if len(self.specs) != len(p):
            raise ValueError(
                f"{len(self.specs)} specs for {len(p)} positions"
            )
        _check_state(p, self.field.region, raise_errors=True)


@dataclass
class Trajectory:
    times: np.ndarray           # (S,)
    positions: np.ndarray       # (S, n, 2)
    velocities: np.ndarray      # (S, n, 2)
    loss_raw: np.ndarray        # (S,)
    loss_norm: np.ndarray       # (S,) loss_raw / initial_loss
    area_fractions: np.ndarray  # (S, n) share of total importance per agent
    initial_loss: float

    @property
    def speeds(self) -> np.ndarray:
        return np.hypot(self.velocities[..., 0], self.velocities[..., 1])


def spread_coincident(positions, region: Region, min_sep: float = 1e-3) -> np.ndarray:
    """Fan coincident agents out on a tiny deterministic ring.

    Deployment configs legitimately stage every agent at the same point; the
    tessellation needs distinct sites, so groups of coincident agents are
    placed on a ring of radius ``min_sep`` (negligible against scenario
    scales) around the shared point.
    """
    p = np.asarray(positions, dtype=float).reshape(-1, 2).copy()
    n = len(p)
    assigned = np.zeros(n, dtype=bool)
    for i in range(n):
        if assigned[i]:
            continue
        group = [i]
        for j in range(i + 1, n):
            if not assigned[j] and np.hypot(*(p[j] - p[i])) <= DUPLICATE_TOL:
                group.append(j)
        if len(group) == 1:
            continue
        cx, cy = p[i]
        wall = min(
            cx - region.x_min, region.x_max - cx, cy - region.y_min, region.y_max - cy
        )
        r = min(min_sep, 0.25 * wall)
        for k, j in enumerate(group):
            ang = 2.0 * math.pi * k / len(group)
            p[j] = (cx + r * math.cos(ang), cy + r * math.sin(ang))
            assigned[j] = True
    _check_state(p, region, raise_errors=True)
    return p


def _check_state(p: np.ndarray, region: Region, raise_errors: bool = False) -> bool:
    inside = (
        np.all(p[:, 0] > region.x_min)
        and np.all(p[:, 0] < region.x_max)
        and np.all(p[:, 1] > region.y_min)
        and np.all(p[:, 1] < region.y_max)
    )
    if not inside:
        if raise_errors:
            raise PositionOutsideRegion(f"agent positions {p.tolist()} not inside {region}")
        return False
    for i in range(len(p)):
        d = p[i + 1 :] - p[i]
        if len(d) and np.min(np.hypot(d[:, 0], d[:, 1])) <= DUPLICATE_TOL:
            if raise_errors:
                raise DuplicateAgents("coincident agents in state")
            return False
    return True


def _solve(field, specs, params, y0, t_span, t_eval, rtol, atol=None, event_fn=None):
    """Run the stepper; returns (times, states(S,n,2), t_event, y_event)."""
    n = len(specs)
    region = field.region
    if atol is None:
        atol = default_atol(region)

    nan_vec = np.full(2 * n, np.nan)

    def rhs(t, y):
        # Trial stage states that violate the geometry preconditions (agent
        # pushed outside, near-coincidence, degenerate sliver cells) are
        # rejected by returning NaN, which makes the stepper shrink the step.
        p = y.reshape(n, 2)
        if not _check_state(p, region):
            return nan_vec
        try:
            return dynamics_rhs(p, specs, field, params).ravel()
        except (DegeneratePolygon, DuplicateAgents, MassUnderflow, PositionOutsideRegion):
            return nan_vec

    events = None
    if event_fn is not None:
        def ev(t, y):
            return event_fn(t, y.reshape(n, 2))

        ev.terminal = True
        ev.direction = -1.0
        events = ev

    sol = solve_ivp(
        rhs,
        t_span,
        np.asarray(y0, dtype=float).ravel(),
        method="RK45",
        rtol=rtol,
        atol=atol,
        t_eval=np.asarray(t_eval, dtype=float),
        events=events,
    )
    if sol.status == -1:
        raise StepFailure(f"stepper failed: {sol.message}")
    t_event = y_event = None
    if events is not None and sol.status == 1 and len(sol.t_events[0]):
        t_event = float(sol.t_events[0][0])
        y_event = sol.y_events[0][0].reshape(n, 2)
    return sol.t, sol.y.T.reshape(-1, n, 2), t_event, y_event


def _sample_metrics(p, field, specs, params):
    tess = bounded_voronoi(p, field.region)
    vel = np.empty((len(specs), 2))
    masses = np.empty(len(specs))
    loss = 0.0
    for i, cell in enumerate(tess.cells):
        cm = cell_moments(cell, field)
        masses[i] = cm.mass
        vel[i] = command_velocity(p[i], cm.centroid, specs[i], params)
        loss += sensor_loss_cell(cell, p[i], field, tol=LOSS_RECORD_TOL)
    return vel, masses, loss


def trajectory_from_states(times, states, field, specs, params) -> Trajectory:
    """Record velocities, loss, and per-agent importance shares at samples."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    s, n = states.shape[0], states.shape[1]
    vel = np.empty((s, n, 2))
    fractions = np.empty((s, n))
    loss = np.empty(s)
    for k in range(s):
        if not _check_state(states[k], field.region):
            raise PositionOutsideRegion(f"sampled state at t={times[k]} invalid")
        vel[k], fractions[k], loss[k] = _sample_metrics(states[k], field, specs, params)
    initial = float(loss[0])
    norm = loss / initial
    norm[0] = 1.0
    return Trajectory(
        times=times,
        positions=states,
        velocities=vel,
        loss_raw=loss,
        loss_norm=norm,
        area_fractions=fractions,
        initial_loss=initial,
    )


def integrate(config: SimulationConfig, sample_times=None) -> Trajectory:
    """Integrate the coverage dynamics and sample it on a uniform grid."""
    if sample_times is None:
        sample_times = np.linspace(0.0, config.t_final, config.output_samples)
    times, states, _, _ = _solve(
        config.field,
        config.specs,
        config.control,
        config.initial_positions,
        (float(sample_times[0]), float(sample_times[-1])),
        sample_times,
        config.rtol,
        config.atol,
    )
    return trajectory_from_states(times, states, config.field, config.specs, config.control)


def time_to_threshold(traj: Trajectory, threshold: float) -> float | None:
    """First time the normalized loss reaches the threshold, or None.

    Linear interpolation between the bracketing samples.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    series = traj.loss_norm
    below = np.nonzero(series <= threshold)[0]
    if len(below) == 0:
        return None
    k = int(below[0])
    if k == 0:
        return float(traj.times[0])
    t0, t1 = traj.times[k - 1], traj.times[k]
    l0, l1 = series[k - 1], series[k]
    return float(t0 + (t1 - t0) * (l0 - threshold) / (l0 - l1))
