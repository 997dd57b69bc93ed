"""Composite importance field: Gaussian plume + polynomial attraction + offset.

The plume term models anisotropic chemical dispersion around the spill
center, optionally skewed by a logistic wind factor.  The attraction term
1 - (d/D)^6 has no physical meaning; it exists to give agents far from the
spill a usable gradient, since the plume underflows to ~0 within a fraction
of the region.  The constant offset keeps the field strictly positive so
cell masses can never underflow.

After `normalize`, the field integrates to 1 over the region and evaluates
as a probability density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Point, Region

DEFAULT_OFFSET = 1e-12

# Layout of the parameter vector consumed by the compiled kernels.
# [has_plume, mu_x, mu_y, 1/(2 sx^2), 1/(2 sy^2),
#  has_wind, k, y0, offset, has_attraction, ax, ay, 1/D^2, 1/Z]
PARAMS_LEN = 14


@dataclass(frozen=True)
class WindSpec:
    """Logistic wind skew: multiplies the plume by 1/(1+e^(-k(y-y0)))."""

    k: float
    y0: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"wind steepness k must be > 0, got {self.k}")


@dataclass(frozen=True)
class PlumeSpec:
    """Anisotropic Gaussian bump centered on the spill."""

    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    wind: WindSpec | None = None

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError(f"plume sigmas must be > 0, got {self}")


@dataclass(frozen=True)
class ImportanceField:
    region: Region
    plume: PlumeSpec | None
    attraction_center: Point | None
    offset: float
    D: float
    normalization_constant: float = 1.0

    def __post_init__(self):
        if not self.offset > 0:
            raise ValueError(f"offset must be > 0, got {self.offset}")
        if not self.normalization_constant > 0:
            raise ValueError("normalization constant must be > 0")

    @classmethod
    def compose(
        cls,
        region: Region,
        plume: PlumeSpec | None = None,
        attraction_center: Point | None = None,
        offset: float = DEFAULT_OFFSET,
    ) -> "ImportanceField":
        if attraction_center is not None:
            attraction_center = Point(*attraction_center)
            d = np.hypot(
                region.corners()[:, 0] - attraction_center.x,
                region.corners()[:, 1] - attraction_center.y,
            )
            big_d = float(d.max())
        else:
            big_d = 0.0
        return cls(
            region=region,
            plume=plume,
            attraction_center=attraction_center,
            offset=offset,
            D=big_d,
        )

    def kernel_params(self) -> np.ndarray:
        p = np.zeros(PARAMS_LEN)
        if self.plume is not None:
            p[0] = 1.0
            p[1] = self.plume.mu_x
            p[2] = self.plume.mu_y
            p[3] = 1.0 / (2.0 * self.plume.sigma_x**2)
            p[4] = 1.0 / (2.0 * self.plume.sigma_y**2)
            if self.plume.wind is not None:
                p[5] = 1.0
                p[6] = self.plume.wind.k
                p[7] = self.plume.wind.y0
        p[8] = self.offset
        if self.attraction_center is not None:
            p[9] = 1.0
            p[10] = self.attraction_center.x
            p[11] = self.attraction_center.y
            p[12] = 1.0 / self.D**2
        p[13] = 1.0 / self.normalization_constant
        return p

    # Characteristic feature scales, used to seed quadrature subdivision.
    def x_feature_points(self) -> tuple[float, ...]:
        if self.plume is None:
            return ()
        mx, sx = self.plume.mu_x, self.plume.sigma_x
        return tuple(mx + k * sx for k in (-3.0, -1.0, 0.0, 1.0, 3.0))

    def y_feature_scale(self) -> float:
        scales = []
        if self.plume is not None:
            scales.append(self.plume.sigma_y)
            if self.plume.wind is not None:
                scales.append(4.0 / self.plume.wind.k)
        return min(scales) if scales else math.inf

    def eval(self, x: float, y: float) -> float:
        """Normalized density at a point."""
        return self.eval_raw(x, y) / self.normalization_constant

    def eval_raw(self, x: float, y: float) -> float:
        total = self.offset
        if self.plume is not None:
            total += plume_eval(self.plume, Point(x, y))
        if self.attraction_center is not None:
            total += attraction_eval(self, Point(x, y))
        return total

    def eval_many(self, xs, ys) -> np.ndarray:
        """Vectorized normalized density (hot path for grid work)."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        total = np.full(np.broadcast(xs, ys).shape, self.offset)
        if self.plume is not None:
            pl = self.plume
            ex = -((xs - pl.mu_x) ** 2) / (2.0 * pl.sigma_x**2) - (
                (ys - pl.mu_y) ** 2
            ) / (2.0 * pl.sigma_y**2)
            bump = np.exp(ex)
            if pl.wind is not None:
                bump = bump * _logistic_np(pl.wind.k * (ys - pl.wind.y0))
            total = total + bump
        if self.attraction_center is not None:
            u = (
                (xs - self.attraction_center.x) ** 2
                + (ys - self.attraction_center.y) ** 2
            ) / self.D**2
            total = total + np.maximum(0.0, 1.0 - u**3)
        return total / self.normalization_constant


def _logistic(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _logistic_np(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def plume_eval(spec: PlumeSpec, q) -> float:
    """Plume value in (0, 1]: Gaussian bump times optional wind factor."""
    x, y = float(q[0]), float(q[1])
    ex = -((x - spec.mu_x) ** 2) / (2.0 * spec.sigma_x**2) - (
        (y - spec.mu_y) ** 2
    ) / (2.0 * spec.sigma_y**2)
    val = math.exp(ex)
    if spec.wind is not None:
        val *= _logistic(spec.wind.k * (y - spec.wind.y0))
    return val


def attraction_eval(field: ImportanceField, q) -> float:
    """Attraction value 1 - (d/D)^6, clamped at 0 for points beyond D."""
    if field.attraction_center is None:
        return 0.0
    dx = float(q[0]) - field.attraction_center.x
    dy = float(q[1]) - field.attraction_center.y
    u = (dx * dx + dy * dy) / field.D**2
    return max(0.0, 1.0 - u**3)


def composite_eval_raw(field: ImportanceField, q) -> float:
    """Unnormalized composite: plume + attraction + offset."""
    return field.eval_raw(float(q[0]), float(q[1]))


def normalize(field: ImportanceField, tol: float = 1e-6) -> ImportanceField:
    """Return a copy whose density integrates to 1 over the region.

    The integral is computed with the boundary-interpolation integrator on
    the full rectangle, which is also its largest-domain workout.
    """
    from .integration import build_profile, weighted_mass

    profile = build_profile(field.region.as_polygon())
    measured = weighted_mass(profile, field, tol=tol)
    return replace(
        field, normalization_constant=field.normalization_constant * measured
    )
