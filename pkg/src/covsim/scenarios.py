"""Canonical scenario builders used by scripts and the test suite.

The railcar scenario ("sarasota") models a derailment site: a 550 x 450 m
sensing region, an off-center spill with strongly anisotropic dispersion
and a south-to-north wind skew, and a staging area in the far corner where
every agent starts.
"""

from __future__ import annotations

import numpy as np

from .control import AgentSpec, ControlParams, Layer
from .geometry import Point, Region
from .importance import ImportanceField, PlumeSpec, WindSpec, normalize
from .twolayer import LayeredConfig

SARASOTA_REGION = Region(-225.0, 325.0, -225.0, 225.0)
SARASOTA_SPILL = Point(266.5, 30.0)
SARASOTA_SIGMA = (10.0, 120.0)
SARASOTA_WIND = WindSpec(k=0.1, y0=20.0)
SARASOTA_STAGING = (-220.0, -140.0)
SARASOTA_GROUND_SPEED = 1.25
SARASOTA_AERIAL_SPEED = 15.0
SARASOTA_DROPPED_SPEED = 1.25
SARASOTA_T_FINAL = 600.0


def sarasota_field(normalized: bool = True) -> ImportanceField:
    field = ImportanceField.compose(
        SARASOTA_REGION,
        plume=PlumeSpec(
            SARASOTA_SPILL.x,
            SARASOTA_SPILL.y,
            SARASOTA_SIGMA[0],
            SARASOTA_SIGMA[1],
            wind=SARASOTA_WIND,
        ),
        attraction_center=SARASOTA_SPILL,
    )
    return normalize(field) if normalized else field


def sarasota_layered_config(
    field: ImportanceField | None = None,
    aerial_speed: float = SARASOTA_AERIAL_SPEED,
    n_ground: int = 3,
    t_final: float = SARASOTA_T_FINAL,
    output_samples: int = 100,
) -> LayeredConfig:
    if field is None:
        field = sarasota_field()
    ground_specs = [
        AgentSpec(id=i, layer=Layer.GROUND, v_max=SARASOTA_GROUND_SPEED)
        for i in range(n_ground)
    ]
    aerial_specs = [AgentSpec(id=n_ground, layer=Layer.AERIAL, v_max=aerial_speed)]
    staging = np.array(SARASOTA_STAGING)
    return LayeredConfig(
        field=field,
        aerial_specs=aerial_specs,
        aerial_positions=staging[None, :],
        ground_specs=ground_specs,
        ground_positions=np.tile(staging, (n_ground, 1)),
        dropped_speed=SARASOTA_DROPPED_SPEED,
        t_final=t_final,
        output_samples=output_samples,
        control=ControlParams(),
    )
