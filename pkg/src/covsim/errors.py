"""Exception types shared across the simulator."""


class CovsimError(Exception):
    """Base class for all simulator errors."""


class PositionOutsideRegion(CovsimError):
    """An agent position lies on or outside the region boundary."""


class DuplicateAgents(CovsimError):
    """Two agent positions coincide within the separation tolerance."""


class DegeneratePolygon(CovsimError):
    """Polygon has (near-)zero area, a collinear vertex set, or zero extent."""


class IntegrationFailure(CovsimError):
    """Adaptive quadrature did not converge within the subdivision budget."""


class MassUnderflow(CovsimError):
    """Cell importance mass underflowed; the field design is broken."""


class StepFailure(CovsimError):
    """ODE stepper could not advance (minimum step underflow)."""


class ParseError(CovsimError):
    """Experiment file is missing or not valid JSON."""


class SchemaError(CovsimError):
    """Experiment file violates the configuration schema."""
