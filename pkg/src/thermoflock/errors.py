"""Exception types shared across the package."""
from __future__ import annotations


class ThermoflockError(Exception):
    """Base class for all package-specific errors."""


class ScenarioError(ThermoflockError):
    """Invalid user input: malformed scenario, bad parameter, bad initial data."""


class IntegrationError(ThermoflockError):
    """The time integration could not be completed."""


class DegenerateTemperatureError(IntegrationError):
    """A temperature reached the positivity floor during construction or stepping."""

    def __init__(self, message: str, particle: int | None = None,
                 stage: str | None = None, time: float | None = None) -> None:
        super().__init__(message)
        self.particle = particle
        self.stage = stage
        self.time = time
