"""Exception types shared across the package."""

from __future__ import annotations


class ContourSlamError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(ContourSlamError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateGeometryError(ContourSlamError, ValueError):
    """A geometric quantity is undefined for the given inputs."""


class NumericalFailureError(ContourSlamError, RuntimeError):
    """A linear-algebra step failed beyond recovery."""


class InvalidScenarioError(ContourSlamError, ValueError):
    """A simulation scenario is physically inconsistent."""


class ConfigError(ContourSlamError, ValueError):
    """A scenario configuration failed schema validation.

    The message carries the offending field path, e.g.
    ``world.objects[1].fourier.base``.
    """
