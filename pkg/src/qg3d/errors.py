"""Exception types shared across the package.

Everything raised on purpose derives from QGError so callers can catch the
package's failures without also swallowing programming mistakes.
"""

from __future__ import annotations


class QGError(Exception):
    """Base class for all errors raised by this package."""


class NonZeroMeanError(QGError):
    """An operation that requires a zero-mean field received one with mass."""


class GridMismatchError(QGError):
    """Two fields that must share a grid were built on different grids."""


class NonFiniteError(QGError):
    """A NaN or infinity appeared in the evolving state.

    Carries the simulation time at which the blow-up was detected.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class EmptyBandError(QGError):
    """A requested spectral band contains no resolvable modes."""


class ZeroModeError(QGError):
    """A wave generator was asked for the (0, 0, 0) mode, which is no wave."""


class InsufficientHistoryError(QGError):
    """A diagnostic needs more recorded samples than were provided."""


class ConfigError(QGError):
    """Base class for configuration problems."""


class ConfigParseError(ConfigError):
    """Config text could not be parsed; message includes the line number."""


class ConfigValidationError(ConfigError):
    """Config parsed fine but a value violates a documented constraint."""


class SnapshotFormatError(QGError):
    """A snapshot file is truncated, corrupt, or has the wrong magic/version."""
