"""Exception types shared across the engine.

Everything derives from :class:`EngineError` so callers can catch one type;
the subclasses also derive from ``ValueError`` because most failures are
bad-argument failures.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(EngineError, ValueError):
    """A tensor or kernel shape contract was violated."""


class ConfigError(EngineError, ValueError):
    """A network configuration is inconsistent or contains unknown keys."""


class WeightsError(EngineError, ValueError):
    """A weight file pair (manifest + blob) is malformed."""


class TruncatedBlobError(WeightsError):
    """The binary blob is shorter than the manifest requires."""


class UnknownLayerError(WeightsError):
    """The manifest names an array the network does not define."""


class WeightShapeError(WeightsError):
    """A stored array's shape disagrees with the network definition."""
