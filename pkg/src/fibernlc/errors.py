"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration value."""


class ShapeError(ValueError):
    """Array shapes do not agree with what an operation expects."""


class FramingError(ValueError):
    """Symbol framing or alignment problem (bad start index, length mismatch)."""


class NumericalDivergenceError(FloatingPointError):
    """Non-finite samples appeared during a numerical integration."""


class TrainingError(RuntimeError):
    """Training produced a non-finite loss."""
