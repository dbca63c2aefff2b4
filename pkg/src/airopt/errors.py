"""Exception hierarchy shared across the toolkit."""


class AiroptError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AiroptError):
    """Invalid configuration input (bad keys, values, or file syntax)."""


class GridError(ConfigError):
    """Frequency grid too coarse for the polynomial degrees in play."""


class NumericalError(AiroptError):
    """A numerical routine failed to produce a trustworthy result."""


class IllConditionedError(NumericalError):
    """Linear-system condition estimate exceeds the trust threshold."""


class OptimizationError(NumericalError):
    """No optimization restart produced a feasible design."""


class SimulationError(NumericalError):
    """Monte-Carlo recursion produced non-finite values."""
