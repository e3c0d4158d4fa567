"""Exception types."""


class InvalidArgumentError(ValueError):
    """An input violates a documented precondition."""


class GenerationError(RuntimeError):
    """A random drop could not be generated within the resampling budget."""


class SolverStateError(RuntimeError):
    """The solver reached a state its formulas are undefined on."""


class BudgetExceededError(RuntimeError):
    """The exhaustive oracle would exceed its enumeration budget."""


class ConfigError(ValueError):
    """A configuration file violates the schema."""
