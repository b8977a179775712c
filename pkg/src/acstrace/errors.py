"""Exception types raised across the package."""


class ACSError(Exception):
    """Base class for all errors raised by acstrace."""


class ConfigurationError(ACSError, ValueError):
    """Invalid or infeasible parameters for a population, design or scenario."""


class DesignError(ACSError):
    """A sample is inconsistent with the design that supposedly produced it."""


class InputError(ACSError, ValueError):
    """Observations needed by an estimator are missing or malformed."""
