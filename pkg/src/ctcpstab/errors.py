"""Exception hierarchy shared by the analysis and simulation modules."""


class CtcpStabError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CtcpStabError):
    """Invalid configuration input (bad key, bad value, wrong topology)."""


class DomainError(CtcpStabError):
    """A quantity left its mathematically meaningful domain."""


class ConvergenceError(CtcpStabError):
    """An iterative solver failed to converge; message carries diagnostics."""


class NumericError(CtcpStabError):
    """A numeric computation degenerated (singular solve, arccos domain, ...)."""


class UndeterminedError(CtcpStabError):
    """A classification could not be decided from the available data."""
