"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 1,
infeasible constraint sets with 2, numerical failures with 3.
"""


class ConfigError(ValueError):
    """Invalid, missing, or inconsistent configuration input."""


class InfeasibleError(Exception):
    """The constraint set admits no feasible solution."""


class NumericalError(Exception):
    """A numerical routine failed to converge; indicates a bug or a
    degenerate input that slipped past validation."""
