"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so library code should raise the most
specific class that applies instead of bare ValueError/RuntimeError.
"""


class RopesimError(Exception):
    """Base class for all package errors."""


class ConfigError(RopesimError):
    """Malformed or inconsistent configuration input."""


class DomainError(RopesimError, ValueError):
    """Arguments outside the mathematical domain of an operation."""


class InfeasibleError(RopesimError):
    """A solve has no solution under the given constraints (e.g. taut rope,
    d_max < d_min, rope shorter than the attachment distance)."""


class SingularConfigurationError(RopesimError):
    """Geometry where a quantity is unbounded or undefined (straight rope
    tension, horizontal estimation plane, ill-conditioned interaction matrix)."""


class DegenerateCloudError(RopesimError):
    """Point cloud too poor for any plane fit (fewer than two distinct
    anchor points)."""


class NoPassError(RopesimError):
    """The simulated trajectory never swept the rope plane past the litter,
    so the grasp predicate is undefined."""


class TaskFailure(RopesimError):
    """The simulated task did not achieve its goal (used by the CLI when
    --require-success is set)."""
