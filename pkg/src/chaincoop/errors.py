"""Exception types shared by the solver modules and the command line."""


class ChainCoopError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ChainCoopError, ValueError):
    """Raised when parameters, actions or partitions violate their invariants."""


class SolverError(ChainCoopError, RuntimeError):
    """Raised when an equilibrium or limit computation cannot produce an answer."""


class OracleConvergenceError(SolverError):
    """Raised when iterated grid best responses fail to reach a fixed point."""
