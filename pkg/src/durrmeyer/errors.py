"""Exception types shared across the package.

Each carries an ``exit_code`` used by the command-line harness.
"""


class DurrmeyerError(Exception):
    exit_code = 1


class ConfigError(DurrmeyerError, ValueError):
    """Invalid configuration, missing data, or unknown identifier."""

    exit_code = 2


class DomainError(DurrmeyerError, ValueError):
    """Argument outside the mathematical domain of a function."""

    exit_code = 3


class DivergenceError(DurrmeyerError, ArithmeticError):
    """A lattice sum or integral that is not absolutely convergent."""

    exit_code = 4


class NumericError(DurrmeyerError, ArithmeticError):
    """A numerical procedure did not reach its requested tolerance."""

    exit_code = 5


class UnsupportedError(DurrmeyerError, NotImplementedError):
    """The operation needs data the kernel does not carry (e.g. a transform)."""

    exit_code = 6


class VerificationFailure(DurrmeyerError):
    """A checked inequality or acceptance condition was violated."""

    exit_code = 7


class IndeterminateRateError(NumericError):
    """Numerical error bounds swamp the signal, so no rate can be fitted."""

    exit_code = 8
