"""General exceptions that we can use in the application.

This module contains the exceptions raised by spatial_sieve.
Every exception carries an `exit_code` so the command line layer can turn
it into a distinct process status without a lookup table of its own.

Typical usage example:
    ```py
    from spatial_sieve.ext import exceptions
    try:
        ...
    except exceptions.SingularGramError:
        ...
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

from typing import Sequence


class SieveError(Exception):
    """Base class for spatial_sieve exceptions.

    This is the base class for all spatial_sieve exceptions.
    Avoid raising this exception, use a subclass of this exception instead.

    Attributes:
        exit_code: The process exit status the CLI reports for this error.
    """

    exit_code: int = 1


class UsageError(SieveError, ValueError):
    """Operation called with invalid usage.

    A broad exception used when an operation is invoked in a way that
    its preconditions forbid.
    """

    exit_code = 2


class InvalidParameters(UsageError):
    """Operation called with invalid parameters.

    Raised when a parameter is out of its admissible range,
    i.e. a non-positive bandwidth or a degree-zero spline.
    """


class DomainError(UsageError):
    """A point lies outside the domain of a basis or fit.

    Raised when evaluating a basis outside its interval or predicting
    outside the cube. We never extrapolate.
    """


class ModelKindMismatch(UsageError):
    """An operation was given a fit of the wrong model kind.

    The trend HAC machinery and the covariate sandwich are not
    interchangeable.
    """


class InputError(SieveError, ValueError):
    """Input data is unusable.

    Raised for data problems, as opposed to parameter problems.
    """

    exit_code = 4


class EmptyInput(InputError):
    """The input holds no observations."""

    exit_code = 3


class SchemaError(InputError):
    """The input does not follow the declared schema.

    Attributes:
        row: The 1-based data row that failed, if known.
    """

    def __init__(self, message: str, row: int | None = None) -> None:
        super().__init__(message)
        self.row = row


class RegionError(InputError):
    """Sites fall outside the sampling region.

    Attributes:
        rows: The 0-based indices of the offending sites.
    """

    exit_code = 5

    def __init__(self, message: str, rows: Sequence[int] = ()) -> None:
        super().__init__(message)
        self.rows = list(rows)


class NumericalError(SieveError, ArithmeticError):
    """A numerical routine failed.

    Raised when a factorization, quadrature or variance computation
    does not produce a trustworthy result.
    """

    exit_code = 8


class SingularGramError(NumericalError):
    """The Gram matrix is singular for the requested penalty.

    Only raised with a zero ridge penalty. A positive penalty always
    yields a positive definite system.
    """

    exit_code = 6


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance.

    Attributes:
        achieved: The error estimate quadrature reported.
    """

    def __init__(self, message: str, achieved: float) -> None:
        super().__init__(message)
        self.achieved = achieved


class NegativeVarianceError(NumericalError):
    """A variance estimate is negative beyond the clamp tolerance."""


class ArtifactError(SieveError):
    """A stored artifact is unreadable or of another schema version."""

    exit_code = 7


class BudgetExceeded(SieveError, MemoryError):
    """A computation would exceed its configured memory budget."""

    exit_code = 9


class StudyError(SieveError):
    """A Monte Carlo study failed in one of its replications.

    Attributes:
        rung: The ladder rung index where the failure happened.
        replication: The replication index where the failure happened.
    """

    exit_code = 10

    def __init__(self, message: str, rung: int, replication: int) -> None:
        super().__init__(f"rung {rung}, replication {replication}: {message}")
        self.rung = rung
        self.replication = replication
