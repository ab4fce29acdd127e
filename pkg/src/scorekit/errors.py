"""Exception hierarchy shared across the package.

Three broad families matter to callers (and to the CLI exit codes):
validation problems with inputs or configuration, malformed data files,
and numeric failures during fitting.
"""


class ScorekitError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ScorekitError):
    """Invalid argument, configuration value, or violated precondition."""


class SingleClassError(ValidationError):
    """An operation requiring both target classes saw only one."""


class DataFormatError(ValidationError):
    """A data file exists but its content is malformed."""


class MissingValueError(DataFormatError):
    """Empty or missing cell in a data file."""

    def __init__(self, row: int, column: str):
        self.row = row
        self.column = column
        super().__init__(f"missing value at (row {row}, column {column!r})")


class NonNumericCellError(DataFormatError):
    """Cell that cannot be parsed as a finite number."""

    def __init__(self, row: int, column: str, cell: str):
        self.row = row
        self.column = column
        self.cell = cell
        super().__init__(
            f"non-numeric value {cell!r} at (row {row}, column {column!r})"
        )


class NonBinaryTargetError(DataFormatError):
    """Target cell whose value is not exactly 0 or 1."""

    def __init__(self, row: int, column: str, cell: str):
        self.row = row
        self.column = column
        self.cell = cell
        super().__init__(
            f"non-binary target {cell!r} at (row {row}, column {column!r}); "
            "expected 0 or 1"
        )


class BalanceToleranceError(ValidationError):
    """A stratified split could not satisfy the bad-rate balance tolerance."""


class NumericError(ScorekitError):
    """Numeric failure while fitting or evaluating a model."""


class SingularSystemError(NumericError):
    """A linear system arising in a fit is singular."""


class SeparationError(NumericError):
    """Complete separation: the GLM likelihood diverges.

    Distinct from plain non-convergence, which is reported through the
    fitted model's ``converged`` flag.
    """


class CalibrationError(NumericError):
    """Synthetic-data intercept calibration failed within its search bounds."""
