"""Exception hierarchy shared across the package.

``SpinexError`` is the common base; ``DataError`` marks problems with user
data or dataset specs (the CLI maps those to exit code 2, everything else
to 3).
"""


class SpinexError(Exception):
    """Base class for all package errors."""


class DataError(SpinexError):
    """A problem with user-supplied data or a dataset spec."""


# --- ingestion / preprocessing -------------------------------------------

class MissingTargetColumn(DataError):
    def __init__(self, column: str):
        super().__init__(f"target column {column!r} not found in header")
        self.column = column


class UnparseableCell(DataError):
    def __init__(self, row: int, col: str, value: str):
        super().__init__(f"cell at data row {row}, column {col!r} is not a number: {value!r}")
        self.row = row
        self.col = col
        self.value = value


class EmptyFile(DataError):
    pass


class AllMissingColumn(DataError):
    def __init__(self, col: str):
        super().__init__(f"column {col!r} has no non-missing values to average")
        self.col = col


class AllRowsRemoved(DataError):
    pass


class EmptyDataset(DataError):
    pass


class InvalidSpec(DataError):
    pass


class FamilyNeedsMoreFeatures(DataError):
    def __init__(self, family: str, needed: int, got: int):
        super().__init__(f"family {family!r} needs at least {needed} features, got {got}")
        self.family = family
        self.needed = needed
        self.got = got


# --- similarity / prediction ----------------------------------------------

class DimensionMismatch(SpinexError):
    pass


class NonPositiveKernelWidth(SpinexError):
    pass


class UnfittedModel(SpinexError):
    pass


class TooManyPrioritizedFeatures(SpinexError):
    pass


# --- explanations -----------------------------------------------------------

class InvalidFeatureIndex(SpinexError):
    pass


class EmptyQuerySet(SpinexError):
    pass


class CombinationBudgetExceeded(SpinexError):
    pass


class IndexOutOfRange(SpinexError):
    pass


class EmptyRange(SpinexError):
    pass


# --- ensembles ---------------------------------------------------------------

class DegenerateRound(SpinexError):
    pass


class TooFewRowsForFolds(SpinexError):
    pass


# --- metrics / ranking -------------------------------------------------------

class LengthMismatch(SpinexError):
    pass


class EmptyInput(SpinexError):
    pass


class ConstantActuals(SpinexError):
    pass


class InvalidProbabilityRow(SpinexError):
    def __init__(self, row: int):
        super().__init__(f"probability row {row} does not sum to 1")
        self.row = row


class SingleClassPresent(SpinexError):
    pass


class MissingCell(SpinexError):
    def __init__(self, model: str, dataset: str):
        super().__init__(f"no metric record for model {model!r} on dataset {dataset!r}")
        self.model = model
        self.dataset = dataset


# --- benchmarking -------------------------------------------------------------

class TooFewRows(SpinexError):
    pass


class IoError(SpinexError):
    """Raised when a report file cannot be written."""
