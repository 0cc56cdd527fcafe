"""Exception hierarchy.

Two families matter for scripting: ``InputError`` (bad data, bad codes,
violated preconditions -- CLI exit code 2) and ``NumericalError``
(degenerate or inconsistent numerics -- CLI exit code 3).
"""


class NumeraireLabError(Exception):
    """Base class for all errors raised by this package."""


class InputError(NumeraireLabError):
    """Problems with input data, asset codes, or call preconditions."""


class ParseError(InputError):
    """Malformed input text (bad date, bad delimiter, duplicate rows)."""


class SchemaError(InputError):
    """Structurally invalid table (duplicate columns, missing header)."""


class DataError(InputError):
    """A cell violates a data invariant (non-numeric, non-positive price)."""


class AssetLookupError(InputError):
    """An asset code is not present where it was expected."""


class AlignmentError(InputError):
    """Date alignment failed (too few prices, empty date intersection)."""


class PreconditionError(InputError):
    """An operation precondition does not hold."""


class CoverageError(InputError):
    """No admissible numeraire covers a requested asset pair."""


class NumericalError(NumeraireLabError):
    """Numerical degeneracy or inconsistency in an otherwise valid call."""


class DegenerateAssetError(NumericalError):
    """An asset's transformed variance vanished (pegged to the numeraire)."""


class FactorizationError(NumericalError):
    """A matrix that must be positive definite is not."""


class IllConditionedError(NumericalError):
    """Condition number beyond the inversion guard without a ridge."""


class ConsistencyError(NumericalError):
    """Results violate an internal tolerance (e.g. correlation > 1 + tol)."""


class StatisticalPowerError(NumericalError):
    """Sample too small for the requested significance test."""
