"""Exception hierarchy shared across the package.

Every failure the library raises deliberately derives from ``McoptError``
so callers (and the CLI) can separate user/data errors from genuine bugs.
``Saturated`` is not an error: it is the control-flow signal a non-repeating
optimizer emits once its finite candidate set is exhausted.
"""


class McoptError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(McoptError):
    """An object or value is outside its declared domain."""


class ParseError(McoptError):
    """A file or string could not be parsed."""


class CompletenessError(McoptError):
    """A lookup table is missing required (workload, point) cells."""


class DuplicateError(McoptError):
    """The same (workload, point) cell appears more than once."""


class ValueRangeError(McoptError):
    """A measurement value violates positivity/finiteness requirements."""


class ProtocolError(McoptError):
    """suggest/observe contract violated (unsuggested or repeated point)."""


class BudgetError(McoptError):
    """A search budget is infeasible for the requested configuration."""


class IntegrityError(McoptError):
    """An internal consistency check failed (e.g. found < true minimum)."""


class NumericError(McoptError):
    """A linear system stayed singular/non-PD after all fallbacks."""


class FitError(McoptError):
    """A surrogate cannot be fit to the given training data."""


class ObjectiveError(McoptError):
    """The user-supplied objective callback raised during a search."""


class Saturated(Exception):
    """Signal: all candidates evaluated; no further suggestion possible.

    Deliberately not a subclass of McoptError -- exhausting a small finite
    domain is expected behaviour that callers handle, not a failure.
    """
