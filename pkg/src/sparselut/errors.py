"""Exception types shared across the package.

Plain ``ValueError`` is used for bad arguments; the classes here cover the
remaining failure kinds so callers (and the CLI) can map them to exit codes.
"""


class SparseLutError(Exception):
    """Base class for package-specific errors."""


class FormatError(SparseLutError):
    """A file (mask, IDX, CSV, config, table) failed to parse."""


class CapacityError(SparseLutError):
    """A size guard tripped, e.g. a truth table would exceed the address limit."""


class StateError(SparseLutError):
    """An operation was invoked on an object in the wrong state."""
