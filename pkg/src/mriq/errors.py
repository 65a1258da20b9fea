"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary argument validation; the classes
here mark conditions callers may want to handle separately.
"""


class DegenerateInputError(ValueError):
    """Input is structurally valid but makes the requested quantity undefined
    (zero denominator, constant ratings, no in-range labels, ...)."""


class MissingLabelError(LookupError):
    """A required human label is absent and cannot be propagated."""


class MissingRulerError(LookupError):
    """No compatible image ruler exists for the requested scan type."""


class RulerStateError(RuntimeError):
    """An image ruler is used before its scores or threshold are set."""
