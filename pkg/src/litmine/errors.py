"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message text.
"""


class LitmineError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(LitmineError):
    """A binary stream header is malformed (bad magic or unsupported version)."""


class CorruptStreamError(LitmineError):
    """A binary stream is damaged mid-body (truncation, invalid record data).

    ``offset`` is the byte offset at which the damaged record starts, when
    known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class StreamOrderError(LitmineError):
    """Records in an embedding stream are not sorted by their group key."""


class ParseError(LitmineError):
    """A text input file is malformed. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(LitmineError):
    """Inputs parse but violate a structural constraint (collisions, duplicates, empties)."""


class NotFoundError(LitmineError):
    """A queried key (word, seed, alias) does not exist in the table."""


class DimensionMismatchError(LitmineError):
    """Vectors of incompatible dimensionality were combined."""


class DegenerateVectorError(LitmineError):
    """A zero-norm vector reached a cosine computation."""
