"""Exception types shared across the engine.

Errors split into three families: input errors (parse/validation), backend
errors (transient infrastructure failures, retried by the orchestrator), and
contract errors raised when a caller violates an operation's preconditions.
"""


class DocpipeError(Exception):
    """Base class for all engine errors."""


class ParseError(DocpipeError):
    """Input file is not well-formed (bad syntax, wrong top-level shape)."""


class ValidationError(DocpipeError):
    """Input parsed but violates a domain invariant; message carries the field path."""


class BackendError(DocpipeError):
    """A model backend was unavailable or failed; eligible for retry."""


class StructureError(DocpipeError):
    """Backend output did not conform to the required structure or schema kinds."""


class EmptyInput(DocpipeError):
    """OCR modality requested but the section has no text lines."""


class MissingImage(DocpipeError):
    """Image modality requested but no page carries an image reference."""


class KindMismatch(DocpipeError):
    """A value does not match the declared attribute kind."""


class AssessOnFailed(DocpipeError):
    """Confidence assessment requested for a failed extraction result."""


class IncompleteDecision(DocpipeError):
    """A review decision left a flagged attribute without an action."""


class Unauthorized(DocpipeError):
    """Reviewer role attempted an action reserved for admins."""


class ExpressionError(DocpipeError):
    """A rule condition failed to parse or referenced an undeclared fact."""


class PartitionError(DocpipeError):
    """Section lists passed to splitting metrics do not partition the pages."""


class JobNotFound(DocpipeError):
    """No job record exists for the given id."""


class DecisionConflict(DocpipeError):
    """A review decision was already applied, or the job is not awaiting review."""


class ManifestError(DocpipeError):
    """Manifest row is invalid; carries the offending row number."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row
