"""Error types shared across the package.

Every raised error carries a stable machine-readable ``code`` so the CLI and
the HTTP service can surface failures uniformly (the service maps codes to
JSON error bodies and status codes).
"""

from __future__ import annotations


class FmeaError(Exception):
    """Base error with a machine-readable code and optional detail payload."""

    code = "ERROR"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def __str__(self) -> str:
        return f"{self.code}: {super().__str__()}"


# --- document / store -------------------------------------------------------

class InvalidDocumentError(FmeaError):
    code = "INVALID_DOCUMENT"


class DuplicateIdError(FmeaError):
    code = "DUPLICATE_ID"


class NotFoundError(FmeaError):
    code = "NOT_FOUND"


class EmptyCorpusError(FmeaError):
    code = "EMPTY_CORPUS"


# --- embedding / retrieval --------------------------------------------------

class EmptyTextError(FmeaError):
    code = "EMPTY_TEXT"


class ProviderUnavailableError(FmeaError):
    code = "PROVIDER_UNAVAILABLE"


class DimensionMismatchError(FmeaError):
    code = "DIMENSION_MISMATCH"


class ZeroVectorError(FmeaError):
    code = "ZERO_VECTOR"


class EmptyPoolError(FmeaError):
    code = "EMPTY_POOL"


# --- prompting ---------------------------------------------------------------

class MissingStepDataError(FmeaError):
    code = "MISSING_STEP_DATA"


class ShotCountMismatchError(FmeaError):
    code = "SHOT_COUNT_MISMATCH"


class EmptyInputError(FmeaError):
    code = "EMPTY_INPUT"


# --- llm gateway -------------------------------------------------------------

class ProviderTimeoutError(FmeaError):
    code = "PROVIDER_TIMEOUT"


class ProviderHttpError(FmeaError):
    code = "PROVIDER_HTTP_ERROR"


# --- response parsing --------------------------------------------------------

class ParseError(FmeaError):
    """Raised when no usable block exists in a completion. Never raised for
    merely messy input; messy-but-recognizable input parses with warnings."""


class NoRecognizedBlockError(ParseError):
    code = "NO_RECOGNIZED_BLOCK"


class WrongBlockError(ParseError):
    code = "WRONG_BLOCK"


# --- ensemble / metrics ------------------------------------------------------

class StepMismatchError(FmeaError):
    code = "STEP_MISMATCH"


class SizeMismatchError(FmeaError):
    code = "SIZE_MISMATCH"


class EmptyReferenceError(FmeaError):
    code = "EMPTY_REFERENCE"


class EmptyGoldError(FmeaError):
    code = "EMPTY_GOLD"


# --- workflow service --------------------------------------------------------

class StepLockedError(FmeaError):
    code = "STEP_LOCKED"


class UnknownExampleError(FmeaError):
    code = "UNKNOWN_EXAMPLE"


class StepNotGeneratedError(FmeaError):
    code = "STEP_NOT_GENERATED"


class ShotsNotConfirmedError(FmeaError):
    code = "SHOTS_NOT_CONFIRMED"


class GenerationFailedError(FmeaError):
    code = "GENERATION_FAILED"
