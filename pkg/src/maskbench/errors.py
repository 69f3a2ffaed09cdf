"""Exception hierarchy.

Every error carries a stable ``code`` string so that out-of-process
consumers (CLI callers, the scoring service, bindings) can map failures
back to a known condition without parsing prose.
"""


class MaskBenchError(Exception):
    """Base class for all library errors."""

    code = "Error"


# --- mask geometry ---------------------------------------------------------

class SumMismatchError(MaskBenchError):
    """RLE run lengths do not sum to height*width."""

    code = "SumMismatch"


class MalformedRunsError(MaskBenchError):
    """An interior RLE run is zero or a run is negative."""

    code = "MalformedRuns"


class MalformedStringError(MaskBenchError):
    """A compressed RLE string cannot be decoded."""

    code = "Malformed"


class DegeneratePolygonError(MaskBenchError):
    """A polygon has fewer than 3 vertices."""

    code = "DegeneratePolygon"


class ShapeMismatchError(MaskBenchError):
    """Two masks (or a mask and an image) disagree on dimensions."""

    code = "ShapeMismatch"


class EmptyMaskError(MaskBenchError):
    """An operation that needs foreground pixels got an empty mask."""

    code = "EmptyMask"


# --- document ingestion ----------------------------------------------------

class DocumentSyntaxError(MaskBenchError):
    """The document is not valid JSON."""

    code = "SyntaxError"


class SchemaError(MaskBenchError):
    """A required field is missing or has the wrong shape."""

    code = "SchemaError"


class DanglingReferenceError(MaskBenchError):
    """An annotation references an unknown image or category id."""

    code = "ReferenceError"


class ScoreRangeError(MaskBenchError):
    """A detection score lies outside [0, 1]."""

    code = "ScoreRange"


# --- evaluation ------------------------------------------------------------

class UnknownImageError(MaskBenchError):
    code = "UnknownImage"


class UnknownCategoryError(MaskBenchError):
    code = "UnknownCategory"


class EmptyGTError(MaskBenchError):
    """AP is undefined for a category with no ground-truth instances."""

    code = "EmptyGT"


# --- fusion ----------------------------------------------------------------

class MissingBboxError(MaskBenchError):
    code = "MissingBbox"


# --- service / CLI ---------------------------------------------------------

class NotFoundError(MaskBenchError):
    code = "NotFound"


class PayloadTooLargeError(MaskBenchError):
    code = "PayloadTooLarge"


class UsageError(MaskBenchError):
    """Bad command-line or binding arguments (exit status 2)."""

    code = "Usage"
