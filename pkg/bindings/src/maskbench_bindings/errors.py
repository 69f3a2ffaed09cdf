"""Exception types raised by the bindings.

Codes mirror the core one-to-one: whatever string the CLI prints after
``error:`` is what the matching exception exposes as ``.code``.
Conditions the bindings detect locally (missing files, bad arguments,
unreadable strings) use the same codes the core would have used.
"""


class BindingError(Exception):
    """Base class; every instance carries a stable ``code`` string."""

    code = "Error"


class CoreError(BindingError):
    """A failure reported by the core process, code preserved verbatim."""

    def __init__(self, message: str, code: str = "Error") -> None:
        super().__init__(message)
        self.code = code


class NotFoundError(BindingError):
    """An input path does not point at a readable file."""

    code = "NotFound"


class UsageError(BindingError):
    """The call itself is malformed (empty input list, unknown override)."""

    code = "Usage"


class MalformedStringError(BindingError):
    """A compressed run-length string cannot be decoded."""

    code = "Malformed"
