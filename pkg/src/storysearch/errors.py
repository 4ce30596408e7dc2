"""Exception types shared across the engine."""

from __future__ import annotations


class StoryEngineError(Exception):
    """Base class for every error raised by this package."""


class NotFoundError(StoryEngineError):
    """A referenced node, entity, project, or run does not exist."""


class InvalidInputError(StoryEngineError):
    """An argument violates a documented precondition or range."""


class ParseError(StoryEngineError):
    """A document could not be decoded; carries the offending position when known."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class IntegrityError(StoryEngineError):
    """A loaded or mutated structure violates its invariants."""


class InvalidTypeError(StoryEngineError):
    """An entity or relationship uses a type not in the declared type list."""


class SelfLoopError(InvalidTypeError):
    """A relationship connects an entity to itself (disallowed by default)."""


class ValidationError(StoryEngineError):
    """Generated content failed validation after the repair retry."""

    def __init__(self, message: str, violations: tuple[str, ...] = ()):
        super().__init__(message)
        self.violations = tuple(violations)


class UpstreamError(StoryEngineError):
    """The completion backend failed after all retry attempts."""

    def __init__(self, message: str, status: int | None = None, attempts: int | None = None):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class EmptyResponseError(StoryEngineError):
    """The completion backend returned a 2xx response with no text."""


class SchemaError(StoryEngineError):
    """A structured response is valid JSON but violates the expected schema."""

    def __init__(self, message: str, document_text: str | None = None):
        super().__init__(message)
        self.document_text = document_text


class IoError(StoryEngineError):
    """A file could not be read or written."""


class StrategyError(StoryEngineError):
    """A strategy or suite run exceeded its failure budget."""

    def __init__(self, message: str, partial: object | None = None):
        super().__init__(message)
        self.partial = partial
