"""Exception hierarchy shared across the package."""


class GirError(Exception):
    """Base class for all errors raised by gir."""


class ParseError(GirError, ValueError):
    """Malformed input in one of the TREC exchange formats.

    ``offset`` is a byte offset for SGML-style inputs, ``line`` a 1-based
    line number for line-oriented inputs (qrels, runs).
    """

    def __init__(self, message, *, offset=None, line=None, context=None):
        parts = [message]
        if offset is not None:
            parts.append(f"at byte {offset}")
        if line is not None:
            parts.append(f"at line {line}")
        if context:
            parts.append(f"({context})")
        super().__init__(" ".join(parts))
        self.offset = offset
        self.line = line
        self.context = context


class DuplicateDocnoError(ParseError):
    pass


class RunFormatError(GirError, ValueError):
    """A run violates the ranked-list invariants on write."""


class EmptyQuery(GirError):
    """A topic produced no terms under the requested field mode."""


class ContractError(GirError, ValueError):
    """Scoring inputs or parameters outside their valid domain."""


class UnknownModelError(GirError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown model"


class IndexBuildError(GirError):
    pass


class IndexFormatError(GirError):
    """Base for on-disk index problems."""


class MissingIndexError(IndexFormatError, FileNotFoundError):
    pass


class IndexVersionError(IndexFormatError):
    pass


class TruncatedIndexError(IndexFormatError):
    pass


class ChecksumError(IndexFormatError):
    pass


class EvaluationError(GirError):
    pass


class NoRelevantDocuments(EvaluationError):
    """Topic has no relevant judgments and is excluded from aggregation."""
