"""Exception types shared across the package."""


class WikilinkerError(Exception):
    """Base class for all domain errors raised by this package."""


class MalformedRecordError(WikilinkerError):
    """A dump line could not be parsed into a record."""


class FormatError(WikilinkerError):
    """An on-disk artifact (alignments, triples, index, gold file) is invalid."""


class CatalogError(WikilinkerError):
    """A rule configuration references an unknown rule or is malformed."""


class RuleChainError(WikilinkerError):
    """Forward chaining failed to reach a fixpoint within the iteration cap."""


class InvalidRequestError(WikilinkerError):
    """A link request is empty or exceeds the configured text limit."""
