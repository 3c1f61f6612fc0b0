"""Exception hierarchy shared by all pipeline stages."""


class AnnotationError(Exception):
    """Base class for every error raised by corona_ner."""


class CorpusFormatError(AnnotationError, ValueError):
    """Malformed JSONL or CoNLL input, or output that cannot be serialized."""


class LexiconError(AnnotationError, ValueError):
    """Invalid seed rows or inconsistent seed lexicons."""


class UnknownEntityType(LexiconError):
    def __init__(self, name, valid):
        self.name = name
        self.valid = tuple(valid)
        super().__init__(f"unknown entity type {name} (valid types: {', '.join(self.valid)})")


class FetchError(AnnotationError):
    """A knowledge-base request failed or returned something unusable."""

    def __init__(self, endpoint, entity_type=None, reason=""):
        self.endpoint = endpoint
        self.entity_type = entity_type
        self.reason = reason
        what = f" for {entity_type}" if entity_type else ""
        super().__init__(f"SPARQL request to {endpoint}{what} failed: {reason}")


class SpanError(AnnotationError, ValueError):
    """Span records that are out of bounds, overlapping or badly typed."""


class BIOError(AnnotationError, ValueError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class HarmonizationError(AnnotationError, ValueError):
    pass


class EvaluationError(AnnotationError, ValueError):
    pass


class ConfigError(AnnotationError):
    """Invalid or unresolvable pipeline configuration (CLI exit code 2)."""
