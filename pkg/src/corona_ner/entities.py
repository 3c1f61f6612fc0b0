"""Entity type registry and the span record passed between stages."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import SpanError, UnknownEntityType


class EntityKind(enum.Enum):
    HEALTH = "HEALTH"
    GENERIC = "GENERIC"


@dataclass(frozen=True)
class EntityType:
    name: str
    kind: EntityKind


ONTONOTES_TYPES = (
    "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT",
    "WORK_OF_ART", "LAW", "LANGUAGE", "DATE", "TIME", "PERCENT", "MONEY",
    "QUANTITY", "ORDINAL", "CARDINAL",
)

# GROUP is expert-provided, so it takes health priority.
HEALTH_TYPES = (
    "CORONAVIRUS", "DISEASE_OR_SYNDROME", "SIGN_OR_SYMPTOM", "IMMUNE_RESPONSE", "GROUP",
)


class TypeRegistry:
    """Case-insensitive lookup of the entity types a corpus may use."""

    def __init__(self, types: Iterable[EntityType]):
        self._types: dict[str, EntityType] = {}
        for t in types:
            key = t.name.upper()
            if key in self._types:
                raise ValueError(f"duplicate entity type {t.name}")
            self._types[key] = t

    def __len__(self):
        return len(self._types)

    def __iter__(self):
        return iter(self._types.values())

    def __contains__(self, name):
        return isinstance(name, str) and name.upper() in self._types

    def get(self, name: str) -> EntityType:
        try:
            return self._types[name.upper()]
        except (KeyError, AttributeError):
            raise UnknownEntityType(name, self.names()) from None

    def canonical(self, name: str) -> str:
        return self.get(name).name

    def kind(self, name: str) -> EntityKind:
        return self.get(name).kind

    def names(self, kind: Optional[EntityKind] = None) -> list[str]:
        return [t.name for t in self._types.values() if kind is None or t.kind is kind]


DEFAULT_REGISTRY = TypeRegistry(
    [EntityType(n, EntityKind.GENERIC) for n in ONTONOTES_TYPES]
    + [EntityType(n, EntityKind.HEALTH) for n in HEALTH_TYPES]
)


class SpanSource(enum.Enum):
    GOLD_SEED = "GOLD_SEED"
    SILVER_SEED = "SILVER_SEED"
    MODEL = "MODEL"
    EXPERT = "EXPERT"


@dataclass(frozen=True)
class EntitySpan:
    """Half-open token interval ``[start, end)`` within one sentence."""

    sent_id: str
    start: int
    end: int
    entity_type: str
    source: SpanSource
    score: Optional[float] = None

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise SpanError(f"invalid span [{self.start}, {self.end}) in {self.sent_id}")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise SpanError(f"span score {self.score} outside [0, 1] in {self.sent_id}")

    def __len__(self):
        return self.end - self.start

    @property
    def triple(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.entity_type)

    def overlaps(self, other) -> bool:
        return self.start < other.end and other.start < self.end

    def to_dict(self) -> dict:
        out = {"start": self.start, "end": self.end, "type": self.entity_type,
               "source": self.source.value}
        if self.score is not None:
            out["score"] = self.score
        return out


def span_triple(span) -> tuple[int, int, str]:
    """Accept an EntitySpan or a plain ``(start, end, type)`` tuple."""
    if isinstance(span, EntitySpan):
        return span.triple
    start, end, etype = span
    return (start, end, etype)
