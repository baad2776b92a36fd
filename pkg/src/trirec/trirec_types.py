from enum import Enum
from typing import Any, Dict, FrozenSet, NamedTuple, Optional, Tuple

# See https://mypy.readthedocs.io/en/stable/kinds_of_types.html#type-aliases

KV = Dict[str, Any]
Json = KV
Yaml = KV

# In python there are unfortunately an enormous number of ways to represent the humble struct.
# NamedTuple is used for the graph-level records because they are hashed and sorted in
# the hot loops of the recommenders, and because immutability is what lets a frozen
# store be shared between threads. Parameter bundles that need validation are pydantic models.
# See https://mypy.readthedocs.io/en/stable/kinds_of_types.html#named-tuples


class EntityKind(str, Enum):
    USER = "user"
    DATASET = "dataset"
    SERVICE = "service"


class EntityRef(NamedTuple):
    kind: EntityKind
    id: str

    @classmethod
    def parse(cls, kind: Any, id_: Any) -> 'EntityRef':
        """Builds an EntityRef from untrusted tokens (i.e. a csv row or a url).

        Args:
            kind (Any): An EntityKind or its lowercase token
            id_ (Any): The opaque identifier

        Raises:
            ValueError: If the kind is unknown, or the id is empty or contains whitespace.

        Returns:
            EntityRef: The validated reference
        """
        try:
            kind_ = EntityKind(kind)
        except ValueError as exc:
            raise ValueError(f"unknown entity kind {kind!r}") from exc
        id_str = str(id_)
        if id_str == '' or any(c.isspace() for c in id_str):
            raise ValueError(f"invalid {kind_.value} id {id_str!r} (must be non-empty without whitespace)")
        return cls(kind_, id_str)

    def __str__(self) -> str:
        return f'{self.kind.value}:{self.id}'


class Interaction(NamedTuple):
    source: EntityRef
    target: EntityRef
    weight: float = 1.0
    timestamp: Optional[int] = None  # epoch seconds


# Interactions are directed, and only these three directions exist.
# The (Dataset, Service) edges are the projected links.
VALID_KIND_PAIRS: FrozenSet[Tuple[EntityKind, EntityKind]] = frozenset({
    (EntityKind.USER, EntityKind.DATASET),
    (EntityKind.USER, EntityKind.SERVICE),
    (EntityKind.DATASET, EntityKind.SERVICE),
})


class UseCase(str, Enum):
    UC1 = "uc1"  # datasets for users
    UC2 = "uc2"  # services for users
    UC3 = "uc3"  # datasets for services
    UC4 = "uc4"  # services for datasets

    @property
    def target_kind(self) -> EntityKind:
        return _USE_CASE_KINDS[self][0]

    @property
    def candidate_kind(self) -> EntityKind:
        return _USE_CASE_KINDS[self][1]

    @property
    def projected(self) -> bool:
        """UC3 and UC4 only read the projected Dataset/Service links."""
        return _USE_CASE_KINDS[self][2]


_USE_CASE_KINDS: Dict[UseCase, Tuple[EntityKind, EntityKind, bool]] = {
    UseCase.UC1: (EntityKind.USER, EntityKind.DATASET, False),
    UseCase.UC2: (EntityKind.USER, EntityKind.SERVICE, False),
    UseCase.UC3: (EntityKind.SERVICE, EntityKind.DATASET, True),
    UseCase.UC4: (EntityKind.DATASET, EntityKind.SERVICE, True),
}


class Algorithm(str, Enum):
    MP = "mp"  # most popular
    CF = "cf"  # neighborhood collaborative filtering


class SimilarityMeasure(str, Enum):
    COSINE = "cosine"
    JACCARD = "jaccard"


class HoldoutStrategy(str, Enum):
    AUTO = "auto"  # resolved to one of the two below per split
    MOST_RECENT = "most_recent"
    SEEDED_RANDOM = "seeded_random"


class RankedEntry(NamedTuple):
    entity: EntityRef
    score: float


class RankedList(NamedTuple):
    entries: Tuple[RankedEntry, ...]
    fallback: bool = False  # True when CF fell back to MP (cold-start target)

    @property
    def entities(self) -> Tuple[EntityRef, ...]:
        return tuple(entry.entity for entry in self.entries)
