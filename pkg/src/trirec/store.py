"""The tripartite interaction multigraph and the dataset/service projection."""
import logging
import math
import threading
from collections import Counter
from typing import Any, Callable, Dict, Iterable, Iterator, List, NamedTuple, Optional, Set, Tuple, TypeVar

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .trirec_types import EntityKind, EntityRef, Interaction, UseCase, VALID_KIND_PAIRS

logger = logging.getLogger(__name__)

KindPair = Tuple[EntityKind, EntityKind]
Index = Dict[EntityRef, Counter]  # entity -> multiset of neighbors
T = TypeVar('T')


class InvalidInteractionError(ValueError):
    pass


class FrozenStoreError(RuntimeError):
    pass


def validate_interaction(interaction: Interaction) -> None:
    """Checks the invariants of a single Interaction.

    Args:
        interaction (Interaction): The interaction to check

    Raises:
        InvalidInteractionError: If the kind pair is not one of the three valid directions,\n
        the weight is not a positive finite number, or the timestamp is not an integer.
    """
    pair = (interaction.source.kind, interaction.target.kind)
    if pair not in VALID_KIND_PAIRS:
        raise InvalidInteractionError(f'invalid kind pair ({pair[0].value}, {pair[1].value}): '
                                      f'{interaction.source} -> {interaction.target}')
    # NOTE: `not weight > 0` also rejects NaN
    if not interaction.weight > 0 or not math.isfinite(interaction.weight):
        raise InvalidInteractionError(f'weight must be positive and finite, got {interaction.weight!r}')
    timestamp = interaction.timestamp
    if timestamp is not None and (isinstance(timestamp, bool) or not isinstance(timestamp, (int, np.integer))):
        raise InvalidInteractionError(f'timestamp must be an integer (epoch seconds), got {timestamp!r}')


class LinkMatrix(NamedTuple):
    """A binary entity x entity matrix over the links between two kinds (in either direction)."""
    rows: Tuple[EntityRef, ...]
    cols: Tuple[EntityRef, ...]
    row_index: Dict[EntityRef, int]
    col_index: Dict[EntityRef, int]
    matrix: sp.csr_matrix


class InteractionStore:
    """An indexed multigraph of interactions.

    The interaction list is the source of truth. A networkx MultiDiGraph over the
    same edges serves as the forward index (successors), the reverse index
    (predecessors) and the popularity count (in-degree, parallel edges included).

    Construction is single-writer. After freeze() the store (and its graph) is
    immutable, and derived structures such as link matrices are cached, so that
    one frozen store can be shared by any number of concurrent readers.
    """

    def __init__(self, interactions: Iterable[Interaction] = ()) -> None:
        self._interactions: List[Interaction] = []
        self._graph = nx.MultiDiGraph()
        self._frozen = False
        self._cache: Dict[Any, Any] = {}
        self._cache_lock = threading.Lock()
        for interaction in interactions:
            self.add_interaction(interaction)

    # --- construction ---

    def add_interaction(self, interaction: Interaction) -> 'InteractionStore':
        """Appends an interaction and updates all indices. Repeated (source, target)
        pairs are kept as parallel edges.

        Args:
            interaction (Interaction): The interaction to append

        Raises:
            FrozenStoreError: If the store has been frozen.

        Returns:
            InteractionStore: self, for chaining
        """
        if self._frozen:
            raise FrozenStoreError('Cannot add interactions to a frozen store; use copy() first.')
        validate_interaction(interaction)
        self._interactions.append(interaction)
        self._graph.add_edge(interaction.source, interaction.target,
                             weight=interaction.weight, timestamp=interaction.timestamp)
        return self

    def freeze(self) -> 'InteractionStore':
        if not self._frozen:
            nx.freeze(self._graph)
            self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def copy(self) -> 'InteractionStore':
        """Returns an unfrozen copy with the same interactions (in the same order)."""
        return InteractionStore(self._interactions)

    def select(self, pairs: Iterable[KindPair]) -> 'InteractionStore':
        """Returns a frozen store with only the interactions of the given kind pairs."""
        pairs_ = set(pairs)
        return InteractionStore(i for i in self._interactions
                                if (i.source.kind, i.target.kind) in pairs_).freeze()

    # --- reads ---

    def __len__(self) -> int:
        return len(self._interactions)

    def __iter__(self) -> Iterator[Interaction]:
        return iter(self._interactions)

    @property
    def interactions(self) -> Tuple[Interaction, ...]:
        return self._cached(('interactions',), lambda: tuple(self._interactions))

    def __contains__(self, entity: object) -> bool:
        return entity in self._graph

    def entities(self, kind: EntityKind) -> List[EntityRef]:
        """All entities of the given kind which take part in at least one interaction, sorted by id."""
        return list(self._cached(('entities', kind),
                                 lambda: tuple(sorted(e for e in self._graph.nodes if e.kind == kind))))

    def targets_of(self, entity: EntityRef, target_kind: EntityKind) -> Set[EntityRef]:
        """Distinct targets of the given kind reachable from entity by one interaction."""
        if entity not in self._graph:
            return set()
        return {t for t in self._graph.successors(entity) if t.kind == target_kind}

    def sources_of(self, entity: EntityRef, source_kind: EntityKind) -> Set[EntityRef]:
        """Distinct sources of the given kind with an interaction into entity."""
        if entity not in self._graph:
            return set()
        return {s for s in self._graph.predecessors(entity) if s.kind == source_kind}

    def linked(self, entity: EntityRef, kind: EntityKind) -> Set[EntityRef]:
        """Distinct entities of the given kind sharing an interaction with entity, in either direction."""
        return self.targets_of(entity, kind) | self.sources_of(entity, kind)

    def popularity(self, entity: EntityRef) -> int:
        """The number of interactions whose target is entity."""
        if entity not in self._graph:
            return 0
        return int(self._graph.in_degree(entity))

    def interaction_count(self, entity: EntityRef, partner_kind: Optional[EntityKind] = None) -> int:
        """The number of interactions entity takes part in (either direction), optionally
        restricted to partners of one kind. Parallel edges are counted."""
        if entity not in self._graph:
            return 0
        count = 0
        for src in self._graph.predecessors(entity):
            if partner_kind is None or src.kind == partner_kind:
                count += self._graph.number_of_edges(src, entity)
        for tgt in self._graph.successors(entity):
            if partner_kind is None or tgt.kind == partner_kind:
                count += self._graph.number_of_edges(entity, tgt)
        return count

    def popularity_counts(self, kind: EntityKind, partner_kind: EntityKind) -> Dict[EntityRef, int]:
        """interaction_count() of every entity of one kind w.r.t. partners of another kind.
        Entities without such interactions are omitted."""
        def build() -> Dict[EntityRef, int]:
            counts = {e: self.interaction_count(e, partner_kind) for e in self.entities(kind)}
            return {e: n for e, n in counts.items() if n > 0}
        return dict(self._cached(('popularity_counts', kind, partner_kind), build))

    def count_by_kind_pair(self) -> Counter:
        """Number of interactions per (source kind, target kind)."""
        return Counter((i.source.kind, i.target.kind) for i in self._interactions)

    def has_timestamps(self, pairs: Iterable[KindPair]) -> bool:
        """True if every interaction of the given kind pairs carries a timestamp (and there is at least one)."""
        pairs_ = set(pairs)
        relevant = [i for i in self._interactions if (i.source.kind, i.target.kind) in pairs_]
        return bool(relevant) and all(i.timestamp is not None for i in relevant)

    # --- indices ---

    def forward_index(self) -> Index:
        return {u: Counter({v: self._graph.number_of_edges(u, v) for v in self._graph.successors(u)})
                for u in self._graph.nodes if self._graph.out_degree(u) > 0}

    def reverse_index(self) -> Index:
        return {v: Counter({u: self._graph.number_of_edges(u, v) for u in self._graph.predecessors(v)})
                for v in self._graph.nodes if self._graph.in_degree(v) > 0}

    def popularity_index(self) -> Dict[EntityRef, int]:
        return {e: int(self._graph.in_degree(e)) for e in self._graph.nodes if self._graph.in_degree(e) > 0}

    def rebuilt(self) -> 'InteractionStore':
        """Rebuilds all indices from scratch using only the raw interaction list."""
        return InteractionStore(self._interactions)

    def indices_consistent(self) -> bool:
        """Rebuild-and-compare: the indices must be exactly derivable from the interaction list."""
        fresh = self.rebuilt()
        return (set(self._graph.nodes) == set(fresh._graph.nodes)  # pylint: disable=protected-access
                and self.forward_index() == fresh.forward_index()
                and self.reverse_index() == fresh.reverse_index()
                and self.popularity_index() == fresh.popularity_index())

    def link_matrix(self, row_kind: EntityKind, col_kind: EntityKind) -> LinkMatrix:
        """Builds the binary row_kind x col_kind matrix of links between the two kinds.
        Links are read in either direction, and repeated interactions collapse to 1.

        Args:
            row_kind (EntityKind): The kind indexing the rows
            col_kind (EntityKind): The kind indexing the columns

        Returns:
            LinkMatrix: The matrix together with its (id-sorted) row and column orderings
        """
        def build() -> LinkMatrix:
            coords: Set[Tuple[EntityRef, EntityRef]] = set()
            for i in self._interactions:
                if (i.source.kind, i.target.kind) == (row_kind, col_kind):
                    coords.add((i.source, i.target))
                elif (i.source.kind, i.target.kind) == (col_kind, row_kind):
                    coords.add((i.target, i.source))
            rows = tuple(sorted({r for r, _ in coords}))
            cols = tuple(sorted({c for _, c in coords}))
            row_index = {e: n for n, e in enumerate(rows)}
            col_index = {e: n for n, e in enumerate(cols)}
            row_ind = np.fromiter((row_index[r] for r, _ in coords), dtype=np.int64, count=len(coords))
            col_ind = np.fromiter((col_index[c] for _, c in coords), dtype=np.int64, count=len(coords))
            data = np.ones(len(coords), dtype=np.float64)
            matrix = sp.csr_matrix((data, (row_ind, col_ind)), shape=(len(rows), len(cols)))
            return LinkMatrix(rows, cols, row_index, col_index, matrix)
        return self._cached(('link_matrix', row_kind, col_kind), build)

    def _cached(self, key: Any, build: Callable[[], T]) -> T:
        # Only frozen stores can cache; a mutable store would invalidate on every write.
        if not self._frozen:
            return build()
        with self._cache_lock:
            if key in self._cache:
                return self._cache[key]
        # build() may itself read other cached values, so it runs unlocked.
        # Concurrent first readers can build twice; the first stored value wins.
        value = build()
        with self._cache_lock:
            stored: T = self._cache.setdefault(key, value)
        return stored


def project_dataset_service(store: InteractionStore) -> InteractionStore:
    """Links a dataset and a service whenever some user has interacted with both.

    One (Dataset -> Service) interaction is emitted per distinct pair, with
    weight = the number of distinct common users. The timestamp of a projected
    link is the latest time at which a common user had interacted with both
    endpoints, or None if any of the underlying interactions has no timestamp.

    Args:
        store (InteractionStore): A store with User -> Dataset and User -> Service interactions

    Returns:
        InteractionStore: The (frozen) projected store, with interactions sorted by (dataset, service)
    """
    latest: Dict[Tuple[EntityRef, EntityRef], int] = {}
    undated: Set[Tuple[EntityRef, EntityRef]] = set()
    for i in store:
        if i.source.kind != EntityKind.USER:
            continue
        key = (i.source, i.target)
        if i.timestamp is None:
            undated.add(key)
        else:
            latest[key] = max(latest.get(key, i.timestamp), i.timestamp)

    weights: Counter = Counter()
    stamps: Dict[Tuple[EntityRef, EntityRef], Optional[int]] = {}
    for user in store.entities(EntityKind.USER):
        datasets = store.targets_of(user, EntityKind.DATASET)
        services = store.targets_of(user, EntityKind.SERVICE)
        for dataset in datasets:
            for service in services:
                pair = (dataset, service)
                weights[pair] += 1
                if (user, dataset) in undated or (user, service) in undated:
                    stamps[pair] = None
                elif pair not in stamps or stamps[pair] is not None:
                    both = max(latest[(user, dataset)], latest[(user, service)])
                    previous = stamps.get(pair)
                    stamps[pair] = both if previous is None else max(previous, both)

    projected = InteractionStore(Interaction(d, s, float(weights[(d, s)]), stamps[(d, s)])
                                 for (d, s) in sorted(weights))
    logger.info('Projected %d dataset/service links from %d users',
                len(projected), len(store.entities(EntityKind.USER)))
    return projected.freeze()


def relevant_store(store: InteractionStore, use_case: UseCase) -> InteractionStore:
    """Returns the store a use case reads from.

    UC1 and UC2 read the raw store. UC3 and UC4 read Dataset -> Service links:
    the projection of the store's user interactions together with any
    Dataset -> Service interactions the store already holds (i.e. a previously
    projected file, or links posted directly to the service).

    Args:
        store (InteractionStore): The raw store
        use_case (UseCase): The use case

    Returns:
        InteractionStore: The store holding the use case's target/candidate links
    """
    if not use_case.projected:
        return store
    counts = store.count_by_kind_pair()
    own_pair = (EntityKind.DATASET, EntityKind.SERVICE)
    if counts[(EntityKind.USER, EntityKind.DATASET)] == 0 or counts[(EntityKind.USER, EntityKind.SERVICE)] == 0:
        return store.select([own_pair])
    projected = project_dataset_service(store)
    if counts[own_pair] == 0:
        return projected
    return InteractionStore([*projected, *store.select([own_pair])]).freeze()
