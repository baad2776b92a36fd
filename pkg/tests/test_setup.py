from typing import Dict, Iterable, List, Optional, Tuple

from hypothesis import strategies as st

from trirec.store import InteractionStore
from trirec.trirec_types import EntityKind, EntityRef, Interaction


def U(id_: str) -> EntityRef:
    return EntityRef(EntityKind.USER, id_)


def D(id_: str) -> EntityRef:
    return EntityRef(EntityKind.DATASET, id_)


def S(id_: str) -> EntityRef:
    return EntityRef(EntityKind.SERVICE, id_)


def make_store(edges: Iterable[Tuple[EntityRef, EntityRef]], timestamps: Optional[Iterable[int]] = None,
               freeze: bool = True) -> InteractionStore:
    """Builds a store from (source, target) pairs, optionally with one timestamp per pair."""
    edges = list(edges)
    stamps: List[Optional[int]] = list(timestamps) if timestamps is not None else [None] * len(edges)
    store = InteractionStore(Interaction(s, t, 1.0, ts) for (s, t), ts in zip(edges, stamps))
    return store.freeze() if freeze else store


@st.composite
def random_stores(draw: st.DrawFn, max_entities: int = 8, max_edges: int = 60,
                  dataset_service: bool = False) -> InteractionStore:
    """Random user/dataset/service stores with repeated pairs. If dataset_service is set,
    dataset -> service links are drawn as well."""
    n_users = draw(st.integers(1, max_entities))
    n_datasets = draw(st.integers(1, max_entities))
    n_services = draw(st.integers(1, max_entities))
    users = [U(f'u{i}') for i in range(n_users)]
    datasets = [D(f'd{i}') for i in range(n_datasets)]
    services = [S(f's{i}') for i in range(n_services)]
    pairs = [(u, d) for u in users for d in datasets] + [(u, s) for u in users for s in services]
    if dataset_service:
        pairs += [(d, s) for d in datasets for s in services]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=0, max_size=max_edges))
    stamps = draw(st.lists(st.integers(0, 10_000), min_size=len(chosen), max_size=len(chosen)))
    return make_store(chosen, stamps)


def hub_store() -> InteractionStore:
    """A store whose projection has one dataset (d00) linked to every service.

    Services s01..s05 link to all twelve datasets d00..d11; their two oldest links are
    d<i> and d<i+1> and the newest is d00, so d00 is withheld for all of them under the
    most-recent holdout. Services s06..s25 link to d00 only. Every link comes from a
    dedicated user who touched both endpoints at the same time.
    """
    datasets = [f'd{j:02d}' for j in range(12)]
    edges: List[Tuple[EntityRef, EntityRef]] = []
    stamps: List[int] = []
    for i in range(1, 6):
        service = f's{i:02d}'
        for j, dataset in enumerate(datasets):
            if j in (i, i + 1):
                t = 100 + (j - i)
            elif j == 0:
                t = 1000
            else:
                t = 200 + j
            user = U(f'u_{service}_{dataset}')
            edges += [(user, D(dataset)), (user, S(service))]
            stamps += [t, t]
    for n in range(6, 26):
        user = U(f'u_s{n:02d}')
        edges += [(user, D('d00')), (user, S(f's{n:02d}'))]
        stamps += [50, 50]
    return make_store(edges, stamps)


def mp_optimal_store() -> InteractionStore:
    """UC1 store where every evaluated user's test items are exactly the ten most popular datasets.

    Users e0..e4 each touch one private dataset q<i> first and then p0..p9; three
    background users touch p0..p9 (ten datasets, so they are not evaluated).
    """
    edges: List[Tuple[EntityRef, EntityRef]] = []
    stamps: List[int] = []
    popular = [D(f'p{j}') for j in range(10)]
    for i in range(5):
        user = U(f'e{i}')
        edges.append((user, D(f'q{i}')))
        stamps.append(1)
        for j, dataset in enumerate(popular):
            edges.append((user, dataset))
            stamps.append(10 + j)
    for b in range(3):
        for dataset in popular:
            edges.append((U(f'b{b}'), dataset))
            stamps.append(5)
    return make_store(edges, stamps)


def three_rows() -> InteractionStore:
    return make_store([(U('u1'), D('d1')), (U('u1'), S('s1')), (U('u2'), S('s1'))])


def linked_sets(store: InteractionStore, kind_from: EntityKind, kind_to: EntityKind) -> Dict[EntityRef, set]:
    """Brute-force adjacency: entity -> set of linked entities of another kind (either direction)."""
    out: Dict[EntityRef, set] = {}
    for i in store:
        if (i.source.kind, i.target.kind) == (kind_from, kind_to):
            out.setdefault(i.source, set()).add(i.target)
        elif (i.source.kind, i.target.kind) == (kind_to, kind_from):
            out.setdefault(i.target, set()).add(i.source)
    return out
