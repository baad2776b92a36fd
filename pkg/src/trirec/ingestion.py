"""Canonical interaction files, the Meta Kaggle adapter and store statistics."""
import logging
import math
from pathlib import Path
import re
from typing import Dict, Iterator, List, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from .store import InteractionStore, InvalidInteractionError, project_dataset_service, validate_interaction
from .trirec_types import EntityKind, EntityRef, Interaction

logger = logging.getLogger(__name__)

CANONICAL_COLUMNS = ['source_kind', 'source_id', 'target_kind', 'target_id', 'weight', 'timestamp']
REQUIRED_COLUMNS = CANONICAL_COLUMNS[:4]
CHUNKSIZE = 100_000


class IngestError(Exception):
    """A file could not be ingested. line is 1-based (the header is line 1), if known."""

    def __init__(self, path: Path, line: Optional[int], message: str) -> None:
        self.path = Path(path)
        self.line = line
        self.message = message
        location = f'{self.path}:{line}' if line is not None else f'{self.path}'
        super().__init__(f'{location}: {message}')


def _read_chunks(path: Path, usecols: Optional[List[str]] = None) -> Iterator[pd.DataFrame]:
    """Streams a csv file as string-valued chunks. Empty cells are ''."""
    try:
        reader = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False,
                             usecols=usecols, chunksize=CHUNKSIZE, encoding='utf-8')
        with reader:
            for chunk in reader:
                yield chunk.fillna('')
    except pd.errors.EmptyDataError:
        return
    except pd.errors.ParserError as exc:
        # the tokenizer reports 1-based file lines, header included
        found = re.search(r'\bline (\d+)', str(exc))
        raise IngestError(path, int(found.group(1)) if found else None, f'malformed csv: {exc}') from exc
    except UnicodeDecodeError as exc:
        raise IngestError(path, None, f'not valid utf-8: {exc}') from exc


def _read_header(path: Path) -> List[str]:
    if not Path(path).is_file():
        raise IngestError(path, None, 'no such file')
    try:
        return [str(col) for col in pd.read_csv(path, dtype=str, nrows=0, encoding='utf-8').columns]
    except pd.errors.EmptyDataError:
        return []


def _parse_weight(token: str) -> float:
    if token.strip() == '':
        return 1.0
    weight = float(token)
    if not math.isfinite(weight):
        raise ValueError(f'weight must be a finite number, got {token!r}')
    return weight


def _parse_timestamp(token: str) -> Optional[int]:
    if token.strip() == '':
        return None
    return int(token)


def load_canonical(path: Path) -> InteractionStore:
    """Loads a canonical interaction file, streaming it in chunks.

    Args:
        path (Path): A utf-8 csv file whose header names at least source_kind, source_id, target_kind\n
        and target_id (weight and timestamp are optional; unknown columns are ignored)

    Raises:
        IngestError: If the file is missing, the header lacks a required column, or a row is malformed\n
        or has an invalid kind pair. The error carries the 1-based line number.

    Returns:
        InteractionStore: The frozen store, with interactions in file order
    """
    header = _read_header(path)
    if not header:
        raise IngestError(path, 1, 'missing header')
    missing = [col for col in REQUIRED_COLUMNS if col not in header]
    if missing:
        raise IngestError(path, 1, f'header is missing column(s) {", ".join(missing)}')
    usecols = [col for col in CANONICAL_COLUMNS if col in header]

    store = InteractionStore()
    line = 1
    # read every column, so that a row with too many fields is a parser error
    for chunk in _read_chunks(path):
        for row in chunk[usecols].itertuples(index=False):
            line += 1
            fields: Dict[str, str] = row._asdict()
            if all(str(value).strip() == '' for value in fields.values()):
                continue  # blank line
            try:
                interaction = Interaction(EntityRef.parse(fields['source_kind'], fields['source_id']),
                                          EntityRef.parse(fields['target_kind'], fields['target_id']),
                                          _parse_weight(fields.get('weight', '')),
                                          _parse_timestamp(fields.get('timestamp', '')))
                validate_interaction(interaction)
            except InvalidInteractionError as exc:
                raise IngestError(path, line, str(exc)) from exc
            except ValueError as exc:
                raise IngestError(path, line, f'malformed row: {exc}') from exc
            store.add_interaction(interaction)
    logger.info('Loaded %d interactions from %s', len(store), path)
    return store.freeze()


def _format_weight(weight: float) -> str:
    return str(int(weight)) if float(weight).is_integer() else repr(float(weight))


def export_canonical(store: InteractionStore, path: Path) -> None:
    """Writes a store as a canonical interaction file (weights are written as integers when integral).

    Args:
        store (InteractionStore): The store
        path (Path): The output file; parent directories are created
    """
    rows = [(i.source.kind.value, i.source.id, i.target.kind.value, i.target.id,
             _format_weight(i.weight), '' if i.timestamp is None else str(int(i.timestamp)))
            for i in store]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=CANONICAL_COLUMNS, dtype=str).to_csv(path, index=False, lineterminator='\n')
    logger.info('Wrote %d interactions to %s', len(rows), path)


class ColumnMapping(BaseModel):
    """Which columns of one raw table hold the user, the entity and (optionally) the time."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    user_column: str = Field(min_length=1)
    entity_column: str = Field(min_length=1)
    timestamp_column: Optional[str] = None


class MetaKaggleMapping(BaseModel):
    """forum rows become user -> dataset interactions, vote rows user -> service interactions."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    forum: ColumnMapping = ColumnMapping(user_column='PostUserId', entity_column='DatasetId',
                                         timestamp_column='PostDate')
    votes: ColumnMapping = ColumnMapping(user_column='UserId', entity_column='KernelVersionId',
                                         timestamp_column='VoteDate')


def _epoch_seconds(values: pd.Series) -> List[Optional[int]]:
    """Numeric columns are taken as epoch seconds; anything else is parsed as a date (UTC)."""
    stripped = values.str.strip()
    present = stripped != ''
    numeric = pd.to_numeric(stripped.where(present), errors='coerce')
    if bool(numeric[present].notna().all()):
        return [None if pd.isna(n) else int(n) for n in numeric]
    dates = pd.to_datetime(stripped.where(present), errors='coerce', utc=True, format='mixed')
    unparsed = int((dates.isna() & present).sum())
    if unparsed:
        logger.warning('%d timestamps could not be parsed and are left empty', unparsed)
    epoch = pd.Timestamp(0, tz='UTC')
    return [None if pd.isna(d) else int((d - epoch) // pd.Timedelta(seconds=1)) for d in dates]


def _adapt_table(path: Path, mapping: ColumnMapping, entity_kind: EntityKind) -> List[Interaction]:
    header = _read_header(path)
    if not header:
        logger.info('%s is empty', path)
        return []
    for col in [mapping.user_column, mapping.entity_column, mapping.timestamp_column]:
        if col is not None and col not in header:
            raise IngestError(path, 1, f'missing configured column {col!r}')
    usecols = [c for c in [mapping.user_column, mapping.entity_column, mapping.timestamp_column] if c]

    interactions: List[Interaction] = []
    dropped = 0
    for chunk in _read_chunks(path, usecols):
        users = chunk[mapping.user_column].str.strip()
        entities = chunk[mapping.entity_column].str.strip()
        if mapping.timestamp_column:
            stamps = _epoch_seconds(chunk[mapping.timestamp_column])
        else:
            stamps = [None] * len(chunk)
        for user, entity, stamp in zip(users, entities, stamps):
            try:
                interactions.append(Interaction(EntityRef.parse(EntityKind.USER, user),
                                                EntityRef.parse(entity_kind, entity), 1.0, stamp))
            except ValueError:
                dropped += 1
    if dropped:
        logger.warning('Dropped %d rows of %s with an empty or invalid id', dropped, path)
    return interactions


def adapt_meta_kaggle(forum_path: Path, votes_path: Path, output_path: Path,
                      mapping: MetaKaggleMapping = MetaKaggleMapping()) -> InteractionStore:
    """Converts a Meta Kaggle extract into a canonical interaction file.

    Every forum row yields one user -> dataset interaction and every vote row
    one user -> service interaction (repeated rows are kept). No dataset ->
    service links are emitted; projection is a separate step.

    Args:
        forum_path (Path): The forum table
        votes_path (Path): The vote table
        output_path (Path): The canonical file to write
        mapping (MetaKaggleMapping, optional): The column mapping. Defaults to MetaKaggleMapping().

    Raises:
        IngestError: If a table is missing or lacks a configured column.

    Returns:
        InteractionStore: The frozen store that was written
    """
    forum = _adapt_table(forum_path, mapping.forum, EntityKind.DATASET)
    votes = _adapt_table(votes_path, mapping.votes, EntityKind.SERVICE)
    store = InteractionStore(forum + votes).freeze()
    export_canonical(store, output_path)
    return store


class StoreStatistics(BaseModel):
    n_users: int = Field(default=0, ge=0)
    n_datasets: int = Field(default=0, ge=0)
    n_services: int = Field(default=0, ge=0)
    n_user_dataset: int = Field(default=0, ge=0)
    n_user_service: int = Field(default=0, ge=0)
    n_dataset_service: int = Field(default=0, ge=0)


STATISTICS_LABELS: Dict[str, str] = {
    'n_users': 'Number of users',
    'n_datasets': 'Number of datasets',
    'n_services': 'Number of services',
    'n_user_dataset': 'Number of user/dataset interactions',
    'n_user_service': 'Number of user/service interactions',
    'n_dataset_service': 'Number of dataset/service interactions',
}

# The 2017-11-15 Meta Kaggle snapshot. The prose elsewhere gives 2,926 user/dataset interactions.
REFERENCE_STATISTICS = StoreStatistics(n_users=6108, n_datasets=45, n_services=3334, n_user_dataset=2962,
                                       n_user_service=18593, n_dataset_service=95249)


def compute_statistics(store: InteractionStore, include_projection: bool = False) -> StoreStatistics:
    """Counts entities (distinct ids per kind) and interactions per kind pair.

    Args:
        store (InteractionStore): The store
        include_projection (bool, optional): If the store has no dataset/service links, count those\n
        of its projection instead. Defaults to False.

    Returns:
        StoreStatistics: The counts
    """
    pairs = store.count_by_kind_pair()
    n_dataset_service = pairs[(EntityKind.DATASET, EntityKind.SERVICE)]
    if include_projection and n_dataset_service == 0:
        n_dataset_service = len(project_dataset_service(store))
    return StoreStatistics(n_users=len(store.entities(EntityKind.USER)),
                           n_datasets=len(store.entities(EntityKind.DATASET)),
                           n_services=len(store.entities(EntityKind.SERVICE)),
                           n_user_dataset=pairs[(EntityKind.USER, EntityKind.DATASET)],
                           n_user_service=pairs[(EntityKind.USER, EntityKind.SERVICE)],
                           n_dataset_service=n_dataset_service)


def format_statistics(stats: StoreStatistics) -> str:
    width = max(len(label) for label in STATISTICS_LABELS.values())
    return '\n'.join(f'{label:<{width}}  {getattr(stats, name):,}' for name, label in STATISTICS_LABELS.items())


def check_reference_statistics(stats: StoreStatistics,
                               reference: StoreStatistics = REFERENCE_STATISTICS) -> List[str]:
    """Compares statistics with the published snapshot figures. A mismatch is only a warning.

    Args:
        stats (StoreStatistics): The computed statistics
        reference (StoreStatistics, optional): The expected figures. Defaults to REFERENCE_STATISTICS.

    Returns:
        List[str]: The names of the mismatching fields (empty if all match)
    """
    mismatches = [name for name in STATISTICS_LABELS if getattr(stats, name) != getattr(reference, name)]
    for name in mismatches:
        logger.warning('%s: got %s, expected %s', STATISTICS_LABELS[name],
                       f'{getattr(stats, name):,}', f'{getattr(reference, name):,}')
    if mismatches:
        logger.warning('Statistics differ from the 2017-11-15 snapshot figures. Meta Kaggle changes between '
                       'snapshots, and the published user/dataset count itself is inconsistent '
                       '(2,926 in the text vs 2,962 in the table).')
    return mismatches
