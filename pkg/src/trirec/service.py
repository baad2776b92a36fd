"""The REST service: recommendations, runtime interactions, profiles and evaluation."""
import logging
import threading
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple

import uvicorn
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .evaluation import SplitConfig, run_evaluation
from .ingestion import StoreStatistics, compute_statistics, export_canonical
from .input_output import Settings
from .metrics import MetricReport
from .recommenders import RecommendationProfile, recommend
from .store import InteractionStore, InvalidInteractionError, relevant_store
from .trirec_types import Algorithm, EntityKind, EntityRef, Interaction, SimilarityMeasure, UseCase
from .utils import logging_filters

logger = logging.getLogger(__name__)


class RecommendRequest(BaseModel):
    use_case: UseCase
    target_id: str = Field(min_length=1)
    algorithm: Algorithm = Algorithm.MP
    k: Optional[int] = Field(default=None, ge=1)


class RankedItem(BaseModel):
    id: str
    score: float


class RecommendResponse(BaseModel):
    use_case: UseCase
    algorithm: Algorithm
    target_id: str
    fallback: bool
    items: List[RankedItem]


class ProfileUpdate(BaseModel):
    """The profile fields to overwrite; omitted fields keep their value."""
    model_config = ConfigDict(extra='forbid')

    k: Optional[int] = Field(default=None, ge=1)
    neighborhood_size: Optional[int] = Field(default=None, ge=1)
    similarity: Optional[SimilarityMeasure] = None
    filter_seen: Optional[bool] = None


class InteractionRecord(BaseModel):
    """A canonical interaction record."""
    model_config = ConfigDict(extra='forbid')

    source_kind: EntityKind
    source_id: str
    target_kind: EntityKind
    target_id: str
    weight: float = 1.0
    timestamp: Optional[int] = None

    def to_interaction(self) -> Interaction:
        return Interaction(EntityRef.parse(self.source_kind, self.source_id),
                           EntityRef.parse(self.target_kind, self.target_id),
                           self.weight, self.timestamp)


class Generation(NamedTuple):
    number: int
    store: InteractionStore  # frozen
    profiles: Dict[Algorithm, RecommendationProfile]


class ServiceState:
    """Readers take the current Generation and never see a partial update.
    Writers build a new Generation and swap it in under the write lock."""

    def __init__(self, store: InteractionStore, settings: Settings,
                 snapshot_path: Optional[Path] = None) -> None:
        self.settings = settings
        self.snapshot_path = snapshot_path
        self._generation = Generation(0, store.freeze(), dict(settings.profiles))
        self._write_lock = threading.Lock()
        self._relevant_lock = threading.Lock()
        self._relevant: Dict[Tuple[int, bool], InteractionStore] = {}
        self._dirty = False

    @property
    def generation(self) -> Generation:
        return self._generation

    def relevant(self, generation: Generation, use_case: UseCase) -> InteractionStore:
        """relevant_store() of a generation, computed once per generation."""
        key = (generation.number, use_case.projected)
        with self._relevant_lock:
            if key not in self._relevant:
                # older generations are never read again once a newer one is cached
                self._relevant = {k: v for k, v in self._relevant.items() if k[0] >= generation.number}
                self._relevant[key] = relevant_store(generation.store, use_case)
            return self._relevant[key]

    def add_interaction(self, interaction: Interaction) -> Generation:
        with self._write_lock:
            current = self._generation
            # TODO: copy() rebuilds the whole index per write; batch writes if posting rates grow
            store = current.store.copy().add_interaction(interaction).freeze()
            self._generation = Generation(current.number + 1, store, current.profiles)
            self._dirty = True
            return self._generation

    def update_profile(self, algorithm: Algorithm, changes: Dict[str, object]) -> RecommendationProfile:
        with self._write_lock:
            current = self._generation
            profile = current.profiles[algorithm].updated(changes)
            profiles = {**current.profiles, algorithm: profile}
            self._generation = Generation(current.number + 1, current.store, profiles)
            return profile

    def snapshot(self) -> bool:
        """Writes the current interactions to the snapshot file if they changed since the last snapshot."""
        if self.snapshot_path is None:
            return False
        with self._write_lock:
            if not self._dirty:
                return False
            store = self._generation.store
            self._dirty = False
        try:
            export_canonical(store, self.snapshot_path)
        except OSError:
            # the interactions are still pending; the next snapshot retries them
            with self._write_lock:
                self._dirty = True
            raise
        return True


def create_app(state: ServiceState) -> FastAPI:
    """Builds the FastAPI app around a ServiceState.

    Args:
        state (ServiceState): The shared state

    Returns:
        FastAPI: The app
    """
    app = FastAPI(title='trirec', version=__version__)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        # pylint:disable=unused-argument
        return JSONResponse(status_code=400, content={'detail': jsonable_encoder(exc.errors())})

    @app.get('/recommend/{use_case}/{target_id}', response_model=RecommendResponse)
    def get_recommendations(use_case: UseCase, target_id: str, algo: Algorithm = Algorithm.MP,
                            k: Optional[int] = Query(default=None, ge=1)) -> RecommendResponse:
        request = RecommendRequest(use_case=use_case, target_id=target_id, algorithm=algo, k=k)
        generation = state.generation
        try:
            target = EntityRef.parse(request.use_case.target_kind, request.target_id)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if target not in generation.store:
            raise HTTPException(status_code=404, detail=f'unknown {target.kind.value} {target.id!r}')
        profile = generation.profiles[request.algorithm]
        if request.k is not None:
            profile = profile.updated({'k': request.k})
        ranked = recommend(state.relevant(generation, request.use_case), request.use_case, target, profile)
        return RecommendResponse(use_case=request.use_case, algorithm=request.algorithm, target_id=target.id,
                                 fallback=ranked.fallback,
                                 items=[RankedItem(id=e.entity.id, score=e.score) for e in ranked.entries])

    @app.post('/interactions', status_code=201)
    def post_interaction(record: InteractionRecord) -> Dict[str, int]:
        try:
            generation = state.add_interaction(record.to_interaction())
        except (ValueError, InvalidInteractionError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        logger.debug('Generation %d: added %s', generation.number, record)
        return {'generation': generation.number, 'interactions': len(generation.store)}

    @app.get('/profiles/{algo}', response_model=RecommendationProfile)
    def get_profile(algo: Algorithm) -> RecommendationProfile:
        return state.generation.profiles[algo]

    @app.put('/profiles/{algo}', response_model=RecommendationProfile)
    def put_profile(algo: Algorithm, update: ProfileUpdate) -> RecommendationProfile:
        try:
            profile = state.update_profile(algo, update.model_dump(exclude_none=True))
        except ValidationError as exc:
            raise HTTPException(status_code=400, detail=jsonable_encoder(exc.errors())) from exc
        logger.info('Profile %s updated: %s', algo.value, profile)
        return profile

    @app.post('/evaluate', response_model=MetricReport)
    def post_evaluate(config: SplitConfig, uc: UseCase = UseCase.UC1,
                      algo: Algorithm = Algorithm.MP) -> MetricReport:
        generation = state.generation
        report = run_evaluation(generation.store, uc, generation.profiles[algo], config,
                                state.settings.metrics.ks(), relevant=state.relevant(generation, uc))
        logger.info('Evaluated %s/%s on generation %d: %d cases', uc.value, algo.value,
                    generation.number, report.metrics.n_cases)
        return report.metrics

    @app.get('/stats', response_model=StoreStatistics)
    def get_stats() -> StoreStatistics:
        return compute_statistics(state.generation.store)

    return app


def serve(store: InteractionStore, settings: Settings, host: str = '127.0.0.1', port: int = 8000,
          snapshot_path: Optional[Path] = None, snapshot_interval: Optional[int] = None) -> None:
    """Runs the service until interrupted. If snapshot_path is given, the interactions are
    written there every snapshot_interval seconds (when they changed) and on shutdown.

    Args:
        store (InteractionStore): The initial interactions
        settings (Settings): The configuration (profiles, metric cut-offs, snapshot interval)
        host (str, optional): The bind address. Defaults to '127.0.0.1'.
        port (int, optional): The port. Defaults to 8000.
        snapshot_path (Optional[Path], optional): The canonical file to snapshot to. Defaults to None.
        snapshot_interval (Optional[int], optional): Seconds between snapshots. Defaults to the config value.
    """
    state = ServiceState(store, settings, snapshot_path)
    interval = snapshot_interval if snapshot_interval is not None else settings.service.snapshot_interval
    stop = threading.Event()

    def snapshot_loop() -> None:
        while not stop.wait(interval):
            try:
                if state.snapshot():
                    logger.info('Snapshot written to %s', snapshot_path)
            except OSError as exc:
                logger.error('Snapshot to %s failed: %s', snapshot_path, exc)

    thread = threading.Thread(target=snapshot_loop, name='snapshot', daemon=True)
    if snapshot_path is not None:
        thread.start()

    config = uvicorn.Config(create_app(state), host=host, port=port)
    # uvicorn configures its loggers in Config, so the filters go on afterwards
    logging_filters()
    try:
        uvicorn.Server(config).run()
    finally:
        stop.set()
        if snapshot_path is not None:
            thread.join()
            if state.snapshot():
                logger.info('Final snapshot written to %s', snapshot_path)
