import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import jsonschema
import pandas as pd
import yaml
from mergedeep import merge, Strategy
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .evaluation import EvaluationReport, SplitConfig
from .ingestion import MetaKaggleMapping
from .metrics import METRIC_FIELDS, METRIC_LABELS, KSettings, best_metrics
from .recommenders import RecommendationProfile
from .schemas import config_schema
from .trirec_types import Algorithm, Json, UseCase

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    pass


class MetricSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    p: int = Field(default=1, ge=1)
    f1: int = Field(default=5, ge=1)
    r: int = Field(default=10, ge=1)
    mrr: int = Field(default=10, ge=1)
    map: int = Field(default=10, ge=1)
    ndcg: int = Field(default=10, ge=1)

    def ks(self) -> KSettings:
        return KSettings(**self.model_dump())


class ServiceSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    snapshot_interval: int = Field(default=60, ge=1)  # seconds


class Settings(BaseModel):
    """The validated, merged configuration."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    profiles: Dict[Algorithm, RecommendationProfile]
    split: SplitConfig = SplitConfig()
    metrics: MetricSettings = MetricSettings()
    meta_kaggle: MetaKaggleMapping = MetaKaggleMapping()
    service: ServiceSettings = ServiceSettings()


def read_config_from_disk(config_file: Path) -> Json:
    """Reads a json or yaml config file (json is a subset of yaml).

    Args:
        config_file (Path): The path of the config file

    Raises:
        ConfigError: If the file does not exist or cannot be parsed.

    Returns:
        Json: The config json object
    """
    if not Path(config_file).is_file():
        raise ConfigError(f"config file {config_file} doesn't exist")
    try:
        with open(config_file, mode='r', encoding='utf-8') as f:
            config = yaml.safe_load(f.read())
    except yaml.YAMLError as exc:
        raise ConfigError(f'config file {config_file} is not valid json/yaml: {exc}') from exc
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigError(f'config file {config_file} must contain a mapping at the top level')
    return config


def get_default_config() -> Json:
    """Returns the packaged default config

    Returns:
        Json: The config json object
    """
    with open(Path(__file__).parent / 'config.json', mode='r', encoding='utf-8') as f:
        default_config: Json = json.load(f)
    return default_config


def merge_config(user_config: Json, source: str = 'user config') -> Json:
    """Validates a user config against the schema and merges it over the packaged defaults.

    Args:
        user_config (Json): The user config json object
        source (str, optional): Where the user config came from, for error messages. Defaults to 'user config'.

    Raises:
        ConfigError: If the user config does not match the schema.

    Returns:
        Json: The merged config json object
    """
    validator = config_schema.get_validator()
    try:
        validator.validate(user_config)
    except jsonschema.exceptions.ValidationError as exc:
        location = '.'.join(str(p) for p in exc.absolute_path) or '<root>'
        raise ConfigError(f'{source}: {location}: {exc.message}') from exc
    # NOTE: The schema has already checked the types, and a null timestamp_column
    # must be able to replace a string, so this is not TYPESAFE_REPLACE.
    merged: Json = merge(copy.deepcopy(get_default_config()), user_config, strategy=Strategy.REPLACE)
    return merged


def get_config(config_file: Optional[Path] = None) -> Json:
    """Returns the default config, with the user config file (if any) merged over it.

    Args:
        config_file (Optional[Path], optional): The path of the user specified config file. Defaults to None.

    Raises:
        ConfigError: If the user config file is missing, malformed, or does not match the schema.

    Returns:
        Json: The merged config json object
    """
    if config_file is None:
        return get_default_config()
    return merge_config(read_config_from_disk(config_file), str(config_file))


def parse_settings(config: Json, source: str = 'default config') -> Settings:
    """Parses a merged config into the Settings model.

    Args:
        config (Json): The merged config json object
        source (str, optional): Where the config came from, for error messages. Defaults to 'default config'.

    Raises:
        ConfigError: If the config is invalid (i.e. a profile or split invariant is violated).

    Returns:
        Settings: The validated settings
    """
    for algo, profile in config.get('profiles', {}).items():
        if profile.get('algorithm', algo) != algo:
            raise ConfigError(f'{source}: profiles.{algo} has algorithm {profile["algorithm"]!r}')
    try:
        return Settings.model_validate(config)
    except ValidationError as exc:
        raise ConfigError(f'{source}: {exc}') from exc


def load_settings(config_file: Optional[Path] = None) -> Settings:
    """get_config(), parsed into the Settings model."""
    return parse_settings(get_config(config_file), str(config_file) if config_file else 'default config')


TABLE_COLUMNS = ['use_case', 'algorithm', 'n_cases'] + [METRIC_LABELS[name] for name in METRIC_FIELDS] + ['best']


def report_frame(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """One row per report. The best column lists, per use case, the metrics at which
    the row attains the maximum (ties mark every maximal row)."""
    best: List[List[str]] = [[] for _ in reports]
    for use_case in UseCase:
        positions = [n for n, report in enumerate(reports) if report.use_case == use_case]
        for n, labels in zip(positions, best_metrics([reports[n].metrics for n in positions])):
            best[n] = labels
    rows = []
    for report, labels in zip(reports, best):
        values = report.metrics.values()
        row: Dict[str, Any] = {'use_case': report.use_case.value, 'algorithm': report.algorithm.value,
                              'n_cases': report.metrics.n_cases}
        row.update({METRIC_LABELS[name]: values[name] for name in METRIC_FIELDS})
        row['best'] = ';'.join(labels)
        rows.append(row)
    frame = pd.DataFrame(rows, columns=TABLE_COLUMNS)
    return frame.astype({METRIC_LABELS[name]: 'float64' for name in METRIC_FIELDS})


def format_report_table(reports: Sequence[EvaluationReport]) -> str:
    """The comma-delimited report table; six decimals, empty cells for undefined metrics."""
    return str(report_frame(reports).to_csv(index=False, float_format='%.6f', na_rep='', lineterminator='\n'))


def write_report_table(reports: Sequence[EvaluationReport], path: Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode='w', encoding='utf-8', newline='') as f:
        f.write(format_report_table(reports))
    logger.info('Wrote report table to %s', path)


def format_report_json(reports: Sequence[EvaluationReport]) -> str:
    return json.dumps([report.model_dump(mode='json') for report in reports], sort_keys=True, indent=2) + '\n'


def write_report_json(reports: Sequence[EvaluationReport], path: Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode='w', encoding='utf-8') as f:
        f.write(format_report_json(reports))
    logger.info('Wrote json report to %s', path)
