import argparse
import logging
from typing import List, Type, TypeVar

from .trirec_types import Algorithm, UseCase

E = TypeVar('E', UseCase, Algorithm)


class NoStatsAccessFilter(logging.Filter):
    """Drops uvicorn access lines for GET /stats (monitoring polls it)."""
    # pylint:disable=too-few-public-methods
    def filter(self, record: logging.LogRecord) -> bool:
        args = record.args
        if isinstance(args, tuple) and len(args) >= 3:
            return not (args[1] == 'GET' and str(args[2]).split('?')[0] == '/stats')
        return '"GET /stats' not in record.getMessage()


def logging_filters() -> None:
    logger_access = logging.getLogger("uvicorn.access")
    if not any(isinstance(f, NoStatsAccessFilter) for f in logger_access.filters):
        logger_access.addFilter(NoStatsAccessFilter())


def configure_logging(quiet: bool = False, verbose: bool = False) -> None:
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger().setLevel(level)
    logging_filters()


def parse_tokens(text: str, enum: Type[E]) -> List[E]:
    """Parses a comma-separated list of enum values (or 'all'), keeping the given order
    and dropping duplicates.

    Args:
        text (str): i.e. 'uc1,uc3' or 'all'
        enum (Type[E]): UseCase or Algorithm

    Raises:
        argparse.ArgumentTypeError: If a token is unknown or the list is empty.

    Returns:
        List[E]: The parsed values
    """
    tokens = [token.strip().lower() for token in text.split(',') if token.strip()]
    if tokens == ['all']:
        return list(enum)
    if not tokens:
        raise argparse.ArgumentTypeError('expected at least one value')
    values: List[E] = []
    for token in tokens:
        try:
            value = enum(token)
        except ValueError as exc:
            choices = ', '.join(e.value for e in enum)
            raise argparse.ArgumentTypeError(f'unknown token {token!r} (choose from {choices}, all)') from exc
        if value not in values:
            values.append(value)
    return values


def use_cases_arg(text: str) -> List[UseCase]:
    return parse_tokens(text, UseCase)


def algorithms_arg(text: str) -> List[Algorithm]:
    return parse_tokens(text, Algorithm)
