import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from . import cli
from . import input_output as io
from .evaluation import SplitConfig, evaluate_all
from .ingestion import (IngestError, MetaKaggleMapping, adapt_meta_kaggle, check_reference_statistics,
                        compute_statistics, export_canonical, format_statistics, load_canonical)
from .recommenders import InvalidTargetError, recommend
from .service import serve
from .store import project_dataset_service, relevant_store
from .synthetic import generate_synthetic
from .trirec_types import EntityRef
from .utils import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NO_CASES = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def main() -> None:
    """See README.md"""
    args = cli.parser.parse_args()
    sys.exit(run(args))


def run(args: argparse.Namespace) -> int:
    """Runs one subcommand.

    Args:
        args (argparse.Namespace): The parsed command line arguments

    Returns:
        int: The exit code (0 success, 1 evaluation without cases, 2 usage, parse, config or i/o error)
    """
    configure_logging(args.quiet, args.verbose)
    commands = {'ingest': ingest, 'project': project, 'recommend': recommend_command,
                'evaluate': evaluate, 'generate': generate, 'serve': serve_command}
    try:
        settings = io.load_settings(Path(args.config_file) if args.config_file else None)
        return commands[args.command](args, settings)
    except (io.ConfigError, IngestError, UsageError, OSError) as exc:
        print(f'Error! {exc}', file=sys.stderr)
        return EXIT_USAGE


def ingest(args: argparse.Namespace, settings: io.Settings) -> int:
    if args.canonical:
        store = load_canonical(Path(args.canonical))
        if args.output:
            export_canonical(store, Path(args.output))
    else:
        missing = [flag for flag, value in [('--forum', args.forum), ('--votes', args.votes),
                                             ('--output', args.output)] if not value]
        if missing:
            raise UsageError(f'--meta_kaggle requires {", ".join(missing)}')
        mapping = settings.meta_kaggle
        if args.mapping:
            try:
                mapping = MetaKaggleMapping.model_validate(io.read_config_from_disk(Path(args.mapping)))
            except ValidationError as exc:
                raise UsageError(f'invalid mapping file {args.mapping}: {exc}') from exc
        store = adapt_meta_kaggle(Path(args.forum), Path(args.votes), Path(args.output), mapping)
    stats = compute_statistics(store, include_projection=args.check_reference)
    print(format_statistics(stats))
    if args.check_reference:
        check_reference_statistics(stats)
    return EXIT_OK


def project(args: argparse.Namespace, settings: io.Settings) -> int:
    # pylint:disable=unused-argument
    store = load_canonical(Path(args.store))
    projected = project_dataset_service(store)
    export_canonical(projected, Path(args.output))
    print(format_statistics(compute_statistics(projected)))
    return EXIT_OK


def recommend_command(args: argparse.Namespace, settings: io.Settings) -> int:
    store = load_canonical(Path(args.store))
    try:
        target = EntityRef.parse(args.uc.target_kind, args.target)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if target not in store:
        logger.warning('%s has no interactions', target)
    changes = {key: value for key, value in [('k', args.k), ('similarity', args.similarity)] if value is not None}
    try:
        profile = settings.profiles[args.algo].updated(changes)
    except ValidationError as exc:
        raise UsageError(f'invalid profile: {exc}') from exc
    try:
        ranked = recommend(relevant_store(store, args.uc), args.uc, target, profile)
    except InvalidTargetError as exc:
        raise UsageError(str(exc)) from exc
    if ranked.fallback:
        print(f'# {target} has no {args.uc.candidate_kind.value} links; showing the most popular')
    for rank, entry in enumerate(ranked.entries, start=1):
        print(f'{rank}\t{entry.entity.id}\t{entry.score:.6f}')
    return EXIT_OK


def evaluate(args: argparse.Namespace, settings: io.Settings) -> int:
    store = load_canonical(Path(args.store))
    overrides = {key: value for key, value in [('seed', args.seed), ('min_interactions', args.min_interactions),
                                               ('holdout', args.holdout), ('strategy', args.strategy)]
                 if value is not None}
    try:
        config = SplitConfig.model_validate({**settings.split.model_dump(), **overrides})
        profiles = [settings.profiles[algo].updated({'k': args.k} if args.k is not None else {})
                    for algo in args.algo]
    except ValidationError as exc:
        raise UsageError(f'invalid evaluation settings: {exc}') from exc
    if args.workers < 1:
        raise UsageError(f'--workers must be >= 1, got {args.workers}')

    reports = evaluate_all(store, args.uc, profiles, config, settings.metrics.ks(), args.workers)
    print(io.format_report_table(reports), end='')
    if args.output_table:
        io.write_report_table(reports, Path(args.output_table))
    if args.output_json:
        io.write_report_json(reports, Path(args.output_json))
    if sum(report.metrics.n_cases for report in reports) == 0:
        logger.warning('No target qualified for evaluation')
        return EXIT_NO_CASES
    return EXIT_OK


def generate(args: argparse.Namespace, settings: io.Settings) -> int:
    seed = args.seed if args.seed is not None else settings.split.seed
    try:
        store = generate_synthetic(args.users, args.datasets, args.services, args.dataset_density,
                                   args.service_density, args.skew, seed,
                                   with_timestamps=not args.no_timestamps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    export_canonical(store, Path(args.output))
    print(format_statistics(compute_statistics(store)))
    return EXIT_OK


def serve_command(args: argparse.Namespace, settings: io.Settings) -> int:
    store = load_canonical(Path(args.store))
    snapshot: Optional[Path] = Path(args.snapshot) if args.snapshot else None
    if args.snapshot_interval is not None and args.snapshot_interval < 1:
        raise UsageError(f'--snapshot_interval must be >= 1, got {args.snapshot_interval}')
    serve(store, settings, args.host, args.port, snapshot, args.snapshot_interval)
    return EXIT_OK


if __name__ == '__main__':
    main()
