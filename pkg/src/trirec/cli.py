import argparse
import sys
from typing import List
from unittest.mock import patch

from . import __version__
from .synthetic import DEFAULT_DATASET_DENSITY, DEFAULT_SERVICE_DENSITY, DEFAULT_SKEW
from .trirec_types import Algorithm, HoldoutStrategy, SimilarityMeasure, UseCase
from .utils import algorithms_arg, use_cases_arg

# Flags shared by every subcommand. Multi-word flags also accept their hyphenated spelling.
common = argparse.ArgumentParser(add_help=False)
common.add_argument('--seed', type=int, required=False, default=None,
                    help='Seed for the holdout split and the synthetic generator (overrides the config file)')
common.add_argument('--config_file', '--config-file', '--profile', dest='config_file', type=str, required=False,
                    default=None, help='User provided (JSON or YAML) config file, merged over the defaults')
common.add_argument('--quiet', default=False, action='store_true', help='Only log warnings and errors.')
common.add_argument('--verbose', default=False, action='store_true', help='Log debug messages.')

parser = argparse.ArgumentParser(prog='trirec',
                                 description='Recommend datasets and services to users, and evaluate the recommenders.')
# version action exits the parser
parser.add_argument('--version', action='version', version=__version__,
                    default='==SUPPRESS==', help='Current version of trirec')
subparsers = parser.add_subparsers(dest='command', required=True, metavar='command')

ingest = subparsers.add_parser('ingest', parents=[common], help='Load interaction files and print statistics.')
group_ingest = ingest.add_mutually_exclusive_group(required=True)
group_ingest.add_argument('--canonical', type=str, help='A canonical interaction file')
group_ingest.add_argument('--meta_kaggle', '--meta-kaggle', default=False, action='store_true',
                          help='Convert a Meta Kaggle extract (requires --forum, --votes and --output)')
ingest.add_argument('--forum', type=str, help='The forum table (user -> dataset interactions)')
ingest.add_argument('--votes', type=str, help='The vote table (user -> service interactions)')
ingest.add_argument('--mapping', type=str, required=False, default=None,
                    help='A (JSON or YAML) column mapping file; overrides meta_kaggle in the config file')
ingest.add_argument('--output', type=str, required=False, default=None, help='The canonical file to write')
ingest.add_argument('--check_reference', '--check-reference', default=False, action='store_true',
                    help='''Compare the statistics (including the projection) with the 2017-11-15 snapshot.
                    A mismatch is a warning, not an error.''')

project = subparsers.add_parser('project', parents=[common], help='Write the dataset/service projection.')
project.add_argument('--store', type=str, required=True, help='A canonical interaction file')
project.add_argument('--output', type=str, required=True, help='The canonical file to write the projection to')

recommend = subparsers.add_parser('recommend', parents=[common], help='Print the recommendations for one entity.')
recommend.add_argument('--store', type=str, required=True, help='A canonical interaction file')
recommend.add_argument('--uc', type=UseCase, required=True, help='The use case (uc1, uc2, uc3, uc4)')
recommend.add_argument('--target', type=str, required=True, help='The id of the entity to recommend for')
recommend.add_argument('--algo', type=Algorithm, required=False, default=Algorithm.MP, help='mp or cf')
recommend.add_argument('--k', type=int, required=False, default=None, help='The number of recommendations')
recommend.add_argument('--similarity', type=SimilarityMeasure, required=False, default=None,
                       help='cosine or jaccard (CF only)')

evaluate = subparsers.add_parser('evaluate', parents=[common], help='Run the offline evaluation.')
evaluate.add_argument('--store', type=str, required=True, help='A canonical interaction file')
evaluate.add_argument('--uc', type=use_cases_arg, required=False, default=list(UseCase),
                      help='Comma-separated use cases, or all (default)')
evaluate.add_argument('--algo', type=algorithms_arg, required=False, default=list(Algorithm),
                      help='Comma-separated algorithms (default mp,cf)')
evaluate.add_argument('--k', type=int, required=False, default=None, help='The number of recommendations')
evaluate.add_argument('--min_interactions', '--min-interactions', type=int, required=False, default=None,
                      help='Only evaluate targets with at least this many distinct candidates')
evaluate.add_argument('--holdout', type=int, required=False, default=None,
                      help='The number of distinct candidates withheld per target')
evaluate.add_argument('--strategy', type=HoldoutStrategy, required=False, default=None,
                      help='auto, most_recent or seeded_random')
evaluate.add_argument('--workers', type=int, required=False, default=1,
                      help='Threads used to recommend; the report does not depend on it')
evaluate.add_argument('--output_table', '--output-table', type=str, required=False, default=None,
                      help='Also write the report table to this file')
evaluate.add_argument('--output_json', '--output-json', type=str, required=False, default=None,
                      help='Also write the full reports (with provenance) to this json file')

generate = subparsers.add_parser('generate', parents=[common], help='Write a synthetic interaction file.')
generate.add_argument('--users', type=int, required=True, help='The number of users')
generate.add_argument('--datasets', type=int, required=True, help='The number of datasets')
generate.add_argument('--services', type=int, required=True, help='The number of services')
generate.add_argument('--dataset_density', '--dataset-density', type=float, required=False,
                      default=DEFAULT_DATASET_DENSITY, help='Mean user/dataset interactions per user')
generate.add_argument('--service_density', '--service-density', type=float, required=False,
                      default=DEFAULT_SERVICE_DENSITY, help='Mean user/service interactions per user')
generate.add_argument('--skew', type=float, required=False, default=DEFAULT_SKEW,
                      help='The popularity exponent; 0 is uniform')
generate.add_argument('--no_timestamps', '--no-timestamps', default=False, action='store_true',
                      help='Do not draw timestamps')
generate.add_argument('--output', type=str, required=True, help='The canonical file to write')

serve = subparsers.add_parser('serve', parents=[common], help='Run the REST service.')
serve.add_argument('--store', type=str, required=True, help='A canonical interaction file')
serve.add_argument('--host', type=str, required=False, default='127.0.0.1', help='The bind address')
serve.add_argument('--port', type=int, required=False, default=8000, help='The port')
serve.add_argument('--snapshot', type=str, required=False, default=None,
                   help='Periodically write the (updated) interactions to this canonical file')
serve.add_argument('--snapshot_interval', '--snapshot-interval', type=int, required=False, default=None,
                   help='Seconds between snapshots (overrides the config file)')


def get_args(suppliedargs: List[str]) -> argparse.Namespace:
    """This is used to get mock command line arguments

    Args:
        suppliedargs (List[str]): The arguments, starting with the subcommand

    Returns:
        argparse.Namespace: The mocked command line arguments
    """
    testargs = ['trirec'] + suppliedargs
    with patch.object(sys, 'argv', testargs):
        args: argparse.Namespace = parser.parse_args()
    return args
