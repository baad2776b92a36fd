"""The json schema of the (user) config file."""
from jsonschema import Draft202012Validator

from ..trirec_types import Algorithm, HoldoutStrategy, Json, SimilarityMeasure


def default_schema(url: bool = False) -> Json:
    """A basic default schema (to avoid copy & paste).

    Args:
        url (bool, optional): Determines whether to include the $schema url. Defaults to False.

    Returns:
        Json: A basic default schema
    """
    schema: Json = {}
    schema['type'] = 'object'
    schema['additionalProperties'] = False
    if url:
        schema['$schema'] = 'https://json-schema.org/draft/2020-12/schema'
    return schema


def object_schema(properties: Json) -> Json:
    schema = default_schema()
    schema['properties'] = properties
    return schema


positive_int = {'type': 'integer', 'minimum': 1}
str_nonempty = {'type': 'string', 'minLength': 1}


def profile_schema() -> Json:
    """The schema of one recommendation profile. Every field is optional,
    since user profiles are merged over the defaults."""
    return object_schema({
        'algorithm': {'type': 'string', 'enum': [a.value for a in Algorithm]},
        'k': positive_int,
        'neighborhood_size': positive_int,
        'similarity': {'type': 'string', 'enum': [s.value for s in SimilarityMeasure]},
        'filter_seen': {'type': 'boolean'},
    })


def split_schema() -> Json:
    # NOTE: min_interactions > holdout is checked by SplitConfig after merging
    return object_schema({
        'min_interactions': {'type': 'integer', 'minimum': 2},
        'holdout': positive_int,
        'strategy': {'type': 'string', 'enum': [s.value for s in HoldoutStrategy]},
        'seed': {'type': 'integer', 'minimum': 0, 'maximum': 2**64 - 1},
    })


def column_mapping_schema() -> Json:
    return object_schema({
        'user_column': str_nonempty,
        'entity_column': str_nonempty,
        'timestamp_column': {'type': ['string', 'null']},
    })


def config_schema() -> Json:
    """The schema of the config file.

    Returns:
        Json: The schema
    """
    schema = default_schema(url=True)
    schema['$id'] = 'trirec_config'
    schema['title'] = 'trirec configuration'
    schema['description'] = 'Recommendation profiles, split settings, metric cut-offs and adapter mappings.'
    schema['properties'] = {
        'profiles': object_schema({algo.value: profile_schema() for algo in Algorithm}),
        'split': split_schema(),
        'metrics': object_schema({name: positive_int for name in ['p', 'f1', 'r', 'mrr', 'map', 'ndcg']}),
        'meta_kaggle': object_schema({'forum': column_mapping_schema(), 'votes': column_mapping_schema()}),
        'service': object_schema({'snapshot_interval': positive_int}),
    }
    return schema


def get_validator() -> Draft202012Validator:
    """Returns a validator for config files.

    Returns:
        Draft202012Validator: A validator which is used to check config files for correctness.
    """
    schema = config_schema()
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema)
