"""
Runtime settings and experiment config loading.

Settings come from the environment (prefix QB_) or a local .env file.
Experiment configs are YAML documents validated against
`app.schemas.config.ExperimentConfig`; command-line overrides are applied to
the raw document before validation so they go through the same checks.
"""
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union
import logging

import yaml
from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.schemas.config import ExperimentConfig
from app.utils.errors import ConfigError

log = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ('kind', 'seed', 'seeds', 'jobs', 'outputs', 'dump_matrices', 'parameters')


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix='QB_', env_file='.env', extra='ignore')

    jobs: int = 1
    log_level: str = 'INFO'
    output_root: str = 'runs'


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


def _first_key(exc: ValidationError, kind: Optional[str]) -> str:
    errors = exc.errors()
    if not errors:
        return ''
    loc = [str(p) for p in errors[0].get('loc', ()) if str(p) != kind]
    return '.'.join(loc)


def validate_config(document: Mapping[str, Any]) -> ExperimentConfig:
    """
    Validates a raw config mapping.

    Raises:
        ConfigError: Naming the first offending key.
    """
    if not isinstance(document, Mapping):
        raise ConfigError(f"config must be a mapping, got {type(document).__name__}")
    try:
        return ExperimentConfig.model_validate(dict(document))
    except ValidationError as e:
        key = _first_key(e, document.get('kind'))
        first = e.errors()[0]
        raise ConfigError(f"invalid config key '{key}': {first.get('msg')}", key=key) from e


def read_document(source: Union[str, Path, Mapping[str, Any]]) -> Dict[str, Any]:
    if isinstance(source, Mapping):
        return dict(source)
    path = Path(source)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}", key=None) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path} is not valid YAML: {e}", key=None) from e
    log.debug('Loaded config from %s', path)
    return document or {}


def load_config(source: Union[str, Path, Mapping[str, Any]]) -> ExperimentConfig:
    """Loads and validates an experiment config from a YAML path or a mapping."""
    return validate_config(read_document(source))


def parse_assignment(text: str) -> tuple:
    """Splits `key=value` and parses the value as a YAML scalar or list."""
    key, sep, raw = text.partition('=')
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override '{text}' is not of the form key=value", key=key or None)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"override value for '{key}' is not valid YAML: {e}", key=key) from e
    return key, value


def apply_overrides(document: Mapping[str, Any], seed: Optional[int] = None, jobs: Optional[int] = None,
                    out: Optional[str] = None, assignments: Iterable[str] = (),
                    dump_matrices: Optional[bool] = None) -> Dict[str, Any]:
    """
    Applies command-line overrides to a raw config document.

    Keys in `assignments` that are not top-level config keys address the
    `parameters` map; a `parameters.` prefix is accepted as well.
    """
    doc = dict(document)
    params = dict(doc.get('parameters') or {})
    for text in assignments:
        key, value = parse_assignment(text)
        if key.startswith('parameters.'):
            params[key[len('parameters.'):]] = value
        elif key in TOP_LEVEL_KEYS:
            doc[key] = value
        else:
            params[key] = value
    doc['parameters'] = params
    if seed is not None:
        doc['seed'] = seed
    if jobs is not None:
        doc['jobs'] = jobs
    if out is not None:
        doc['outputs'] = out
    if dump_matrices:
        doc['dump_matrices'] = True
    return doc


__all__ = [
    'Settings',
    'get_settings',
    'validate_config',
    'read_document',
    'load_config',
    'parse_assignment',
    'apply_overrides',
]
