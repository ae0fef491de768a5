import argparse
import json
import logging
import sys
from typing import Any, Dict, Optional

from app.core.config import apply_overrides, read_document, validate_config
from app.services.experiment_service import run
from app.utils.errors import BirthmarkError, ConfigError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def add_run_options(parser: argparse.ArgumentParser):
    """Flags shared by every experiment subcommand."""
    parser.add_argument('--config', '-c', default=None, help='YAML experiment config')
    parser.add_argument('--seed', type=int, default=None, help='Master seed (overrides the config)')
    parser.add_argument('--jobs', type=int, default=None, help='Parallel workers (overrides the config and QB_JOBS)')
    parser.add_argument('--out', default=None, help='Output directory (overrides the config)')
    parser.add_argument('--set', dest='assignments', action='append', default=[], metavar='KEY=VALUE',
                        help='Override a config or parameter key; the value is parsed as YAML')
    parser.add_argument('--dump-matrices', action='store_true', help='Write QBH1 dumps of sampled Hamiltonians')


def build_document(args: argparse.Namespace, kind: Optional[str]) -> Dict[str, Any]:
    """Reads the config file (if any), pins the subcommand's kind and applies flag overrides."""
    document = read_document(args.config) if args.config else {}
    if kind is not None:
        given = document.get('kind')
        if given is not None and given != kind:
            raise ConfigError(f"config is for '{given}' but the '{kind}' command was used", key='kind')
        document['kind'] = kind
    elif 'kind' not in document:
        raise ConfigError("config has no 'kind'", key='kind')
    return apply_overrides(document, seed=args.seed, jobs=args.jobs, out=args.out,
                           assignments=args.assignments, dump_matrices=args.dump_matrices)


def execute(args: argparse.Namespace) -> int:
    """
    Runs one experiment from parsed command-line arguments.

    Returns:
        Process exit code: 0 success, 1 I/O failure, 2 validation error,
        3 numerical failure.
    """
    kind = getattr(args, 'kind', None)
    try:
        config = validate_config(build_document(args, kind))
        log.info('Starting %s run', config.kind)
        manifest = run(config)
    except BirthmarkError as e:
        log.error('%s: %s', type(e).__name__, e)
        return e.exit_code
    except ValueError as e:
        log.error('invalid input: %s', e)
        return EXIT_VALIDATION
    except ArithmeticError as e:
        log.error('numerical failure: %s', e)
        return EXIT_NUMERICAL
    except OSError as e:
        log.error('I/O failure: %s', e)
        return EXIT_IO
    except Exception:
        log.exception('unexpected failure')
        return EXIT_IO

    sys.stdout.write(json.dumps({'run_id': manifest.run_id, 'summary': manifest.summary},
                                sort_keys=True, default=str) + '\n')
    log.info('Run %s completed successfully', manifest.run_id)
    return EXIT_OK


__all__ = ['add_run_options', 'build_document', 'execute', 'EXIT_OK', 'EXIT_IO', 'EXIT_VALIDATION',
           'EXIT_NUMERICAL']
