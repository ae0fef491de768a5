import logging
from typing import Union


def init_logging(level: Union[int, str] = logging.INFO):
    class RunIdFilter(logging.Filter):
        def filter(self, record):
            if not hasattr(record, 'run_id'):
                record.run_id = '-'
            return True

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    fmt = '%(asctime)s %(levelname)s [%(run_id)s] %(name)s: %(message)s'
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(fmt))
    handler.addFilter(RunIdFilter())
    root = logging.getLogger()
    root.handlers = []
    root.addHandler(handler)
    root.setLevel(level)


def bind_run_id(logger: logging.Logger, run_id: str) -> logging.LoggerAdapter:
    """Returns an adapter that stamps `run_id` on every record of `logger`."""
    return logging.LoggerAdapter(logger, {'run_id': run_id})


__all__ = ['init_logging', 'bind_run_id']
