import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv

from app.cli.routers import router
from app.core.config import get_settings
from app.core.logging import init_logging


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='qbirthmark',
        description='Quantum birthmark laboratory: random-matrix and stadium experiments',
    )
    parser.add_argument('--log-level', default=None, help='Logging level (default from QB_LOG_LEVEL)')
    router(parser)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    init_logging(args.log_level or get_settings().log_level)
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
