#!/usr/bin/env python3
"""Program's entry point."""
import sys

from loguru import logger
from pydantic import ValidationError

from .argparse_wrapper import get_parsed_args
from .general_utils import MeshError

EXIT_INPUT_ERROR = 2


def main(argv=None):
    """Program's main routine: 0 on success, 1 on failed checks, 2 on bad input."""
    args = get_parsed_args(argv=argv)
    try:
        return args.run_command(args=args)
    except (MeshError, ValidationError, OSError) as error:
        logger.opt(exception=True).debug(error)
        logger.error("{}: {}", type(error).__name__, error)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
