# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import argparse
import logging
import sys
from typing import List, Optional

from . import __version__, config, register
from .exceptions import (
    ConfigError, ConvergenceError, NoSolutionError, NumericalFailureError,
    ParameterError, PrecisionError)

__all__ = ['main', 'build_parser', 'EXIT_OK', 'EXIT_PARAMETER',
           'EXIT_NO_SOLUTION', 'EXIT_CONVERGENCE']

logger = logging.getLogger('pmlab')

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_NO_SOLUTION = 3
EXIT_CONVERGENCE = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog='pmlab',
        description='Planted matching phase transition laboratory')
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress, -vv for solver details')
    parser.add_argument('--config', help='INI file overriding pmlab.cfg')
    subparsers = parser.add_subparsers(dest='command', required=True)
    return parser, register(subparsers)


def _log_level(verbose: int) -> int:
    match verbose:
        case 0:
            return logging.WARNING
        case 1:
            return logging.INFO
        case _:
            return logging.DEBUG


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the pmlab command
    :param argv: arguments, defaults to sys.argv[1:]
    :return: exit code, 0 success, 2 parameter error, 3 lambda in the
        no-solution regime, 4 solver failure
    """
    parser, commands = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=_log_level(args.verbose),
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        if args.config:
            config.use_config(args.config)
        result = commands[args.command].from_args(args).execute()
    except (ParameterError, ConfigError) as e:
        logger.error("%s", e)
        return EXIT_PARAMETER
    except NoSolutionError as e:
        logger.error("%s", e)
        return EXIT_NO_SOLUTION
    except (ConvergenceError, PrecisionError, NumericalFailureError) as e:
        logger.error("%s", e)
        return EXIT_CONVERGENCE
    if result.text:
        print(result.text)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
