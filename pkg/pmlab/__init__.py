# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

from . import config
from .command import COMMANDS

__all__ = ['register', '__version__']

__version__ = config.version()


def register(subparsers) -> dict:
    """
    Register the sub-commands on an argparse sub-parser action
    :param subparsers: result of ArgumentParser.add_subparsers
    :return: dict of command name to command class
    """
    registered = {}
    for command in COMMANDS:
        parser = subparsers.add_parser(command.name, help=command.help,
                                       description=command.__doc__)
        command.add_arguments(parser)
        registered[command.name] = command
    return registered
