# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import configparser
import logging
import os
from typing import Dict, Optional

from .exceptions import ConfigError

__all__ = ['load_config', 'use_config', 'snapshot', 'install', 'get_str',
           'get_int', 'get_float', 'version', 'CONFIG']

logger = logging.getLogger(__name__)

CONFIG_FILE = os.path.join(os.path.dirname(__file__), 'pmlab.cfg')


def load_config(override: Optional[str] = None) -> configparser.ConfigParser:
    """
    Read the packaged pmlab.cfg and merge an optional override file on top
    :param override: path of an INI file, defaults to $PMLAB_CONFIG
    :return: the merged configuration
    :raises ConfigError: if the override file can not be read
    """
    config = configparser.ConfigParser()
    with open(CONFIG_FILE, encoding='UTF-8') as file:
        config.read_file(file)
    override = override or os.environ.get('PMLAB_CONFIG')
    if override:
        if not config.read(override, encoding='UTF-8'):
            raise ConfigError(f"Config file '{override}' can not be read")
        logger.debug("Merged configuration override %s", override)
    return config


CONFIG = load_config()


def use_config(override: str) -> None:
    """Replace the active configuration, used by the --config option"""
    global CONFIG
    CONFIG = load_config(override)


def snapshot() -> Dict[str, Dict[str, str]]:
    """Plain copy of the active configuration for worker processes"""
    return {section: dict(CONFIG.items(section, raw=True))
            for section in CONFIG.sections()}


def install(values: Dict[str, Dict[str, str]]) -> None:
    """Make a :func:`snapshot` the active configuration"""
    global CONFIG
    CONFIG = configparser.ConfigParser()
    CONFIG.read_dict(values)


def get_str(section: str, key: str) -> str:
    try:
        return CONFIG.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError) as e:
        raise ConfigError(f"Missing configuration {section}.{key}") from e


def get_int(section: str, key: str) -> int:
    try:
        return int(float(get_str(section, key)))
    except ValueError as e:
        raise ConfigError(
            f"Configuration {section}.{key} is not an integer") from e


def get_float(section: str, key: str) -> float:
    try:
        return float(get_str(section, key))
    except ValueError as e:
        raise ConfigError(
            f"Configuration {section}.{key} is not a number") from e


def version() -> str:
    return get_str('pmlab', 'version')
