# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import argparse
import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .. import config

__all__ = ['Command', 'CommandResult', 'format_value', 'write_csv',
           'run_trials', 'trial_seed', 'sha256_file']

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """Result view of a command, what it printed and what it wrote"""
    text: str = ''
    outputs: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


def format_value(value) -> str:
    """CSV cell: blank for None, 12 significant digits for reals"""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        digits = config.get_int('cli', 'float_digits')
        return '%.*g' % (digits, value)
    return str(value)


def write_csv(path: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    with open(path, 'w', encoding='UTF-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as file:
        for block in iter(lambda: file.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def trial_seed(seed: int, trial: int) -> int:
    """Independent 64-bit stream key of one trial"""
    state = np.random.SeedSequence([seed, trial]).generate_state(
        1, dtype=np.uint64)
    return int(state[0])


def run_trials(function: Callable, items: Sequence,
               threads: int = 1) -> List:
    """
    Map a function over trial items, results come back in item order
    whatever the completion order.

    With more than one worker the items run in a process pool, so
    ``function`` and the items must be picklable. Workers start from a
    copy of the active configuration.

    :param function: module-level function or ``functools.partial``
    :param items: trial items
    :param threads: number of worker processes
    :return: results in item order
    """
    if threads <= 1:
        return [function(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads,
                             initializer=config.install,
                             initargs=(config.snapshot(),)) as executor:
        return list(executor.map(function, items))


class Command:
    """
    Base of the pmlab sub-commands.

    A command is built from its ``start`` parameters, ``transition_run``
    does the work and fills ``result``, ``execute`` wraps it with the run
    manifest.
    """
    name = ''
    help = ''
    start_class = None

    def __init__(self, start):
        self.start = start
        self.result = CommandResult()

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        raise NotImplementedError

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'Command':
        """Build the command from parsed arguments named like the params"""
        names = {f.name for f in fields(cls.start_class)}
        values = {name: value for name, value in vars(args).items()
                  if name in names}
        return cls(cls.start_class(**values))

    @property
    def seed(self) -> Optional[int]:
        return getattr(self.start, 'seed', None)

    def transition_run(self) -> None:
        raise NotImplementedError

    def execute(self) -> CommandResult:
        """
        Run the command and write ``<out>.manifest.json`` next to the
        outputs
        :return: the result view
        """
        started = datetime.now(timezone.utc).isoformat()
        logger.info("Running %s with %s", self.name, asdict(self.start))
        self.transition_run()
        finished = datetime.now(timezone.utc).isoformat()
        if self.result.outputs:
            self.write_manifest(started, finished)
        return self.result

    def write_manifest(self, started: str, finished: str) -> str:
        manifest = {
            'command': self.name,
            'params': asdict(self.start),
            'seed': self.seed,
            'version': config.version(),
            'outputs': [{'path': path, 'sha256': sha256_file(path)}
                        for path in self.result.outputs],
            'summary': self.result.summary,
            'started': started,
            'finished': finished,
        }
        path = f'{self.result.outputs[0]}.manifest.json'
        with open(path, 'w', encoding='UTF-8', newline='\n') as file:
            json.dump(manifest, file, indent=2, sort_keys=True,
                      default=float)
            file.write('\n')
        return path
