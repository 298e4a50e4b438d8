# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import math
from dataclasses import dataclass
from functools import partial
from typing import List, NamedTuple

import numpy as np

from ..exceptions import ParameterError
from ..matching import overlap, solve_min_matching, sym_diff_size
from ..model import generate
from .base import Command, run_trials, trial_seed, write_csv

__all__ = ['SimulateStart', 'SimulateCommand', 'TrialRecord',
           'simulate_trial', 'run_simulation', 'summarize']

HEADER = ('trial', 'overlap', 'weight_per_n', 'sym_diff', 'n_cycles')


class TrialRecord(NamedTuple):
    trial: int
    overlap: float
    weight_per_n: float
    sym_diff: int
    n_cycles: int


@dataclass
class SimulateStart:
    n: int
    lam: float
    trials: int
    seed: int
    out: str
    threads: int = 1


def simulate_trial(n: int, lam: float, seed: int,
                   trial: int) -> TrialRecord:
    """Generate one instance of the trial stream and solve it"""
    instance = generate(n, lam, trial_seed(seed, trial))
    result = solve_min_matching(instance)
    return TrialRecord(trial, overlap(result, n), result.weight / n,
                       sym_diff_size(result), len(result.cycles))


def run_simulation(n: int, lam: float, trials: int, seed: int,
                   threads: int = 1) -> List[TrialRecord]:
    """
    Run independent trials
    :param n: side size, at least 2
    :param lam: planted rate
    :param trials: number of trials
    :param seed: master seed, trial t uses the key derived from (seed, t)
    :param threads: worker processes
    :return: records in trial order
    :raises ParameterError: for invalid sizes
    """
    if n < 2:
        raise ParameterError(f"Simulations need n >= 2, got {n}")
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    return run_trials(partial(simulate_trial, n, lam, seed), range(trials),
                      threads)


def summarize(records: List[TrialRecord], column: str):
    """Mean and standard error of a column"""
    values = np.array([getattr(record, column) for record in records],
                      dtype=np.float64)
    if values.size < 2:
        return float(values.mean()), math.nan
    return (float(values.mean()),
            float(values.std(ddof=1) / math.sqrt(values.size)))


class SimulateCommand(Command):
    """Monte Carlo overlap and weight of the minimum matching"""
    name = 'simulate'
    help = 'Monte Carlo trials of the minimum matching on finite instances'
    start_class = SimulateStart

    @classmethod
    def add_arguments(cls, parser) -> None:
        parser.add_argument('--n', type=int, required=True)
        parser.add_argument('--lambda', dest='lam', type=float, required=True)
        parser.add_argument('--trials', type=int, required=True)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--out', required=True)
        parser.add_argument('--threads', type=int, default=1)

    def transition_run(self) -> None:
        start = self.start
        records = run_simulation(start.n, start.lam, start.trials, start.seed,
                                 start.threads)
        means, stderrs = zip(*(summarize(records, column)
                               for column in HEADER[1:]))
        write_csv(start.out, HEADER,
                  [tuple(record) for record in records]
                  + [('mean',) + means, ('stderr',) + stderrs])
        self.result.outputs.append(start.out)
        self.result.summary = dict(zip(HEADER[1:], means))
        self.result.text = (
            f"n={start.n} lambda={start.lam} trials={start.trials}: "
            f"overlap {means[0]:.6f} +- {stderrs[0]:.6f}, "
            f"weight/n {means[1]:.6f} +- {stderrs[1]:.6f}, "
            f"sym_diff {means[2]:.3f}")
