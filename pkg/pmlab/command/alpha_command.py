# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

from dataclasses import dataclass
from functools import partial
from typing import Optional, Tuple

import numpy as np

from ..exceptions import NoSolutionError, ParameterError
from ..ode import LAMBDA_CRITICAL, solve_ode
from .base import Command, run_trials, write_csv
from .simulate_command import run_simulation, summarize

__all__ = ['AlphaStart', 'AlphaCommand', 'lambda_grid']

HEADER = ('lambda', 'epsilon0', 'alpha_ode', 'beta_p', 'beta_u', 'alpha_mc',
          'alpha_mc_stderr', 'n_mc', 'trials')


@dataclass
class AlphaStart:
    lambda_min: float
    lambda_max: float
    steps: int
    out: str
    mc_n: Optional[int] = None
    mc_trials: int = 20
    seed: int = 0
    threads: int = 1


def lambda_grid(lambda_min: float, lambda_max: float,
                steps: int) -> np.ndarray:
    """
    Evenly spaced rates of an overlap curve
    :raises ParameterError: for an empty or decreasing range
    :raises NoSolutionError: if the range reaches lambda >= 4
    """
    if steps < 1:
        raise ParameterError(f"steps must be positive, got {steps}")
    if not 0 < lambda_min:
        raise ParameterError(f"lambda_min must be positive, got {lambda_min}")
    if steps == 1:
        lambda_max = lambda_min
    elif not lambda_min < lambda_max:
        raise ParameterError(
            f"lambda_min={lambda_min} must be below lambda_max={lambda_max}")
    if lambda_max >= LAMBDA_CRITICAL:
        raise NoSolutionError(lambda_max)
    return np.linspace(lambda_min, lambda_max, steps)


def _alpha_row(start: AlphaStart, item: Tuple[int, float]) -> tuple:
    """One curve row, runs in a worker process when threads > 1"""
    index, lam = item
    solution = solve_ode(float(lam))
    alpha_mc = alpha_mc_stderr = n_mc = trials = None
    if start.mc_n:
        records = run_simulation(start.mc_n, float(lam), start.mc_trials,
                                 start.seed + index)
        alpha_mc, alpha_mc_stderr = summarize(records, 'overlap')
        n_mc, trials = start.mc_n, start.mc_trials
    return (float(lam), solution.epsilon0, solution.alpha, solution.beta_p,
            solution.beta_u, alpha_mc, alpha_mc_stderr, n_mc, trials)


class AlphaCommand(Command):
    """Overlap curve alpha(lambda) and weight from the ODE"""
    name = 'alpha'
    help = 'ODE overlap and weight curve, optionally with Monte Carlo'
    start_class = AlphaStart

    @classmethod
    def add_arguments(cls, parser) -> None:
        parser.add_argument('--lambda-min', dest='lambda_min', type=float,
                            required=True)
        parser.add_argument('--lambda-max', dest='lambda_max', type=float,
                            required=True)
        parser.add_argument('--steps', type=int, required=True)
        parser.add_argument('--out', required=True)
        parser.add_argument('--mc-n', dest='mc_n', type=int)
        parser.add_argument('--mc-trials', dest='mc_trials', type=int,
                            default=20)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--threads', type=int, default=1)

    def transition_run(self) -> None:
        start = self.start
        grid = lambda_grid(start.lambda_min, start.lambda_max, start.steps)
        items = [(index, float(lam)) for index, lam in enumerate(grid)]
        rows = run_trials(partial(_alpha_row, start), items, start.threads)
        write_csv(start.out, HEADER, rows)
        self.result.outputs.append(start.out)
        self.result.summary = {'rows': len(rows)}
        self.result.text = '\n'.join(
            f"lambda={row[0]:.6g} eps0={row[1]:.12g} alpha={row[2]:.8f} "
            f"beta={row[3] + row[4]:.8f}" for row in rows)
