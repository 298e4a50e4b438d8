# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

from dataclasses import dataclass

import numpy as np

from ..exceptions import NoSolutionError
from ..ode import NoSolution, solve_ode
from ..pwit import RootEstimator, estimate_root_overlap, ode_boundary
from .base import Command, write_csv

__all__ = ['PwitStart', 'PwitCommand']

HEADER = ('lambda', 'depth', 'arity', 'trials', 'p_root_planted', 'stderr',
          'degenerate', 'method', 'alpha_ode')


@dataclass
class PwitStart:
    lam: float
    depth: int
    arity: int
    trials: int
    seed: int
    out: str
    method: str = RootEstimator.AUTO.value


class PwitCommand(Command):
    """Root overlap on truncated planted trees"""
    name = 'pwit'
    help = 'Message passing on truncated planted trees'
    start_class = PwitStart

    @classmethod
    def add_arguments(cls, parser) -> None:
        parser.add_argument('--lambda', dest='lam', type=float, required=True)
        parser.add_argument('--depth', type=int, required=True)
        parser.add_argument('--arity', type=int, required=True)
        parser.add_argument('--trials', type=int, required=True)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--out', required=True)
        parser.add_argument(
            '--method', default=RootEstimator.AUTO.value,
            choices=[estimator.value for estimator in RootEstimator])

    def transition_run(self) -> None:
        start = self.start
        solution = solve_ode(start.lam)
        if isinstance(solution, NoSolution):
            raise NoSolutionError(start.lam)
        stats = estimate_root_overlap(
            start.lam, start.depth, start.arity, start.trials,
            boundary=ode_boundary(solution),
            rng=np.random.default_rng(start.seed),
            method=RootEstimator(start.method))
        write_csv(start.out, HEADER, [(
            start.lam, start.depth, start.arity, start.trials,
            stats.p_root_planted, stats.stderr, stats.degenerate,
            stats.method.value, solution.alpha)])
        self.result.outputs.append(start.out)
        self.result.summary = {
            'p_root_planted': stats.p_root_planted,
            'stderr': stats.stderr,
            'degenerate_rate': stats.degenerate_rate,
            'alpha_ode': solution.alpha,
        }
        self.result.text = (
            f"lambda={start.lam} depth={start.depth} arity={start.arity}: "
            f"P[root planted edge matched]={stats.p_root_planted:.5f} "
            f"+- {stats.stderr:.5f} ({stats.method.value}), "
            f"ODE alpha {solution.alpha:.5f}")
