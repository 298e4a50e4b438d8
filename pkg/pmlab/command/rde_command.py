# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

from dataclasses import dataclass

import numpy as np

from ..ode import solve_ode
from ..rde import (
    estimate_alpha_from_samples, ks_distance, save_pool, solve_rde)
from .base import Command, write_csv

__all__ = ['RdeStart', 'RdeCommand']


@dataclass
class RdeStart:
    lam: float
    pool: int
    iters: int
    seed: int
    out: str


class RdeCommand(Command):
    """Population dynamics run checked against the ODE laws"""
    name = 'rde'
    help = 'Solve the message equations by population dynamics'
    start_class = RdeStart

    @classmethod
    def add_arguments(cls, parser) -> None:
        parser.add_argument('--lambda', dest='lam', type=float, required=True)
        parser.add_argument('--pool', type=int, required=True)
        parser.add_argument('--iters', type=int, required=True)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--out', required=True)

    def transition_run(self) -> None:
        start = self.start
        run = solve_rde(start.lam, start.pool, start.iters, start.seed)
        write_csv(start.out, ('iteration', 'ks_step'),
                  enumerate(run.ks_trace, start=1))
        self.result.outputs.append(start.out)
        for kind in ('X', 'Y'):
            path = f'{start.out}.{kind.lower()}.pool'
            save_pool(run.pool, path, kind)
            self.result.outputs.append(path)

        solution = solve_ode(start.lam)
        rng = np.random.default_rng(
            np.random.SeedSequence([start.seed, start.iters + 1]))
        alpha, stderr = estimate_alpha_from_samples(
            run.pool.x_distribution(), start.lam, start.pool, rng)
        self.result.summary = {
            'converged_at': run.converged_at,
            'ks_x_vs_ode': ks_distance(run.pool.x_samples, solution.cdf_x),
            'ks_y_vs_ode': ks_distance(run.pool.y_samples, solution.cdf_y),
            'alpha_direct': alpha,
            'alpha_direct_stderr': stderr,
            'alpha_ode': solution.alpha,
        }
        summary = self.result.summary
        self.result.text = (
            f"lambda={start.lam}: converged at step {run.converged_at}, "
            f"KS(X, F)={summary['ks_x_vs_ode']:.5f}, "
            f"KS(Y, 1-(1-F)W)={summary['ks_y_vs_ode']:.5f}, "
            f"alpha direct {alpha:.5f} +- {stderr:.5f} "
            f"vs ODE {solution.alpha:.5f}")
