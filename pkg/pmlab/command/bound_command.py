# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

from dataclasses import dataclass
from typing import Optional

from ..bounds import (
    overlap_lower_bound_small_lambda, sym_diff_expectation_bound,
    sym_diff_first_moment)
from ..exceptions import ParameterError
from .base import Command, format_value, write_csv

__all__ = ['BoundStart', 'BoundCommand']

HEADER = ('lambda', 'n', 'sym_diff_bound', 'overlap_lower_bound')


@dataclass
class BoundStart:
    lam: float
    n: int
    out: Optional[str] = None


class BoundCommand(Command):
    """First-moment bounds on the symmetric difference and the overlap"""
    name = 'bound'
    help = 'Closed-form recovery bounds'
    start_class = BoundStart

    @classmethod
    def add_arguments(cls, parser) -> None:
        parser.add_argument('--lambda', dest='lam', type=float, required=True)
        parser.add_argument('--n', type=int, required=True)
        parser.add_argument('--out')

    def transition_run(self) -> None:
        start = self.start
        if not start.lam > 0 or start.n < 1:
            raise ParameterError(
                f"Bounds need lambda > 0 and n >= 1, got {start.lam}, "
                f"{start.n}")
        sym_diff = first_moment = overlap_bound = None
        lines = []
        if start.lam >= 4:
            sym_diff = sym_diff_expectation_bound(start.lam, start.n)
            first_moment = sym_diff_first_moment(start.lam, start.n)
            lines.append(f"E|M* xor M_min| <= {format_value(sym_diff)}")
            lines.append(f"unsimplified first moment "
                         f"{format_value(first_moment)}")
        if start.lam <= 4:
            overlap_bound = overlap_lower_bound_small_lambda(start.lam)
            lines.append(f"overlap >= {format_value(overlap_bound)}")
        self.result.summary = {'sym_diff_bound': sym_diff,
                               'first_moment': first_moment,
                               'overlap_lower_bound': overlap_bound}
        self.result.text = '\n'.join(lines)
        if start.out:
            write_csv(start.out, HEADER,
                      [(start.lam, start.n, sym_diff, overlap_bound)])
            self.result.outputs.append(start.out)
