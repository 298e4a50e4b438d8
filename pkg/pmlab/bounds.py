# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

"""Closed-form bounds for the recovery regime lambda >= 4."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .exceptions import ParameterError

__all__ = ['ErlangBoundQuery', 'erlang_exceed_bound', 'erlang_weak_bound',
           'erlang_exceed_probability', 'erlang_exceed_monte_carlo',
           'sym_diff_expectation_bound', 'sym_diff_first_moment',
           'overlap_lower_bound_small_lambda']

_TERM_CUTOFF = 1e-16
_CHUNK = 4096


@dataclass(frozen=True)
class ErlangBoundQuery:
    """
    X1 is the sum of t exp(lambda1) variables, X2 the sum of t exp(lambda2)
    variables, lambda1 > lambda2.
    """
    t: int
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 1:
            raise ParameterError(f"t must be a positive integer, got {self.t}")
        if not self.lambda2 > 0:
            raise ParameterError(
                f"lambda2 must be positive, got {self.lambda2}")
        if not self.lambda1 > self.lambda2:
            raise ParameterError(
                f"lambda1={self.lambda1} must exceed lambda2={self.lambda2}")


def erlang_exceed_bound(q: ErlangBoundQuery) -> float:
    """Chernoff-type bound (4 l1 l2 / (l1 + l2)^2)^t on P[X1 > X2]"""
    ratio = 4 * q.lambda1 * q.lambda2 / (q.lambda1 + q.lambda2) ** 2
    return ratio ** q.t


def erlang_weak_bound(q: ErlangBoundQuery) -> float:
    """The looser (4 l2 / l1)^t, may exceed 1"""
    return (4 * q.lambda2 / q.lambda1) ** q.t


def erlang_exceed_probability(q: ErlangBoundQuery) -> float:
    """
    Exact P[X1 > X2].

    Superpose the two Poisson processes, each arrival comes from the second
    one with probability l2 / (l1 + l2). X1 > X2 exactly when at least t of
    the first 2t - 1 arrivals come from the second process.
    """
    p = q.lambda2 / (q.lambda1 + q.lambda2)
    return float(stats.binom.sf(q.t - 1, 2 * q.t - 1, p))


def erlang_exceed_monte_carlo(q: ErlangBoundQuery, draws: int,
                              rng: np.random.Generator):
    """
    Monte Carlo estimate of P[X1 > X2]
    :param q: the query
    :param draws: number of independent pairs
    :param rng: random generator
    :return: (estimate, standard error)
    """
    x1 = rng.gamma(q.t, 1 / q.lambda1, draws)
    x2 = rng.gamma(q.t, 1 / q.lambda2, draws)
    p = float(np.mean(x1 > x2))
    return p, math.sqrt(max(p * (1 - p), 1 / draws) / draws)


def _check_recovery_regime(lam: float, n: int) -> None:
    if not lam >= 4:
        raise ParameterError(f"The bound needs lambda >= 4, got {lam}")
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")


def _chunked_sum(log_term, n: int) -> float:
    # terms are non-increasing in t, stop once a chunk ends below the cutoff
    parts = []
    for start in range(1, n + 1, _CHUNK):
        t = np.arange(start, min(start + _CHUNK, n + 1), dtype=np.float64)
        terms = np.exp(log_term(t))
        parts.extend(terms)
        if terms[-1] < _TERM_CUTOFF:
            break
    return math.fsum(parts)


def sym_diff_expectation_bound(lam: float, n: int) -> float:
    """
    Bound 2 sqrt(e) sum_{t=1}^{n} (4/lam)^t exp(-t^2 / 2n) on the expected
    size of M* xor M_min
    :param lam: planted rate, lam >= 4
    :param n: side size
    :return: the bound
    :raises ParameterError: outside the recovery regime
    """
    _check_recovery_regime(lam, n)
    log_ratio = math.log(4 / lam)
    total = _chunked_sum(lambda t: t * log_ratio - t * t / (2 * n), n)
    return 2 * math.sqrt(math.e) * total


def sym_diff_first_moment(lam: float, n: int) -> float:
    """
    The same first-moment count before it is simplified: cycle lengths 2t
    times C(n, t) (t-1)! alternating cycles, each augmenting with
    probability at most the Erlang bound with rates lam and 1/n.
    """
    _check_recovery_regime(lam, n)
    log_ratio = math.log(4 * lam * n / (lam * n + 1) ** 2)
    log_count = special.gammaln(n + 1)

    def log_term(t):
        return (math.log(2) + log_count - special.gammaln(n - t + 1)
                + t * log_ratio)

    return _chunked_sum(log_term, n)


def overlap_lower_bound_small_lambda(lam: float) -> float:
    """
    Advisory lower bound max(0, 1 - 2 log(4/lam)) on the overlap for
    lam <= 4
    :raises ParameterError: if lam is not in (0, 4]
    """
    if not 0 < lam <= 4:
        raise ParameterError(f"lambda must lie in (0, 4], got {lam}")
    return max(0.0, 1 - 2 * math.log(4 / lam))
