# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from . import config
from .exceptions import ContractError, ParameterError
from .model import PlantedInstance

__all__ = ['Side', 'AlternatingCycle', 'MatchingResult', 'solve_min_matching',
           'brute_force_min_matching', 'overlap', 'sym_diff_size',
           'decompose_symmetric_difference', 'verify_certificate']

logger = logging.getLogger(__name__)

# permutations scored per numpy batch in the brute force oracle
_BRUTE_FORCE_BATCH = 40320


class Side(Enum):
    """Side of the bipartite graph a vertex lives on"""
    LEFT = 'left'
    RIGHT = 'right'


@dataclass(frozen=True)
class AlternatingCycle:
    """
    A cycle of M* xor M_min.

    ``vertices`` reads L_i, R_sigma(i), L_sigma(i), R_sigma2(i), ... so the
    edge leaving an even position belongs to M_min and the edge leaving an
    odd position is planted.
    """
    vertices: Tuple[Tuple[Side, int], ...]
    planted_weight: float
    unplanted_weight: float

    @property
    def length(self) -> int:
        return len(self.vertices)

    @property
    def is_augmenting(self) -> bool:
        return self.planted_weight > self.unplanted_weight

    def edges(self) -> List[Tuple[int, int, bool]]:
        """
        Edges of the cycle in order
        :return: list of (left index, right index, planted flag)
        """
        result = []
        for position, vertex in enumerate(self.vertices):
            following = self.vertices[(position + 1) % self.length]
            left, right = ((vertex, following) if vertex[0] == Side.LEFT
                           else (following, vertex))
            result.append((left[1], right[1], position % 2 == 1))
        return result


@dataclass(eq=False)
class MatchingResult:
    """Perfect matching, left vertex i is matched to assignment[i]'"""
    assignment: np.ndarray
    weight: float
    overlap_count: int
    cycles: List[AlternatingCycle] = field(default_factory=list)
    row_potentials: Optional[np.ndarray] = None
    col_potentials: Optional[np.ndarray] = None


def _selected_weight(weights: np.ndarray, assignment: np.ndarray) -> float:
    return math.fsum(weights[np.arange(len(assignment)), assignment])


def _shortest_augmenting_path(cost: np.ndarray):
    """
    Dense shortest augmenting path assignment with dual potentials.

    Rows are inserted one at a time, each insertion runs a Dijkstra search
    over reduced costs until a free column is reached and then flips the
    alternating path. Column ``n`` is a virtual column holding the row being
    inserted.

    :param cost: square cost matrix
    :return: (assignment, row potentials, column potentials) with
        cost[i, j] - u[i] - v[j] >= 0 and equality on matched cells
    """
    n = cost.shape[0]
    virtual = n
    u = np.zeros(n)
    v = np.zeros(n + 1)
    row_of = np.full(n + 1, -1, dtype=np.intp)
    way = np.zeros(n + 1, dtype=np.intp)
    for i in range(n):
        row_of[virtual] = i
        j0 = virtual
        minv = np.full(n, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            free = ~used[:n]
            reduced = cost[i0] - u[i0] - v[:n]
            better = free & (reduced < minv)
            minv[better] = reduced[better]
            way[:n][better] = j0
            candidates = np.where(free, minv, np.inf)
            j1 = int(np.argmin(candidates))
            delta = candidates[j1]
            visited = np.flatnonzero(used)
            u[row_of[visited]] += delta
            v[visited] -= delta
            minv[free] -= delta
            j0 = j1
            if row_of[j0] == -1:
                break
        while j0 != virtual:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1
    assignment = np.empty(n, dtype=np.intp)
    assignment[row_of[:n]] = np.arange(n)
    return assignment, u, v[:n]


def solve_min_matching(instance: PlantedInstance) -> MatchingResult:
    """
    Exact minimum-weight perfect matching of an instance.

    :param instance: the planted instance
    :return: the matching with its overlap, cycle decomposition and duals
    """
    assignment, u, v = _shortest_augmenting_path(instance.weights)
    result = MatchingResult(
        assignment=assignment,
        weight=_selected_weight(instance.weights, assignment),
        overlap_count=int(np.count_nonzero(
            assignment == np.arange(instance.n))),
        row_potentials=u, col_potentials=v)
    result.cycles = decompose_symmetric_difference(result, instance)
    logger.debug("Solved n=%d: weight=%.6g overlap=%d cycles=%d", instance.n,
                 result.weight, result.overlap_count, len(result.cycles))
    return result


def brute_force_min_matching(instance: PlantedInstance) -> MatchingResult:
    """
    Exhaustive minimum over all permutations, the first one in
    lexicographic order wins ties.

    :param instance: an instance with n <= matching.brute_force_max_n
    :return: the matching
    :raises ParameterError: if n is too large
    """
    limit = config.get_int('matching', 'brute_force_max_n')
    if instance.n > limit:
        raise ParameterError(
            f"Brute force is refused for n={instance.n} > {limit}")
    rows = np.arange(instance.n)
    permutations = itertools.permutations(range(instance.n))
    best, best_total = None, np.inf
    while True:
        batch = np.array(
            list(itertools.islice(permutations, _BRUTE_FORCE_BATCH)),
            dtype=np.intp)
        if not len(batch):
            break
        totals = instance.weights[rows, batch].sum(axis=1)
        k = int(np.argmin(totals))
        if totals[k] < best_total:
            best, best_total = batch[k].copy(), totals[k]
    result = MatchingResult(
        assignment=best,
        weight=_selected_weight(instance.weights, best),
        overlap_count=int(np.count_nonzero(best == rows)))
    result.cycles = decompose_symmetric_difference(result, instance)
    return result


def overlap(result: MatchingResult, n: int) -> float:
    """Fraction of planted edges recovered"""
    return result.overlap_count / n


def sym_diff_size(result: MatchingResult) -> int:
    """Number of edges in M* xor M_min"""
    return 2 * (len(result.assignment) - result.overlap_count)


def decompose_symmetric_difference(
        result: MatchingResult,
        instance: PlantedInstance) -> List[AlternatingCycle]:
    """
    Split M* xor M_min into alternating cycles by following the assignment
    and the planted identity in turn
    :param result: matching on the instance
    :param instance: instance providing the edge weights
    :return: vertex disjoint cycles, empty if the matching is the planted one
    """
    sigma = result.assignment
    weights = instance.weights
    seen = np.zeros(len(sigma), dtype=bool)
    cycles = []
    for start in range(len(sigma)):
        if seen[start] or sigma[start] == start:
            continue
        vertices, members = [], []
        i = start
        while not seen[i]:
            seen[i] = True
            members.append(i)
            vertices.append((Side.LEFT, i))
            vertices.append((Side.RIGHT, int(sigma[i])))
            i = int(sigma[i])
        cycles.append(AlternatingCycle(
            vertices=tuple(vertices),
            planted_weight=math.fsum(weights[k, k] for k in members),
            unplanted_weight=math.fsum(weights[k, sigma[k]] for k in members)))
    return cycles


def verify_certificate(instance: PlantedInstance, result: MatchingResult,
                       tol: Optional[float] = None) -> bool:
    """
    Check dual feasibility u_i + v_j <= w_ij and complementary slackness on
    the matched edges
    :param instance: the solved instance
    :param result: a result carrying potentials
    :param tol: absolute tolerance, defaults to 1e-9 times the value scale
    :return: True if the potentials certify optimality
    :raises ContractError: if the result has no potentials
    """
    if result.row_potentials is None or result.col_potentials is None:
        raise ContractError("Matching result carries no dual potentials")
    u, v = result.row_potentials, result.col_potentials
    reduced = instance.weights - u[:, None] - v[None, :]
    if tol is None:
        scale = max(1.0, float(np.abs(instance.weights).max()),
                    float(np.abs(u).max()), float(np.abs(v).max()))
        tol = 1e-9 * scale
    matched = reduced[np.arange(instance.n), result.assignment]
    return bool(reduced.min() >= -tol and np.abs(matched).max() <= tol)
