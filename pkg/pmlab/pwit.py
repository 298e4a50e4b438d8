# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

"""
Truncated planted Poisson weighted infinite tree.

Nodes of level d are stored in dense arrays of length (arity + 1)^d; the
children of node k are k * (arity + 1) + s for slots s = 0..arity. Slot 0
is the planted child and only exists when the parent edge is un-planted,
so labels never hold two consecutive zeros. Slots 1..arity are the first
Poisson arrivals. Levels 1..depth are complete, level depth + 1 only holds
the planted partners of un-planted level-depth nodes.

For the edge e between a parent p and its child c

    below[c] = X(p, c) = min over children w of c of (l(c, w) - X(c, w))
    above[c] = X(c, p) = min over neighbours w != c of p of
                         (l(p, w) - X(p, w))

and the edge belongs to the matching when l(e) < below[c] + above[c].
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from . import config
from .exceptions import ContractError, NoSolutionError, ParameterError
from .ode import OdeSolution, solve_ode
from .rde import SampledDistribution

__all__ = ['PwitTree', 'RootStats', 'RootEstimator', 'BalanceAudit',
           'TreeMatching', 'tree_size', 'build_tree', 'propagate_messages',
           'audit_balance', 'extract_matching', 'ode_boundary',
           'estimate_root_overlap']

logger = logging.getLogger(__name__)


class RootEstimator(Enum):
    """How :func:`estimate_root_overlap` samples the tree"""
    AUTO = 'auto'
    EXPLICIT = 'explicit'
    POOLED = 'pooled'


@dataclass(eq=False)
class PwitTree:
    lam: float
    depth: int
    arity: int
    weight: List[np.ndarray] = field(repr=False)
    valid: List[np.ndarray] = field(repr=False)
    planted: List[np.ndarray] = field(repr=False)
    below: Optional[List[np.ndarray]] = field(default=None, repr=False)
    above: Optional[List[np.ndarray]] = field(default=None, repr=False)

    @property
    def slots(self) -> int:
        return self.arity + 1

    @property
    def propagated(self) -> bool:
        return self.below is not None and self.above is not None

    def label(self, level: int, index: int) -> Tuple[int, ...]:
        """Label sequence of a node, the root is ()"""
        digits = []
        for _ in range(level):
            index, slot = divmod(index, self.slots)
            digits.append(slot)
        return tuple(reversed(digits))

    def node_count(self) -> int:
        return int(sum(np.count_nonzero(valid) for valid in self.valid))

    def _children(self, values: List[np.ndarray], level: int,
                  fill: float) -> np.ndarray:
        """l(v, w) - X(v, w) over the child slots of every level node"""
        child = level + 1
        terms = self.weight[child] - values[child]
        return np.where(self.valid[child], terms,
                        fill).reshape(-1, self.slots)

    def _parent_terms(self, level: int) -> np.ndarray:
        """l(v, parent) - X(v, parent) for every level node"""
        if level == 0:
            return np.full(1, np.inf)
        return np.where(self.valid[level],
                        self.weight[level] - self.above[level], np.inf)

    def neighbour_terms(self, level: int) -> np.ndarray:
        """
        Row per level node with the child slots first and the parent edge
        last, invalid neighbours at +inf
        """
        return np.concatenate(
            [self._children(self.below, level, np.inf),
             self._parent_terms(level)[:, None]], axis=1)


@dataclass(eq=False)
class RootStats:
    p_root_planted: float
    stderr: float
    trials: int
    degenerate: int = 0
    method: RootEstimator = RootEstimator.EXPLICIT
    planted_messages: Optional[np.ndarray] = field(default=None, repr=False)
    planted_weights: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def degenerate_rate(self) -> float:
        return self.degenerate / self.trials if self.trials else 0.0


@dataclass(frozen=True)
class BalanceAudit:
    checked: int
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass(eq=False)
class TreeMatching:
    """Matching read off a propagated tree"""
    marked: List[np.ndarray] = field(repr=False)
    root_marks: np.ndarray
    root_partner: int
    audited: int
    agreements: int
    degenerate: int

    @property
    def root_degenerate(self) -> bool:
        return int(np.count_nonzero(self.root_marks)) != 1

    @property
    def root_planted_marked(self) -> bool:
        return bool(self.root_marks[0])


def tree_size(depth: int, arity: int) -> int:
    """Number of array slots of a tree, levels 0..depth + 1"""
    return sum((arity + 1) ** level for level in range(depth + 2))


def _check_shape(depth: int, arity: int, node_cap: Optional[int]) -> None:
    if int(depth) != depth or depth < 1:
        raise ParameterError(f"depth must be a positive integer, got {depth}")
    if int(arity) != arity or arity < 1:
        raise ParameterError(f"arity must be a positive integer, got {arity}")
    node_cap = node_cap or config.get_int('pwit', 'node_cap')
    if tree_size(depth, arity) > node_cap:
        raise ParameterError(
            f"A tree of depth {depth} and arity {arity} needs "
            f"{tree_size(depth, arity)} nodes, the cap is {node_cap}")


def build_tree(lam: float, depth: int, arity: int, rng: np.random.Generator,
               node_cap: Optional[int] = None) -> PwitTree:
    """
    Sample the edge weights of a truncated planted tree.

    :param lam: planted rate
    :param depth: number of complete levels below the root
    :param arity: un-planted children per node
    :param rng: random generator
    :param node_cap: largest allowed tree, defaults to pwit.node_cap
    :return: the tree without messages
    :raises ParameterError: for invalid shapes or trees above the cap
    """
    _check_shape(depth, arity, node_cap)
    slots = arity + 1
    weight = [np.full(1, np.nan)]
    valid = [np.ones(1, dtype=bool)]
    planted = [np.zeros(1, dtype=bool)]
    for level in range(1, depth + 2):
        parents = valid[-1].size
        w = np.empty((parents, slots))
        w[:, 0] = rng.exponential(1 / lam, parents)
        w[:, 1:] = np.cumsum(rng.exponential(1.0, (parents, arity)), axis=1)
        v = np.zeros((parents, slots), dtype=bool)
        v[:, 0] = valid[-1] & ~planted[-1]
        if level <= depth:
            v[:, 1:] = valid[-1][:, None]
        p = np.zeros((parents, slots), dtype=bool)
        p[:, 0] = v[:, 0]
        w[~v] = np.nan
        weight.append(w.reshape(-1))
        valid.append(v.reshape(-1))
        planted.append(p.reshape(-1))
    return PwitTree(lam, depth, arity, weight, valid, planted)


def propagate_messages(tree: PwitTree, boundary_x: SampledDistribution,
                       boundary_y: SampledDistribution,
                       rng: np.random.Generator) -> PwitTree:
    """
    Seed the boundary and run the upward then the downward sweep.

    Level-depth edges get an independent X draw when planted and a Y draw
    otherwise, the planted partners at depth + 1 get X draws.

    :param tree: tree from :func:`build_tree`, messages are set in place
    :param boundary_x: law of messages on planted boundary edges
    :param boundary_y: law of messages on un-planted boundary edges
    :param rng: random generator
    :return: the same tree
    :raises ContractError: if a boundary law is missing
    """
    if boundary_x is None or boundary_y is None:
        raise ContractError("Boundary messages are not seeded")
    depth = tree.depth
    tree.below = [np.full(w.size, np.nan) for w in tree.weight]
    tree.above = [np.full(w.size, np.nan) for w in tree.weight]

    seeds = tree.below[depth]
    planted_edges = tree.valid[depth] & tree.planted[depth]
    unplanted_edges = tree.valid[depth] & ~tree.planted[depth]
    seeds[planted_edges] = boundary_x.sample(
        rng, int(np.count_nonzero(planted_edges)))
    seeds[unplanted_edges] = boundary_y.sample(
        rng, int(np.count_nonzero(unplanted_edges)))
    partners = tree.valid[depth + 1]
    tree.below[depth + 1][partners] = boundary_x.sample(
        rng, int(np.count_nonzero(partners)))

    for level in range(depth - 1, 0, -1):
        best = tree._children(tree.below, level, np.inf).min(axis=1)
        tree.below[level] = np.where(tree.valid[level], best, np.nan)

    for level in range(depth + 1):
        terms = tree.neighbour_terms(level)
        rows = np.arange(terms.shape[0])
        first = np.argmin(terms, axis=1)
        smallest = terms[rows, first]
        rest = terms.copy()
        rest[rows, first] = np.inf
        second = rest.min(axis=1)
        # each child sees the best neighbour other than itself
        own = np.arange(tree.slots)[None, :] == first[:, None]
        excluded = np.where(own, second[:, None], smallest[:, None])
        tree.above[level + 1] = np.where(tree.valid[level + 1],
                                         excluded.reshape(-1), np.nan)
    return tree


def audit_balance(tree: PwitTree) -> BalanceAudit:
    """
    Recompute every interior message slot by slot and compare exactly
    :param tree: propagated tree
    :return: number of checked messages and of mismatches
    :raises ContractError: if the tree was not propagated
    """
    if not tree.propagated:
        raise ContractError("Tree messages have not been propagated")
    checked = violations = 0
    for level in range(1, tree.depth):
        children = tree._children(tree.below, level, np.inf)
        expected = children[:, 0]
        for slot in range(1, tree.slots):
            expected = np.minimum(expected, children[:, slot])
        valid = tree.valid[level]
        checked += int(np.count_nonzero(valid))
        violations += int(np.count_nonzero(
            tree.below[level][valid] != expected[valid]))
    for level in range(tree.depth + 1):
        terms = tree.neighbour_terms(level)
        valid = tree.valid[level + 1].reshape(-1, tree.slots)
        for slot in range(tree.slots):
            others = terms.copy()
            others[:, slot] = np.inf
            expected = others.min(axis=1)
            actual = tree.above[level + 1].reshape(-1, tree.slots)[:, slot]
            mask = valid[:, slot]
            checked += int(np.count_nonzero(mask))
            violations += int(np.count_nonzero(actual[mask] != expected[mask]))
    return BalanceAudit(checked, violations)


def extract_matching(tree: PwitTree) -> TreeMatching:
    """
    Mark every edge with l(e) < X(p, c) + X(c, p) and compare with the
    argmin partner at every node whose neighbourhood is fully computed
    (levels 0..depth - 1)
    :param tree: propagated tree
    :return: marks, root marks and the agreement counts
    :raises ContractError: if the tree was not propagated
    """
    if not tree.propagated:
        raise ContractError("Tree messages have not been propagated")
    marked = [np.zeros(1, dtype=bool)]
    for level in range(1, tree.depth + 2):
        with np.errstate(invalid='ignore'):
            marks = tree.weight[level] < tree.below[level] + tree.above[level]
        marked.append(marks & tree.valid[level])
    audited = agreements = degenerate = 0
    root_partner = -1
    for level in range(tree.depth):
        marks = np.concatenate(
            [marked[level + 1].reshape(-1, tree.slots),
             marked[level][:, None]], axis=1)
        partner = np.argmin(tree.neighbour_terms(level), axis=1)
        counts = marks.sum(axis=1)
        agree = (counts == 1) & marks[np.arange(marks.shape[0]), partner]
        valid = tree.valid[level]
        audited += int(np.count_nonzero(valid))
        agreements += int(np.count_nonzero(agree & valid))
        degenerate += int(np.count_nonzero((counts != 1) & valid))
        if level == 0:
            root_partner = int(partner[0])
    if degenerate:
        logger.debug("Tree has %d degenerate nodes out of %d", degenerate,
                     audited)
    return TreeMatching(
        marked=marked, root_marks=marked[1].copy(), root_partner=root_partner,
        audited=audited, agreements=agreements, degenerate=degenerate)


def ode_boundary(solution: OdeSolution, span: Optional[float] = None,
                 size: Optional[int] = None):
    """
    Boundary laws from the ODE solution, X ~ F and Y ~ 1 - (1 - F) W
    :param solution: reconstructed ODE solution
    :param span: grid half width, defaults to pwit.boundary_span
    :param size: quantile table size
    :return: (law of X, law of Y)
    """
    span = span or config.get_float('pwit', 'boundary_span')
    step = config.get_float('ode', 'grid_step')
    half = int(round(span / step))
    grid = step * np.arange(-half, half + 1)
    return (SampledDistribution.from_cdf(grid, solution.cdf_x(grid), size),
            SampledDistribution.from_cdf(grid, solution.cdf_y(grid), size))


def _minimum_arrival(messages: np.ndarray, arity: int, size: int,
                     rng: np.random.Generator) -> np.ndarray:
    """min over the first arity arrivals of (zeta_i - message_i)"""
    zeta = np.cumsum(rng.exponential(1.0, (size, arity)), axis=1)
    picks = messages[rng.integers(0, messages.size, (size, arity))]
    return np.min(zeta - picks, axis=1)


def _pooled_root(lam: float, depth: int, arity: int, trials: int,
                 boundary_x: SampledDistribution,
                 boundary_y: SampledDistribution,
                 rng: np.random.Generator) -> RootStats:
    """
    Root statistics from independent subtrees: every level is a pool of
    messages recomputed from resampled messages of the level below
    """
    x_pool = boundary_x.sample(rng, trials)
    y_pool = boundary_y.sample(rng, trials)
    for _ in range(depth - 1):
        eta = rng.exponential(1 / lam, trials)
        planted_child = eta - x_pool[rng.integers(0, trials, trials)]
        x_pool, y_pool = (
            _minimum_arrival(y_pool, arity, trials, rng),
            np.minimum(planted_child,
                       _minimum_arrival(y_pool, arity, trials, rng)))
    weights = rng.exponential(1 / lam, trials)
    messages = x_pool[rng.integers(0, trials, trials)]
    rest = _minimum_arrival(y_pool, arity, trials, rng)
    p = float(np.mean(weights < messages + rest))
    return RootStats(p, math.sqrt(p * (1 - p) / trials), trials,
                     method=RootEstimator.POOLED, planted_messages=messages,
                     planted_weights=weights)


def _explicit_root(lam: float, depth: int, arity: int, trials: int,
                   boundary_x: SampledDistribution,
                   boundary_y: SampledDistribution,
                   rng: np.random.Generator,
                   node_cap: Optional[int]) -> RootStats:
    hits = degenerate = 0
    messages = np.empty(trials)
    weights = np.empty(trials)
    for trial in range(trials):
        tree = build_tree(lam, depth, arity, rng, node_cap=node_cap)
        propagate_messages(tree, boundary_x, boundary_y, rng)
        matching = extract_matching(tree)
        messages[trial] = tree.below[1][0]
        weights[trial] = tree.weight[1][0]
        if matching.root_degenerate:
            degenerate += 1
        elif matching.root_planted_marked:
            hits += 1
    counted = trials - degenerate
    p = hits / counted if counted else math.nan
    stderr = math.sqrt(p * (1 - p) / counted) if counted else math.nan
    return RootStats(p, stderr, trials, degenerate=degenerate,
                     method=RootEstimator.EXPLICIT,
                     planted_messages=messages, planted_weights=weights)


def estimate_root_overlap(
        lam: float, depth: Optional[int] = None, arity: Optional[int] = None,
        trials: int = 10_000,
        boundary: Optional[Tuple[SampledDistribution,
                                 SampledDistribution]] = None,
        rng: Optional[np.random.Generator] = None,
        method: RootEstimator = RootEstimator.AUTO,
        node_cap: Optional[int] = None) -> RootStats:
    """
    Estimate P[{root, 0} is matched] on truncated trees.

    Explicit trees are used when they fit under the node cap, larger shapes
    switch to the pooled recursion. Trials whose root is degenerate are
    counted and left out of the estimate.

    :param lam: planted rate in (0, 4)
    :param depth: tree depth, defaults to pwit.depth
    :param arity: un-planted children, defaults to pwit.arity
    :param trials: number of trees
    :param boundary: (X law, Y law), defaults to the ODE solution
    :param rng: random generator
    :param method: sampling method
    :param node_cap: largest explicit tree
    :return: the root statistics
    :raises NoSolutionError: if lam >= 4
    """
    if lam >= 4:
        raise NoSolutionError(lam)
    depth = depth or config.get_int('pwit', 'depth')
    arity = arity or config.get_int('pwit', 'arity')
    rng = rng or np.random.default_rng()
    if boundary is None:
        boundary = ode_boundary(solve_ode(lam))
    if method == RootEstimator.AUTO:
        cap = node_cap or config.get_int('pwit', 'node_cap')
        method = (RootEstimator.EXPLICIT if tree_size(depth, arity) <= cap
                  else RootEstimator.POOLED)
    match method:
        case RootEstimator.EXPLICIT:
            stats = _explicit_root(lam, depth, arity, trials, *boundary,
                                   rng=rng, node_cap=node_cap)
        case RootEstimator.POOLED:
            _check_shape(depth, arity, math.inf)
            stats = _pooled_root(lam, depth, arity, trials, *boundary,
                                 rng=rng)
        case _:
            raise ParameterError(f"Unknown estimator {method}")
    logger.info("pwit lambda=%g depth=%d arity=%d %s: p=%.4f +- %.4f "
                "(%d degenerate)", lam, depth, arity, stats.method.value,
                stats.p_root_planted, stats.stderr, stats.degenerate)
    return stats
