# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

"""
Planted bipartite model.

Left vertex i is joined to right vertex j' by an edge of weight
``weights[i, j]``. The planted matching is the identity, edge (i, i') is
planted for every i, so diagonal entries are exp(lambda) and off-diagonal
entries are exponential with mean n.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import config
from .exceptions import ParameterError

__all__ = ['PlantedInstance', 'generate', 'save_instance',
           'load_instance', 'planted_weight']

logger = logging.getLogger(__name__)

_UINT64_MAX = 2 ** 64 - 1
# Cells generated per block, keeps the raw buffer around 8 MB
_BLOCK_CELLS = 1 << 20


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    n: int
    lam: float
    weights: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        self.weights.setflags(write=False)


def _check_parameters(n: int, lam: float, seed: int) -> None:
    max_n = config.get_int('model', 'max_n')
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    if n > max_n:
        raise ParameterError(f"n={n} exceeds the cap of {max_n}")
    if not np.isfinite(lam) or lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam!r}")
    if not isinstance(seed, (int, np.integer)) or not 0 <= seed <= _UINT64_MAX:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, "
                             f"got {seed!r}")


def _unit_exponentials(raw: np.ndarray) -> np.ndarray:
    # top 53 bits, shifted to the open interval (0, 1)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return -np.log(u)


def _block_weights(raw: np.ndarray, n: int, lam: float,
                   start: int) -> np.ndarray:
    """
    Turn the raw draws of cells ``start..start+len(raw)-1`` into weights.

    Cell k of the row-major matrix is the k-th draw of the Philox stream
    keyed by the seed, so its weight only depends on (n, lam, seed, k).
    """
    values = _unit_exponentials(raw)
    cells = np.arange(start, start + raw.size)
    diagonal = cells // n == cells % n
    values[diagonal] /= lam
    values[~diagonal] *= n
    return values


def generate(n: int, lam: float, seed: int) -> PlantedInstance:
    """
    Generate a planted instance.

    :param n: side size, 1 <= n <= max_n
    :param lam: planted rate lambda > 0
    :param seed: 64-bit unsigned stream key
    :return: the instance, a pure function of (n, lam, seed)
    :raises ParameterError: if a parameter is out of range
    """
    _check_parameters(n, lam, seed)
    total = n * n
    flat = np.empty(total, dtype=np.float64)
    bit_generator = np.random.Philox(key=seed)
    for start in range(0, total, _BLOCK_CELLS):
        stop = min(start + _BLOCK_CELLS, total)
        raw = bit_generator.random_raw(stop - start)
        flat[start:stop] = _block_weights(raw, n, lam, start)
    logger.debug("Generated instance n=%d lambda=%g seed=%d", n, lam, seed)
    return PlantedInstance(int(n), float(lam), flat.reshape(n, n), int(seed))


def planted_weight(instance: PlantedInstance) -> float:
    """Weight w(M*) of the planted matching"""
    return float(np.diag(instance.weights).sum())


def save_instance(instance: PlantedInstance, path: str) -> None:
    """
    Write an instance as ``n,lambda,seed`` followed by n rows of weights
    with 17 significant digits.
    """
    with open(path, 'w', encoding='UTF-8', newline='\n') as file:
        file.write(f'{instance.n},{instance.lam!r},{instance.seed}\n')
        for row in instance.weights:
            file.write(','.join('%.17g' % value for value in row) + '\n')


def load_instance(path: str) -> PlantedInstance:
    """
    Read an instance written by :func:`save_instance`
    :param path: file path
    :return: the instance
    :raises ParameterError: if the file is malformed
    """
    with open(path, encoding='UTF-8') as file:
        lines = file.read().splitlines()
    try:
        n_text, lam_text, seed_text = lines[0].split(',')
        n, lam, seed = int(n_text), float(lam_text), int(seed_text)
        weights = np.array([[float(value) for value in line.split(',')]
                            for line in lines[1:n + 1]], dtype=np.float64)
    except (IndexError, ValueError) as e:
        raise ParameterError(f"Malformed instance file '{path}'") from e
    if weights.shape != (n, n):
        raise ParameterError(
            f"Instance file '{path}' holds {weights.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise ParameterError(f"Instance file '{path}' has invalid weights")
    _check_parameters(n, lam, seed)
    return PlantedInstance(n, lam, weights, seed)
