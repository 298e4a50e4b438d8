# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import functools
import os
import unittest

from ..ode import solve_ode

__all__ = ['long_test', 'ode_solution']

long_test = unittest.skipUnless(
    os.environ.get('PMLAB_LONG_TESTS') == '1',
    "acceptance-size run, set PMLAB_LONG_TESTS=1")


@functools.lru_cache(maxsize=None)
def ode_solution(lam: float):
    """Shared ODE solutions, the shooting is the slow part of many tests"""
    return solve_ode(lam)
