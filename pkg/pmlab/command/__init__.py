# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

from .alpha_command import AlphaCommand
from .bound_command import BoundCommand
from .pwit_command import PwitCommand
from .rde_command import RdeCommand
from .simulate_command import SimulateCommand

__all__ = ['COMMANDS']

COMMANDS = [AlphaCommand, SimulateCommand, RdeCommand, PwitCommand,
            BoundCommand]
