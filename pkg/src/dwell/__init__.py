"""
Dwell computes L1 adaptive control for uncertain switched linear systems,
certifies its dwell time and performance bounds and flies the Learn-to-Fly
pipeline on a synthetic aircraft.
"""

__version__ = "1.0.0"

from .command import Command
from .config import Config, config_unit, get_config, init, run
from .vars import ConfigVar
