"""Dwell logger

All modules log through :data:`logger`, the level is set by the
``set_log_level`` unit from the number of ``-v`` flags.
"""

import logging

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)


def format_norm(value):
    """Short representation of a norm for log lines"""
    return "{:.3e}".format(float(value))
