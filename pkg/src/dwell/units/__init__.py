"""All units implemented in the main package"""

from .argparse import init_arg_parser, init_arg_subparser, parse_parameters
from .command import run_command
from .config import parse_config
from .logging import set_log_level
from .scenario import apply_overrides, load_scenario_unit, prepare_output
