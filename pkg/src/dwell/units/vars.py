"""All config vars as used by the default units"""


from argparse import ArgumentParser
from pathlib import Path

from ..vars import ConfigVar

config_project_name = ConfigVar(
    "PROJECT_NAME",
    "Program name shown in the usage line",
    default="dwell",
    type=str,
)

config_args = ConfigVar(
    "ARGS",
    "Argument parsers result",
    default=None,
)

config_verbose = ConfigVar(
    "VERBOSE",
    "Verbosity level",
    default=0,
    type=int,
)

config_config = ConfigVar(
    "CONFIG",
    "Python settings file to parse",
    default=None,
    type=str,
)

config_arg_parser = ConfigVar(
    "ARG_PARSER",
    "The argument parser",
    default=None,
    type=ArgumentParser,
)

config_arg_command_parser = ConfigVar(
    "ARG_COMMAND_PARSER",
    "Subparser for the command",
    default=None,
    type=ArgumentParser,
)

config_scenario = ConfigVar(
    "SCENARIO",
    "The validated scenario",
    default=None,
)

config_scenario_path = ConfigVar(
    "SCENARIO_PATH",
    "Path of the scenario file",
    default=None,
    type=Path,
)

config_scenario_hash = ConfigVar(
    "SCENARIO_HASH",
    "SHA-256 of the canonical scenario dump",
    default=None,
    type=str,
)

config_output_dir = ConfigVar(
    "OUTPUT_DIR",
    "Directory the traces and reports are written to",
    default=Path("out"),
    type=Path,
)

config_seed = ConfigVar(
    "SEED",
    "Seed of all random streams, defaults to the scenario seed",
    default=None,
    type=int,
)

config_workers = ConfigVar(
    "WORKERS",
    "Number of processes of a Monte Carlo sweep",
    default=None,
    type=int,
)

config_strict_norm_bounds = ConfigVar(
    "STRICT_NORM_BOUNDS",
    "Use the matrix 2-norm instead of the diagonal bound for D_omega",
    default=False,
    type=bool,
)

config_plot = ConfigVar(
    "PLOT",
    "Write SVG plots next to the traces",
    default=False,
    type=bool,
)

config_exit_code = ConfigVar(
    "EXIT_CODE",
    "Exit code of the last command",
    default=0,
    type=int,
)
