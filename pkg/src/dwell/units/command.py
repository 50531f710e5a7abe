"""Units to run commands"""
from ..command import MetaCommand
from ..config import config_unit
from ..logger import logger
from .argparse import init_arg_subparser, parse_parameters
from .config import parse_config
from .logging import set_log_level
from .vars import ConfigVar, config_args, config_exit_code


def _show_variables(config):
    ConfigVar.print_variables(config)
    return 0


@config_unit(
    depends=[
        parse_parameters,
        init_arg_subparser,
        set_log_level,
    ],
    after=[
        set_log_level,
        parse_config,
        parse_parameters,
        init_arg_subparser,
    ]
)
def run_command(config):
    """Select the command named on the command line

    With ``-V`` only the config variables are printed. Otherwise the
    command's own targets are added and its exit code ends up in
    ``EXIT_CODE``.
    """
    args = config_args.get(config)
    command = MetaCommand.commands[args.command]()
    config.add_targets(command.targets)

    if args.vars:
        config.set_func(_show_variables)
        return

    def execute(config):
        code = command.run(config) or 0
        config_exit_code.set(code, config)
        logger.info("%s finished with exit code %s", command.name, code)
        return code

    config.set_func(execute)
