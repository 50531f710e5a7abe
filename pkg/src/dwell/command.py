"""Dwell command interface

A command is a subclass of :class:`Command` with a ``name``; defining it
registers it as a subcommand of ``python -m dwell``.
"""


from argparse import ArgumentParser
from typing import Dict, List, Optional

from .config import Config, ConfigUnit


class MetaCommand(type):
    """Metaclass for command

    Collects all named commands in :attr:`commands`
    """
    commands: Dict[str, "Command"] = {}

    def __init__(cls, name, bases, dct):
        if "name" not in dct:
            raise AttributeError("Command needs a name attribute")
        if dct["name"] is not None:
            MetaCommand.commands[dct["name"]] = cls
        super().__init__(name, bases, dct)

    @classmethod
    def get_help_text(cls) -> str:
        """Help text listing the commands"""
        help_text = "Enter one of the following commands:"

        max_name_length = max(len(c) for c in cls.commands)
        for name, command in cls.commands.items():
            help_text += "\n\t{:<{l}} {}".format(name, command.short_description, l=max_name_length)

        return help_text


class Command(metaclass=MetaCommand):
    """Represents a command

    :ivar name: The subcommand name (if None this command can't be called)
    :ivar short_description: The description used in help
    :ivar targets: The config units that have to run before this command
    """

    name: Optional[str] = None
    short_description: Optional[str] = ""
    targets: List[ConfigUnit] = []

    def run(self, config: Config) -> int:
        """Run after the config is initialized

        :returns: The exit code
        """
        raise NotImplementedError()

    @classmethod
    def get_arguments(cls, parser: ArgumentParser) -> ArgumentParser:
        """Adds the command's arguments to its subparser"""
        return parser
