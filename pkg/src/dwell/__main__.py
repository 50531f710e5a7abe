"""Basic start script to start a command

The default target is always run_command, the process exits with the
command's exit code.
"""
import sys

from . import commands  # noqa: F401  pylint: disable=unused-import
from .config import run
from .units import run_command


def main():
    sys.exit(run(targets=[run_command]))


if __name__ == "__main__":
    main()
