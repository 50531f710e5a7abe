import logging

import pytest

from ..command import Command, MetaCommand
from ..config import config_unit, init, run
from ..units.argparse import (init_arg_parser, init_arg_subparser,
                              parse_parameters)
from ..units.command import run_command
from ..units.config import parse_config
from ..units.logging import _get_log_level, set_log_level


class FakeModule:
    def __init__(self):
        self.__ignore_this__ = "__ignore_this__"
        self.SEED = 11

    def __dir__(self):
        return ["__ignore_this__", "SEED"]


def mock_config_load_from_module_path(self, path):
    assert path == "config.py"
    self.load_from_module(FakeModule())


def test_config(mocker):
    mocker.patch("sys.argv", ["file", "-vvv", "-c", "config.py"])
    mocker.patch("dwell.config.Config.load_from_module_path", mock_config_load_from_module_path)

    with init(targets=[init_arg_parser]) as config:
        assert "__ignore_this__" not in config
        assert config["SEED"] == 11
        assert config["ARGS"].verbose == 3
        assert config["ARGS"].config == "config.py"
        assert init_arg_parser in config.active_units
        assert config.active_units[init_arg_parser] is None
        assert parse_config in config.active_units
        assert len(config.active_units) == 2


def test_no_settings_file(mocker):
    mocker.patch("sys.argv", ["file"])

    with init(targets=[init_arg_parser]) as config:
        assert config["CONFIG"] is None
        assert parse_config not in config.active_units


def test_log_levels():
    assert _get_log_level(0) == logging.WARNING
    assert _get_log_level(1) == logging.INFO
    assert _get_log_level(2) == logging.DEBUG
    assert _get_log_level(5) == logging.DEBUG


def test_help_before_command(mocker, capsys):
    mocker.patch("sys.argv", ["file", "-v", "-h"])

    with init(targets=[init_arg_parser, init_arg_subparser, parse_parameters]) as config:
        assert config.func is None

    assert "Command" in capsys.readouterr().out


def test_help_after_command(mocker, capsys):
    mocker.patch("sys.argv", ["file", "-vvv", "-c", "config.py", "testcommand", "-h"])
    mocker.patch("dwell.config.Config.load_from_module_path", mock_config_load_from_module_path)
    called = False

    class TestCommand(Command):
        name = "testcommand"
        short_description = "a test command"

        def run(self, config):
            nonlocal called
            called = True

    with pytest.raises(SystemExit):
        run(targets=[run_command])

    assert called == False
    assert "testcommand" in capsys.readouterr().out


def test_unknown_command_is_a_config_error(mocker, capsys):
    mocker.patch("sys.argv", ["file", "no-such-command"])

    assert run(targets=[run_command]) == 1
    assert "usage" in capsys.readouterr().err


def test_run_command(mocker):
    mocker.patch("sys.argv", ["file", "-vvv", "-c", "config.py", "testcommand2"])
    mocker.patch("dwell.config.Config.load_from_module_path", mock_config_load_from_module_path)
    called = False

    class TestCommand(Command):
        name = "testcommand2"

        def run(self, config):
            nonlocal called
            called = True

            assert parse_parameters in config.active_units
            assert init_arg_subparser in config.active_units
            assert parse_config in config.active_units
            assert set_log_level in config.active_units
            return 0

    assert run(targets=[run_command]) == 0

    assert called == True
    assert MetaCommand.commands["testcommand2"] is TestCommand


def test_command_exit_code(mocker, caplog):
    caplog.set_level(logging.INFO)
    mocker.patch("sys.argv", ["file", "testcommand4"])

    class TestCommand(Command):
        name = "testcommand4"

        def run(self, config):
            return 3

    assert run(targets=[run_command]) == 3
    assert "testcommand4 finished with exit code 3" in caplog.text


def test_argparser_for_command(mocker):
    mocker.patch("sys.argv", ["file", "-vvv", "-c", "config.py", "testcommand5", "--test-this"])
    mocker.patch("dwell.config.Config.load_from_module_path", mock_config_load_from_module_path)
    called = False

    class TestCommand(Command):
        name = "testcommand5"

        def run(self, config):
            nonlocal called
            called = True
            assert config["ARGS"].test_this == True

        @classmethod
        def get_arguments(cls, parser):
            parser.add_argument("--test-this", action="store_true", default=False)
            return parser

    run(targets=[run_command])

    assert called == True


def test_target_command(mocker):
    mocker.patch("sys.argv", ["file", "testcommand3"])
    called = False

    @config_unit
    def testcommand_unit(config):
        config["UNIT_RAN"] = True
        yield
        del config["UNIT_RAN"]

    class TestCommand(Command):
        name = "testcommand3"
        targets = [testcommand_unit]

        def run(self, config):
            nonlocal called
            called = True
            assert testcommand_unit in config.active_units
            assert config["UNIT_RAN"]

    run(targets=[run_command])

    assert called == True


def test_show_vars(mocker, capsys):
    mocker.patch("sys.argv", ["file", "-V", "testcommand6"])

    class TestCommand(Command):
        name = "testcommand6"

        def run(self, config):
            pytest.fail("-V must not run the command")

    assert run(targets=[run_command]) == 0
    out = capsys.readouterr().out
    assert "PROJECT_NAME" in out
    assert "OUTPUT_DIR" in out


def test_command_needs_a_name():
    with pytest.raises(AttributeError):
        class Nameless(Command):  # pylint: disable=unused-variable
            pass
