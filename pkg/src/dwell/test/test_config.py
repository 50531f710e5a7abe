import logging

import pytest

from ..config import Config, ConfigUnit, _param_to_list, config_unit, init, run
from ..exceptions import (CertificateInfeasible, ConfigUnitError,
                          EnvelopeViolation, ScenarioError, StopInitException)
from ..vars import ConfigVar


@pytest.fixture(scope="function")
def clean_config_units():
    old = ConfigUnit.units
    ConfigUnit.units = old.copy()
    yield None
    ConfigUnit.units = old


def test_param_to_list():
    l = []
    assert id(_param_to_list(l)) != id(l)
    assert _param_to_list(None) == []
    assert _param_to_list([1]) == [1]
    assert _param_to_list(True) == [True]


def test_config_decorator(clean_config_units):
    @config_unit(description="description")
    def step(config):
        return config

    unit = ConfigUnit.units["dwell.test.test_config.step"]

    assert unit == step
    assert step.description == "description"
    assert step.name == "step"
    assert step.depends == []
    assert step.before == []
    assert step.after == []
    assert not step.is_generator
    assert step("test") == "test"

    @config_unit(depends=step, after=step)
    def step2(config):
        """Second step"""
        yield

    assert ConfigUnit.units["dwell.test.test_config.step2"] == step2
    assert step2.description == "Second step"
    assert step2.depends == [step]
    assert step2.after == [step]
    assert step2.is_generator


def test_config_unit_registered_twice(clean_config_units):
    def step(config):
        pass

    config_unit(step)
    with pytest.raises(ConfigUnitError):
        config_unit(step)


def test_empty_unit_not_callable():
    unit = ConfigUnit(name="group")
    assert unit.is_empty
    with pytest.raises(ConfigUnitError):
        unit(Config())


def test_run_order_and_cleanup(clean_config_units, caplog):
    caplog.set_level(logging.DEBUG, logger="dwell.logger")

    @config_unit
    def base(config):
        config["base"] = "base"
        yield
        del config["base"]

    @config_unit(before=base)
    def before_base(config):
        assert "base" not in config
        config["before"] = "before"
        yield
        assert "base" not in config
        del config["before"]

    @config_unit(after=base)
    def after_base(config):
        assert "base" in config
        config["after"] = "after"
        yield
        assert "base" in config
        del config["after"]

    @config_unit(depends=[base, after_base, before_base], after=[after_base, base])
    def hook_this(config):
        assert "base" in config
        assert "after" in config
        assert "before" in config
        yield
        assert "base" in config
        assert "after" in config
        assert "before" in config

    config = Config(targets=[hook_this])
    assert config.init()

    assert "base" in config
    assert "after" in config
    assert "before" in config
    assert config.ran_units.index(before_base) < config.ran_units.index(base)
    assert config.ran_units[-1] == hook_this

    config.exit()
    assert len(config) == 0


def test_one_target_tomuch(clean_config_units):
    @config_unit
    def first(config):
        pytest.fail("Should not run")
        yield

    @config_unit
    def second(config):
        config["second"] = "second"
        yield
        del config["second"]

    def func(config):
        assert "second" in config

    config = Config(func=func, targets=[second])
    assert run(config=config) == 0

    assert config.variables == {}


def test_add_target(clean_config_units):
    @config_unit
    def first(config):
        config["first"] = "first"
        yield
        del config["first"]

    @config_unit(after=first)
    def third(config):
        assert "first" in config
        config["third"] = "third"
        yield
        del config["third"]

    @config_unit(before=third)
    def second(config):
        config["second"] = "second"
        config.add_target(first)
        yield
        del config["second"]

    def func(config):
        if "first" not in config:
            pytest.fail("first did not run")
        if "second" not in config:
            pytest.fail("second did not run")
        if "third" not in config:
            pytest.fail("third did not run")

    config = Config(func=func, targets=[second, third])
    run(config=config)

    assert config.variables == {}


def test_stop_init(clean_config_units):
    @config_unit
    def stop(config):
        raise StopInitException()

    def func(config):
        pytest.fail("func must not run")

    config = Config(func=func, targets=[stop])
    assert run(config=config) == 0
    assert config.func is None


def test_set_func_twice():
    config = Config(func=lambda config: 0)
    with pytest.raises(ConfigUnitError):
        config.set_func(lambda config: 1)


@pytest.mark.parametrize("error, code", [
    (ScenarioError("broken"), 1),
    (EnvelopeViolation("diverged"), 2),
    (CertificateInfeasible("dwell time"), 3),
])
def test_run_maps_errors_to_exit_codes(clean_config_units, caplog, error, code):
    cleaned = []

    @config_unit
    def unit(config):
        yield
        cleaned.append(True)

    def func(config):
        raise error

    assert run(func=func, targets=[unit]) == code
    assert cleaned == [True]
    assert str(error) in caplog.text


def test_run_returns_func_code():
    assert run(func=lambda config: 3, config=Config()) == 3


def test_init_context(clean_config_units):
    @config_unit
    def unit(config):
        config["value"] = 1
        yield
        del config["value"]

    with init(targets=[unit]) as config:
        assert config["value"] == 1
    assert "value" not in config


def test_load_from_module():
    class Module:
        SEED = 4
        lower = "ignored"

    config = Config()
    config.load_from_module(Module)
    assert config["SEED"] == 4
    assert "lower" not in config


def test_load_from_module_path(tmp_path):
    settings = tmp_path / "settings.py"
    settings.write_text("WORKERS = 2\nPLOT = True\nhelper = 1\n")

    config = Config()
    config.load_from_module_path(str(settings))
    assert config["WORKERS"] == 2
    assert config["PLOT"] is True
    assert "helper" not in config


def test_config_var():
    var = ConfigVar("TEST_CONFIG_VAR", "a test variable", type=int, default=5)
    unset = ConfigVar("TEST_CONFIG_VAR_UNSET", "no default")
    config = Config()

    assert var.get(config) == 5
    var.set(7, config)
    assert var.get(config) == 7
    assert "Value:       7" in var.describe(config)
    with pytest.raises(LookupError):
        unset.get(config)
    with pytest.raises(ValueError):
        ConfigVar("TEST_CONFIG_VAR")
