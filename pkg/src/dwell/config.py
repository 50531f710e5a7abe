"""Configuration abstraction

A :class:`Config` holds the runtime variables of one invocation and the
config units that fill them. Units are plain functions or generators; a
generator runs its setup part up to ``yield`` before the command and its
cleanup part afterwards, in reverse order.
"""
from contextlib import contextmanager
from contextvars import ContextVar
from inspect import isgeneratorfunction
from types import ModuleType
from typing import Any, Callable, Dict, Generator, List, Optional, Union

from .exceptions import ConfigUnitError, DwellError, StopInitException
from .kahn import KahnIterator
from .logger import logger

CurrentConfig: ContextVar[Optional["Config"]] = ContextVar("Config", default=None)
FinalTargetType = Any


class Config:
    """Variables and startup targets of one run

    :ivar func: Called after initialization, its return value is the exit code
    :ivar targets: All targets that need to be run
    :ivar variables: A dict storing all variables
    :ivar ran_units: All units that ran already
    :ivar active_units: Generator instances waiting for their cleanup
    """

    def __init__(
            self,
            func=None,
            variables: Optional[Dict[str, Any]] = None,
            targets: Optional[List["ConfigUnit"]] = None
    ):
        self.func = func
        self.targets: List["ConfigUnit"] = []
        self.variables: Dict[str, Any] = variables if variables is not None else dict()
        self.unit_iterator = KahnIterator()
        self.ran_units: List["ConfigUnit"] = []
        self.active_units: Dict["ConfigUnit", Any] = {}

        for target in targets or []:
            self.add_target(target)

    def init(self) -> bool:
        """Run all targets in order

        :returns: False if a unit stopped the initialization
        """
        for unit in self.unit_iterator:
            logger.debug("Init Config Unit %s", unit)
            instance = None
            try:
                if unit.is_generator:
                    instance = unit(self)
                    next(instance)
                elif not unit.is_empty:
                    unit(self)
            except StopInitException:
                logger.debug("Config Unit %s stopped the init", unit)
                self.func = None
                return False
            except StopIteration:
                instance = None

            self.active_units[unit] = instance
            self.ran_units.append(unit)
        return True

    def exit(self) -> None:
        """Clean up all units that ran, last first"""
        while self.ran_units:
            unit = self.ran_units.pop()
            instance = self.active_units.pop(unit, None)
            if instance is None:
                continue
            logger.debug("Exit Config Unit %s", unit)
            try:
                next(instance)
            except StopIteration:
                pass

    def __getitem__(self, key: str) -> Any:
        return self.variables[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.variables.get(key, default)

    def has(self, key: str) -> bool:
        return key in self.variables

    __contains__ = has

    def __setitem__(self, key: str, value: Any) -> None:
        self.variables[key] = value

    def __delitem__(self, key: str) -> None:
        del self.variables[key]

    def __len__(self) -> int:
        return len(self.variables)

    def add_target(self, target: "ConfigUnit") -> None:
        """Add a target and everything it depends on

        Targets may be added while the config is initializing, they are
        scheduled behind the units that already ran.
        """
        if target in self.targets:
            return
        logger.debug("Add target %s", target)
        self.targets.append(target)
        self.unit_iterator.add_node(target)
        for dependency in target.depends:
            self.add_target(dependency)

    def add_targets(self, targets: List["ConfigUnit"]) -> None:
        for target in targets:
            self.add_target(target)

    def set_func(self, func: FinalTargetType) -> None:
        """Set the function/command run after initialization

        :raises ConfigUnitError: If a function/command is set already
        """
        if self.func is not None:
            raise ConfigUnitError("Can't change func")
        self.func = func

    def load_from_module_path(self, filename: str) -> None:
        """Load settings from a python file

        :raises ConfigUnitError: If the file cannot be loaded as a module
        """
        # pylint: disable=import-outside-toplevel
        import importlib.util
        spec = importlib.util.spec_from_file_location("dwell_settings", filename)
        if spec is None or spec.loader is None:
            raise ConfigUnitError("Could not load settings from {}".format(filename))
        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)
        self.load_from_module(module)

    def load_from_module(self, module: ModuleType) -> None:
        """Copy the upper case names of a module into the variables"""
        for key in dir(module):
            if key.isupper():
                self[key] = getattr(module, key)


def get_config() -> Optional[Config]:
    """Returns the current config variable"""
    return CurrentConfig.get()


def set_config(config: Config):
    """Sets the current config variable"""
    CurrentConfig.set(config)


OptionalConfigUnitList = Optional[Union["ConfigUnit", List["ConfigUnit"]]]


def _param_to_list(param: OptionalConfigUnitList) -> List["ConfigUnit"]:
    """Returns a fresh list of items, None gives an empty list"""
    if param is None:
        return []
    if isinstance(param, list):
        return param.copy()
    return [param]


class ConfigUnit:
    """One initialization step

    :ivar name: A name for this unit
    :ivar description: A short description of what this unit does
    :ivar depends: Units that **must** be run as well, in any order
    :ivar after: Run this unit after these units
    :ivar before: Run this unit before these units
    :ivar func: The function or generator doing the work, None for a pure grouping unit
    """
    units: Dict[str, "ConfigUnit"] = {}

    # pylint: disable=too-many-arguments
    def __init__(
            self,
            name: str = None,
            description: str = None,
            depends: OptionalConfigUnitList = None,
            before: OptionalConfigUnitList = None,
            after: OptionalConfigUnitList = None,
            func: Callable = None,
    ):
        self.name = name
        self.description = description
        self.depends = _param_to_list(depends)
        self.before = _param_to_list(before)
        self.after = _param_to_list(after)
        self.func = func
        self.is_generator = func is not None and isgeneratorfunction(func)

    def __str__(self) -> str:
        return "ConfigUnit(name='{}')".format(self.name)

    __repr__ = __str__

    @property
    def is_empty(self) -> bool:
        """Checks if this unit doesn't do anything"""
        return self.func is None

    def __call__(self, config: Config) -> Any:
        if self.func is None:
            raise ConfigUnitError("This config unit is not callable")
        return self.func(config)

    @classmethod
    def add_unit(cls, unit: "ConfigUnit", path: str) -> None:
        """Register a unit under its module path

        :raises ConfigUnitError: If the path is taken
        """
        if path in cls.units:
            raise ConfigUnitError("Can't overwrite config unit {}".format(path))
        cls.units[path] = unit


def config_unit(*args, **kwargs) -> Union[ConfigUnit, Callable[[Any], ConfigUnit]]:
    """Decorator shortcut for ConfigUnit

    .. code-block:: python

        @config_unit(after=parse_parameters)
        def step(config):
            pass

        # is equal to
        step = ConfigUnit(name="step", description=..., after=parse_parameters, func=_step)
    """

    def wrapper(func: Any) -> ConfigUnit:
        kwargs.setdefault("name", func.__name__)
        kwargs.setdefault("description", func.__doc__)
        unit = ConfigUnit(func=func, **kwargs)
        ConfigUnit.add_unit(unit, "{}.{}".format(func.__module__, kwargs["name"]))
        return unit

    if len(args) == 1 and len(kwargs) == 0 and callable(args[0]):
        return wrapper(args[0])
    return wrapper


def run(
        func: FinalTargetType = None,
        config: Optional[Config] = None,
        targets: Optional[List[ConfigUnit]] = None
) -> int:
    """Run all targets, then the function, then clean up

    Dwell errors raised anywhere in between end the run with their exit
    code, the message goes to the log.

    :param func: The function or command to be run
    :param config: The config to be used, a new one is created if None
    :param targets: The targets to be run
    :returns: The exit code
    """
    if config is None:
        assert func is not None or targets is not None
        config = Config(targets=targets, func=func)
    else:
        config.add_targets(targets or [])
        if func is not None:
            config.func = func

    set_config(config)
    try:
        try:
            code = None
            if config.init() and config.func is not None:
                # pylint: disable=import-outside-toplevel
                from .command import Command
                target = config.func.run if isinstance(config.func, Command) else config.func
                logger.debug("Calling %s", target)
                code = target(config)
        finally:
            config.exit()
    except DwellError as exc:
        logger.error("%s", exc)
        code = exc.exit_code
    return 0 if code is None else int(code)


@contextmanager
def init(
        config: Optional[Config] = None,
        targets: Optional[List[ConfigUnit]] = None
) -> Generator[Config, None, None]:
    """Initialize all targets without running a command

    .. code-block:: python

        with init(targets=[load_scenario_unit]) as config:
            scenario = config["SCENARIO"]

    :param config: The config to be used, a new one is created if None
    :param targets: The targets to be run
    """
    if config is None:
        assert targets is not None
        config = Config(targets=targets)
    else:
        config.add_targets(targets or [])

    set_config(config)
    try:
        config.init()
        yield config
    finally:
        config.exit()
