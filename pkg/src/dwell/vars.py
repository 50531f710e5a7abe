"""Config variables

Every runtime setting is declared once as a :class:`ConfigVar` next to the
units that use it. The declaration documents the setting, ``-V`` lists
them all.
"""

import inspect
from typing import Any, Dict, List, Optional

from .config import Config, get_config

_MISSING = object()


class ConfigVar:
    """A named setting stored in the current :class:`Config`

    :ivar name: The name of this variable as it should be used in configs
    :ivar description: A short description of what this variable does
    :ivar type: The expected type, informational
    :ivar default: Returned when the variable is unset, reading an unset
        variable without default raises :class:`LookupError`
    :ivar source: File and line where this ConfigVar is declared
    """
    _variables: Dict[str, "ConfigVar"] = {}

    # pylint: disable=redefined-builtin
    def __init__(self, name: str, description: Optional[str] = None, type: Any = None, default: Any = _MISSING):
        if name in self._variables:
            raise ValueError("Config Var {} is already defined".format(name))
        self._variables[name] = self

        self.name = name
        self.description = description
        self.type = type
        self.default = default

        caller = inspect.stack(context=0)[1]
        self.source = "{}:{}".format(caller.filename, caller.lineno)

    @property
    def has_default(self) -> bool:
        return self.default is not _MISSING

    def get(self, config: Optional[Config] = None) -> Any:
        """Return the current value of this variable

        :param config: The config to read, the current one if None
        """
        if config is None:
            config = get_config()
        if config is not None and self.name in config:
            return config[self.name]
        if self.has_default:
            return self.default
        raise LookupError("Config Var {} is not set and has no default value".format(self.name))

    def set(self, value: Any, config: Optional[Config] = None) -> None:
        if config is None:
            config = get_config()
        config[self.name] = value

    def describe(self, config: Optional[Config] = None) -> List[str]:
        lines = [self.name, "Source:      {}".format(self.source)]
        if self.type is not None:
            lines.append("Type:        {}".format(getattr(self.type, "__name__", self.type)))
        try:
            lines.append("Value:       {!r}".format(self.get(config)))
        except LookupError:
            pass
        if self.has_default:
            lines.append("Default:     {!r}".format(self.default))
        if self.description is not None:
            lines.append("Description: {}".format(self.description))
        return lines

    @classmethod
    def print_variables(cls, config: Optional[Config] = None) -> None:
        """Prints all registered variables and their values"""
        for name in sorted(cls._variables):
            print("\n".join(cls._variables[name].describe(config)))
            print()
