"""Units that load the scenario and prepare the output directory"""
from pathlib import Path

from ..config import config_unit
from ..logger import logger
from ..scenario import config_hash, load_scenario
from .argparse import parse_parameters
from .vars import (config_args, config_output_dir, config_plot,
                   config_scenario, config_scenario_hash, config_scenario_path,
                   config_seed, config_strict_norm_bounds, config_workers)


@config_unit(depends=parse_parameters, after=parse_parameters)
def load_scenario_unit(config):
    """Read and validate the scenario named on the command line"""
    args = config_args.get(config)
    path = Path(args.scenario)
    scenario = load_scenario(path)
    config_scenario.set(scenario, config)
    config_scenario_path.set(path, config)
    config_scenario_hash.set(config_hash(scenario), config)
    logger.info("Loaded scenario %s (%s)", scenario.meta.name, path)


def _first(*values):
    for value in values:
        if value is not None:
            return value
    return None


@config_unit(depends=load_scenario_unit, after=load_scenario_unit)
def apply_overrides(config):
    """Command line flags win over the settings file, which wins over the scenario"""
    args = config_args.get(config)
    scenario = config_scenario.get(config)
    config_seed.set(_first(getattr(args, "seed", None), config_seed.get(config), scenario.meta.seed), config)
    config_workers.set(_first(getattr(args, "workers", None), config_workers.get(config),
                              scenario.outputs.workers), config)
    config_strict_norm_bounds.set(
        bool(getattr(args, "strict_norm_bounds", False) or config_strict_norm_bounds.get(config)
             or scenario.certificates.strict_norm_bounds), config)
    config_plot.set(bool(getattr(args, "plot", False) or config_plot.get(config) or scenario.outputs.plot), config)


@config_unit(depends=parse_parameters, after=parse_parameters)
def prepare_output(config):
    """Create the output directory"""
    args = config_args.get(config)
    out = getattr(args, "out", None)
    directory = Path(out) if out is not None else Path(config_output_dir.get(config))
    directory.mkdir(parents=True, exist_ok=True)
    config_output_dir.set(directory, config)
    logger.debug("Writing outputs to %s", directory)
