import numpy as np
import pytest

from ..controller import FilterRealization, L1Config
from ..exceptions import ScenarioError
from ..l2f.aircraft import AircraftParams, AircraftState
from ..l2f.flight import FlightScenario, run_flight
from ..model import (CommandSignal, ModeDefinition, ModeSet, SwitchingSignal,
                     UncertaintySets, UncertaintyTrajectory)
from ..plotting import plot_bounds, plot_trace
from ..sim import LinearScenario, Schedule, run_scenario


@pytest.fixture
def trace():
    modes = ModeSet((ModeDefinition([[0.0, 1.0], [-1.0, -2.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[1.0]]),))
    sets = UncertaintySets.nominal(2, 1)
    scenario = LinearScenario(
        modes=modes,
        sets=sets,
        trajectory=UncertaintyTrajectory.nominal(sets, 1),
        signal=SwitchingSignal(),
        command=CommandSignal("constant", [1.0]),
        controller=L1Config(0.005, FilterRealization.constant(20.0, 1)),
        x0=np.zeros(2),
        schedule=Schedule(0.0005, 0.005, 0.1),
    )
    return run_scenario(scenario)


def test_missing_matplotlib(mocker, tmp_path, trace):
    mocker.patch.dict("sys.modules", {"matplotlib": None})
    with pytest.raises(ScenarioError) as info:
        plot_trace(trace, tmp_path)
    assert info.value.exit_code == 1


def test_plot_linear(tmp_path, trace):
    pytest.importorskip("matplotlib")
    path = plot_trace(trace, tmp_path)
    assert path.name == "states.svg"
    assert path.read_text().lstrip().startswith("<?xml")
    bounds = plot_bounds(trace, {"xtilde": 1e-3, "e": np.nan, "e_u": 0.1}, tmp_path)
    assert bounds.exists()


def test_plot_flight(tmp_path):
    pytest.importorskip("matplotlib")
    params = AircraftParams()
    scenario = FlightScenario(params=params, initial=AircraftState.trimmed(params, 500.0),
                              schedule=Schedule(0.001, 0.01, 0.2),
                              controller=L1Config(0.01, FilterRealization.constant(20.0, 3)))
    path = plot_trace(run_flight(scenario), tmp_path, aircraft=True, prefix="l1_")
    assert path.name == "l1_flight.svg"
