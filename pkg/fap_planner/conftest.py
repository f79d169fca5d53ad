from __future__ import annotations

from pathlib import Path

import pytest

from fap_planner.placement.scenarios import Scenario
from fap_planner.placement.scenarios import load_scenario
from fap_planner.placement.tests.factories import ScenarioFactory
from fap_planner.radio.geometry import Building
from fap_planner.radio.geometry import PositioningZone
from fap_planner.radio.geometry import Vec3
from fap_planner.radio.geometry import Venue
from fap_planner.radio.mcs import McsTable
from fap_planner.radio.mcs import builtin_table
from fap_planner.radio.propagation import NlosEnvironment
from fap_planner.radio.propagation import RadioConfig

SCENARIO_DIR = Path(__file__).parent / "scenarios"

CAMPUS_BUILDINGS = (
    (-5, 5, -5, 5, 0, 20, 5, 3, 2),
    (-5, 5, 20, 30, 0, 15, 4, 3, 2),
    (-5, 5, -30, -20, 0, 15, 4, 3, 2),
    (-35, -25, -5, 5, 0, 20, 5, 3, 2),
    (-35, -25, 20, 30, 0, 20, 5, 3, 2),
    (-35, -25, -30, -20, 0, 15, 4, 3, 2),
    (25, 35, -5, 5, 0, 20, 5, 3, 2),
    (25, 35, 20, 30, 0, 15, 4, 3, 2),
    (25, 35, -30, -20, 0, 15, 4, 3, 2),
)


@pytest.fixture(autouse=True)
def _output_dir(settings, tmp_path) -> None:
    settings.FAP_OUTPUT_DIR = str(tmp_path / "runs")


@pytest.fixture
def radio() -> RadioConfig:
    return RadioConfig()


@pytest.fixture
def nlos_env() -> NlosEnvironment:
    return NlosEnvironment()


@pytest.fixture
def mcs_table() -> McsTable:
    return builtin_table()


@pytest.fixture
def central_building() -> Building:
    return Building(*CAMPUS_BUILDINGS[0])


@pytest.fixture
def campus_venue() -> Venue:
    return Venue(side_length=100.0, buildings=tuple(Building(*row) for row in CAMPUS_BUILDINGS))


@pytest.fixture
def open_venue() -> Venue:
    return Venue(side_length=100.0)


@pytest.fixture
def campus_zone() -> PositioningZone:
    return PositioningZone(Vec3(-50, -50, 25), Vec3(50, 50, 100), grid_size=1.0)


@pytest.fixture
def open_scenario() -> Scenario:
    return ScenarioFactory.create()


@pytest.fixture
def scenario_a() -> Scenario:
    return load_scenario(SCENARIO_DIR / "scenario_a_homogeneous.json")


@pytest.fixture
def scenario_b() -> Scenario:
    return load_scenario(SCENARIO_DIR / "scenario_b_homogeneous.json")
