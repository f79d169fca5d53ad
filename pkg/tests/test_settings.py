from __future__ import annotations

from pathlib import Path

from django.conf import settings

from fap_planner.placement.pipeline import Dispatch


def test_planner_app_is_installed():
    assert "fap_planner.placement" in settings.INSTALLED_APPS


def test_scenario_dir_ships_the_campus_scenarios():
    names = {p.stem for p in Path(settings.FAP_SCENARIO_DIR).glob("*.json")}
    assert {
        "scenario_a_homogeneous",
        "scenario_a_heterogeneous_1",
        "scenario_a_heterogeneous_2",
        "scenario_b_homogeneous",
        "scenario_b_heterogeneous_1",
        "scenario_b_heterogeneous_2",
        "scenario_random_placement",
    } <= names


def test_defaults():
    assert Dispatch(settings.FAP_DISPATCH) is Dispatch.INLINE
    assert settings.FAP_PACKET_BITS == 11200
    assert settings.FAP_DELAY_CAP_S == 1.0
    assert settings.FAP_CERTIFY_PASS_RATIO == 1.0
    assert settings.CELERY_TASK_EAGER_PROPAGATES
