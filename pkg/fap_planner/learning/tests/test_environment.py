from __future__ import annotations

from dataclasses import replace
from typing import TYPE_CHECKING

import numpy as np
import pytest

from fap_planner.learning.environment import Action
from fap_planner.learning.environment import EpisodeConfig
from fap_planner.learning.environment import PositioningEnv
from fap_planner.placement.tests.factories import ScenarioFactory
from fap_planner.radio.feasibility import in_feasible_subspace
from fap_planner.radio.geometry import PositioningZone
from fap_planner.radio.geometry import Vec3
from fap_planner.radio.geometry import grid_points
from fap_planner.radio.geometry import segments_blocked

if TYPE_CHECKING:
    from fap_planner.placement.scenarios import Scenario


@pytest.fixture
def env(open_scenario: Scenario) -> PositioningEnv:
    return PositioningEnv(open_scenario)


def test_default_episode_length():
    episode = EpisodeConfig()
    assert episode.steps == 2979
    assert episode.warmup_steps == 21


def test_episode_config_rejects_long_warmup():
    with pytest.raises(ValueError, match="warmup_s"):
        EpisodeConfig(duration_s=1.0, warmup_s=2.0)


def test_episode_config_rejects_zero_steps():
    with pytest.raises(ValueError, match="no decision slot"):
        EpisodeConfig(duration_s=1.0, decision_interval_s=0.1, warmup_s=0.95)
    assert EpisodeConfig(duration_s=1.0, decision_interval_s=0.1, warmup_s=0.9).steps == 1


def test_reset_starts_at_centroid(scenario_a: Scenario):
    env = PositioningEnv(scenario_a)
    obs = env.reset()
    assert env.position == Vec3(0.0, 0.0, 62.0)
    assert env.nlos_at(env.start_index) == 3
    assert obs.nlos_norm == pytest.approx(0.75)
    assert obs.in_sp == 1.0


def test_moves_one_grid_step(env: PositioningEnv):
    env.reset()
    outcome = env.step(Action.POS_Z)
    assert outcome.info.position == Vec3(0.0, 0.0, 31.0)
    assert env.step(Action.NEG_Y).info.position == Vec3(0.0, -1.0, 31.0)
    assert env.step(Action.STAY).info.position == Vec3(0.0, -1.0, 31.0)


def test_moves_off_the_lattice_are_clamped(env: PositioningEnv):
    env.reset()
    for _ in range(11):
        outcome = env.step(Action.POS_X)
    assert outcome.info.position == Vec3(10.0, 0.0, 30.0)
    assert outcome.observation.x == pytest.approx(1.0)


def test_observation_corners(env: PositioningEnv):
    obs = env.reset()
    assert (obs.x, obs.y, obs.z) == pytest.approx((0.0, 0.0, 0.0))
    for action, count in ((Action.NEG_X, 10), (Action.NEG_Y, 10), (Action.NEG_Z, 5)):
        for _ in range(count):
            outcome = env.step(action)
    corner = outcome.observation
    assert (corner.x, corner.y, corner.z) == pytest.approx((-1.0, -1.0, -1.0))
    assert corner.nlos_norm == 1.0


def test_reward_is_los_fraction_inside_feasible_subspace(env: PositioningEnv):
    env.reset()
    outcome = env.step(Action.STAY)
    assert outcome.info.in_sp
    assert outcome.reward == 1.0


def test_reward_outside_feasible_subspace_is_zero(env: PositioningEnv):
    assert env.reward_at(Vec3(0.0, 0.0, 30.0)) == 1.0
    assert env.reward_at(Vec3(0.0, 0.0, 1000.0)) == 0.0


def test_episode_ends_after_t_steps(env: PositioningEnv):
    env.reset()
    steps = 0
    done = False
    while not done:
        done = env.step(Action.STAY).done
        steps += 1
    assert steps == env.episode.steps == 45
    with pytest.raises(RuntimeError, match="reset"):
        env.step(Action.STAY)
    env.reset()
    assert env.step_count == 0
    assert not env.done


def test_step_before_reset_raises(env: PositioningEnv):
    with pytest.raises(RuntimeError):
        env.step(Action.STAY)


def test_observe_matches_last_step(env: PositioningEnv):
    env.reset()
    outcome = env.step(Action.POS_Y)
    assert env.observe() == outcome.observation
    assert env.observe().as_array().shape == (5,)


def test_reward_at_random_points(scenario_a: Scenario):
    # MCS 4 spheres (about 90 m) leave part of the zone outside S_p.
    ues = tuple(replace(ue, demand_bps=351e6, demanded_mcs=4) for ue in scenario_a.ues)
    scenario = replace(scenario_a, ues=ues)
    env = PositioningEnv(scenario)
    zone = scenario.zone
    points = np.random.default_rng(11).uniform(
        zone.min_corner.as_array(),
        zone.max_corner.as_array(),
        size=(10_000, 3),
    )

    centres = np.array([ue.position.as_tuple() for ue in ues])
    distances = np.linalg.norm(points[:, np.newaxis, :] - centres[np.newaxis, :, :], axis=2)
    in_sp = np.all(distances <= np.array(scenario.region.radii), axis=1)
    visible = np.ones((len(points), len(ues)), dtype=bool)
    for k, ue in enumerate(ues):
        for building in scenario.venue.buildings:
            visible[:, k] &= ~segments_blocked(points, ue.position.as_array(), building)
    expected = np.where(in_sp, visible.sum(axis=1) / len(ues), 0.0)

    assert 0 < in_sp.sum() < len(points)
    rewards = np.array([env.reward_at(Vec3.from_iterable(p)) for p in points])
    np.testing.assert_allclose(rewards, expected)


def test_fractional_grid_rewards_agree():
    zone = PositioningZone(Vec3(0.0, 0.0, 25.0), Vec3(0.3, 0.3, 25.3), grid_size=0.1)
    scenario = ScenarioFactory.create(zone=zone)
    assert scenario.feasible_count == zone.size == 64
    assert all(in_feasible_subspace(p, scenario.region, scenario.ues) for p in grid_points(zone))

    env = PositioningEnv(scenario)
    env.reset()
    for action in (Action.POS_X, Action.POS_X, Action.POS_X, Action.POS_Y, Action.POS_Z):
        outcome = env.step(action)
        assert outcome.reward == env.reward_at(outcome.info.position) == 1.0
    assert outcome.info.position == Vec3(0.3, 0.2, 25.2)
