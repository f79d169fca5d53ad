"""Episodic UAV positioning environment.

The UAV moves on the lattice of the positioning zone, one grid step per
decision slot. The reward of a position is the fraction of UE it sees in
line of sight, or 0 outside the feasible subspace.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import TYPE_CHECKING

import numpy as np

from fap_planner.exceptions import InfeasibleScenarioError
from fap_planner.radio.feasibility import in_feasible_subspace
from fap_planner.radio.feasibility import ue_positions
from fap_planner.radio.geometry import Vec3
from fap_planner.radio.geometry import count_los
from fap_planner.radio.geometry import visibility

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from fap_planner.placement.scenarios import Scenario

logger = logging.getLogger(__name__)

OBSERVATION_SIZE = 5


class Action(IntEnum):
    STAY = 0
    POS_X = 1
    NEG_X = 2
    POS_Y = 3
    NEG_Y = 4
    POS_Z = 5
    NEG_Z = 6

    @property
    def delta(self) -> tuple[int, int, int]:
        return _DELTAS[self]


_DELTAS = {
    Action.STAY: (0, 0, 0),
    Action.POS_X: (1, 0, 0),
    Action.NEG_X: (-1, 0, 0),
    Action.POS_Y: (0, 1, 0),
    Action.NEG_Y: (0, -1, 0),
    Action.POS_Z: (0, 0, 1),
    Action.NEG_Z: (0, 0, -1),
}


@dataclass(frozen=True, slots=True)
class EpisodeConfig:
    """Timing of one episode.

    An episode has ``steps`` decision slots, T = (duration - warmup) / interval.
    The first ``warmup_steps`` slots of every episode, not only of the first
    one, store transitions without gradient updates.
    """

    duration_s: float = 300.0
    decision_interval_s: float = 0.1
    warmup_s: float = 2.1

    def __post_init__(self) -> None:
        if not self.decision_interval_s > 0:
            msg = f"decision_interval_s must be positive, got {self.decision_interval_s}"
            raise ValueError(msg)
        if not self.duration_s > self.warmup_s >= 0:
            msg = f"need duration_s > warmup_s >= 0, got {self.duration_s} and {self.warmup_s}"
            raise ValueError(msg)
        if self.steps < 1:
            msg = (
                f"episode of {self.duration_s} s with {self.warmup_s} s warmup leaves no decision slot "
                f"at {self.decision_interval_s} s intervals"
            )
            raise ValueError(msg)

    @property
    def steps(self) -> int:
        """Decision steps per episode, T."""
        return math.floor((self.duration_s - self.warmup_s) / self.decision_interval_s + 1e-9)

    @property
    def warmup_steps(self) -> int:
        """Leading steps of every episode that collect experience without learning."""
        return min(round(self.warmup_s / self.decision_interval_s), self.steps)


@dataclass(frozen=True, slots=True)
class Observation:
    """Zone-scaled UAV position, fraction of UE in LoS and S_p membership."""

    x: float
    y: float
    z: float
    nlos_norm: float
    in_sp: float

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.x, self.y, self.z, self.nlos_norm, self.in_sp], dtype=np.float64)


@dataclass(frozen=True, slots=True)
class StepInfo:
    position: Vec3
    nlos: int
    in_sp: bool


@dataclass(frozen=True, slots=True)
class StepOutcome:
    observation: Observation
    reward: float
    done: bool
    info: StepInfo


@dataclass(frozen=True, slots=True)
class StepRecord:
    episode: int
    step: int
    position: Vec3
    action: Action
    reward: float
    nlos: int
    in_sp: bool


class PositioningEnv:
    def __init__(self, scenario: Scenario, episode: EpisodeConfig | None = None) -> None:
        self.scenario = scenario
        self.episode = episode or scenario.episode
        self.zone = scenario.zone
        self._feasible = scenario.feasible_mask
        if not self._feasible.any():
            msg = f"scenario {scenario.name!r} has an empty feasible subspace"
            raise InfeasibleScenarioError(msg)
        self._ue_positions = ue_positions(scenario.ues)
        self._shape = np.array(self.zone.shape)
        self._lower = self.zone.min_corner.as_array()
        self._span = self.zone.max_corner.as_array() - self._lower
        self._nlos_cache: dict[tuple[int, int, int], int] = {}
        self.start_index = self.zone.snap_index(self.zone.centroid)
        self._index = self.start_index
        self._step = 0
        self._done = True
        self.seed: int | None = None

    @property
    def n_ues(self) -> int:
        return len(self.scenario.ues)

    @property
    def position(self) -> Vec3:
        return self.zone.point_at(self._index)

    @property
    def start_position(self) -> Vec3:
        return self.zone.point_at(self.start_index)

    @property
    def step_count(self) -> int:
        return self._step

    @property
    def done(self) -> bool:
        return self._done

    def nlos_at(self, index: tuple[int, int, int]) -> int:
        cached = self._nlos_cache.get(index)
        if cached is None:
            point = self.zone.point_at(index).as_array()
            cached = int(np.count_nonzero(visibility(self._ue_positions, point, self.scenario.venue)))
            self._nlos_cache[index] = cached
        return cached

    def reset(self, seed: int | None = None) -> Observation:
        """Put the UAV back on the lattice point nearest the zone centroid."""
        self.seed = seed
        self._index = self.start_index
        self._step = 0
        self._done = False
        return self.observe()

    def step(self, action: Action | int) -> StepOutcome:
        if self._done:
            msg = "episode is over; call reset() before stepping again"
            raise RuntimeError(msg)
        move = np.array(Action(action).delta)
        candidate = np.array(self._index) + move
        if np.all((candidate >= 0) & (candidate < self._shape)):
            self._index = (int(candidate[0]), int(candidate[1]), int(candidate[2]))
        self._step += 1
        self._done = self._step >= self.episode.steps

        nlos = self.nlos_at(self._index)
        in_sp = bool(self._feasible[self._index])
        reward = nlos / self.n_ues if in_sp else 0.0
        return StepOutcome(
            observation=self.observe(),
            reward=reward,
            done=self._done,
            info=StepInfo(position=self.position, nlos=nlos, in_sp=in_sp),
        )

    def observe(self) -> Observation:
        scaled = 2 * (self.position.as_array() - self._lower) / self._span - 1
        return Observation(
            x=float(scaled[0]),
            y=float(scaled[1]),
            z=float(scaled[2]),
            nlos_norm=self.nlos_at(self._index) / self.n_ues,
            in_sp=1.0 if self._feasible[self._index] else 0.0,
        )

    def reward_at(self, p: Vec3) -> float:
        """nLoS(p) / N inside S_p, 0 elsewhere; ``p`` need not be a lattice point."""
        if not in_feasible_subspace(p, self.scenario.region, self.scenario.ues):
            return 0.0
        return count_los(p, [ue.position for ue in self.scenario.ues], self.scenario.venue) / self.n_ues
