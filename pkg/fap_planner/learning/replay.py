from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from fap_planner.learning.environment import OBSERVATION_SIZE
from fap_planner.learning.environment import Action

if TYPE_CHECKING:
    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

DEFAULT_CAPACITY = 1_000_000
DEFAULT_BATCH_SIZE = 64
_INITIAL_ALLOCATION = 4096


@dataclass(frozen=True, slots=True)
class Transition:
    obs: NDArray[np.float64]
    action: int
    reward: float
    next_obs: NDArray[np.float64]
    done: bool

    def __post_init__(self) -> None:
        if not 0 <= self.reward <= 1:
            msg = f"reward must lie in [0, 1], got {self.reward}"
            raise ValueError(msg)
        if not 0 <= self.action < len(Action):
            msg = f"action must lie in [0, {len(Action) - 1}], got {self.action}"
            raise ValueError(msg)


@dataclass(frozen=True, slots=True)
class Batch:
    obs: NDArray[np.float64]
    actions: NDArray[np.intp]
    rewards: NDArray[np.float64]
    next_obs: NDArray[np.float64]
    dones: NDArray[np.bool_]

    def __len__(self) -> int:
        return self.actions.shape[0]


class ReplayBuffer:
    """FIFO ring of transitions; storage grows by doubling up to ``capacity``."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY, obs_size: int = OBSERVATION_SIZE) -> None:
        if capacity < 1:
            msg = f"capacity must be positive, got {capacity}"
            raise ValueError(msg)
        self.capacity = capacity
        self._obs_size = obs_size
        self._size = 0
        self._head = 0
        self._allocate(min(capacity, _INITIAL_ALLOCATION))

    def _allocate(self, rows: int) -> None:
        obs = np.zeros((rows, self._obs_size))
        next_obs = np.zeros((rows, self._obs_size))
        actions = np.zeros(rows, dtype=np.intp)
        rewards = np.zeros(rows)
        dones = np.zeros(rows, dtype=bool)
        if self._size:
            obs[: self._size] = self._obs[: self._size]
            next_obs[: self._size] = self._next_obs[: self._size]
            actions[: self._size] = self._actions[: self._size]
            rewards[: self._size] = self._rewards[: self._size]
            dones[: self._size] = self._dones[: self._size]
        self._obs, self._next_obs = obs, next_obs
        self._actions, self._rewards, self._dones = actions, rewards, dones

    def __len__(self) -> int:
        return self._size

    def push(self, transition: Transition) -> None:
        allocated = self._actions.shape[0]
        if self._size == allocated and allocated < self.capacity:
            self._allocate(min(2 * allocated, self.capacity))
        row = self._head
        self._obs[row] = transition.obs
        self._next_obs[row] = transition.next_obs
        self._actions[row] = transition.action
        self._rewards[row] = transition.reward
        self._dones[row] = transition.done
        self._head = (self._head + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _rows(self, rows: ArrayLike) -> Batch:
        index = np.asarray(rows, dtype=np.intp)
        return Batch(
            obs=self._obs[index],
            actions=self._actions[index],
            rewards=self._rewards[index],
            next_obs=self._next_obs[index],
            dones=self._dones[index],
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform sample with replacement."""
        if self._size == 0:
            msg = "cannot sample from an empty replay buffer"
            raise ValueError(msg)
        return self._rows(rng.integers(0, self._size, size=batch_size))

    def contents(self) -> Batch:
        """Everything stored, oldest first."""
        if self._size < self.capacity:
            return self._rows(np.arange(self._size))
        return self._rows((self._head + np.arange(self._size)) % self.capacity)
