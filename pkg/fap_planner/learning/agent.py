"""Deep Q-learning over the positioning environment.

Training is a pure function of the scenario, the configuration and the seed:
every random draw comes from generators spawned off one ``SeedSequence``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from dataclasses import field
from typing import TYPE_CHECKING

import numpy as np

from fap_planner.learning.environment import OBSERVATION_SIZE
from fap_planner.learning.environment import Action
from fap_planner.learning.environment import PositioningEnv
from fap_planner.learning.environment import StepRecord
from fap_planner.learning.qnetwork import QNetwork
from fap_planner.learning.replay import DEFAULT_BATCH_SIZE
from fap_planner.learning.replay import DEFAULT_CAPACITY
from fap_planner.learning.replay import ReplayBuffer
from fap_planner.learning.replay import Transition
from fap_planner.radio.network_model import evaluate_positions

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

    from fap_planner.learning.environment import EpisodeConfig
    from fap_planner.learning.replay import Batch
    from fap_planner.placement.scenarios import Scenario
    from fap_planner.radio.geometry import Vec3

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


@dataclass(frozen=True, slots=True)
class EpsilonSchedule:
    """Polynomial decay from ``start`` to ``end`` over ``horizon`` steps, then flat."""

    horizon: int
    start: float = 1.0
    end: float = 0.1
    power: float = 1.0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            msg = f"horizon must be at least one step, got {self.horizon}"
            raise ValueError(msg)
        if not 0 <= self.end <= self.start <= 1:
            msg = f"need 0 <= end <= start <= 1, got start={self.start}, end={self.end}"
            raise ValueError(msg)
        if not self.power > 0:
            msg = f"power must be positive, got {self.power}"
            raise ValueError(msg)

    def value(self, step: int) -> float:
        remaining = 1 - min(max(step, 0), self.horizon) / self.horizon
        return self.end + (self.start - self.end) * remaining**self.power


@dataclass(frozen=True, slots=True)
class TrainConfig:
    episodes: int = 10
    learning_rate: float = 1e-2
    gamma: float = 0.99
    batch_size: int = DEFAULT_BATCH_SIZE
    buffer_capacity: int = DEFAULT_CAPACITY
    target_sync_steps: int = 250
    hidden_layers: tuple[int, ...] = (32, 32)
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_power: float = 1.0
    # None decays over every step of every episode.
    epsilon_horizon_steps: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.episodes < 1:
            msg = f"episodes must be at least 1, got {self.episodes}"
            raise ValueError(msg)
        if not 0 < self.gamma <= 1:
            msg = f"gamma must lie in (0, 1], got {self.gamma}"
            raise ValueError(msg)
        if not self.learning_rate > 0:
            msg = f"learning_rate must be positive, got {self.learning_rate}"
            raise ValueError(msg)
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            msg = "need 1 <= batch_size <= buffer_capacity"
            raise ValueError(msg)
        if self.target_sync_steps < 1:
            msg = f"target_sync_steps must be at least 1, got {self.target_sync_steps}"
            raise ValueError(msg)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (OBSERVATION_SIZE, *self.hidden_layers, len(Action))

    def epsilon_schedule(self, steps_per_episode: int) -> EpsilonSchedule:
        return EpsilonSchedule(
            horizon=self.epsilon_horizon_steps or self.episodes * steps_per_episode,
            start=self.epsilon_start,
            end=self.epsilon_end,
            power=self.epsilon_power,
        )


@dataclass(frozen=True, slots=True)
class AdamState:
    first_moment: tuple[NDArray[np.float64], ...]
    second_moment: tuple[NDArray[np.float64], ...]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[NDArray[np.float64]]) -> AdamState:
        return cls(
            first_moment=tuple(np.zeros_like(p) for p in params),
            second_moment=tuple(np.zeros_like(p) for p in params),
        )


def adam_step(
    params: Sequence[NDArray[np.float64]],
    grads: Sequence[NDArray[np.float64]],
    state: AdamState,
    lr: float,
) -> tuple[list[NDArray[np.float64]], AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        msg = f"{len(params)} parameters, {len(grads)} gradients, {len(state.first_moment)} moments"
        raise ValueError(msg)
    step = state.step + 1
    updated, first, second = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment, strict=True):
        if p.shape != g.shape or p.shape != m.shape:
            msg = f"shape mismatch: parameter {p.shape}, gradient {g.shape}"
            raise ValueError(msg)
        m_next = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v_next = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g**2
        m_hat = m_next / (1 - ADAM_BETA1**step)
        v_hat = v_next / (1 - ADAM_BETA2**step)
        updated.append(p - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPSILON))
        first.append(m_next)
        second.append(v_next)
    return updated, AdamState(tuple(first), tuple(second), step)


def act(net: QNetwork, obs: ArrayLike, epsilon: float, rng: np.random.Generator) -> Action:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    if not 0 <= epsilon <= 1:
        msg = f"epsilon must lie in [0, 1], got {epsilon}"
        raise ValueError(msg)
    if rng.random() < epsilon:
        return Action(int(rng.integers(len(Action))))
    return Action(int(np.argmax(net.forward(obs))))


def td_targets(target_net: QNetwork, batch: Batch, gamma: float) -> NDArray[np.float64]:
    bootstrap = np.max(target_net.forward(batch.next_obs), axis=1)
    return batch.rewards + np.where(batch.dones, 0.0, gamma * bootstrap)


class DqnAgent:
    def __init__(
        self,
        config: TrainConfig,
        rng: np.random.Generator,
        net: QNetwork | None = None,
    ) -> None:
        self.config = config
        self.rng = rng
        self.online = net if net is not None else QNetwork.initialise(config.layer_sizes, rng)
        self.target = self.online
        self.adam = AdamState.zeros_like(self.online.parameters())
        self.updates = 0

    def act(self, obs: ArrayLike, epsilon: float) -> Action:
        return act(self.online, obs, epsilon, self.rng)

    def td_update(self, batch: Batch) -> float:
        """One Adam step on the MSE TD loss of ``batch``; returns the loss before the step."""
        if len(batch) == 0:
            msg = "td_update needs a non-empty batch"
            raise ValueError(msg)
        targets = td_targets(self.target, batch, self.config.gamma)
        loss, grads = self.online.gradients(batch.obs, batch.actions, targets)
        params, self.adam = adam_step(self.online.parameters(), grads, self.adam, self.config.learning_rate)
        self.online = QNetwork.from_parameters(params)
        self.updates += 1
        if self.updates % self.config.target_sync_steps == 0:
            self.target = self.online
            logger.debug("Target network synced after %d updates", self.updates)
        return loss


@dataclass(frozen=True, slots=True)
class EpisodeSummary:
    episode: int
    mean_reward: float
    median_reward: float
    best_reward: float
    best_position: Vec3
    final_epsilon: float


@dataclass(frozen=True, slots=True)
class BestPosition:
    position: Vec3
    reward: float
    nlos: int
    # No step earned any reward; the position is the episode start.
    degenerate: bool = False


@dataclass(frozen=True)
class TrainingResult:
    policy: QNetwork
    start_position: Vec3
    records: tuple[StepRecord, ...]
    summaries: tuple[EpisodeSummary, ...]
    best: BestPosition
    losses: tuple[float, ...] = field(default=(), repr=False)

    def episode_rewards(self, episode: int) -> NDArray[np.float64]:
        return np.array([r.reward for r in self.records if r.episode == episode])


@dataclass(frozen=True)
class EvaluationResult:
    records: tuple[StepRecord, ...]
    best: BestPosition


def _summarise(episode: int, records: Sequence[StepRecord], epsilon: float) -> EpisodeSummary:
    rewards = np.array([r.reward for r in records])
    best = records[int(np.argmax(rewards))]
    return EpisodeSummary(
        episode=episode,
        mean_reward=float(np.mean(rewards)),
        median_reward=float(np.median(rewards)),
        best_reward=best.reward,
        best_position=best.position,
        final_epsilon=epsilon,
    )


def extract_best_position(
    records: Sequence[StepRecord],
    scenario: Scenario,
    start: Vec3 | None = None,
) -> BestPosition:
    """Highest-reward visited position; ties go to more surrogate throughput, then the earliest step."""
    if not records:
        msg = "cannot extract a position from an empty trace"
        raise ValueError(msg)
    rewards = np.array([r.reward for r in records])
    top = float(rewards.max())
    if top <= 0:
        position = start if start is not None else records[0].position
        logger.warning("No visited position earned a reward; falling back to %s", position)
        return BestPosition(position=position, reward=0.0, nlos=0, degenerate=True)

    tied = [r for r in records if r.reward == top]
    candidates = list(dict.fromkeys(r.position for r in tied))
    throughput = evaluate_positions(
        np.array([p.as_tuple() for p in candidates]),
        scenario,
    ).aggregate_throughput_bps
    by_position = dict(zip(candidates, throughput.tolist(), strict=True))
    # max keeps the first of equal keys, so earlier steps win remaining ties.
    winner = max(tied, key=lambda r: by_position[r.position])
    return BestPosition(position=winner.position, reward=winner.reward, nlos=winner.nlos)


def _seeded_generators(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    init, explore, replay = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
    return init, explore, replay


def train(scenario: Scenario, config: TrainConfig | None = None) -> TrainingResult:
    config = config or scenario.train
    env = PositioningEnv(scenario)
    steps = env.episode.steps
    warmup = env.episode.warmup_steps
    schedule = config.epsilon_schedule(steps)
    init_rng, explore_rng, replay_rng = _seeded_generators(config.seed)
    agent = DqnAgent(config, explore_rng, QNetwork.initialise(config.layer_sizes, init_rng))
    buffer = ReplayBuffer(config.buffer_capacity)

    records: list[StepRecord] = []
    summaries: list[EpisodeSummary] = []
    losses: list[float] = []
    global_step = 0
    for episode in range(config.episodes):
        obs = env.reset(seed=config.seed).as_array()
        episode_records: list[StepRecord] = []
        epsilon = schedule.value(global_step)
        for t in range(steps):
            epsilon = schedule.value(global_step)
            action = agent.act(obs, epsilon)
            outcome = env.step(action)
            next_obs = outcome.observation.as_array()
            buffer.push(Transition(obs, int(action), outcome.reward, next_obs, outcome.done))
            if t >= warmup and len(buffer) >= config.batch_size:
                losses.append(agent.td_update(buffer.sample(config.batch_size, replay_rng)))
            episode_records.append(
                StepRecord(
                    episode=episode,
                    step=env.step_count,
                    position=outcome.info.position,
                    action=action,
                    reward=outcome.reward,
                    nlos=outcome.info.nlos,
                    in_sp=outcome.info.in_sp,
                ),
            )
            obs = next_obs
            global_step += 1
        summary = _summarise(episode, episode_records, epsilon)
        logger.info(
            "Seed %d episode %d: mean reward %.4f, median %.4f, best %.4f at %s, epsilon %.3f",
            config.seed,
            episode,
            summary.mean_reward,
            summary.median_reward,
            summary.best_reward,
            summary.best_position.as_tuple(),
            summary.final_epsilon,
        )
        records.extend(episode_records)
        summaries.append(summary)

    return TrainingResult(
        policy=agent.online,
        start_position=env.start_position,
        records=tuple(records),
        summaries=tuple(summaries),
        best=extract_best_position(records, scenario, env.start_position),
        losses=tuple(losses),
    )


def evaluate(
    policy: QNetwork,
    scenario: Scenario,
    episode: EpisodeConfig | None = None,
) -> EvaluationResult:
    """One greedy episode; the policy is never modified."""
    env = PositioningEnv(scenario, episode)
    rng = np.random.default_rng(0)
    obs = env.reset()
    records: list[StepRecord] = []
    done = False
    while not done:
        action = act(policy, obs.as_array(), 0.0, rng)
        outcome = env.step(action)
        records.append(
            StepRecord(
                episode=0,
                step=env.step_count,
                position=outcome.info.position,
                action=action,
                reward=outcome.reward,
                nlos=outcome.info.nlos,
                in_sp=outcome.info.in_sp,
            ),
        )
        obs = outcome.observation
        done = outcome.done
    return EvaluationResult(
        records=tuple(records),
        best=extract_best_position(records, scenario, env.start_position),
    )
