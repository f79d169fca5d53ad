"""Experiment orchestration: the modes of the ``fap`` command."""

from __future__ import annotations

import dataclasses
import logging
import re
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import TYPE_CHECKING
from typing import Any

import numpy as np
import pandas as pd
from celery import group
from slugify import slugify

from fap_planner.exceptions import CertificationError
from fap_planner.exceptions import InfeasibleScenarioError
from fap_planner.exceptions import ScenarioError
from fap_planner.learning.agent import evaluate
from fap_planner.learning.agent import extract_best_position
from fap_planner.learning.agent import train
from fap_planner.learning.checkpoint import load_policy
from fap_planner.learning.checkpoint import save_policy
from fap_planner.learning.environment import Action
from fap_planner.learning.environment import StepRecord
from fap_planner.placement.oracle import DEFAULT_CHUNK_SIZE
from fap_planner.placement.oracle import certify
from fap_planner.placement.oracle import exhaustive_search
from fap_planner.placement.scenarios import dump_scenario
from fap_planner.radio.geometry import Vec3
from fap_planner.radio.network_model import DEFAULT_DELAY_CAP_S
from fap_planner.radio.network_model import DEFAULT_PACKET_BITS
from fap_planner.radio.network_model import evaluate_position

if TYPE_CHECKING:
    from collections.abc import Sequence

    from fap_planner.placement.oracle import CertificateReport
    from fap_planner.placement.oracle import OracleResult
    from fap_planner.placement.scenarios import Scenario

logger = logging.getLogger(__name__)

_SEED_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")

# Comparison positions around the chosen one, as unit steps in x and y.
OFFSET_DIRECTIONS: dict[str, tuple[int, int]] = {
    "left": (-1, 0),
    "right": (1, 0),
    "front": (0, 1),
    "behind": (0, -1),
}
PERCENTILES = (50, 90)


class Mode(StrEnum):
    VALIDATE = "validate"
    FEASIBILITY = "feasibility"
    ORACLE = "oracle"
    TRAIN = "train"
    EVAL = "eval"
    REPORT = "report"


class Dispatch(StrEnum):
    INLINE = "inline"
    CELERY = "celery"


@dataclass(frozen=True)
class RunSettings:
    output_dir: Path
    dispatch: Dispatch = Dispatch.INLINE
    chunk_size: int = DEFAULT_CHUNK_SIZE
    workers: int = 1
    packet_bits: float = DEFAULT_PACKET_BITS
    delay_cap_s: float = DEFAULT_DELAY_CAP_S
    offset_m: float = 10.0
    certify_pass_ratio: float = 1.0
    float_format: str = "%.10g"

    @classmethod
    def from_django(cls, output_dir: str | Path | None = None) -> RunSettings:
        from django.conf import settings  # noqa: PLC0415

        try:
            dispatch = Dispatch(settings.FAP_DISPATCH)
        except ValueError as exc:
            msg = f"FAP_DISPATCH must be one of {[d.value for d in Dispatch]}, got {settings.FAP_DISPATCH!r}"
            raise ScenarioError(msg, "FAP_DISPATCH") from exc
        return cls(
            output_dir=Path(output_dir or settings.FAP_OUTPUT_DIR),
            dispatch=dispatch,
            chunk_size=settings.FAP_ORACLE_CHUNK_SIZE,
            workers=settings.FAP_ORACLE_WORKERS,
            packet_bits=settings.FAP_PACKET_BITS,
            delay_cap_s=settings.FAP_DELAY_CAP_S,
            offset_m=settings.FAP_OFFSET_M,
            certify_pass_ratio=settings.FAP_CERTIFY_PASS_RATIO,
            float_format=settings.FAP_CSV_FLOAT_FORMAT,
        )


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"1..30"`` or ``"1,4,9"``; the result is sorted and duplicate-free."""
    match = _SEED_RANGE.match(text)
    if match:
        low, high = int(match.group(1)), int(match.group(2))
        if low > high:
            msg = f"empty seed range {text!r}"
            raise ScenarioError(msg, "--seeds")
        return tuple(range(low, high + 1))
    try:
        seeds = {int(part) for part in text.split(",") if part.strip()}
    except ValueError as exc:
        msg = f"seeds must look like 1..30 or 1,2,3, got {text!r}"
        raise ScenarioError(msg, "--seeds") from exc
    if not seeds or min(seeds) < 0:
        msg = f"seeds must be non-negative integers, got {text!r}"
        raise ScenarioError(msg, "--seeds")
    return tuple(sorted(seeds))


def run_directory(output_dir: str | Path, scenario: Scenario) -> Path:
    return Path(output_dir) / slugify(scenario.name)


def policy_path(run_dir: str | Path, seed: int) -> Path:
    return Path(run_dir) / "policies" / f"seed-{seed}.rltq"


def start_position(scenario: Scenario) -> Vec3:
    zone = scenario.zone
    return zone.point_at(zone.snap_index(zone.centroid))


@dataclass(frozen=True)
class SeedOutcome:
    """What one seed of a train, eval or report run produced."""

    seed: int
    chosen: Vec3
    reward: float
    nlos: int
    degenerate: bool
    episode_rewards: tuple[tuple[float, ...], ...]
    records: tuple[StepRecord, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "chosen": list(self.chosen.as_tuple()),
            "reward": self.reward,
            "nlos": self.nlos,
            "degenerate": self.degenerate,
            "episode_rewards": [list(rewards) for rewards in self.episode_rewards],
            "records": [
                [r.episode, r.step, *r.position.as_tuple(), int(r.action), r.reward, r.nlos, r.in_sp]
                for r in self.records
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SeedOutcome:
        return cls(
            seed=int(data["seed"]),
            chosen=Vec3.from_iterable(data["chosen"]),
            reward=float(data["reward"]),
            nlos=int(data["nlos"]),
            degenerate=bool(data["degenerate"]),
            episode_rewards=tuple(tuple(float(v) for v in rewards) for rewards in data["episode_rewards"]),
            records=tuple(
                StepRecord(
                    episode=int(episode),
                    step=int(step),
                    position=Vec3(float(x), float(y), float(z)),
                    action=Action(int(action)),
                    reward=float(reward),
                    nlos=int(nlos),
                    in_sp=bool(in_sp),
                )
                for episode, step, x, y, z, action, reward, nlos, in_sp in data["records"]
            ),
        )


def _episode_rewards(records: Sequence[StepRecord]) -> tuple[tuple[float, ...], ...]:
    episodes: dict[int, list[float]] = {}
    for record in records:
        episodes.setdefault(record.episode, []).append(record.reward)
    return tuple(tuple(episodes[e]) for e in sorted(episodes))


def run_seed(
    scenario: Scenario,
    seed: int,
    mode: Mode | str,
    run_dir: str | Path,
    *,
    trace: bool = False,
) -> SeedOutcome:
    """Train and/or greedily evaluate one seed; the trained policy is checkpointed under ``run_dir``."""
    mode = Mode(mode)
    config = dataclasses.replace(scenario.train, seed=seed)
    records: list[StepRecord] = []
    if mode in {Mode.TRAIN, Mode.REPORT}:
        trained = train(scenario, config)
        save_policy(policy_path(run_dir, seed), trained.policy)
        policy = trained.policy
        records.extend(trained.records)
    elif mode is Mode.EVAL:
        checkpoint = policy_path(run_dir, seed)
        if not checkpoint.is_file():
            msg = f"no trained policy for seed {seed} at {checkpoint}; run the train mode first"
            raise FileNotFoundError(msg)
        policy = load_policy(checkpoint)
    else:
        msg = f"mode {mode} does not run seeds"
        raise ValueError(msg)

    if mode in {Mode.EVAL, Mode.REPORT}:
        greedy_episode = config.episodes if mode is Mode.REPORT else 0
        evaluation = evaluate(policy, scenario)
        records.extend(dataclasses.replace(r, episode=greedy_episode) for r in evaluation.records)

    best = extract_best_position(records, scenario, start_position(scenario))
    return SeedOutcome(
        seed=seed,
        chosen=best.position,
        reward=best.reward,
        nlos=best.nlos,
        degenerate=best.degenerate,
        episode_rewards=_episode_rewards(records),
        records=tuple(records) if trace else (),
    )


def dispatch_seeds(  # noqa: PLR0913
    scenario: Scenario,
    seeds: Sequence[int],
    mode: Mode,
    run_dir: Path,
    *,
    trace: bool,
    dispatch: Dispatch,
) -> list[SeedOutcome]:
    """Run every seed, inline or as one Celery task each; results come back in seed order."""
    if dispatch is Dispatch.INLINE:
        return [run_seed(scenario, seed, mode, run_dir, trace=trace) for seed in seeds]

    from fap_planner.placement.tasks import run_seed_task  # noqa: PLC0415

    payload = dump_scenario(scenario)
    job = group(run_seed_task.s(payload, seed, mode.value, str(run_dir), trace=trace) for seed in seeds)
    return [SeedOutcome.from_dict(result) for result in job.apply_async().get()]


def comparison_positions(chosen: Vec3, scenario: Scenario, offset_m: float) -> dict[str, Vec3]:
    """The chosen position, the rooftop baseline and four offsets clamped to the zone."""
    lower = scenario.zone.min_corner.as_array()
    upper = scenario.zone.max_corner.as_array()
    positions = {"chosen": chosen, "baseline": scenario.baseline_position}
    for label, (dx, dy) in OFFSET_DIRECTIONS.items():
        target = chosen.offset(dx * offset_m, dy * offset_m)
        clamped = Vec3.from_iterable(np.clip(target.as_array(), lower, upper))
        if clamped != target:
            logger.warning(
                "Offset position %s at %s leaves the positioning zone; clamped to %s",
                label,
                target.as_tuple(),
                clamped.as_tuple(),
            )
        positions[label] = clamped
    return positions


def metrics_frame(
    outcomes: Sequence[SeedOutcome],
    scenario: Scenario,
    settings: RunSettings,
) -> pd.DataFrame:
    """Surrogate metrics of every comparison position of every seed."""
    offset_m = scenario.offset_m or settings.offset_m
    rows = []
    for outcome in outcomes:
        for label, position in comparison_positions(outcome.chosen, scenario, offset_m).items():
            metrics = evaluate_position(
                position,
                scenario,
                packet_bits=settings.packet_bits,
                delay_cap_s=settings.delay_cap_s,
            )
            if metrics.links_below_demand and scenario.in_sp(position):
                logger.warning(
                    "Seed %d %s position %s lies in the feasible subspace but UE %s miss their demanded MCS",
                    outcome.seed,
                    label,
                    position.as_tuple(),
                    list(metrics.links_below_demand),
                )
            row: dict[str, Any] = {
                "seed": outcome.seed,
                "position": label,
                "x": position.x,
                "y": position.y,
                "z": position.z,
                "nlos": metrics.nlos,
                "aggregate_throughput_bps": metrics.aggregate_throughput_bps,
                "mean_delay_s": metrics.mean_delay_s,
                "jain_fairness": metrics.jain_fairness,
                "total_airtime": metrics.total_airtime,
                "saturated": int(metrics.saturated),
            }
            for ue, rate in zip(scenario.ues, metrics.rates_bps, strict=True):
                row[f"rate_ue_{ue.id}_bps"] = rate
            rows.append(row)
    return pd.DataFrame(rows)


def _gain(chosen: float, other: float) -> float:
    return (chosen - other) / other if other > 0 else float("nan")


def improvement_summary(metrics: pd.DataFrame) -> pd.DataFrame:
    """Relative gain of the chosen position over each comparison position, per percentile over seeds.

    ``throughput_gain`` is positive when the chosen position carries more
    traffic, ``delay_reduction`` positive when its mean delay is lower.
    """
    chosen = metrics[metrics["position"] == "chosen"]
    rows = []
    for label in metrics["position"].drop_duplicates():
        if label == "chosen":
            continue
        other = metrics[metrics["position"] == label]
        for q in PERCENTILES:
            chosen_tp = float(np.percentile(chosen["aggregate_throughput_bps"], q))
            other_tp = float(np.percentile(other["aggregate_throughput_bps"], q))
            chosen_delay = float(np.percentile(chosen["mean_delay_s"], q))
            other_delay = float(np.percentile(other["mean_delay_s"], q))
            rows.append(
                {
                    "position": label,
                    "percentile": q,
                    "throughput_chosen_bps": chosen_tp,
                    "throughput_other_bps": other_tp,
                    "throughput_gain": _gain(chosen_tp, other_tp),
                    "delay_chosen_s": chosen_delay,
                    "delay_other_s": other_delay,
                    "delay_reduction": (other_delay - chosen_delay) / other_delay if other_delay > 0 else float("nan"),
                },
            )
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class RunReport:
    scenario: Scenario
    mode: Mode
    seeds: tuple[int, ...]
    run_dir: Path
    settings: RunSettings
    trace: bool = False
    oracle: OracleResult | None = None
    outcomes: tuple[SeedOutcome, ...] = ()
    certificates: tuple[CertificateReport, ...] = ()
    metrics: pd.DataFrame | None = None
    improvement: pd.DataFrame | None = None

    @property
    def certified_fraction(self) -> float | None:
        if not self.certificates:
            return None
        return sum(c.passed for c in self.certificates) / len(self.certificates)

    @property
    def certified(self) -> bool:
        fraction = self.certified_fraction
        return fraction is None or fraction >= self.settings.certify_pass_ratio

    def check_certified(self) -> None:
        if not self.certified:
            msg = (
                f"{self.certified_fraction:.0%} of seeds reached the exhaustive optimum, "
                f"{self.settings.certify_pass_ratio:.0%} required"
            )
            raise CertificationError(msg)


def run_pipeline(  # noqa: PLR0913
    scenario: Scenario,
    mode: Mode | str,
    seeds: Sequence[int] = (1,),
    *,
    settings: RunSettings,
    trace: bool = False,
    dump_points: bool = False,
) -> RunReport:
    mode = Mode(mode)
    report = RunReport(
        scenario=scenario,
        mode=mode,
        seeds=tuple(seeds),
        run_dir=run_directory(settings.output_dir, scenario),
        settings=settings,
        trace=trace,
    )
    if mode is Mode.VALIDATE:
        return report

    if scenario.feasible_count == 0:
        msg = f"scenario {scenario.name!r} has an empty feasible subspace"
        raise InfeasibleScenarioError(msg)
    logger.info(
        "Feasible subspace of %s: %d of %d lattice points",
        scenario.name,
        scenario.feasible_count,
        scenario.zone.size,
    )
    if mode is Mode.FEASIBILITY:
        return report

    oracle = None
    if mode in {Mode.ORACLE, Mode.REPORT}:
        oracle = exhaustive_search(
            scenario,
            chunk_size=settings.chunk_size,
            workers=settings.workers,
            keep_table=dump_points and mode is Mode.ORACLE,
        )
        report = dataclasses.replace(report, oracle=oracle)
    if mode is Mode.ORACLE:
        return report

    outcomes = tuple(
        dispatch_seeds(scenario, report.seeds, mode, report.run_dir, trace=trace, dispatch=settings.dispatch),
    )
    report = dataclasses.replace(report, outcomes=outcomes)
    if mode is not Mode.REPORT or oracle is None:
        return report

    certificates = tuple(certify(outcome.chosen, oracle) for outcome in outcomes)
    metrics = metrics_frame(outcomes, scenario, settings)
    report = dataclasses.replace(
        report,
        certificates=certificates,
        metrics=metrics,
        improvement=improvement_summary(metrics),
    )
    logger.info(
        "Certified %d of %d seeds for %s",
        sum(c.passed for c in certificates),
        len(certificates),
        scenario.name,
    )
    return report
