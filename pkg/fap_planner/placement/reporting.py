"""Run artefacts under ``<out>/<scenario-slug>/``.

Every file is a pure function of the report, so identical runs write
identical bytes: JSON is key-sorted, CSV floats use one fixed format and no
timestamps are recorded.
"""

from __future__ import annotations

import json
import logging
import math
from typing import TYPE_CHECKING
from typing import Any

import pandas as pd

import fap_planner
from fap_planner.placement.distributions import DistributionKind
from fap_planner.placement.distributions import empirical_distribution
from fap_planner.placement.distributions import emit_distribution
from fap_planner.placement.scenarios import building_rows
from fap_planner.placement.scenarios import dump_scenario
from fap_planner.radio.network_model import capacity_ceiling

if TYPE_CHECKING:
    from pathlib import Path

    from fap_planner.placement.pipeline import RunReport
    from fap_planner.placement.pipeline import SeedOutcome

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["episode", "step", "x", "y", "z", "action", "reward", "nlos", "in_sp"]


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    return value


def _write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, frame: pd.DataFrame, float_format: str) -> Path:
    frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n")
    return path


def trace_frame(outcome: SeedOutcome) -> pd.DataFrame:
    return pd.DataFrame(
        [
            [r.episode, r.step, *r.position.as_tuple(), int(r.action), r.reward, r.nlos, int(r.in_sp)]
            for r in outcome.records
        ],
        columns=TRACE_COLUMNS,
    )


def reward_distribution(outcomes: list[SeedOutcome] | tuple[SeedOutcome, ...]) -> pd.DataFrame:
    """Per-step reward CDF of every episode of every seed."""
    parts = []
    for outcome in outcomes:
        for episode, rewards in enumerate(outcome.episode_rewards):
            series = empirical_distribution(rewards, DistributionKind.CDF)
            series.insert(0, "episode", episode)
            series.insert(0, "seed", outcome.seed)
            parts.append(series)
    return pd.concat(parts, ignore_index=True)


def metadata(report: RunReport) -> dict[str, Any]:
    settings = report.settings
    return {
        "code_version": fap_planner.__version__,
        "mode": report.mode.value,
        "seeds": list(report.seeds),
        "trace": report.trace,
        "scenario": dump_scenario(report.scenario),
        "settings": {
            "dispatch": settings.dispatch.value,
            "oracle_chunk_size": settings.chunk_size,
            "packet_bits": settings.packet_bits,
            "delay_cap_s": settings.delay_cap_s,
            "offset_m": report.scenario.offset_m or settings.offset_m,
            "certify_pass_ratio": settings.certify_pass_ratio,
        },
        "q_network": {"hidden_activation": "relu", "output_activation": "linear"},
    }


def summary(report: RunReport) -> dict[str, Any]:
    scenario = report.scenario
    payload: dict[str, Any] = {
        "scenario": scenario.name,
        "mode": report.mode.value,
        "n_ues": len(scenario.ues),
        # x_min, x_max, y_min, y_max, z_min, z_max, floors, x_rooms, y_rooms
        "buildings": building_rows(scenario.venue.buildings),
        "baseline_position": list(scenario.baseline_position.as_tuple()),
        "sphere_radii_m": list(scenario.region.radii),
        "feasible_points": scenario.feasible_count,
        "lattice_points": scenario.zone.size,
        "capacity_ceiling_bps": capacity_ceiling(scenario.mcs_table, len(scenario.ues)),
    }
    if report.oracle is not None:
        payload["oracle"] = {
            "max_nlos": report.oracle.max_nlos,
            "argmax_size": int(report.oracle.argmax_points.shape[0]),
            "best_position": list(report.oracle.best.as_tuple()),
            "best_throughput_bps": report.oracle.best_throughput_bps,
        }
    certificates = dict(zip((o.seed for o in report.outcomes), report.certificates, strict=False))
    seeds = []
    for outcome in report.outcomes:
        entry: dict[str, Any] = {
            "seed": outcome.seed,
            "chosen_position": list(outcome.chosen.as_tuple()),
            "reward": outcome.reward,
            "nlos": outcome.nlos,
            "degenerate": outcome.degenerate,
        }
        certificate = certificates.get(outcome.seed)
        if certificate is not None:
            entry["certificate"] = {
                "passed": certificate.passed,
                "gap": certificate.gap,
                "in_sp": certificate.in_sp,
                "throughput_rank": certificate.throughput_rank,
            }
        seeds.append(entry)
    if seeds:
        payload["seeds"] = seeds
    if report.certificates:
        payload["certified_fraction"] = report.certified_fraction
        payload["certified"] = report.certified
    if report.improvement is not None:
        payload["improvement"] = report.improvement.to_dict(orient="records")
    return payload


def emit_report(report: RunReport, out_dir: Path | None = None) -> list[Path]:
    """Write the artefacts of ``report``; returns the paths written."""
    run_dir = out_dir or report.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    float_format = report.settings.float_format
    written = [
        _write_json(run_dir / "metadata.json", metadata(report)),
        _write_json(run_dir / "summary.json", summary(report)),
    ]

    if report.oracle is not None and report.oracle.table is not None:
        written.append(_write_csv(run_dir / "oracle_points.csv", report.oracle.table.to_frame(), float_format))

    if report.outcomes:
        written.append(_write_csv(run_dir / "reward_cdf.csv", reward_distribution(report.outcomes), float_format))
    if report.trace and report.outcomes:
        traces = run_dir / "traces"
        traces.mkdir(exist_ok=True)
        written.extend(
            _write_csv(traces / f"seed-{outcome.seed}.csv", trace_frame(outcome), float_format)
            for outcome in report.outcomes
        )

    if report.metrics is not None:
        written.append(_write_csv(run_dir / "metrics.csv", report.metrics, float_format))
        distributions = (
            ("throughput_ccdf.csv", "aggregate_throughput_bps", DistributionKind.CCDF),
            ("delay_cdf.csv", "mean_delay_s", DistributionKind.CDF),
        )
        written.extend(
            emit_distribution(
                report.metrics,
                run_dir / name,
                kind,
                by=["position"],
                column=column,
                float_format=float_format,
            )
            for name, column, kind in distributions
        )

    for path in written:
        logger.info("Wrote %s", path)
    return written
