from __future__ import annotations

import json
import logging
from typing import TYPE_CHECKING

import pandas as pd
import pytest

from fap_planner.exceptions import CertificationError
from fap_planner.exceptions import InfeasibleScenarioError
from fap_planner.exceptions import ScenarioError
from fap_planner.placement.pipeline import Dispatch
from fap_planner.placement.pipeline import Mode
from fap_planner.placement.pipeline import RunSettings
from fap_planner.placement.pipeline import comparison_positions
from fap_planner.placement.pipeline import improvement_summary
from fap_planner.placement.pipeline import parse_seeds
from fap_planner.placement.pipeline import policy_path
from fap_planner.placement.pipeline import run_pipeline
from fap_planner.placement.pipeline import run_seed
from fap_planner.placement.reporting import emit_report
from fap_planner.placement.tests.factories import ScenarioFactory
from fap_planner.placement.tests.factories import walled_scenario
from fap_planner.radio.feasibility import UserEquipment
from fap_planner.radio.geometry import Vec3

if TYPE_CHECKING:
    from pathlib import Path

    from fap_planner.placement.scenarios import Scenario


@pytest.fixture
def run_settings(tmp_path: Path) -> RunSettings:
    return RunSettings(output_dir=tmp_path / "runs", chunk_size=1000)


class TestParseSeeds:
    def test_range(self):
        assert parse_seeds("1..30") == tuple(range(1, 31))

    def test_list_is_sorted_and_unique(self):
        assert parse_seeds("3, 1,3") == (1, 3)

    @pytest.mark.parametrize("text", ["5..2", "a,b", "", "-1"])
    def test_rejects(self, text: str):
        with pytest.raises(ScenarioError) as excinfo:
            parse_seeds(text)
        assert excinfo.value.field_path == "--seeds"


def test_dispatch_setting_is_validated(settings):
    settings.FAP_DISPATCH = "carrier-pigeon"
    with pytest.raises(ScenarioError, match="FAP_DISPATCH"):
        RunSettings.from_django()


def test_settings_come_from_django(settings, tmp_path: Path):
    settings.FAP_OFFSET_M = 5.0
    run_settings = RunSettings.from_django(tmp_path)
    assert run_settings.output_dir == tmp_path
    assert run_settings.dispatch is Dispatch.INLINE
    assert run_settings.offset_m == 5.0
    assert run_settings.chunk_size == 4096


def test_offsets_are_clamped_to_the_zone(open_scenario: Scenario, caplog):
    with caplog.at_level(logging.WARNING):
        positions = comparison_positions(Vec3(5.0, 0.0, 30.0), open_scenario, 10.0)
    assert positions["chosen"] == Vec3(5.0, 0.0, 30.0)
    assert positions["baseline"] == Vec3(0.0, 0.0, 20.0)
    assert positions["left"] == Vec3(-5.0, 0.0, 30.0)
    assert positions["right"] == Vec3(10.0, 0.0, 30.0)
    assert positions["front"] == Vec3(5.0, 10.0, 30.0)
    assert positions["behind"] == Vec3(5.0, -10.0, 30.0)
    assert "right" in caplog.text
    assert "left" not in caplog.text


def test_improvement_summary():
    metrics = pd.DataFrame(
        {
            "seed": [1, 1, 2, 2],
            "position": ["chosen", "baseline", "chosen", "baseline"],
            "aggregate_throughput_bps": [200.0, 100.0, 200.0, 100.0],
            "mean_delay_s": [0.01, 0.04, 0.01, 0.04],
        },
    )
    summary = improvement_summary(metrics)
    assert summary["position"].tolist() == ["baseline", "baseline"]
    assert summary["percentile"].tolist() == [50, 90]
    assert summary["throughput_gain"].tolist() == pytest.approx([1.0, 1.0])
    assert summary["delay_reduction"].tolist() == pytest.approx([0.75, 0.75])


def test_validate_does_no_work(open_scenario: Scenario, run_settings: RunSettings):
    report = run_pipeline(open_scenario, "validate", settings=run_settings)
    assert report.oracle is None
    assert report.outcomes == ()
    assert report.certified


def test_infeasible_scenario_stops_the_run(run_settings: RunSettings):
    ues = tuple(
        UserEquipment(id=i, position=Vec3(x, 0.0, 1.5), demand_bps=650e6, demanded_mcs=8)
        for i, x in enumerate((20.0, -20.0))
    )
    with pytest.raises(InfeasibleScenarioError):
        run_pipeline(ScenarioFactory.create(ues=ues), Mode.FEASIBILITY, settings=run_settings)


def test_oracle_mode(run_settings: RunSettings):
    report = run_pipeline(walled_scenario(), Mode.ORACLE, settings=run_settings, dump_points=True)
    assert report.oracle is not None
    assert report.oracle.max_nlos == 5
    assert report.oracle.table is not None
    assert report.outcomes == ()


def test_eval_needs_a_trained_policy(open_scenario: Scenario, tmp_path: Path):
    with pytest.raises(FileNotFoundError, match="train"):
        run_seed(open_scenario, 1, Mode.EVAL, tmp_path)


def test_train_then_eval(open_scenario: Scenario, tmp_path: Path):
    trained = run_seed(open_scenario, 2, Mode.TRAIN, tmp_path, trace=True)
    assert policy_path(tmp_path, 2).is_file()
    assert len(trained.episode_rewards) == open_scenario.train.episodes
    evaluated = run_seed(open_scenario, 2, Mode.EVAL, tmp_path, trace=True)
    assert len(evaluated.episode_rewards) == 1
    assert {r.episode for r in evaluated.records} == {0}
    assert evaluated.reward == 1.0


def test_report_mode(open_scenario: Scenario, run_settings: RunSettings):
    report = run_pipeline(open_scenario, Mode.REPORT, (1, 2), settings=run_settings)
    assert [o.seed for o in report.outcomes] == [1, 2]
    assert all(c.passed for c in report.certificates)
    assert report.certified_fraction == 1.0
    report.check_certified()
    assert len(report.metrics) == 2 * 6
    assert set(report.metrics["position"]) == {"chosen", "baseline", "left", "right", "front", "behind"}
    assert "rate_ue_3_bps" in report.metrics.columns
    assert len(report.improvement) == 5 * 2
    greedy = report.scenario.train.episodes
    assert all(len(o.episode_rewards) == greedy + 1 for o in report.outcomes)


def test_unreachable_pass_ratio_fails_certification(open_scenario: Scenario, tmp_path: Path):
    strict = RunSettings(output_dir=tmp_path, certify_pass_ratio=1.5)
    report = run_pipeline(open_scenario, Mode.REPORT, settings=strict)
    with pytest.raises(CertificationError):
        report.check_certified()


def test_celery_dispatch_matches_inline(open_scenario: Scenario, settings, tmp_path: Path):
    settings.CELERY_TASK_ALWAYS_EAGER = True
    inline = run_pipeline(
        open_scenario,
        Mode.TRAIN,
        (1, 2),
        settings=RunSettings(output_dir=tmp_path / "inline"),
        trace=True,
    )
    queued = run_pipeline(
        open_scenario,
        Mode.TRAIN,
        (1, 2),
        settings=RunSettings(output_dir=tmp_path / "celery", dispatch=Dispatch.CELERY),
        trace=True,
    )
    assert queued.outcomes == inline.outcomes


def test_reports_are_byte_stable(open_scenario: Scenario, tmp_path: Path):
    written = []
    for name in ("first", "second"):
        run_settings = RunSettings(output_dir=tmp_path / name)
        report = run_pipeline(open_scenario, Mode.REPORT, (1,), settings=run_settings, trace=True)
        written.append({p.relative_to(tmp_path / name): p.read_bytes() for p in emit_report(report)})
    first, second = written
    assert first == second
    assert {p.name for p in first} >= {
        "metadata.json",
        "summary.json",
        "reward_cdf.csv",
        "metrics.csv",
        "throughput_ccdf.csv",
        "delay_cdf.csv",
        "seed-1.csv",
    }


def test_report_files_carry_ceiling_and_distributions(open_scenario: Scenario, run_settings: RunSettings):
    report = run_pipeline(open_scenario, Mode.REPORT, (1,), settings=run_settings)
    emit_report(report)
    summary = json.loads((report.run_dir / "summary.json").read_text())
    assert summary["capacity_ceiling_bps"] == 4 * 702e6
    ccdf = pd.read_csv(report.run_dir / "throughput_ccdf.csv")
    assert list(ccdf.columns) == ["position", "value", "probability"]
    assert set(ccdf["position"]) == {"chosen", "baseline", "left", "right", "front", "behind"}
    assert (ccdf["probability"] == 0).all()
