from typing import Any

from celery import shared_task

from .pipeline import run_seed
from .scenarios import scenario_from_mapping


@shared_task()
def run_seed_task(
    scenario: dict[str, Any],
    seed: int,
    mode: str,
    run_dir: str,
    *,
    trace: bool = False,
) -> dict[str, Any]:
    """One seed of a run; the scenario travels in its dumped JSON form."""
    outcome = run_seed(scenario_from_mapping(scenario), seed, mode, run_dir, trace=trace)
    return outcome.to_dict()
