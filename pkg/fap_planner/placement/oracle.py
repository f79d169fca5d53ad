"""Exhaustive ground truth over the positioning lattice.

The scan evaluates nLoS at every feasible lattice point, keeps the points
reaching the maximum and ranks them by surrogate aggregate throughput.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from fap_planner.exceptions import InfeasibleScenarioError
from fap_planner.radio.feasibility import ue_positions
from fap_planner.radio.geometry import Vec3
from fap_planner.radio.geometry import count_los
from fap_planner.radio.geometry import visibility
from fap_planner.radio.network_model import DEFAULT_DELAY_CAP_S
from fap_planner.radio.network_model import DEFAULT_PACKET_BITS
from fap_planner.radio.network_model import evaluate_positions

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import NDArray

    from fap_planner.placement.scenarios import Scenario

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 65536


@dataclass(frozen=True, slots=True)
class LatticeTable:
    """Per-point evaluation of a lattice, rows in x-then-y-then-z order."""

    points: NDArray[np.float64]
    nlos: NDArray[np.intp]
    in_sp: NDArray[np.bool_]
    aggregate_throughput_bps: NDArray[np.float64]
    mean_delay_s: NDArray[np.float64]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "x": self.points[:, 0],
                "y": self.points[:, 1],
                "z": self.points[:, 2],
                "nlos": self.nlos,
                "in_sp": self.in_sp.astype(int),
                "aggregate_throughput_bps": self.aggregate_throughput_bps,
                "mean_delay_s": self.mean_delay_s,
            },
        )


@dataclass(frozen=True)
class OracleResult:
    max_nlos: int
    n_ues: int
    feasible_count: int
    # Argmax positions ranked by throughput (descending), then x, y, z.
    argmax_points: NDArray[np.float64]
    argmax_throughput_bps: NDArray[np.float64]
    scenario: Scenario = field(repr=False)
    table: LatticeTable | None = field(default=None, repr=False)

    @property
    def argmax(self) -> list[Vec3]:
        return [Vec3(float(x), float(y), float(z)) for x, y, z in self.argmax_points]

    @property
    def best(self) -> Vec3:
        return Vec3.from_iterable(self.argmax_points[0])

    @property
    def best_throughput_bps(self) -> float:
        return float(self.argmax_throughput_bps[0])


@dataclass(frozen=True, slots=True)
class CertificateReport:
    position: Vec3
    nlos: int
    max_nlos: int
    in_sp: bool
    # 1-based place of the position in the throughput ranking of the argmax set.
    throughput_rank: int | None
    argmax_size: int

    @property
    def gap(self) -> int:
        return self.max_nlos - self.nlos

    @property
    def passed(self) -> bool:
        return self.in_sp and self.gap == 0


def _chunks(points: NDArray[np.float64], chunk_size: int) -> list[NDArray[np.float64]]:
    if chunk_size < 1:
        msg = f"chunk_size must be positive, got {chunk_size}"
        raise ValueError(msg)
    return [points[start : start + chunk_size] for start in range(0, points.shape[0], chunk_size)]


def _map_chunks[T](
    func: Callable[[NDArray[np.float64]], T],
    points: NDArray[np.float64],
    chunk_size: int,
    workers: int,
) -> list[T]:
    """``func`` over every chunk, results in chunk order whatever the worker count."""
    chunks = _chunks(points, chunk_size)
    if workers <= 1 or len(chunks) <= 1:
        return [func(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, chunks))


def nlos_counts(points: NDArray[np.float64], scenario: Scenario) -> NDArray[np.intp]:
    counts = np.zeros(points.shape[0], dtype=np.intp)
    for centre in ue_positions(scenario.ues):
        counts += visibility(points, centre, scenario.venue)
    logger.debug("Scanned %d lattice points", points.shape[0])
    return counts


def _throughput(
    points: NDArray[np.float64],
    scenario: Scenario,
    chunk_size: int,
    workers: int,
) -> NDArray[np.float64]:
    if points.shape[0] == 0:
        return np.zeros(0)
    parts = _map_chunks(
        lambda chunk: evaluate_positions(chunk, scenario).aggregate_throughput_bps,
        points,
        chunk_size,
        workers,
    )
    return np.concatenate(parts)


def evaluate_lattice(
    scenario: Scenario,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
    packet_bits: float = DEFAULT_PACKET_BITS,
    delay_cap_s: float = DEFAULT_DELAY_CAP_S,
) -> LatticeTable:
    """Every lattice point of the zone, feasible or not."""
    points = scenario.zone.lattice_array()

    def evaluate(chunk: NDArray[np.float64]) -> tuple[NDArray[np.intp], NDArray[np.float64], NDArray[np.float64]]:
        batch = evaluate_positions(chunk, scenario, packet_bits=packet_bits, delay_cap_s=delay_cap_s)
        return batch.nlos, batch.aggregate_throughput_bps, batch.mean_delay_s

    parts = _map_chunks(evaluate, points, chunk_size, workers)
    return LatticeTable(
        points=points,
        nlos=np.concatenate([p[0] for p in parts]),
        in_sp=scenario.feasible_mask.ravel(),
        aggregate_throughput_bps=np.concatenate([p[1] for p in parts]),
        mean_delay_s=np.concatenate([p[2] for p in parts]),
    )


def exhaustive_search(
    scenario: Scenario,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
    keep_table: bool = False,
) -> OracleResult:
    mask = scenario.feasible_mask.ravel()
    if not mask.any():
        msg = f"scenario {scenario.name!r} has an empty feasible subspace"
        raise InfeasibleScenarioError(msg)
    feasible = scenario.zone.lattice_array()[mask]

    counts = np.concatenate(
        _map_chunks(lambda chunk: nlos_counts(chunk, scenario), feasible, chunk_size, workers),
    )
    max_nlos = int(counts.max())
    best = feasible[counts == max_nlos]
    throughput = _throughput(best, scenario, chunk_size, workers)
    order = np.lexsort((best[:, 2], best[:, 1], best[:, 0], -throughput))

    result = OracleResult(
        max_nlos=max_nlos,
        n_ues=len(scenario.ues),
        feasible_count=int(feasible.shape[0]),
        argmax_points=best[order],
        argmax_throughput_bps=throughput[order],
        scenario=scenario,
        table=evaluate_lattice(scenario, chunk_size=chunk_size, workers=workers) if keep_table else None,
    )
    logger.info(
        "Oracle for %s: max nLoS %d of %d over %d feasible points, %d positions reach it, best %s",
        scenario.name,
        result.max_nlos,
        result.n_ues,
        result.feasible_count,
        best.shape[0],
        result.best.as_tuple(),
    )
    return result


def certify(agent_position: Vec3, oracle: OracleResult) -> CertificateReport:
    """Compare a position against the exhaustive optimum; the position must be on the lattice."""
    scenario = oracle.scenario
    scenario.zone.lattice_index(agent_position)
    nlos = count_los(agent_position, [ue.position for ue in scenario.ues], scenario.venue)
    in_sp = scenario.in_sp(agent_position)
    matches = np.flatnonzero(np.all(oracle.argmax_points == agent_position.as_array(), axis=1))
    report = CertificateReport(
        position=agent_position,
        nlos=nlos,
        max_nlos=oracle.max_nlos,
        in_sp=in_sp,
        throughput_rank=int(matches[0]) + 1 if matches.size else None,
        argmax_size=int(oracle.argmax_points.shape[0]),
    )
    log = logger.info if report.passed else logger.warning
    log(
        "Certificate for %s: nLoS %d of max %d, gap %d, throughput rank %s",
        agent_position.as_tuple(),
        report.nlos,
        report.max_nlos,
        report.gap,
        report.throughput_rank,
    )
    return report
