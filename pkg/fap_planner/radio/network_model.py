"""Surrogate shared-medium model: airtime, achieved rate, delay and fairness.

Airtime demand of a link is its traffic demand over its PHY rate. When the
live links need more than the whole channel, every one of them is scaled down
by the same factor. Absolute values are a desk-scale stand-in for a
packet-level simulation and only their ordering is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from fap_planner.radio.feasibility import ue_positions
from fap_planner.radio.geometry import visibility
from fap_planner.radio.mcs import select_mcs
from fap_planner.radio.propagation import link_budget
from fap_planner.radio.propagation import path_loss_db

if TYPE_CHECKING:
    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

    from fap_planner.placement.scenarios import Scenario
    from fap_planner.radio.feasibility import UserEquipment
    from fap_planner.radio.geometry import Vec3
    from fap_planner.radio.geometry import Venue
    from fap_planner.radio.mcs import McsTable
    from fap_planner.radio.propagation import NlosEnvironment
    from fap_planner.radio.propagation import RadioConfig

DEFAULT_PACKET_BITS = 11200
DEFAULT_DELAY_CAP_S = 1.0


@dataclass(frozen=True, slots=True)
class AirtimeAllocation:
    rates_bps: NDArray[np.float64]
    demands_bps: NDArray[np.float64]
    airtime: NDArray[np.float64]
    total_airtime: float
    achieved_bps: NDArray[np.float64]

    @property
    def saturated(self) -> bool:
        return self.total_airtime >= 1


@dataclass(frozen=True, slots=True)
class NetworkMetrics:
    rates_bps: tuple[float, ...]
    phy_rates_bps: tuple[float, ...]
    mcs_indices: tuple[int, ...]
    los: tuple[bool, ...]
    total_airtime: float
    aggregate_throughput_bps: float
    mean_delay_s: float
    jain_fairness: float
    saturated: bool
    # UE ids whose link cannot carry their demanded MCS.
    links_below_demand: tuple[int, ...] = ()

    @property
    def nlos(self) -> int:
        return sum(self.los)


@dataclass(frozen=True, slots=True)
class PositionBatch:
    """Metrics of P candidate positions against N UE; per-link arrays are (P, N)."""

    los: NDArray[np.bool_]
    snr_db: NDArray[np.float64]
    phy_rates_bps: NDArray[np.float64]
    achieved_bps: NDArray[np.float64]
    total_airtime: NDArray[np.float64]
    aggregate_throughput_bps: NDArray[np.float64]
    mean_delay_s: NDArray[np.float64]
    jain_fairness: NDArray[np.float64]

    @property
    def nlos(self) -> NDArray[np.intp]:
        return np.count_nonzero(self.los, axis=1)


def _share_airtime(
    rates: NDArray[np.float64],
    demands: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    live = rates > 0
    airtime = np.where(live, demands / np.where(live, rates, 1.0), np.inf)
    total = np.sum(np.where(live, airtime, 0.0), axis=-1)
    scale = np.where(total <= 1, 1.0, 1.0 / np.maximum(total, 1.0))
    achieved = np.where(live, demands * scale[..., np.newaxis], 0.0)
    return airtime, total, achieved


def _delays(
    rates: NDArray[np.float64],
    total: NDArray[np.float64],
    packet_bits: float,
    delay_cap_s: float,
) -> NDArray[np.float64]:
    live = rates > 0
    unsaturated = (total < 1)[..., np.newaxis]
    with np.errstate(divide="ignore", invalid="ignore"):
        queued = (packet_bits / rates) / (1 - total[..., np.newaxis])
    return np.where(live & unsaturated, queued, delay_cap_s)


def _jain(normalized: NDArray[np.float64]) -> NDArray[np.float64]:
    total = np.sum(normalized, axis=-1)
    squares = np.sum(normalized**2, axis=-1)
    n = normalized.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        index = total**2 / (n * squares)
    return np.where(squares > 0, index, 0.0)


def per_link_rate(  # noqa: PLR0913
    uav: Vec3,
    ue: UserEquipment,
    venue: Venue,
    radio: RadioConfig,
    table: McsTable,
    nlos: NlosEnvironment | None = None,
) -> float:
    budget = link_budget(uav, ue.position, venue, radio, nlos)
    entry = select_mcs(budget.snr_db, table)
    return 0.0 if entry is None else entry.phy_rate_bps


def airtime_allocation(rates: ArrayLike, demands: ArrayLike) -> AirtimeAllocation:
    r = np.asarray(rates, dtype=np.float64)
    b = np.asarray(demands, dtype=np.float64)
    if r.shape != b.shape:
        msg = f"rates {r.shape} and demands {b.shape} differ in shape"
        raise ValueError(msg)
    if np.any(r < 0) or np.any(~(b > 0)):
        msg = "rates must be non-negative and demands positive"
        raise ValueError(msg)
    airtime, total, achieved = _share_airtime(r, b)
    return AirtimeAllocation(
        rates_bps=r,
        demands_bps=b,
        airtime=airtime,
        total_airtime=float(total),
        achieved_bps=achieved,
    )


def mean_delay(
    allocation: AirtimeAllocation,
    packet_bits: float = DEFAULT_PACKET_BITS,
    delay_cap_s: float = DEFAULT_DELAY_CAP_S,
) -> float:
    delays = _delays(allocation.rates_bps, np.asarray(allocation.total_airtime), packet_bits, delay_cap_s)
    return float(np.mean(delays))


def jain_fairness(normalized: ArrayLike) -> float:
    """Jain index of per-UE service normalised by demand; 0 when nobody is served."""
    u = np.asarray(normalized, dtype=np.float64)
    if u.size == 0:
        msg = "jain_fairness needs at least one UE"
        raise ValueError(msg)
    return float(_jain(u))


def capacity_ceiling(table: McsTable, n: int) -> float:
    return n * table.top_rate_bps


def evaluate_positions(
    points: ArrayLike,
    scenario: Scenario,
    *,
    packet_bits: float = DEFAULT_PACKET_BITS,
    delay_cap_s: float = DEFAULT_DELAY_CAP_S,
) -> PositionBatch:
    """Vectorised surrogate evaluation of many UAV positions."""
    uav = np.atleast_2d(np.asarray(points, dtype=np.float64))
    centres = ue_positions(scenario.ues)
    demands = np.array([ue.demand_bps for ue in scenario.ues], dtype=np.float64)

    los = np.empty((uav.shape[0], centres.shape[0]), dtype=bool)
    snr = np.empty((uav.shape[0], centres.shape[0]), dtype=np.float64)
    for i, centre in enumerate(centres):
        los[:, i] = visibility(uav, centre, scenario.venue)
        distance = np.sqrt(np.sum((uav - centre) ** 2, axis=1))
        loss = path_loss_db(
            distance,
            los[:, i],
            scenario.radio,
            scenario.nlos,
            h_uav=uav[:, 2],
            h_ue=centre[2],
        )
        snr[:, i] = scenario.radio.snr_from_loss(loss)

    rates = scenario.mcs_table.rate_for_snr(snr)
    _, total, achieved = _share_airtime(rates, np.broadcast_to(demands, rates.shape))
    delays = _delays(rates, total, packet_bits, delay_cap_s)
    return PositionBatch(
        los=los,
        snr_db=snr,
        phy_rates_bps=rates,
        achieved_bps=achieved,
        total_airtime=total,
        aggregate_throughput_bps=np.sum(achieved, axis=1),
        mean_delay_s=np.mean(delays, axis=1),
        jain_fairness=_jain(achieved / demands),
    )


def evaluate_position(
    uav: Vec3,
    scenario: Scenario,
    *,
    packet_bits: float = DEFAULT_PACKET_BITS,
    delay_cap_s: float = DEFAULT_DELAY_CAP_S,
) -> NetworkMetrics:
    batch = evaluate_positions(uav.as_array(), scenario, packet_bits=packet_bits, delay_cap_s=delay_cap_s)
    positions = scenario.mcs_table.position_for_snr(batch.snr_db[0])
    mcs_indices = tuple(
        scenario.mcs_table.entries[p].index if p >= 0 else -1 for p in positions.tolist()
    )
    below = tuple(
        ue.id
        for ue, index in zip(scenario.ues, mcs_indices, strict=True)
        if index < ue.demanded_mcs
    )
    total = float(batch.total_airtime[0])
    return NetworkMetrics(
        rates_bps=tuple(batch.achieved_bps[0].tolist()),
        phy_rates_bps=tuple(batch.phy_rates_bps[0].tolist()),
        mcs_indices=mcs_indices,
        los=tuple(bool(v) for v in batch.los[0]),
        total_airtime=total,
        aggregate_throughput_bps=float(batch.aggregate_throughput_bps[0]),
        mean_delay_s=float(batch.mean_delay_s[0]),
        jain_fairness=float(batch.jain_fairness[0]),
        saturated=total >= 1,
        links_below_demand=below,
    )
