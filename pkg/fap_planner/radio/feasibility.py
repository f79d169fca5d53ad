"""Per-UE Friis spheres and the feasible positioning subspace S_p."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from fap_planner.radio.geometry import Vec3
from fap_planner.radio.propagation import friis_max_distance

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

    from fap_planner.radio.geometry import PositioningZone
    from fap_planner.radio.mcs import McsTable
    from fap_planner.radio.propagation import RadioConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class UserEquipment:
    id: int
    position: Vec3
    demand_bps: float
    demanded_mcs: int

    def __post_init__(self) -> None:
        if not self.demand_bps > 0:
            msg = f"UE {self.id}: demand_bps must be positive, got {self.demand_bps}"
            raise ValueError(msg)
        if self.position.z < 0:
            msg = f"UE {self.id}: height must be non-negative, got {self.position.z}"
            raise ValueError(msg)
        if self.demanded_mcs < 0:
            msg = f"UE {self.id}: demanded_mcs must be non-negative, got {self.demanded_mcs}"
            raise ValueError(msg)


@dataclass(frozen=True, slots=True)
class FeasibleRegion:
    radii: tuple[float, ...]
    zone: PositioningZone

    def __post_init__(self) -> None:
        if not self.radii:
            msg = "a feasible region needs at least one radius"
            raise ValueError(msg)
        if any(not r > 0 for r in self.radii):
            msg = f"sphere radii must be positive, got {self.radii}"
            raise ValueError(msg)


def ue_positions(ues: Sequence[UserEquipment]) -> NDArray[np.float64]:
    return np.array([ue.position.as_tuple() for ue in ues], dtype=np.float64).reshape(-1, 3)


def sphere_radius(ue: UserEquipment, radio: RadioConfig, table: McsTable) -> float:
    entry = table.entry(ue.demanded_mcs)
    return float(friis_max_distance(entry.min_snr_db, radio))


def feasible_region(
    ues: Sequence[UserEquipment],
    radio: RadioConfig,
    table: McsTable,
    zone: PositioningZone,
) -> FeasibleRegion:
    return FeasibleRegion(radii=tuple(sphere_radius(ue, radio, table) for ue in ues), zone=zone)


def within_spheres(
    points: ArrayLike,
    centres: ArrayLike,
    radii: ArrayLike,
) -> NDArray[np.bool_]:
    """Closed-ball membership of every point in every sphere at once."""
    candidates = np.atleast_2d(np.asarray(points, dtype=np.float64))
    inside = np.ones(candidates.shape[0], dtype=bool)
    for centre, radius in zip(np.atleast_2d(centres), np.atleast_1d(radii), strict=True):
        distance = np.sqrt(np.sum((candidates - centre) ** 2, axis=1))
        inside &= distance <= radius
    return inside


def in_feasible_subspace(p: Vec3, region: FeasibleRegion, ues: Sequence[UserEquipment]) -> bool:
    if len(ues) != len(region.radii):
        msg = f"{len(ues)} UE but {len(region.radii)} sphere radii"
        raise ValueError(msg)
    if not region.zone.contains(p):
        return False
    return bool(within_spheres(p.as_array(), ue_positions(ues), region.radii)[0])


def feasible_mask(
    zone: PositioningZone,
    ues: Sequence[UserEquipment],
    radii: Sequence[float],
) -> NDArray[np.bool_]:
    """S_p membership of every lattice point, shaped like ``zone.shape``."""
    if len(ues) != len(radii):
        msg = f"{len(ues)} UE but {len(radii)} sphere radii"
        raise ValueError(msg)
    mask = within_spheres(zone.lattice_array(), ue_positions(ues), radii)
    return mask.reshape(zone.shape)


def feasible_grid_points(
    region: FeasibleRegion,
    ues: Sequence[UserEquipment],
    zone: PositioningZone,
) -> list[Vec3]:
    mask = feasible_mask(zone, ues, region.radii).ravel()
    points = zone.lattice_array()[mask]
    logger.info("Feasible lattice: %d of %d points", points.shape[0], mask.size)
    return [Vec3(float(x), float(y), float(z)) for x, y, z in points]
