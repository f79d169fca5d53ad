"""3D primitives, the positioning zone and the segment-versus-building test.

Buildings are closed axis-aligned boxes. A radio path is blocked by a building
when the open segment between its two ends penetrates the interior of the box
by more than :data:`GRAZING_TOLERANCE_M`; touching a face, an edge or a corner
does not block.
"""

from __future__ import annotations

import math
from dataclasses import astuple
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from fap_planner.exceptions import OffLatticeError

if TYPE_CHECKING:
    from collections.abc import Iterable
    from collections.abc import Sequence

    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

GRAZING_TOLERANCE_M = 1e-9
# Lattice coordinates are compared with this relative slack.
LATTICE_EPSILON = 1e-9


@dataclass(frozen=True, slots=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            msg = f"Vec3 components must be finite, got {(self.x, self.y, self.z)}"
            raise ValueError(msg)

    @classmethod
    def from_iterable(cls, values: Iterable[float]) -> Vec3:
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def distance_to(self, other: Vec3) -> float:
        return math.dist(self.as_tuple(), other.as_tuple())

    def offset(self, dx: float = 0.0, dy: float = 0.0, dz: float = 0.0) -> Vec3:
        return Vec3(self.x + dx, self.y + dy, self.z + dz)


@dataclass(frozen=True, slots=True)
class Building:
    """One obstacle in the 9-tuple order of the venue table.

    ``floors``, ``x_rooms`` and ``y_rooms`` are carried so scenario files
    round-trip; outdoor propagation ignores them.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float
    floors: int = 1
    x_rooms: int = 1
    y_rooms: int = 1

    def __post_init__(self) -> None:
        if not self.x_min < self.x_max:
            msg = f"x_min ({self.x_min}) must be below x_max ({self.x_max})"
            raise ValueError(msg)
        if not self.y_min < self.y_max:
            msg = f"y_min ({self.y_min}) must be below y_max ({self.y_max})"
            raise ValueError(msg)
        if not 0 <= self.z_min <= self.z_max:
            msg = f"need 0 <= z_min <= z_max, got z_min={self.z_min}, z_max={self.z_max}"
            raise ValueError(msg)
        if min(self.floors, self.x_rooms, self.y_rooms) < 1:
            msg = "floors, x_rooms and y_rooms must be positive integers"
            raise ValueError(msg)

    @property
    def lower(self) -> NDArray[np.float64]:
        return np.array([self.x_min, self.y_min, self.z_min], dtype=np.float64)

    @property
    def upper(self) -> NDArray[np.float64]:
        return np.array([self.x_max, self.y_max, self.z_max], dtype=np.float64)

    def as_row(self) -> tuple[float, ...]:
        return astuple(self)

    def contains(self, point: Vec3) -> bool:
        """Closed-box containment."""
        return (
            self.x_min <= point.x <= self.x_max
            and self.y_min <= point.y <= self.y_max
            and self.z_min <= point.z <= self.z_max
        )

    def footprint_contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True, slots=True)
class Venue:
    side_length: float
    buildings: tuple[Building, ...] = ()

    def __post_init__(self) -> None:
        if not self.side_length > 0:
            msg = f"side_length must be positive, got {self.side_length}"
            raise ValueError(msg)
        half = self.side_length / 2
        for index, building in enumerate(self.buildings):
            if (
                building.x_min < -half
                or building.x_max > half
                or building.y_min < -half
                or building.y_max > half
            ):
                msg = f"building {index} footprint leaves the venue [-{half}, {half}]^2"
                raise ValueError(msg)

    @property
    def half_side(self) -> float:
        return self.side_length / 2

    def contains_ground_point(self, x: float, y: float) -> bool:
        half = self.half_side
        return -half <= x <= half and -half <= y <= half

    def contains_ue(self, point: Vec3) -> bool:
        """True when ``point`` lies inside (or on) any building."""
        return any(building.contains(point) for building in self.buildings)


@dataclass(frozen=True, slots=True)
class PositioningZone:
    """The box Z_p of admissible UAV positions and its movement lattice."""

    min_corner: Vec3
    max_corner: Vec3
    grid_size: float

    def __post_init__(self) -> None:
        if not all(
            lo < hi
            for lo, hi in zip(self.min_corner.as_tuple(), self.max_corner.as_tuple(), strict=True)
        ):
            msg = f"min_corner {self.min_corner} must be below max_corner {self.max_corner} on every axis"
            raise ValueError(msg)
        if not self.grid_size > 0:
            msg = f"grid_size must be positive, got {self.grid_size}"
            raise ValueError(msg)

    @property
    def shape(self) -> tuple[int, int, int]:
        """Number of lattice points along x, y and z."""
        extent = self.max_corner.as_array() - self.min_corner.as_array()
        counts = np.floor(extent / self.grid_size + LATTICE_EPSILON).astype(int) + 1
        return (int(counts[0]), int(counts[1]), int(counts[2]))

    @property
    def size(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    @property
    def centroid(self) -> Vec3:
        return Vec3.from_iterable((self.min_corner.as_array() + self.max_corner.as_array()) / 2)

    def contains(self, point: Vec3) -> bool:
        return all(
            lo <= c <= hi
            for lo, c, hi in zip(
                self.min_corner.as_tuple(),
                point.as_tuple(),
                self.max_corner.as_tuple(),
                strict=True,
            )
        )

    def point_at(self, index: Sequence[int]) -> Vec3:
        nx, ny, nz = self.shape
        ix, iy, iz = index
        if not (0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz):
            msg = f"lattice index {tuple(index)} outside shape {self.shape}"
            raise IndexError(msg)
        origin = self.min_corner
        top = self.max_corner
        g = self.grid_size
        # The last point of an axis can drift past max_corner by a rounding error.
        return Vec3(min(origin.x + ix * g, top.x), min(origin.y + iy * g, top.y), min(origin.z + iz * g, top.z))

    def lattice_index(self, point: Vec3) -> tuple[int, int, int]:
        """Inverse of :meth:`point_at`; rejects positions off the lattice."""
        steps = (point.as_array() - self.min_corner.as_array()) / self.grid_size
        rounded = np.rint(steps)
        if np.any(np.abs(steps - rounded) > LATTICE_EPSILON * max(1.0, float(np.max(np.abs(steps))))):
            msg = f"{point} is not a lattice point of the zone (grid {self.grid_size} m)"
            raise OffLatticeError(msg)
        index = tuple(int(i) for i in rounded)
        if any(i < 0 or i >= n for i, n in zip(index, self.shape, strict=True)):
            msg = f"{point} lies outside the positioning zone"
            raise OffLatticeError(msg)
        return index  # type: ignore[return-value]

    def snap_index(self, point: Vec3) -> tuple[int, int, int]:
        """Nearest lattice index, ties going to the lower index, clipped to the zone."""
        steps = (point.as_array() - self.min_corner.as_array()) / self.grid_size
        snapped = np.ceil(steps - 0.5 - LATTICE_EPSILON)
        upper = np.array(self.shape) - 1
        index = np.clip(snapped, 0, upper).astype(int)
        return (int(index[0]), int(index[1]), int(index[2]))

    def lattice_array(self) -> NDArray[np.float64]:
        """All lattice points as an (P, 3) array in x-then-y-then-z order."""
        axes = [
            np.minimum(lo + np.arange(n, dtype=np.float64) * self.grid_size, hi)
            for lo, hi, n in zip(self.min_corner.as_tuple(), self.max_corner.as_tuple(), self.shape, strict=True)
        ]
        xs, ys, zs = np.meshgrid(*axes, indexing="ij")
        return np.column_stack((xs.ravel(), ys.ravel(), zs.ravel()))


def grid_points(zone: PositioningZone) -> list[Vec3]:
    return [Vec3(float(x), float(y), float(z)) for x, y, z in zone.lattice_array()]


def segments_blocked(
    starts: ArrayLike,
    end: ArrayLike,
    building: Building,
) -> NDArray[np.bool_]:
    """Slab test of the segments ``starts[k] -> end`` against one building.

    Returns a boolean array with one entry per start point.
    """
    origins = np.atleast_2d(np.asarray(starts, dtype=np.float64))
    direction = np.asarray(end, dtype=np.float64)[np.newaxis, :] - origins
    length = np.linalg.norm(direction, axis=1)
    if np.any(length == 0):
        msg = "degenerate segment: both ends coincide"
        raise ValueError(msg)

    lower = building.lower
    upper = building.upper
    parallel = direction == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lower = (lower - origins) / direction
        t_upper = (upper - origins) / direction
    t_near = np.minimum(t_lower, t_upper)
    t_far = np.maximum(t_lower, t_upper)
    # A segment parallel to a slab only counts when it runs strictly inside it.
    inside_slab = (origins > lower + GRAZING_TOLERANCE_M) & (origins < upper - GRAZING_TOLERANCE_M)
    t_near = np.where(parallel, -np.inf, t_near)
    t_far = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), t_far)

    enter = np.maximum(t_near.max(axis=1), 0.0)
    leave = np.minimum(t_far.min(axis=1), 1.0)
    return (leave - enter) * length > GRAZING_TOLERANCE_M


def segment_blocked(a: Vec3, b: Vec3, building: Building) -> bool:
    if a == b:
        msg = f"degenerate segment at {a}"
        raise ValueError(msg)
    return bool(segments_blocked(a.as_array(), b.as_array(), building)[0])


def visibility(starts: ArrayLike, end: ArrayLike, venue: Venue) -> NDArray[np.bool_]:
    """Line-of-sight flags of the segments ``starts[k] -> end`` in ``venue``."""
    origins = np.atleast_2d(np.asarray(starts, dtype=np.float64))
    visible = np.ones(origins.shape[0], dtype=bool)
    for building in venue.buildings:
        visible &= ~segments_blocked(origins, end, building)
    return visible


def line_of_sight(uav: Vec3, ue: Vec3, venue: Venue) -> bool:
    if uav == ue:
        msg = f"UAV and UE coincide at {uav}"
        raise ValueError(msg)
    return all(not segment_blocked(uav, ue, building) for building in venue.buildings)


def count_los(uav: Vec3, ues: Sequence[Vec3], venue: Venue) -> int:
    if not ues:
        msg = "count_los needs at least one UE"
        raise ValueError(msg)
    starts = np.array([ue.as_tuple() for ue in ues], dtype=np.float64)
    return int(np.count_nonzero(visibility(starts, uav.as_array(), venue)))
