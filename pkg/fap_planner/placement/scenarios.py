"""Scenario files: the JSON schema, its validation and the resolved ``Scenario``.

A scenario file looks like::

    {
      "schema": "fap-scenario/1",
      "name": "scenario_a_homogeneous",
      "venue": {"s_venue": 100, "buildings": [[-5, 5, -5, 5, 0, 20, 5, 3, 2], ...]},
      "mcs_table": "vht160-gi800-1ss",
      "z_p": {"lower": [-50, -50, 25], "upper": [50, 50, 100]},
      "grid_size": 1.0,
      "ues": [{"position": [-15, 12, 1.5], "b_i": 58.5e6, "mcs_i": 0}, ...],
      "baseline_position": [0, 0, 20]
    }

``random_ues`` ({"count", "seed", "height", "b_i", "mcs_i"}) may replace
``ues``; ``radio``, ``nlos``, ``train`` and ``episode`` are optional overrides
of the library defaults.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING
from typing import Any
from typing import Literal

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError
from pydantic import field_validator
from pydantic import model_validator

from fap_planner.exceptions import ScenarioError
from fap_planner.learning.agent import TrainConfig
from fap_planner.learning.environment import EpisodeConfig
from fap_planner.radio.feasibility import UserEquipment
from fap_planner.radio.feasibility import feasible_mask as lattice_mask
from fap_planner.radio.feasibility import feasible_region
from fap_planner.radio.feasibility import in_feasible_subspace
from fap_planner.radio.geometry import Building
from fap_planner.radio.geometry import PositioningZone
from fap_planner.radio.geometry import Vec3
from fap_planner.radio.geometry import Venue
from fap_planner.radio.mcs import DEFAULT_MIN_SNR_DB
from fap_planner.radio.mcs import DEFAULT_TABLE_LABEL
from fap_planner.radio.mcs import McsEntry
from fap_planner.radio.mcs import McsTable
from fap_planner.radio.mcs import builtin_labels
from fap_planner.radio.mcs import builtin_table
from fap_planner.radio.propagation import NlosEnvironment
from fap_planner.radio.propagation import RadioConfig

if TYPE_CHECKING:
    from collections.abc import Mapping
    from collections.abc import Sequence

    from numpy.typing import NDArray

    from fap_planner.radio.feasibility import FeasibleRegion

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "fap-scenario/1"
PLACEMENT_DECIMALS = 2
_MAX_PLACEMENT_DRAWS_PER_UE = 10_000
_BUILDING_FIELDS = tuple(f.name for f in dataclasses.fields(Building))

Point = tuple[float, float, float]
BuildingRow = tuple[float, float, float, float, float, float, int, int, int]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class VenueSchema(_Strict):
    s_venue: float = Field(gt=0)
    # x_min, x_max, y_min, y_max, z_min, z_max, floors, x_rooms, y_rooms
    buildings: list[BuildingRow] = []


class McsEntrySchema(_Strict):
    index: int = Field(ge=0)
    min_snr_db: float
    phy_rate_bps: float = Field(gt=0)
    modulation: str = ""


class McsTableSchema(_Strict):
    label: str = DEFAULT_TABLE_LABEL
    thresholds: list[float] | None = None
    entries: list[McsEntrySchema] | None = None

    @model_validator(mode="after")
    def _one_source(self) -> McsTableSchema:
        if self.thresholds is not None and self.entries is not None:
            msg = "give either thresholds for a built-in table or inline entries, not both"
            raise ValueError(msg)
        if self.entries is None and self.label not in builtin_labels():
            msg = f"unknown MCS table {self.label!r}; choose one of {list(builtin_labels())} or give entries"
            raise ValueError(msg)
        return self


class ZoneSchema(_Strict):
    lower: Point
    upper: Point


class UeSchema(_Strict):
    position: Point
    b_i: float = Field(gt=0)
    mcs_i: int | None = Field(default=None, ge=0)


class RandomPlacementSchema(_Strict):
    count: int = Field(ge=1)
    seed: int = Field(ge=0)
    height: float = Field(default=1.5, ge=0)
    b_i: float = Field(gt=0)
    mcs_i: int | None = Field(default=None, ge=0)


class RadioSchema(_Strict):
    frequency_hz: float | None = None
    tx_power_dbm: float | None = None
    noise_floor_dbm: float | None = None
    bandwidth_mhz: int | None = None
    guard_interval_ns: int | None = None
    antenna_gain_dbi: float | None = None


class NlosSchema(_Strict):
    rooftop_height_m: float | None = None
    street_width_m: float | None = None
    building_separation_m: float | None = None
    street_orientation_deg: float | None = None


class TrainSchema(_Strict):
    episodes: int | None = None
    learning_rate: float | None = None
    gamma: float | None = None
    batch_size: int | None = None
    buffer_capacity: int | None = None
    target_sync_steps: int | None = None
    hidden_layers: tuple[int, ...] | None = None
    epsilon_start: float | None = None
    epsilon_end: float | None = None
    epsilon_power: float | None = None
    epsilon_horizon_steps: int | None = None
    seed: int | None = None


class EpisodeSchema(_Strict):
    duration_s: float | None = None
    decision_interval_s: float | None = None
    warmup_s: float | None = None


class ScenarioSchema(_Strict):
    schema_: Literal["fap-scenario/1"] = Field(alias="schema")
    name: str | None = None
    venue: VenueSchema
    radio: RadioSchema = RadioSchema()
    nlos: NlosSchema = NlosSchema()
    mcs_table: McsTableSchema = McsTableSchema()
    z_p: ZoneSchema
    grid_size: float = Field(gt=0)
    ues: list[UeSchema] | None = None
    random_ues: RandomPlacementSchema | None = None
    baseline_position: Point | None = None
    offset_m: float | None = Field(default=None, gt=0)
    train: TrainSchema = TrainSchema()
    episode: EpisodeSchema = EpisodeSchema()

    @field_validator("mcs_table", mode="before")
    @classmethod
    def _label_shorthand(cls, value: Any) -> Any:
        return {"label": value} if isinstance(value, str) else value

    @model_validator(mode="after")
    def _one_ue_source(self) -> ScenarioSchema:
        if (self.ues is None) == (self.random_ues is None):
            msg = "give exactly one of ues or random_ues"
            raise ValueError(msg)
        if self.ues is not None and not self.ues:
            msg = "at least one UE is required"
            raise ValueError(msg)
        return self


@dataclass(frozen=True)
class Scenario:
    name: str
    venue: Venue
    radio: RadioConfig
    nlos: NlosEnvironment
    mcs_table: McsTable
    zone: PositioningZone
    ues: tuple[UserEquipment, ...]
    baseline_position: Vec3
    # None defers to the run settings.
    offset_m: float | None = None
    train: TrainConfig = TrainConfig()
    episode: EpisodeConfig = EpisodeConfig()

    @cached_property
    def region(self) -> FeasibleRegion:
        return feasible_region(self.ues, self.radio, self.mcs_table, self.zone)

    @cached_property
    def feasible_mask(self) -> NDArray[np.bool_]:
        return lattice_mask(self.zone, self.ues, self.region.radii)

    @property
    def feasible_count(self) -> int:
        return int(np.count_nonzero(self.feasible_mask))

    def in_sp(self, p: Vec3) -> bool:
        return in_feasible_subspace(p, self.region, self.ues)

    def with_mcs_table(self, table: McsTable) -> Scenario:
        """The same scenario under ``table``; every UE is re-paired with its lowest covering index."""
        ues = tuple(
            dataclasses.replace(ue, demanded_mcs=_resolve_mcs(table, ue.demand_bps, None, f"ues.{ue.id}"))
            for ue in self.ues
        )
        return dataclasses.replace(self, mcs_table=table, ues=ues)


def _overrides(model: BaseModel) -> dict[str, Any]:
    return model.model_dump(exclude_none=True)


def _build(kind: type, field_path: str, **kwargs: Any) -> Any:
    try:
        return kind(**kwargs)
    except ValueError as exc:
        raise ScenarioError(str(exc), field_path) from exc


def _mcs_table(schema: McsTableSchema) -> McsTable:
    if schema.entries is None:
        return _build(builtin_table, "mcs_table", label=schema.label, thresholds=schema.thresholds)
    entries = tuple(McsEntry(**entry.model_dump()) for entry in schema.entries)
    return _build(McsTable, "mcs_table.entries", label=schema.label, entries=entries)


def _resolve_mcs(table: McsTable, demand_bps: float, mcs_i: int | None, field_path: str) -> int:
    if mcs_i is None:
        covering = table.lowest_covering(demand_bps)
        if covering is None:
            msg = f"demand {demand_bps:g} bit/s has no matching MCS in {table.label!r}"
            raise ScenarioError(msg, f"{field_path}.b_i")
        return covering.index
    try:
        entry = table.entry(mcs_i)
    except ValueError as exc:
        raise ScenarioError(str(exc), f"{field_path}.mcs_i") from exc
    if demand_bps > entry.phy_rate_bps:
        msg = f"demand {demand_bps:g} bit/s exceeds the {entry.phy_rate_bps:g} bit/s of MCS {mcs_i}"
        raise ScenarioError(msg, f"{field_path}.b_i")
    return mcs_i


def random_positions(venue: Venue, count: int, seed: int, height: float) -> list[Vec3]:
    """Uniform ground positions rounded to the centimetre, redrawn inside building footprints."""
    rng = np.random.default_rng(seed)
    half = venue.half_side
    positions: list[Vec3] = []
    draws = 0
    while len(positions) < count:
        draws += 1
        if draws > _MAX_PLACEMENT_DRAWS_PER_UE * count:
            msg = f"could not place {count} UE outside the building footprints"
            raise ScenarioError(msg, "random_ues")
        x, y = np.round(rng.uniform(-half, half, size=2), PLACEMENT_DECIMALS).tolist()
        if any(building.footprint_contains(x, y) for building in venue.buildings):
            continue
        positions.append(Vec3(x, y, height))
    return positions


def _default_baseline(venue: Venue) -> Vec3:
    """Venue centre, on the roof of whatever building covers it."""
    roofs = [b.z_max for b in venue.buildings if b.footprint_contains(0.0, 0.0)]
    return Vec3(0.0, 0.0, max(roofs, default=0.0))


def _user_equipment(
    schema: ScenarioSchema,
    venue: Venue,
    nlos: NlosEnvironment,
    table: McsTable,
) -> tuple[UserEquipment, ...]:
    if schema.random_ues is not None:
        placement = schema.random_ues
        requests = [
            (p, placement.b_i, placement.mcs_i)
            for p in random_positions(venue, placement.count, placement.seed, placement.height)
        ]
        prefix = "random_ues"
    else:
        requests = [
            (_build(Vec3, f"ues.{i}.position", x=ue.position[0], y=ue.position[1], z=ue.position[2]), ue.b_i, ue.mcs_i)
            for i, ue in enumerate(schema.ues or ())
        ]
        prefix = "ues"

    ues = []
    for i, (position, demand, mcs_i) in enumerate(requests):
        path = f"{prefix}.{i}" if prefix == "ues" else prefix
        if not venue.contains_ground_point(position.x, position.y):
            msg = f"UE {i} at {position.as_tuple()} lies outside the venue"
            raise ScenarioError(msg, f"{path}.position")
        if venue.contains_ue(position):
            msg = f"UE {i} at {position.as_tuple()} lies inside a building"
            raise ScenarioError(msg, f"{path}.position")
        if position.z >= nlos.rooftop_height_m:
            msg = f"UE {i} height {position.z} is not below the rooftop height {nlos.rooftop_height_m}"
            raise ScenarioError(msg, f"{path}.position")
        mcs = _resolve_mcs(table, demand, mcs_i, path)
        ues.append(_build(UserEquipment, path, id=i, position=position, demand_bps=demand, demanded_mcs=mcs))
    return tuple(ues)


def scenario_from_mapping(data: Mapping[str, Any], default_name: str = "scenario") -> Scenario:
    try:
        schema = ScenarioSchema.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = ".".join(str(part) for part in first["loc"])
        raise ScenarioError(first["msg"], path) from exc

    buildings = []
    for i, row in enumerate(schema.venue.buildings):
        buildings.append(_build(Building, f"venue.buildings.{i}", **dict(zip(_BUILDING_FIELDS, row, strict=True))))
    venue = _build(Venue, "venue", side_length=schema.venue.s_venue, buildings=tuple(buildings))
    radio = _build(RadioConfig, "radio", **_overrides(schema.radio))
    nlos = _build(NlosEnvironment, "nlos", **_overrides(schema.nlos))
    table = _mcs_table(schema.mcs_table)
    zone = _build(
        PositioningZone,
        "z_p",
        min_corner=Vec3(*schema.z_p.lower),
        max_corner=Vec3(*schema.z_p.upper),
        grid_size=schema.grid_size,
    )
    ues = _user_equipment(schema, venue, nlos, table)
    baseline = Vec3(*schema.baseline_position) if schema.baseline_position else _default_baseline(venue)

    return Scenario(
        name=schema.name or default_name,
        venue=venue,
        radio=radio,
        nlos=nlos,
        mcs_table=table,
        zone=zone,
        ues=ues,
        baseline_position=baseline,
        offset_m=schema.offset_m,
        train=_build(TrainConfig, "train", **_overrides(schema.train)),
        episode=_build(EpisodeConfig, "episode", **_overrides(schema.episode)),
    )


def load_scenario(path: str | Path) -> Scenario:
    source = Path(path)
    try:
        data = json.loads(source.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        msg = f"scenario file {source} does not exist"
        raise ScenarioError(msg) from exc
    except json.JSONDecodeError as exc:
        msg = f"{source} is not valid JSON: {exc.msg} at line {exc.lineno}"
        raise ScenarioError(msg) from exc
    scenario = scenario_from_mapping(data, default_name=source.stem)
    logger.info(
        "Loaded scenario %s: %d UE, %d buildings, %d lattice points",
        scenario.name,
        len(scenario.ues),
        len(scenario.venue.buildings),
        scenario.zone.size,
    )
    return scenario


def resolve_scenario_path(value: str, scenario_dir: str | Path) -> Path:
    """A path as given, or a bare name looked up in ``scenario_dir``."""
    candidate = Path(value)
    if candidate.is_file():
        return candidate
    named = Path(scenario_dir) / (value if value.endswith(".json") else f"{value}.json")
    if named.is_file():
        return named
    msg = f"no scenario file {value!r} (also looked in {scenario_dir})"
    raise ScenarioError(msg)


def _dump_table(table: McsTable) -> str | dict[str, Any]:
    thresholds = [e.min_snr_db for e in table.entries]
    if table.label in builtin_labels() and builtin_table(table.label, thresholds) == table:
        if tuple(thresholds) == DEFAULT_MIN_SNR_DB:
            return table.label
        return {"label": table.label, "thresholds": thresholds}
    return {"label": table.label, "entries": [dataclasses.asdict(e) for e in table.entries]}


def dump_scenario(scenario: Scenario) -> dict[str, Any]:
    """JSON-ready mapping that loads back into an equal scenario."""
    return {
        "schema": SCHEMA_VERSION,
        "name": scenario.name,
        "venue": {
            "s_venue": scenario.venue.side_length,
            "buildings": building_rows(scenario.venue.buildings),
        },
        "radio": dataclasses.asdict(scenario.radio),
        "nlos": dataclasses.asdict(scenario.nlos),
        "mcs_table": _dump_table(scenario.mcs_table),
        "z_p": {
            "lower": list(scenario.zone.min_corner.as_tuple()),
            "upper": list(scenario.zone.max_corner.as_tuple()),
        },
        "grid_size": scenario.zone.grid_size,
        "ues": [
            {"position": list(ue.position.as_tuple()), "b_i": ue.demand_bps, "mcs_i": ue.demanded_mcs}
            for ue in scenario.ues
        ],
        "baseline_position": list(scenario.baseline_position.as_tuple()),
        "offset_m": scenario.offset_m,
        "train": dataclasses.asdict(scenario.train),
        "episode": dataclasses.asdict(scenario.episode),
    }


def building_rows(buildings: Sequence[Building]) -> list[list[float]]:
    """Buildings in the nine-column layout of the scenario file."""
    return [list(b.as_row()) for b in buildings]
