from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
import pytest

from fap_planner.radio.feasibility import FeasibleRegion
from fap_planner.radio.feasibility import feasible_grid_points
from fap_planner.radio.feasibility import feasible_mask
from fap_planner.radio.feasibility import feasible_region
from fap_planner.radio.feasibility import in_feasible_subspace
from fap_planner.radio.feasibility import sphere_radius
from fap_planner.radio.geometry import PositioningZone
from fap_planner.radio.geometry import Vec3
from fap_planner.radio.geometry import grid_points
from fap_planner.radio.tests.factories import UserEquipmentFactory

if TYPE_CHECKING:
    from fap_planner.radio.mcs import McsTable
    from fap_planner.radio.propagation import RadioConfig


@pytest.fixture
def small_zone() -> PositioningZone:
    return PositioningZone(Vec3(-10, -10, 0), Vec3(10, 10, 10), grid_size=1.0)


class TestUserEquipment:
    def test_demand_must_be_positive(self):
        with pytest.raises(ValueError, match="demand_bps"):
            UserEquipmentFactory.create(demand_bps=0)

    def test_height_must_be_non_negative(self):
        with pytest.raises(ValueError, match="height"):
            UserEquipmentFactory.create(position=Vec3(0, 0, -1))


class TestSphereRadius:
    def test_mcs0(self, radio: RadioConfig, mcs_table: McsTable):
        ue = UserEquipmentFactory.create(demanded_mcs=0)
        assert sphere_radius(ue, radio, mcs_table) == pytest.approx(454.413825, abs=1e-5)

    def test_mcs6(self, radio: RadioConfig, mcs_table: McsTable):
        ue = UserEquipmentFactory.create(demanded_mcs=6)
        assert sphere_radius(ue, radio, mcs_table) == pytest.approx(45.441382, abs=1e-5)

    def test_strictly_shrinks_with_mcs(self, radio: RadioConfig, mcs_table: McsTable):
        radii = [
            sphere_radius(UserEquipmentFactory.create(demanded_mcs=m), radio, mcs_table)
            for m in mcs_table.indices
        ]
        assert all(a > b for a, b in zip(radii, radii[1:], strict=False))

    def test_unknown_mcs(self, radio: RadioConfig, mcs_table: McsTable):
        with pytest.raises(ValueError, match="MCS index 9"):
            sphere_radius(UserEquipmentFactory.create(demanded_mcs=9), radio, mcs_table)


class TestFeasibleSubspace:
    def test_huge_spheres(self, campus_zone: PositioningZone):
        ues = [UserEquipmentFactory.create() for _ in range(4)]
        region = FeasibleRegion(radii=(1e4,) * 4, zone=campus_zone)
        assert in_feasible_subspace(Vec3(0, 0, 50), region, ues)

    def test_outside_zone(self, campus_zone: PositioningZone):
        ues = [UserEquipmentFactory.create()]
        region = FeasibleRegion(radii=(1e4,), zone=campus_zone)
        assert not in_feasible_subspace(Vec3(0, 0, 20), region, ues)

    def test_sphere_boundary(self):
        ues = [UserEquipmentFactory.create(position=Vec3(0, 0, 0))]
        region = FeasibleRegion(radii=(10.0,), zone=PositioningZone(Vec3(-1, -1, 0), Vec3(1, 1, 11), 1.0))
        assert in_feasible_subspace(Vec3(0, 0, 10), region, ues)
        assert not in_feasible_subspace(Vec3(0, 0, 10 + 1e-9), region, ues)

    def test_mismatched_lengths(self, small_zone: PositioningZone):
        region = FeasibleRegion(radii=(5.0, 5.0), zone=small_zone)
        with pytest.raises(ValueError, match="1 UE but 2"):
            in_feasible_subspace(Vec3(0, 0, 0), region, [UserEquipmentFactory.create()])

    def test_region_from_table(self, radio: RadioConfig, mcs_table: McsTable, campus_zone: PositioningZone):
        ues = [UserEquipmentFactory.create(demanded_mcs=m) for m in (0, 1, 6)]
        region = feasible_region(ues, radio, mcs_table, campus_zone)
        assert region.radii[2] == pytest.approx(45.441382, abs=1e-5)


class TestFeasibleGridPoints:
    def test_huge_spheres_keep_lattice(self, small_zone: PositioningZone):
        ues = [UserEquipmentFactory.create() for _ in range(3)]
        region = FeasibleRegion(radii=(1e4,) * 3, zone=small_zone)
        assert feasible_grid_points(region, ues, small_zone) == grid_points(small_zone)

    def test_disjoint_spheres(self, small_zone: PositioningZone):
        ues = [
            UserEquipmentFactory.create(position=Vec3(-10, 0, 0)),
            UserEquipmentFactory.create(position=Vec3(10, 0, 0)),
        ]
        region = FeasibleRegion(radii=(9.0, 9.0), zone=small_zone)
        assert feasible_grid_points(region, ues, small_zone) == []

    def test_disc_on_flat_zone(self):
        zone = PositioningZone(Vec3(-10, -10, 4), Vec3(10, 10, 4.5), grid_size=1.0)
        ue = UserEquipmentFactory.create(position=Vec3(1, -2, 1))
        region = FeasibleRegion(radii=(5.0,), zone=zone)
        points = feasible_grid_points(region, [ue], zone)
        disc = math.sqrt(5.0**2 - 3.0**2)
        expected = [p for p in grid_points(zone) if math.hypot(p.x - 1, p.y + 2) <= disc]
        assert points == expected
        assert len(points) == 49

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            lower = rng.uniform(-20, 0, size=3)
            zone = PositioningZone(
                Vec3.from_iterable(lower),
                Vec3.from_iterable(lower + rng.uniform(4, 12, size=3)),
                grid_size=float(rng.choice([0.5, 1.0, 2.0])),
            )
            n = int(rng.integers(1, 5))
            ues = [
                UserEquipmentFactory.create(position=Vec3.from_iterable(rng.uniform([-20, -20, 0], [10, 10, 5])))
                for _ in range(n)
            ]
            radii = tuple(float(r) for r in rng.uniform(5, 30, size=n))
            mask = feasible_mask(zone, ues, radii).ravel()
            for keep, point in zip(mask, grid_points(zone), strict=True):
                inside = all(
                    math.dist(point.as_tuple(), ue.position.as_tuple()) <= r
                    for ue, r in zip(ues, radii, strict=True)
                )
                assert keep == (inside and zone.contains(point))

    def test_adding_ue_never_enlarges(self, small_zone: PositioningZone):
        ues = [UserEquipmentFactory.create(position=Vec3(3, 3, 0))]
        radii = [12.0]
        before = feasible_mask(small_zone, ues, radii)
        ues.append(UserEquipmentFactory.create(position=Vec3(-4, 2, 0)))
        radii.append(10.0)
        after = feasible_mask(small_zone, ues, radii)
        assert not np.any(after & ~before)
