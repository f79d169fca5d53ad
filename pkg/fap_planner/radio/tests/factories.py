from __future__ import annotations

from factory import Factory
from factory import Faker
from factory import LazyAttribute
from factory import Sequence
from factory import SubFactory

from fap_planner.radio.feasibility import UserEquipment
from fap_planner.radio.geometry import Building
from fap_planner.radio.geometry import Vec3


class Vec3Factory(Factory[Vec3]):
    x = Faker("pyfloat", min_value=-50, max_value=50)
    y = Faker("pyfloat", min_value=-50, max_value=50)
    z = Faker("pyfloat", min_value=0, max_value=100)

    class Meta:
        model = Vec3


class BuildingFactory(Factory[Building]):
    x_min = Faker("pyfloat", min_value=-40, max_value=20)
    y_min = Faker("pyfloat", min_value=-40, max_value=20)
    z_min = 0.0
    x_max = LazyAttribute(lambda o: o.x_min + 10)
    y_max = LazyAttribute(lambda o: o.y_min + 10)
    z_max = 20.0
    floors = 5
    x_rooms = 3
    y_rooms = 2

    class Meta:
        model = Building


class UserEquipmentFactory(Factory[UserEquipment]):
    id = Sequence(lambda n: n)
    position = SubFactory(Vec3Factory, z=1.5)
    demand_bps = 58.5e6
    demanded_mcs = 0

    class Meta:
        model = UserEquipment
