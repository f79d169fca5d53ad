"""Link budgets: Friis SNR and ITU-R P.1411 LoS / NLoS over-rooftop losses.

All loss and SNR functions accept scalars or numpy arrays (broadcast against
each other) and return the same shape. Distances and heights are in metres,
powers in dBm, losses and SNRs in dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.constants import speed_of_light

from fap_planner.radio.geometry import line_of_sight

if TYPE_CHECKING:
    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

    from fap_planner.radio.geometry import Vec3
    from fap_planner.radio.geometry import Venue

VALID_BANDWIDTHS_MHZ = frozenset({20, 40, 80, 160})
# The two-slope model is undefined at zero antenna height.
MIN_ANTENNA_HEIGHT_M = 0.1

_FOUR_PI_OVER_C_DB = 20 * math.log10(4 * math.pi / speed_of_light)


@dataclass(frozen=True, slots=True)
class RadioConfig:
    frequency_hz: float = 5.25e9
    tx_power_dbm: float = 20.0
    noise_floor_dbm: float = -85.0
    bandwidth_mhz: int = 20
    guard_interval_ns: int = 800
    antenna_gain_dbi: float = 0.0

    def __post_init__(self) -> None:
        if not self.frequency_hz > 0:
            msg = f"frequency_hz must be positive, got {self.frequency_hz}"
            raise ValueError(msg)
        if self.bandwidth_mhz not in VALID_BANDWIDTHS_MHZ:
            msg = f"bandwidth_mhz must be one of {sorted(VALID_BANDWIDTHS_MHZ)}, got {self.bandwidth_mhz}"
            raise ValueError(msg)

    @property
    def frequency_mhz(self) -> float:
        return self.frequency_hz / 1e6

    @property
    def wavelength_m(self) -> float:
        return speed_of_light / self.frequency_hz

    def snr_from_loss(self, path_loss_db: ArrayLike) -> NDArray[np.float64]:
        return (
            self.tx_power_dbm
            + self.antenna_gain_dbi
            - np.asarray(path_loss_db, dtype=np.float64)
            - self.noise_floor_dbm
        )


@dataclass(frozen=True, slots=True)
class NlosEnvironment:
    """Street-canyon parameters of the over-rooftop model."""

    rooftop_height_m: float = 17.5
    street_width_m: float = 20.0
    building_separation_m: float = 30.0
    street_orientation_deg: float = 45.0

    def __post_init__(self) -> None:
        for name in ("rooftop_height_m", "street_width_m", "building_separation_m"):
            if not getattr(self, name) > 0:
                msg = f"{name} must be positive, got {getattr(self, name)}"
                raise ValueError(msg)
        if not 0 <= self.street_orientation_deg <= 90:
            msg = f"street_orientation_deg must lie in [0, 90], got {self.street_orientation_deg}"
            raise ValueError(msg)


@dataclass(frozen=True, slots=True)
class LinkBudget:
    distance_m: float
    path_loss_db: float
    snr_db: float
    los: bool


def _positive(name: str, value: ArrayLike) -> NDArray[np.float64]:
    array = np.asarray(value, dtype=np.float64)
    if np.any(~(array > 0)):
        msg = f"{name} must be positive, got {value}"
        raise ValueError(msg)
    return array


def friis_constant_db(radio: RadioConfig) -> float:
    """K = -20 log f - 20 log(4 pi / c) - P_N."""
    return -20 * math.log10(radio.frequency_hz) - _FOUR_PI_OVER_C_DB - radio.noise_floor_dbm


def friis_snr(d: ArrayLike, radio: RadioConfig) -> NDArray[np.float64]:
    distance = _positive("distance", d)
    return radio.tx_power_dbm + radio.antenna_gain_dbi - 20 * np.log10(distance) + friis_constant_db(radio)


def friis_max_distance(snr_min: ArrayLike, radio: RadioConfig) -> NDArray[np.float64]:
    exponent = (
        friis_constant_db(radio)
        + radio.tx_power_dbm
        + radio.antenna_gain_dbi
        - np.asarray(snr_min, dtype=np.float64)
    ) / 20
    return np.power(10.0, exponent)


def itu1411_los_loss(
    d: ArrayLike,
    radio: RadioConfig,
    h_uav: ArrayLike,
    h_ue: ArrayLike,
) -> NDArray[np.float64]:
    """Median of the two-slope line-of-sight model."""
    distance = _positive("distance", d)
    h1 = _positive("h_uav", h_uav)
    h2 = _positive("h_ue", h_ue)
    wavelength = radio.wavelength_m
    breakpoint_m = 4 * h1 * h2 / wavelength
    breakpoint_loss = np.abs(20 * np.log10(wavelength**2 / (8 * np.pi * h1 * h2)))
    slope = np.where(distance <= breakpoint_m, 20.0, 40.0)
    return breakpoint_loss + 6 + slope * np.log10(distance / breakpoint_m)


def _orientation_loss(phi_deg: float) -> float:
    if phi_deg < 35:
        return -10 + 0.354 * phi_deg
    if phi_deg < 55:
        return 2.5 + 0.075 * (phi_deg - 35)
    return 4.0 - 0.114 * (phi_deg - 55)


def rooftop_lower_margin_m(building_separation_m: float, f_ghz: float) -> float:
    """Height margin below the rooftops where the near-field Q_M switches to its low-station form."""
    b = building_separation_m
    return (0.00023 * b**2 - 0.1827 * b - 9.4978) / math.log10(f_ghz) ** 2.938 + 0.000781 * b + 0.06923


def _multiscreen_loss(  # noqa: PLR0913
    distance: NDArray[np.float64],
    h_base: NDArray[np.float64],
    f_mhz: float,
    wavelength: float,
    h_r: float,
    b: float,
) -> NDArray[np.float64]:
    delta_hb = h_base - h_r
    above = h_base > h_r
    with np.errstate(divide="ignore", invalid="ignore"):
        settled_distance = wavelength * distance**2 / delta_hb**2

    # Far from the base station: the settled-field expression.
    l_bsh = np.where(above, -18 * np.log10(1 + np.abs(delta_hb)), 0.0)
    if f_mhz > 2000:
        k_a_above = 71.4
        k_f = -8.0
    else:
        k_a_above = 54.0
        k_f = -4 + 0.7 * (f_mhz / 925 - 1)
    k_a = np.where(
        above,
        k_a_above,
        np.where(distance >= 500, 54 - 0.8 * delta_hb, 54 - 1.6 * delta_hb * distance / 1000),
    )
    k_d = np.where(above, 18.0, 18 - 15 * delta_hb / h_r)
    settled = l_bsh + k_a + k_d * np.log10(distance / 1000) + k_f * math.log10(f_mhz) - 9 * math.log10(b)

    # Close in: the base-station-height dependent Q_M expressions.
    upper_band = 10 ** (
        -math.log10(math.sqrt(b / wavelength)) - np.log10(distance) / 9 + (10 / 9) * math.log10(b / 2.35)
    )
    lower_band = rooftop_lower_margin_m(b, f_mhz / 1000)
    theta = np.arctan(np.abs(delta_hb) / b)
    rho = np.sqrt(delta_hb**2 + b**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        q_high = 2.35 * np.power(np.abs(delta_hb) / distance * math.sqrt(b / wavelength), 0.9)
        q_low = (b / (2 * np.pi * distance)) * np.sqrt(wavelength / rho) * (1 / theta - 1 / (2 * np.pi + theta))
    q_band = b / distance
    q_m = np.where(h_base > h_r + upper_band, q_high, np.where(h_base >= h_r - lower_band, q_band, q_low))
    with np.errstate(divide="ignore", invalid="ignore"):
        near = -10 * np.log10(q_m**2)

    return np.where(distance > settled_distance, settled, near)


def itu1411_nlos_rooftop_loss(
    d: ArrayLike,
    radio: RadioConfig,
    env: NlosEnvironment | None = None,
    *,
    h_uav: ArrayLike,
    h_ue: ArrayLike,
) -> NDArray[np.float64]:
    """Over-rooftop NLoS loss, clamped to at least the LoS loss at the same distance.

    The higher of the two stations plays the base station, the lower the mobile,
    which must sit below the average rooftop height.
    """
    env = env or NlosEnvironment()
    distance = _positive("distance", d)
    h1 = _positive("h_uav", h_uav)
    h2 = _positive("h_ue", h_ue)
    h_base = np.maximum(h1, h2)
    h_mobile = np.minimum(h1, h2)
    h_r = env.rooftop_height_m
    if np.any(h_mobile >= h_r):
        msg = f"mobile height must be below the rooftop height {h_r} m for the over-rooftop model"
        raise ValueError(msg)

    f_mhz = radio.frequency_mhz
    free_space = 32.4 + 20 * np.log10(distance / 1000) + 20 * math.log10(f_mhz)
    rooftop_to_street = (
        -8.2
        - 10 * math.log10(env.street_width_m)
        + 10 * math.log10(f_mhz)
        + 20 * np.log10(h_r - h_mobile)
        + _orientation_loss(env.street_orientation_deg)
    )
    multiscreen = _multiscreen_loss(
        distance,
        h_base,
        f_mhz,
        radio.wavelength_m,
        h_r,
        env.building_separation_m,
    )
    diffraction = rooftop_to_street + multiscreen
    loss = np.where(diffraction > 0, free_space + diffraction, free_space)
    return np.maximum(loss, itu1411_los_loss(distance, radio, h1, h2))


def path_loss_db(  # noqa: PLR0913
    d: ArrayLike,
    los: ArrayLike,
    radio: RadioConfig,
    env: NlosEnvironment | None = None,
    *,
    h_uav: ArrayLike,
    h_ue: ArrayLike,
) -> NDArray[np.float64]:
    """Loss of many links at once, picking the curve by the ``los`` flags."""
    h1 = np.maximum(np.asarray(h_uav, dtype=np.float64), MIN_ANTENNA_HEIGHT_M)
    h2 = np.maximum(np.asarray(h_ue, dtype=np.float64), MIN_ANTENNA_HEIGHT_M)
    los_flags = np.asarray(los, dtype=bool)
    los_loss = itu1411_los_loss(d, radio, h1, h2)
    if np.all(los_flags):
        return los_loss
    nlos_loss = itu1411_nlos_rooftop_loss(d, radio, env, h_uav=h1, h_ue=h2)
    return np.where(los_flags, los_loss, nlos_loss)


def link_budget(
    uav: Vec3,
    ue_pos: Vec3,
    venue: Venue,
    radio: RadioConfig,
    env: NlosEnvironment | None = None,
) -> LinkBudget:
    los = line_of_sight(uav, ue_pos, venue)
    distance = uav.distance_to(ue_pos)
    loss = float(path_loss_db(distance, los, radio, env, h_uav=uav.z, h_ue=ue_pos.z))
    return LinkBudget(
        distance_m=distance,
        path_loss_db=loss,
        snr_db=float(radio.snr_from_loss(loss)),
        los=los,
    )
