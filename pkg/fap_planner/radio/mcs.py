"""802.11ac single-stream MCS ladders and SNR-to-rate selection."""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

DEFAULT_TABLE_LABEL = "vht160-gi800-1ss"

# Minimum SNR (dB) per MCS index; a representative receiver-sensitivity ladder.
DEFAULT_MIN_SNR_DB: tuple[float, ...] = (5.0, 8.0, 12.0, 15.0, 19.0, 23.0, 25.0, 27.0, 30.0)

_MODULATIONS = (
    "BPSK 1/2",
    "QPSK 1/2",
    "QPSK 3/4",
    "16-QAM 1/2",
    "16-QAM 3/4",
    "64-QAM 2/3",
    "64-QAM 3/4",
    "64-QAM 5/6",
    "256-QAM 3/4",
)

# Mbit/s, one spatial stream, 800 ns guard interval.
_BUILTIN_RATES_MBPS: dict[str, tuple[float, ...]] = {
    "vht160-gi800-1ss": (58.5, 117.0, 175.5, 234.0, 351.0, 468.0, 526.5, 585.0, 702.0),
    "vht20-gi800-1ss": (6.5, 13.0, 19.5, 26.0, 39.0, 52.0, 58.5, 65.0, 78.0),
}


@dataclass(frozen=True, slots=True)
class McsEntry:
    index: int
    min_snr_db: float
    phy_rate_bps: float
    modulation: str = ""


@dataclass(frozen=True, slots=True)
class McsTable:
    label: str
    entries: tuple[McsEntry, ...]
    _thresholds: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    _rates: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.entries:
            msg = f"MCS table {self.label!r} has no entries"
            raise ValueError(msg)
        for previous, current in zip(self.entries, self.entries[1:], strict=False):
            if current.index <= previous.index:
                msg = f"MCS table {self.label!r} is not sorted by index at {current.index}"
                raise ValueError(msg)
            if current.min_snr_db <= previous.min_snr_db:
                msg = f"MCS table {self.label!r}: min_snr_db must increase with index (MCS {current.index})"
                raise ValueError(msg)
            if current.phy_rate_bps <= previous.phy_rate_bps:
                msg = f"MCS table {self.label!r}: phy_rate_bps must increase with index (MCS {current.index})"
                raise ValueError(msg)
        object.__setattr__(
            self,
            "_thresholds",
            np.array([e.min_snr_db for e in self.entries], dtype=np.float64),
        )
        object.__setattr__(
            self,
            "_rates",
            np.array([e.phy_rate_bps for e in self.entries], dtype=np.float64),
        )

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(e.index for e in self.entries)

    @property
    def top_rate_bps(self) -> float:
        return self.entries[-1].phy_rate_bps

    def entry(self, index: int) -> McsEntry:
        for candidate in self.entries:
            if candidate.index == index:
                return candidate
        msg = f"MCS index {index} is not in table {self.label!r} (has {self.indices})"
        raise ValueError(msg)

    def lowest_covering(self, demand_bps: float) -> McsEntry | None:
        """The lowest entry whose PHY rate covers ``demand_bps``."""
        for candidate in self.entries:
            if candidate.phy_rate_bps >= demand_bps:
                return candidate
        return None

    def position_for_snr(self, snr_db: ArrayLike) -> NDArray[np.intp]:
        """Position in ``entries`` of the selected MCS, -1 where the link is down."""
        return np.searchsorted(self._thresholds, np.asarray(snr_db, dtype=np.float64), side="right") - 1

    def rate_for_snr(self, snr_db: ArrayLike) -> NDArray[np.float64]:
        """PHY rate selected for every SNR in ``snr_db``; 0 below the lowest threshold."""
        position = self.position_for_snr(snr_db)
        return np.where(position >= 0, self._rates[np.maximum(position, 0)], 0.0)


def builtin_table(label: str = DEFAULT_TABLE_LABEL, thresholds: Sequence[float] | None = None) -> McsTable:
    try:
        rates = _BUILTIN_RATES_MBPS[label]
    except KeyError:
        msg = f"unknown MCS table {label!r}; choose one of {sorted(_BUILTIN_RATES_MBPS)}"
        raise ValueError(msg) from None
    min_snr = DEFAULT_MIN_SNR_DB if thresholds is None else tuple(float(t) for t in thresholds)
    if len(min_snr) != len(rates):
        msg = f"table {label!r} needs {len(rates)} thresholds, got {len(min_snr)}"
        raise ValueError(msg)
    return McsTable(
        label=label,
        entries=tuple(
            McsEntry(index=i, min_snr_db=snr, phy_rate_bps=rate * 1e6, modulation=modulation)
            for i, (snr, rate, modulation) in enumerate(zip(min_snr, rates, _MODULATIONS, strict=True))
        ),
    )


def builtin_labels() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN_RATES_MBPS))


def select_mcs(snr_db: float, table: McsTable) -> McsEntry | None:
    """Highest entry whose threshold is at or below ``snr_db``."""
    position = int(table.position_for_snr(snr_db))
    if position < 0:
        return None
    return table.entries[position]
