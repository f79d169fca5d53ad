from __future__ import annotations

import numpy as np
import pytest

from fap_planner.radio.mcs import DEFAULT_MIN_SNR_DB
from fap_planner.radio.mcs import McsEntry
from fap_planner.radio.mcs import McsTable
from fap_planner.radio.mcs import builtin_labels
from fap_planner.radio.mcs import builtin_table
from fap_planner.radio.mcs import select_mcs


class TestBuiltinTables:
    def test_labels(self):
        assert builtin_labels() == ("vht160-gi800-1ss", "vht20-gi800-1ss")

    def test_wide_channel_matches_demand_ladder(self, mcs_table: McsTable):
        rates = [e.phy_rate_bps for e in mcs_table.entries[:4]]
        assert rates == [58.5e6, 117e6, 175.5e6, 234e6]
        assert mcs_table.top_rate_bps == 702e6

    def test_narrow_channel(self):
        table = builtin_table("vht20-gi800-1ss")
        assert table.entry(0).phy_rate_bps == 6.5e6
        assert table.entry(8).phy_rate_bps == 78e6

    def test_threshold_override(self):
        table = builtin_table(thresholds=[1, 2, 3, 4, 5, 6, 7, 8, 9])
        assert table.entry(4).min_snr_db == 5

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown MCS table"):
            builtin_table("he80")

    def test_wrong_threshold_count(self):
        with pytest.raises(ValueError, match="needs 9 thresholds"):
            builtin_table(thresholds=[1, 2])


class TestTableInvariants:
    def test_empty(self):
        with pytest.raises(ValueError, match="no entries"):
            McsTable("x", ())

    def test_thresholds_must_increase(self):
        with pytest.raises(ValueError, match="min_snr_db"):
            McsTable("x", (McsEntry(0, 5, 1e6), McsEntry(1, 5, 2e6)))

    def test_rates_must_increase(self):
        with pytest.raises(ValueError, match="phy_rate_bps"):
            McsTable("x", (McsEntry(0, 5, 2e6), McsEntry(1, 8, 1e6)))

    def test_unknown_index(self, mcs_table: McsTable):
        with pytest.raises(ValueError, match="MCS index 12"):
            mcs_table.entry(12)

    def test_lowest_covering(self, mcs_table: McsTable):
        assert mcs_table.lowest_covering(100e6).index == 1
        assert mcs_table.lowest_covering(58.5e6).index == 0
        assert mcs_table.lowest_covering(1e9) is None


class TestSelectMcs:
    def test_below_every_threshold(self, mcs_table: McsTable):
        assert select_mcs(4.99, mcs_table) is None

    @pytest.mark.parametrize(("index", "snr"), list(enumerate(DEFAULT_MIN_SNR_DB)))
    def test_threshold_is_inclusive(self, mcs_table: McsTable, index: int, snr: float):
        assert select_mcs(snr, mcs_table).index == index

    def test_above_top(self, mcs_table: McsTable):
        assert select_mcs(80.0, mcs_table).index == 8

    def test_monotone_in_snr(self, mcs_table: McsTable):
        indices = [
            -1 if (e := select_mcs(s, mcs_table)) is None else e.index
            for s in np.linspace(-10, 40, 501)
        ]
        assert indices == sorted(indices)

    def test_vectorised_rates_agree(self, mcs_table: McsTable):
        snr = np.random.default_rng(5).uniform(-5, 40, size=1000)
        expected = [
            0.0 if (e := select_mcs(s, mcs_table)) is None else e.phy_rate_bps for s in snr
        ]
        assert mcs_table.rate_for_snr(snr).tolist() == expected
