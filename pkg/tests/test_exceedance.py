from datetime import datetime, timedelta

import pytest
from hypothesis import given, settings, strategies as st

from noisescape.exceedance import ExceedanceRow, exceedance_report, percentage, period_summary
from noisescape.model import DEFAULT_SPLIT

from conftest import hourly_series

SPLIT = DEFAULT_SPLIT.split_instant
START = DEFAULT_SPLIT.analysis_start


def test_table_pair_percentage():
    assert percentage(1393, 2015) == 69.13
    assert ExceedanceRow("1", 1393, 247, 2015, 1153).pre_pct == 69.13


def test_percentage_rounding_half_up():
    assert percentage(1, 8) == 12.5
    # 100 * 1 / 16 = 6.25 exactly; 100 * 1 / 32 = 3.125 -> 3.13
    assert percentage(1, 32) == 3.13
    assert percentage(1, 3) == 33.33
    with pytest.raises(ValueError):
        percentage(1, 0)


def test_strict_threshold():
    (row,) = exceedance_report({"a": hourly_series([55.0] * 48, start=SPLIT - timedelta(hours=24))})
    assert (row.pre_count, row.during_count, row.pre_total, row.during_total) == (0, 0, 24, 24)


def test_ten_of_forty():
    vals = [56.0] * 10 + [54.0] * 30
    (row,) = exceedance_report({"a": hourly_series(vals, start=START)})
    assert row.pre_pct == 25.0 and row.during_pct is None
    assert sum(v > 55 for v in vals) == row.pre_count


def test_data_present_denominators_and_window():
    hours = hourly_series([60.0] * 10, start=START - timedelta(hours=5))
    del hours[7]
    (row,) = exceedance_report({"a": hours})
    assert row.pre_total == 4 == row.pre_count


def test_station_without_data_omitted(caplog):
    out = exceedance_report({"a": hourly_series([60.0], start=datetime(2019, 1, 1)), "b": hourly_series([60.0])})
    assert [r.station_id for r in out] == ["b"]
    assert "no hourly data" in caplog.text


def test_strict_coverage_mode():
    hours = hourly_series([60.0] * 4, start=START)
    hours[0] = hours[0]._replace(n_samples=2)
    assert exceedance_report({"a": hours}, strict=True)[0].pre_total == 3
    assert exceedance_report({"a": hours})[0].pre_total == 4


levels = st.lists(st.floats(40, 70), min_size=1, max_size=200)


@settings(max_examples=60)
@given(levels, st.integers(-100, 100), st.floats(40, 70), st.floats(0, 10))
def test_partition_and_threshold_monotone(vals, offset, thr, bump):
    hours = hourly_series(vals, start=SPLIT + timedelta(hours=offset))
    (row,) = exceedance_report({"a": hours}, thr)
    assert row.pre_count + row.during_count == sum(v > thr for v in vals)
    assert row.pre_total + row.during_total == len(vals)
    assert 0 <= row.pre_count <= row.pre_total and 0 <= row.during_count <= row.during_total
    (hi,) = exceedance_report({"a": hours}, thr + bump)
    assert hi.pre_count <= row.pre_count and hi.during_count <= row.during_count


def test_period_summary_examples():
    both = hourly_series([60.0] * 48, start=SPLIT - timedelta(hours=24))
    (s,) = period_summary({"a": both})
    assert (s.pre_avg, s.during_avg) == (60.0, 60.0)
    drop = hourly_series([60.0] * 24 + [50.0] * 24, start=SPLIT - timedelta(hours=24))
    (s,) = period_summary({"a": drop})
    assert (s.pre_avg, s.during_avg, s.reduction) == (60.0, 50.0, 10.0)
    (s,) = period_summary({"a": hourly_series([60.0, 70.0], start=START)})
    assert s.pre_avg == pytest.approx(67.403626894942438, abs=1e-12)
    assert s.during_avg is None and s.reduction is None
