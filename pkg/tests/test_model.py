from datetime import datetime, timedelta

import pytest
from hypothesis import given, strategies as st

from noisescape.model import (
    DEFAULT_SPLIT,
    BandScheme,
    GeoPoint,
    HourlyMetrics,
    Period,
    PeriodSplit,
    TimeBand,
    band_hours,
    band_of,
    check_decibel,
    period_of,
    station_key,
)


@pytest.mark.parametrize(
    "hhmm, band",
    [
        ("03:15", TimeBand.NIGHT),
        ("07:00", TimeBand.DAY),
        ("23:00", TimeBand.NIGHT),
        ("06:59", TimeBand.NIGHT),
        ("18:59", TimeBand.DAY),
        ("19:00", TimeBand.EVENING),
        ("22:59", TimeBand.EVENING),
        ("00:00", TimeBand.NIGHT),
    ],
)
def test_band_of_examples(hhmm, band):
    assert band_of(datetime.fromisoformat(f"2020-02-01T{hhmm}")) is band


def test_bands_partition_the_day():
    sizes = {b: 0 for b in TimeBand}
    for h in range(24):
        sizes[band_of(datetime(2020, 1, 1, h))] += 1
    assert sizes == {TimeBand.NIGHT: 8, TimeBand.DAY: 12, TimeBand.EVENING: 4}
    hours = sorted(h for b in TimeBand for h in band_hours(b))
    assert hours == list(range(24))


def test_band_hours_order():
    assert band_hours(TimeBand.NIGHT) == (23, 0, 1, 2, 3, 4, 5, 6)
    assert band_hours(TimeBand.EVENING) == (19, 20, 21, 22)


def test_custom_band_scheme():
    bands = BandScheme(6, 18, 22)
    assert band_of(datetime(2020, 1, 1, 6), bands) is TimeBand.DAY
    assert band_of(datetime(2020, 1, 1, 22), bands) is TimeBand.NIGHT
    assert len(bands.hours(TimeBand.EVENING)) == 4
    with pytest.raises(ValueError):
        BandScheme(7, 7, 23)


@pytest.mark.parametrize(
    "ts, period",
    [
        ("2020-03-24T23:00", Period.PRE),
        ("2020-03-25T00:00", Period.DURING),
        ("2020-01-01T00:00", Period.PRE),
        ("2020-05-11T23:00", Period.DURING),
    ],
)
def test_period_of_examples(ts, period):
    assert period_of(datetime.fromisoformat(ts)) is period


@pytest.mark.parametrize("ts", ["2019-12-31T23:55", "2020-05-12T00:00"])
def test_period_of_out_of_window(ts):
    with pytest.raises(ValueError):
        period_of(datetime.fromisoformat(ts))


@given(st.datetimes(min_value=datetime(2020, 1, 1), max_value=datetime(2020, 5, 11, 23, 59)))
def test_period_partition(ts):
    p = period_of(ts)
    lo, hi = DEFAULT_SPLIT.bounds(p)
    assert lo <= ts < hi
    other = Period.DURING if p is Period.PRE else Period.PRE
    lo2, hi2 = DEFAULT_SPLIT.bounds(other)
    assert not lo2 <= ts < hi2


def test_calendar_hours():
    assert DEFAULT_SPLIT.hours(Period.PRE) == 2016
    assert DEFAULT_SPLIT.hours(Period.DURING) == 1152
    assert len(DEFAULT_SPLIT.dates()) == 132


def test_period_split_ordering():
    with pytest.raises(ValueError):
        PeriodSplit(datetime(2020, 3, 1), datetime(2020, 2, 1), datetime(2020, 4, 1))


@pytest.mark.parametrize("lat, lon", [(91.0, 0.0), (-90.5, 0.0), (0.0, 180.1), (float("nan"), 0.0)])
def test_geopoint_range(lat, lon):
    with pytest.raises(ValueError):
        GeoPoint(lat, lon)


def test_decibel_check():
    assert check_decibel(0.0) and check_decibel(140.0)
    assert not check_decibel(-0.1)
    assert not check_decibel(140.01)
    assert not check_decibel(float("inf"))


def test_low_coverage_flag():
    t = datetime(2020, 1, 1)
    assert HourlyMetrics("a", t, 50, 50, 50, 5).low_coverage
    assert not HourlyMetrics("a", t, 50, 50, 50, 6).low_coverage


def test_station_key_orders_numbers_numerically():
    assert sorted(["10", "2", "1", "b", "a"], key=station_key) == ["1", "2", "10", "a", "b"]


def test_value_objects_are_immutable():
    p = GeoPoint(1.0, 2.0)
    with pytest.raises(Exception):
        p.lat = 3.0  # type: ignore[misc]
    assert DEFAULT_SPLIT.analysis_end - DEFAULT_SPLIT.analysis_start == timedelta(days=132)
