import json
from datetime import datetime

import pytest
from hypothesis import given, settings, strategies as st

from noisescape.aggregate import aggregate_hourly
from noisescape.changepoint import detect_single
from noisescape.ingest import audit_gaps, load_schools, load_stations, load_traffic, parse_samples
from noisescape.model import PeriodSplit
from noisescape.spatial import school_count, station_traffic
from noisescape.synthgen import (
    GOLDEN_STATIONS,
    GOLDEN_TRAFFIC,
    ScenarioSpec,
    StationScenario,
    generate,
    golden_scenario,
    golden_sites,
)

WINDOW = PeriodSplit(datetime(2020, 3, 10), datetime(2020, 3, 16), datetime(2020, 3, 22))


def spec(**kw):
    return ScenarioSpec([StationScenario("S1", **kw)], seed=1, window=WINDOW)


def test_noiseless_constant():
    out = generate(spec(base_db=58.0))
    samples, rep = parse_samples(out.samples_csv)
    assert rep.rows_flagged == 0
    assert len(samples) == 6 * 2 * 288
    assert {s.leq for s in samples} == {58.0} and {s.lmax for s in samples} == {58.0}


def test_step_recorded_and_recovered():
    step = datetime(2020, 3, 16)
    out = generate(spec(base_db=60.0, step_at=step, step_db=-6.0, noise_sd_db=1.0, lmax_excess_db=3.0))
    truth = out.manifest["truth"]["S1"]
    assert truth["step_at"] == "2020-03-16T00:00"
    samples, _ = parse_samples(out.samples_csv)
    hours = aggregate_hourly(samples)["S1"]
    r = detect_single([h.avg for h in hours])
    assert hours[r.tau].hour_start == step


def test_gap_pattern_deterministic():
    a = generate(spec(base_db=60.0, missing_prob=0.1))
    b = generate(spec(base_db=60.0, missing_prob=0.1))
    assert a.samples_csv == b.samples_csv
    samples, _ = parse_samples(a.samples_csv)
    gaps = audit_gaps(samples, WINDOW)["S1"]
    assert len(gaps) == a.manifest["truth"]["S1"]["slots_missing"]
    assert 0.07 < len(gaps) / (12 * 288) < 0.13


def test_seed_changes_output():
    s1 = ScenarioSpec([StationScenario("S1", noise_sd_db=1.0)], seed=1, window=WINDOW)
    s2 = ScenarioSpec([StationScenario("S1", noise_sd_db=1.0)], seed=2, window=WINDOW)
    assert generate(s1).samples_csv != generate(s2).samples_csv


def test_station_streams_independent():
    one = ScenarioSpec([StationScenario("A", noise_sd_db=1.0)], seed=9, window=WINDOW)
    two = ScenarioSpec([StationScenario("A", noise_sd_db=1.0), StationScenario("B", noise_sd_db=1.0)], seed=9, window=WINDOW)
    a_only = generate(one).samples_csv
    a_rows = [r for r in generate(two).samples_csv.splitlines() if r.startswith("A,")]
    assert a_rows == [r for r in a_only.splitlines() if r.startswith("A,")]


@settings(max_examples=10, deadline=None)
@given(
    st.floats(30, 100),
    st.floats(0, 3),
    st.floats(0, 0.3),
    st.floats(0, 8),
    st.integers(0, 2**32),
)
def test_roundtrip_zero_flags(base, sd, miss, excess, seed):
    sc = ScenarioSpec([StationScenario("X", base_db=base, noise_sd_db=sd, missing_prob=miss, lmax_excess_db=excess)], seed=seed, window=WINDOW)
    samples, rep = parse_samples(generate(sc).samples_csv)
    assert rep.rows_flagged == 0 and rep.rows_accepted == len(samples)


def test_spec_json_roundtrip():
    sc = golden_scenario()
    again = ScenarioSpec.from_json(json.dumps(sc.to_dict()))
    assert again.to_dict() == sc.to_dict()


def test_spec_validation():
    with pytest.raises(ValueError):
        StationScenario("a", noise_sd_db=-1)
    with pytest.raises(ValueError):
        StationScenario("a", missing_prob=1.0)
    with pytest.raises(ValueError):
        StationScenario("a", base_db=float("inf"))
    with pytest.raises(ValueError):
        StationScenario("a", band_offsets={"dawn": 1.0})


def test_golden_scenario_shape():
    sc = golden_scenario()
    assert len(sc.stations) == 12
    early = [s for s in sc.stations if datetime(2020, 3, 14) <= s.step_at <= datetime(2020, 3, 17)]
    late = [s for s in sc.stations if datetime(2020, 3, 19) <= s.step_at <= datetime(2020, 3, 29)]
    assert len(early) == 7 and len(late) == 5
    assert all(s.drift_db_per_day < 0 and s.step_db < 0 for s in sc.stations)


def test_golden_sites():
    files = golden_sites()
    stations, rep = load_stations(files["stations.csv"])
    assert rep.rows_flagged == 0 and [s.station_id for s in stations] == [g[0] for g in GOLDEN_STATIONS]
    schools, _ = load_schools(files["schools.csv"])
    assert school_count(stations, schools) == {g[0]: g[5] for g in GOLDEN_STATIONS}
    traffic, _ = load_traffic(files["traffic.csv"])
    rows = station_traffic(stations, traffic)
    for row, expected in zip(rows, GOLDEN_TRAFFIC):
        assert [round(row.mean_count[b], 6) for b in row.mean_count] == pytest.approx(expected)
        assert row.n_points_in_radius == 2
