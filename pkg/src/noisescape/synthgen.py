"""Seeded synthetic 5-minute noise records with known ground truth.

Each station's noiseless level at time ``t`` is::

    base + band_offset[band(t)] + drift * days_since_start + step * [t >= step_at]

and a sample is ``leq = level + N(0, noise_sd)``, ``lmax = leq + Exp(lmax_excess)``,
both rounded to 0.01 dB. Slots go missing independently with
``missing_prob``. Random numbers come from NumPy's PCG64 generator; each
station draws from its own stream spawned from the global seed with
``SeedSequence``, so a station's data does not depend on the others.

Scenario files are JSON::

    {"seed": 7,
     "window": {"start": "2020-01-01T00:00", "split": "2020-03-25T00:00",
                "end": "2020-05-12T00:00"},
     "stations": [{"station_id": "1", "base_db": 62.0,
                   "band_offsets": {"night": -1.5, "day": 1, "evening": 0},
                   "drift_db_per_day": -0.02,
                   "step_at": "2020-03-19T00:00", "step_db": -6.0,
                   "noise_sd_db": 1.0, "missing_prob": 0.0,
                   "lmax_excess_db": 6.0}]}
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .model import DB_MAX, DB_MIN, SLOT, PeriodSplit, TimeBand, band_of
from .spatial import EARTH_RADIUS_M

__all__ = [
    "StationScenario",
    "ScenarioSpec",
    "SynthOutput",
    "generate",
    "golden_scenario",
    "GOLDEN_STATIONS",
    "GOLDEN_TRAFFIC",
    "golden_sites",
    "destination",
]

SLOTS_PER_HOUR = 12
_LN10_OVER_20 = math.log(10.0) / 20.0


@dataclass
class StationScenario:
    station_id: str
    base_db: float = 60.0
    band_offsets: dict[str, float] = field(
        default_factory=lambda: {"night": 0.0, "day": 0.0, "evening": 0.0}
    )
    drift_db_per_day: float = 0.0
    step_at: datetime | None = None
    step_db: float = 0.0
    noise_sd_db: float = 0.0
    missing_prob: float = 0.0
    lmax_excess_db: float = 0.0

    def __post_init__(self):
        for key in ("base_db", "drift_db_per_day", "step_db", "noise_sd_db", "lmax_excess_db"):
            if not math.isfinite(getattr(self, key)):
                raise ValueError(f"{key} must be finite")
        if self.noise_sd_db < 0 or self.lmax_excess_db < 0:
            raise ValueError("noise_sd_db and lmax_excess_db must be >= 0")
        if not 0.0 <= self.missing_prob < 1.0:
            raise ValueError("missing_prob must lie in [0, 1)")
        self.band_offsets = {str(TimeBand(k)): float(v) for k, v in self.band_offsets.items()}
        for band in TimeBand:
            self.band_offsets.setdefault(str(band), 0.0)


@dataclass
class ScenarioSpec:
    stations: list[StationScenario]
    seed: int = 0
    window: PeriodSplit = field(default_factory=PeriodSplit)
    threshold_db: float = 55.0

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        w = d.get("window", {})
        window = PeriodSplit(
            datetime.fromisoformat(w.get("start", "2020-01-01T00:00")),
            datetime.fromisoformat(w.get("split", "2020-03-25T00:00")),
            datetime.fromisoformat(w.get("end", "2020-05-12T00:00")),
        )
        stations = []
        for s in d["stations"]:
            s = dict(s)
            if s.get("step_at"):
                s["step_at"] = datetime.fromisoformat(s["step_at"])
            stations.append(StationScenario(**s))
        return cls(stations, int(d.get("seed", 0)), window, float(d.get("threshold_db", 55.0)))

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        stations = []
        for s in self.stations:
            row = asdict(s)
            row["step_at"] = s.step_at.isoformat(timespec="minutes") if s.step_at else None
            stations.append(row)
        return {
            "seed": self.seed,
            "threshold_db": self.threshold_db,
            "window": {
                "start": self.window.analysis_start.isoformat(timespec="minutes"),
                "split": self.window.split_instant.isoformat(timespec="minutes"),
                "end": self.window.analysis_end.isoformat(timespec="minutes"),
            },
            "stations": stations,
        }


@dataclass
class SynthOutput:
    samples_csv: str
    manifest: dict

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"


class _Grid:
    """Slot timestamps and per-slot calendar features shared by all stations."""

    def __init__(self, window: PeriodSplit):
        n = int((window.analysis_end - window.analysis_start) // SLOT)
        self.slots = [window.analysis_start + k * SLOT for k in range(n)]
        self.stamps = [t.isoformat(timespec="minutes") for t in self.slots]
        self.days = np.arange(n) * (SLOT / timedelta(days=1))
        bands = [band_of(t) for t in self.slots]
        self.in_band = {b: np.array([x is b for x in bands]) for b in TimeBand}
        self.hour_starts = self.slots[::SLOTS_PER_HOUR][: n // SLOTS_PER_HOUR]


def _noiseless_levels(st: StationScenario, grid: _Grid) -> np.ndarray:
    level = st.base_db + st.drift_db_per_day * grid.days
    for band, mask in grid.in_band.items():
        level = level + st.band_offsets[str(band)] * mask
    if st.step_at is not None:
        k = np.searchsorted(np.array(grid.slots, dtype="datetime64[m]"), np.datetime64(st.step_at, "m"))
        level[k:] += st.step_db
    return level


def _energy_rows(levels: np.ndarray, present: np.ndarray) -> np.ndarray:
    # energy mean along axis 1 over present entries; NaN where none present
    power = np.where(present, 10.0 ** (levels / 10.0), 0.0)
    k = present.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(k > 0, 10.0 * np.log10(power.sum(axis=1) / np.maximum(k, 1)), np.nan)


def _truth(st: StationScenario, spec: ScenarioSpec, grid: _Grid, level, present) -> dict:
    window = spec.window
    n_hours = len(grid.hour_starts)
    lv = level[: n_hours * SLOTS_PER_HOUR].reshape(n_hours, SLOTS_PER_HOUR)
    pr = present[: n_hours * SLOTS_PER_HOUR].reshape(n_hours, SLOTS_PER_HOUR)
    k = pr.sum(axis=1)
    hour_level = _energy_rows(lv, pr)
    # expected upward shift of an energy average of k noisy samples
    bias = _LN10_OVER_20 * st.noise_sd_db**2 * (1.0 - 1.0 / np.maximum(k, 1))
    expected = hour_level + bias
    hour_starts = grid.hour_starts
    has = k > 0
    pre = np.array([h < window.split_instant for h in hour_starts])
    exceed = (expected > spec.threshold_db) & has

    def pct(c, t):
        return round(100.0 * c / t, 4) if t else None

    pre_t, dur_t = int((has & pre).sum()), int((has & ~pre).sum())
    pre_c, dur_c = int((exceed & pre).sum()), int((exceed & ~pre).sum())
    margin = float(np.min(np.abs(expected[has] - spec.threshold_db))) if has.any() else None

    bands = {}
    for band in TimeBand:
        by_date: dict = {}
        for i, h in enumerate(hour_starts):
            if has[i] and band_of(h) is band:
                d = (h - timedelta(days=1)).date() if h.hour < 7 else h.date()
                by_date.setdefault(d, []).append(hour_level[i])
        dates = sorted(by_date)
        x = np.array([(d - dates[0]).days for d in dates], dtype=float)
        metrics = {
            "avg": [10 * math.log10(np.mean(10 ** (np.array(by_date[d]) / 10))) for d in dates],
            "max": [max(by_date[d]) for d in dates],
            "min": [min(by_date[d]) for d in dates],
        }
        slopes = {m: float(np.polyfit(x, np.array(v), 1)[0]) for m, v in metrics.items()}
        in_band = grid.in_band[band]
        bands[str(band)] = {
            "expected_slope_db_per_day": slopes,
            "mean_level_db": float(10 * np.log10(np.mean(10 ** (level[in_band] / 10)))),
        }

    return {
        "step_at": st.step_at.isoformat(timespec="minutes") if st.step_at else None,
        "step_db": st.step_db,
        "drift_db_per_day": st.drift_db_per_day,
        "bands": bands,
        "exceedance": {
            "threshold_db": spec.threshold_db,
            "pre_count": pre_c,
            "pre_total": pre_t,
            "during_count": dur_c,
            "during_total": dur_t,
            "pre_pct": pct(pre_c, pre_t),
            "during_pct": pct(dur_c, dur_t),
            "min_margin_db": margin,
        },
        "hours_with_data": int(has.sum()),
        "slots_missing": int((~present).sum()),
    }


def generate(spec: ScenarioSpec) -> SynthOutput:
    """Generate ``samples.csv`` text and a ground-truth manifest."""
    window = spec.window
    grid = _Grid(window)
    stamps = grid.stamps
    n = len(stamps)
    streams = np.random.SeedSequence(spec.seed).spawn(len(spec.stations))

    buf = io.StringIO()
    buf.write("station_id,timestamp,leq_db,lmax_db\n")
    truth = {}
    for st, ss in zip(spec.stations, streams):
        rng = np.random.Generator(np.random.PCG64(ss))
        level = _noiseless_levels(st, grid)
        noise = rng.standard_normal(n) * st.noise_sd_db
        excess = rng.exponential(1.0, n) * st.lmax_excess_db
        present = rng.random(n) >= st.missing_prob
        leq = np.clip(np.round(level + noise, 2), DB_MIN, DB_MAX)
        lmax = np.clip(np.round(level + noise + excess, 2), DB_MIN, DB_MAX)
        lmax = np.maximum(lmax, leq)
        sid = st.station_id
        buf.writelines(
            f"{sid},{stamps[i]},{leq[i]:.2f},{lmax[i]:.2f}\n" for i in np.flatnonzero(present)
        )
        truth[sid] = _truth(st, spec, grid, level, present)

    manifest = {"scenario": spec.to_dict(), "generator": "numpy PCG64 / SeedSequence.spawn", "truth": truth}
    return SynthOutput(buf.getvalue(), manifest)


# id, name, lat (N), lon (signed E), change date, schools within 500 m
GOLDEN_STATIONS = (
    ("1", "Ballyfermot Civic Office", 53.343, -6.362, "2020-03-19", 8),
    ("2", "Ballymun Library", 53.390, -6.265, "2020-03-21", 5),
    ("3", "Blessington Street Basin", 53.357, -6.270, "2020-03-16", 5),
    ("4", "Chancery Park", 53.347, -6.272, "2020-03-15", 7),
    ("5", "DCC Rowing Club", 53.346, -6.320, "2020-03-15", 2),
    ("6", "Dolphin's Barn", 53.331, -6.292, "2020-03-16", 8),
    ("7", "Drumcondra Library", 53.370, -6.259, "2020-03-15", 9),
    ("8", "Mellows Park", 53.391, -6.304, "2020-03-29", 7),
    ("9", "Navan Road", 53.371, -6.326, "2020-03-25", 0),
    ("10", "Raheny Library", 53.380, -6.173, "2020-03-22", 5),
    ("11", "Walkinstown Library", 53.319, -6.322, "2020-03-15", 0),
    ("12", "Woodstock Gardens", 53.324, -6.248, "2020-03-17", 7),
)

_GOLDEN_OFFSETS = {"night": -1.5, "day": 1.0, "evening": 0.0}
# target base levels; the picker moves each to the nearest admissible value
_GOLDEN_TARGETS = (61.0, 63.0, 60.0, 64.0, 61.0, 62.0, 57.0, 60.0, 61.0, 59.0, 58.0, 56.5)


def _level_ranges(base, drift, step_day, step_db, total_days):
    # (lo, hi) of the noiseless level per band before and after the step
    for off in _GOLDEN_OFFSETS.values():
        a = base + off
        yield a + drift * step_day, a
        yield a + step_db + drift * total_days, a + step_db + drift * step_day


def _margin(base, drift, step_day, step_db, total_days, threshold) -> float:
    return min(
        0.0 if lo <= threshold <= hi else min(abs(lo - threshold), abs(hi - threshold))
        for lo, hi in _level_ranges(base, drift, step_day, step_db, total_days)
    )


def _pick_base(target, drift, step_day, step_db, total_days, threshold, min_margin=1.5):
    """Base level on a 0.1 dB grid nearest to ``target`` keeping every band's
    noiseless level at least ``min_margin`` dB away from the threshold."""
    for k in range(0, 201):
        for b in (target - 0.1 * k, target + 0.1 * k):
            b = round(b, 1)
            if _margin(b, drift, step_day, step_db, total_days, threshold) >= min_margin:
                return b
    raise ValueError("no admissible base level near target")


def golden_scenario(seed: int = 20200325, missing_prob: float = 0.01) -> ScenarioSpec:
    """Twelve stations with step dates and school counts modelled on a real monitoring network.

    Drifts range over -0.01..-0.045 dB/day and step sizes over -5..-7.5 dB,
    large against the 2.5 dB diurnal swing so each step is attributable to
    its date. Base levels keep every noiseless hourly level at least 1.5 dB
    from the 55 dB threshold, which makes the expected exceedance counts
    robust to sampling noise.
    """
    window = PeriodSplit()
    total = (window.analysis_end - window.analysis_start).days
    stations = []
    for i, (sid, _, _, _, change, _) in enumerate(GOLDEN_STATIONS):
        drift = round(-0.01 - 0.035 * i / (len(GOLDEN_STATIONS) - 1), 4)
        step_db = round(-5.0 - 2.5 * ((i * 5) % 12) / 11, 3)
        step_at = datetime.fromisoformat(change)
        step_day = (step_at - window.analysis_start).days
        base = _pick_base(_GOLDEN_TARGETS[i], drift, step_day, step_db, total, 55.0)
        stations.append(
            StationScenario(
                station_id=sid,
                base_db=base,
                band_offsets=dict(_GOLDEN_OFFSETS),
                drift_db_per_day=drift,
                step_at=step_at,
                step_db=step_db,
                noise_sd_db=1.0,
                missing_prob=missing_prob,
                lmax_excess_db=6.0,
            )
        )
    return ScenarioSpec(stations, seed, window)


# mean hourly count per band (night, day, evening) near each golden station
GOLDEN_TRAFFIC = (
    (658.5, 2018.1, 6877.6),
    (249.9, 917.9, 3138.8),
    (3042.4, 4670.2, 15721.5),
    (5256.1, 7608.7, 25063.0),
    (212.6, 420.2, 1293.5),
    (1228.9, 2492.7, 7969.0),
    (2385.2, 3534.5, 11461.5),
    (599.9, 1889.5, 6016.5),
    (1043.5, 2043.7, 7100.3),
    (594.0, 1813.9, 5971.3),
    (437.5, 1272.4, 4597.9),
    (1385.4, 2611.1, 8776.3),
)


def destination(lat: float, lon: float, bearing_deg: float, distance_m: float) -> tuple[float, float]:
    """Point reached from ``(lat, lon)`` along a great circle (spherical Earth)."""
    d = distance_m / EARTH_RADIUS_M
    th = math.radians(bearing_deg)
    p1, l1 = math.radians(lat), math.radians(lon)
    p2 = math.asin(math.sin(p1) * math.cos(d) + math.cos(p1) * math.sin(d) * math.cos(th))
    l2 = l1 + math.atan2(math.sin(th) * math.sin(d) * math.cos(p1), math.cos(d) - math.sin(p1) * math.sin(p2))
    return math.degrees(p2), math.degrees(l2)


def golden_sites() -> dict[str, str]:
    """``stations.csv``, ``schools.csv`` and ``traffic.csv`` for the golden network.

    Stations use the ``lon_w`` (positive west) column. Each station gets its
    school count placed 60-200 m away and two traffic detectors whose mean
    equals the tabulated count. One busy detector sits about 950 m from
    station 2, outside every station's radius.
    """
    st = io.StringIO()
    st.write("station_id,name,lat,lon_w\n")
    sc = io.StringIO()
    sc.write("name,lat,lon\n")
    tr = io.StringIO()
    tr.write("lat,lon,night_count,day_count,evening_count\n")
    for (sid, name, lat, lon, _, n_schools), counts in zip(GOLDEN_STATIONS, GOLDEN_TRAFFIC):
        st.write(f'{sid},"{name}",{lat:.3f},{-lon:.3f}\n')
        for k in range(n_schools):
            la, lo = destination(lat, lon, 360.0 * k / max(n_schools, 1) + 10.0, 60.0 + 20.0 * k)
            sc.write(f"school {sid}-{k + 1},{la:.6f},{lo:.6f}\n")
        for bearing, dist, f in ((45.0, 120.0, 0.8), (225.0, 180.0, 1.2)):
            la, lo = destination(lat, lon, bearing, dist)
            tr.write(f"{la:.6f},{lo:.6f}," + ",".join(f"{c * f:.2f}" for c in counts) + "\n")
    la, lo = destination(53.390, -6.265, 0.0, 950.0)
    tr.write(f"{la:.6f},{lo:.6f},9000.00,25000.00,60000.00\n")
    return {"stations.csv": st.getvalue(), "schools.csv": sc.getvalue(), "traffic.csv": tr.getvalue()}
