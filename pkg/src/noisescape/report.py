"""Pipeline orchestration and CSV/JSON report emission.

:func:`run_pipeline` ingests the input files, runs the requested analysis
steps and writes a bundle of CSV tables plus a ``manifest.json`` that echoes
the configuration and the status of every step. Output is deterministic:
the same inputs and configuration give byte-identical files.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .aggregate import (
    BandDailySeries,
    aggregate_hourly,
    energy_average,
    build_all_band_series,
    percentile_summary,
)
from .changepoint import (
    MIN_SEGMENT_LENGTH,
    N_PARAMS,
    VAR_FLOOR,
    StationChange,
    changepoint_report,
)
from .diagnostics import MAX_LAG, UndefinedDiagnosticError, linearity_test
from .exceedance import THRESHOLD_DB, exceedance_report, period_summary
from .ingest import (
    IngestError,
    audit_gaps,
    load_schools,
    load_stations,
    load_traffic,
    parse_samples,
)
from .model import BandScheme, HourlyMetrics, Period, PeriodSplit, TimeBand, station_key
from .spatial import RADIUS_M, grouped_fits, school_count, station_traffic
from .trend import ALPHA, GRANULARITIES, METRICS, band_trends, hourly_band_trends
from ._validation import InsufficientDataError

__all__ = [
    "AnalysisConfig",
    "ConfigError",
    "PipelineError",
    "Inputs",
    "Bundle",
    "STEPS",
    "run_pipeline",
    "EXIT_OK",
    "EXIT_INPUT",
    "EXIT_ANALYSIS",
]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2


class ConfigError(ValueError):
    pass


class PipelineError(Exception):
    """A step failed; ``bundle`` holds everything written so far."""

    def __init__(self, step: str, cause: BaseException, bundle: "Bundle"):
        super().__init__(f"step {step!r} failed: {cause}")
        self.step = step
        self.cause = cause
        self.bundle = bundle

    @property
    def exit_code(self) -> int:
        return EXIT_INPUT if isinstance(self.cause, (IngestError, OSError)) else EXIT_ANALYSIS


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_groups(s: str) -> dict[str, str]:
    out = {}
    for part in filter(None, (p.strip() for p in s.split(";"))):
        sid, _, grp = part.partition(":")
        if not grp:
            raise ValueError(f"group entry {part!r} is not 'station:group'")
        out[sid.strip()] = grp.strip()
    return out


@dataclass(frozen=True)
class AnalysisConfig:
    """Every tunable of the pipeline.

    Plain-text form is one ``key = value`` per line; ``#`` starts a comment.
    """

    analysis_start: datetime = datetime(2020, 1, 1)
    split_instant: datetime = datetime(2020, 3, 25)
    analysis_end: datetime = datetime(2020, 5, 12)
    threshold_db: float = THRESHOLD_DB
    radius_m: float = RADIUS_M
    day_start: int = 7
    evening_start: int = 19
    night_start: int = 23
    max_lag: int = MAX_LAG
    linearity_mode: str = "strict"
    alpha: float = ALPHA
    min_segment_length: int = MIN_SEGMENT_LENGTH
    n_params: int = N_PARAMS
    var_floor: float = VAR_FLOOR
    changepoint_mode: str = "single"
    trend_granularity: str = "band-daily"
    coverage_mode: str = "inclusive"
    groups: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.split
            self.bands
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        checks = [
            (self.linearity_mode in ("strict", "fraction"), "linearity_mode must be strict or fraction"),
            (self.changepoint_mode in ("single", "multiple"), "changepoint_mode must be single or multiple"),
            (self.trend_granularity in GRANULARITIES, "trend_granularity must be band-daily or hourly"),
            (self.coverage_mode in ("inclusive", "strict"), "coverage_mode must be inclusive or strict"),
            (0.0 < self.alpha < 1.0, "alpha must lie in (0, 1)"),
            (self.radius_m >= 0, "radius_m must be >= 0"),
            (self.max_lag >= 0, "max_lag must be >= 0"),
            (self.min_segment_length >= 1, "min_segment_length must be >= 1"),
            (self.n_params >= 0, "n_params must be >= 0"),
            (self.var_floor > 0, "var_floor must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        object.__setattr__(self, "groups", dict(sorted(dict(self.groups).items())))

    @property
    def split(self) -> PeriodSplit:
        return PeriodSplit(self.analysis_start, self.split_instant, self.analysis_end)

    @property
    def bands(self) -> BandScheme:
        return BandScheme(self.day_start, self.evening_start, self.night_start)

    @property
    def strict_coverage(self) -> bool:
        return self.coverage_mode == "strict"

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, datetime):
                v = v.isoformat(timespec="minutes")
            elif f.name == "groups":
                v = ";".join(f"{k}:{g}" for k, g in v.items())
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            d[f.name] = v.isoformat(timespec="minutes") if isinstance(v, datetime) else v
        return d

    @classmethod
    def from_text(cls, text: str) -> "AnalysisConfig":
        values: dict[str, str] = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ConfigError(f"line {n}: expected 'key = value', got {line!r}")
            values[key.strip()] = val.strip()
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: Mapping[str, str], base: "AnalysisConfig | None" = None) -> "AnalysisConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            default = getattr(base or cls(), key)
            try:
                if isinstance(default, datetime):
                    kwargs[key] = datetime.fromisoformat(raw)
                elif isinstance(default, bool):
                    kwargs[key] = _parse_bool(raw)
                elif isinstance(default, int):
                    kwargs[key] = int(raw)
                elif isinstance(default, float):
                    kwargs[key] = float(raw)
                elif key == "groups":
                    kwargs[key] = _parse_groups(raw)
                else:
                    kwargs[key] = raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
        return dataclasses.replace(base, **kwargs) if base is not None else cls(**kwargs)


# key -> (meaning, where the default comes from)
CONFIG_HELP = {
    "analysis_start": ("first instant analysed", "study window, records start 1 Jan 2020"),
    "split_instant": ("first instant of the 'during' period", "study setting, lockdown began 25 Mar 2020"),
    "analysis_end": ("end of the window, exclusive", "study window, records end 11 May 2020"),
    "threshold_db": ("an hour exceeds when its average is strictly above this", "study setting, WHO 55 dB guideline"),
    "radius_m": ("neighbourhood radius for traffic and school joins", "study setting, 500 m"),
    "day_start": ("first hour of the day band", "study band definition, day 07-19"),
    "evening_start": ("first hour of the evening band", "study band definition, evening 19-23"),
    "night_start": ("first hour of the night band", "study band definition, night 23-07"),
    "max_lag": ("largest lag of the linearity cross-correlation", "study setting, lags up to 50"),
    "linearity_mode": ("strict: every lag in band; fraction: at most 5% outside", "implementation choice"),
    "alpha": ("two-sided significance level of slope tests", "study setting, 5% level"),
    "min_segment_length": ("shortest segment in the change-point search", "implementation choice"),
    "n_params": ("parameters charged per change, penalty = n_params * log n", "implementation choice, mean + variance + location"),
    "var_floor": ("variance floor of the Gaussian segment cost, dB^2", "implementation choice"),
    "changepoint_mode": ("single best split, or multiple via pruned exact search", "study reports one change per station"),
    "trend_granularity": ("band-daily: one point per band and day (dB/day); hourly: in-band hours (dB/hour)", "implementation choice"),
    "coverage_mode": ("inclusive keeps hours with fewer than 6 samples; strict drops them", "implementation choice"),
    "groups": ("station:group pairs separated by ';' for noise-traffic fits", "implementation choice, one group 'all'"),
}


def config_help() -> str:
    defaults = AnalysisConfig()
    lines = ["configuration keys (key = default; meaning; source of the default):"]
    for f in dataclasses.fields(AnalysisConfig):
        text, prov = CONFIG_HELP[f.name]
        v = getattr(defaults, f.name)
        if isinstance(v, datetime):
            v = v.isoformat(timespec="minutes")
        elif f.name == "groups":
            v = "''"
        lines.append(f"  {f.name} = {v}\n      {text}\n      default: {prov}")
    return "\n".join(lines)


@dataclass
class Inputs:
    samples: Path | None = None
    stations: Path | None = None
    traffic: Path | None = None
    schools: Path | None = None


@dataclass
class Bundle:
    """In-memory report files keyed by relative file name."""

    files: dict[str, str] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in sorted(self.files.items()):
            (out_dir / name).write_text(text, encoding="utf-8", newline="")
        (out_dir / "manifest.json").write_text(self.manifest_json(), encoding="utf-8", newline="")

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True) + "\n"


def _f(x: float | None, digits: int = 6) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def _g(x: float | None) -> str:
    return "" if x is None else f"{x:.6g}"


def _csv(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(str(v) for v in r) + "\n")
    return buf.getvalue()


STEPS = (
    "ingest",
    "aggregate",
    "trend",
    "changepoint",
    "linearity",
    "exceedance",
    "spatial",
)

# steps each needs; ingest covers every input file that was given
_REQUIRES = {
    "aggregate": ("ingest",),
    "trend": ("ingest", "aggregate"),
    "changepoint": ("ingest", "aggregate"),
    "linearity": ("ingest", "aggregate"),
    "exceedance": ("ingest", "aggregate"),
    "spatial": ("ingest", "aggregate"),
}


class _Run:
    def __init__(self, config: AnalysisConfig, inputs: Inputs, requested: set[str] = set(STEPS)):
        self.config = config
        self.requested = requested
        self.inputs = inputs
        self.bundle = Bundle()
        self.samples = None
        self.stations = None
        self.traffic = None
        self.schools = None
        self.hourly: dict[str, list[HourlyMetrics]] = {}
        self.band_series: dict[tuple[str, TimeBand], BandDailySeries] = {}
        self.changes: list[StationChange] = []

    # ingest ---------------------------------------------------------------
    def ingest(self):
        cfg, files = self.config, self.bundle.files
        reports = {}
        if self.inputs.samples is not None:
            with open(self.inputs.samples, encoding="utf-8-sig", newline="") as fh:
                self.samples, rep = parse_samples(fh)
            if not self.samples:
                raise IngestError(f"no samples accepted from {self.inputs.samples.name}")
            rep.gaps = audit_gaps(self.samples, cfg.split)
            reports["samples"] = rep
            files["ingest_gaps.csv"] = _csv(
                ("station_id", "missing_slot"),
                ((sid, t.isoformat(timespec="minutes")) for sid, g in rep.gaps.items() for t in g),
            )
        for name, loader in (("stations", load_stations), ("traffic", load_traffic), ("schools", load_schools)):
            path = getattr(self.inputs, name)
            if path is None:
                continue
            with open(path, encoding="utf-8-sig", newline="") as fh:
                items, rep = loader(fh)
            setattr(self, name, items)
            reports[name] = rep
        files["ingest_report.json"] = json.dumps(
            {k: r.to_dict() for k, r in reports.items()}, indent=2, sort_keys=True
        ) + "\n"
        return {k: {"accepted": r.rows_accepted, "flagged": r.rows_flagged} for k, r in reports.items()}

    # aggregate ------------------------------------------------------------
    def aggregate(self):
        if self.samples is None:
            if "aggregate" not in self.requested and "spatial" in self.requested:
                return {"skipped": "no samples file"}
            raise IngestError("aggregate needs a samples file")
        cfg, files = self.config, self.bundle.files
        window = cfg.split
        hourly = aggregate_hourly(self.samples)
        self.hourly = {
            sid: [h for h in hours if window.contains(h.hour_start)] for sid, hours in hourly.items()
        }
        self.hourly = {sid: h for sid, h in self.hourly.items() if h}
        files["hourly_metrics.csv"] = _csv(
            ("station_id", "hour_start", "avg_db", "max_db", "min_db", "n_samples", "low_coverage"),
            (
                (h.station_id, h.hour_start.isoformat(timespec="minutes"), _f(h.avg), _f(h.max),
                 _f(h.min), h.n_samples, int(h.low_coverage))
                for sid in sorted(self.hourly, key=station_key) for h in self.hourly[sid]
            ),
        )
        used = self._used_hourly()
        self.band_series = build_all_band_series(used, bands=cfg.bands)
        files["band_series.csv"] = _csv(
            ("station_id", "band", "date", "avg_db", "max_db", "min_db", "n_hours"),
            (
                (sid, band, e.date.isoformat(), _f(e.avg), _f(e.max), _f(e.min), e.n_hours)
                for (sid, band), s in self.band_series.items() for e in s.entries
            ),
        )
        rows = []
        for sid in sorted(used, key=station_key):
            for period in Period:
                lo, hi = window.bounds(period)
                hours = [h for h in used[sid] if lo <= h.hour_start < hi]
                for metric in METRICS:
                    vals = [getattr(h, metric) for h in hours]
                    if not vals:
                        continue
                    p = percentile_summary(vals)
                    rows.append((sid, metric, period, len(vals), *(_f(p[k]) for k in p)))
        files["figure3_percentiles.csv"] = _csv(
            ("station_id", "metric", "period", "n", "p5", "p25", "p50", "p75", "p95"), rows
        )
        low = sum(h.low_coverage for hs in self.hourly.values() for h in hs)
        return {"stations": len(self.hourly), "hours": sum(map(len, self.hourly.values())), "low_coverage_hours": low}

    def _used_hourly(self) -> dict[str, list[HourlyMetrics]]:
        if not self.config.strict_coverage:
            return self.hourly
        return {sid: [h for h in hs if not h.low_coverage] for sid, hs in self.hourly.items()}

    # trend ----------------------------------------------------------------
    def trend(self):
        cfg = self.config
        if cfg.trend_granularity == "hourly":
            cells = hourly_band_trends(self._used_hourly(), alpha=cfg.alpha, bands=cfg.bands)
            unit, count = "hour", "n_hours"
        else:
            cells = band_trends(self.band_series, alpha=cfg.alpha)
            unit, count = "day", "n_days"
        rows = []
        for (sid, band, metric), r in cells.items():
            if r is None:
                rows.append((sid, band, metric, "", "", "", "", "", "unavailable", ""))
            else:
                rows.append((sid, band, metric, _f(r.slope), _f(r.intercept), _g(r.slope_se),
                             _g(r.t_stat), _g(r.p_value), int(r.significant), r.n))
        self.bundle.files["table2_trends.csv"] = _csv(
            ("station_id", "band", "metric", f"slope_db_per_{unit}", "intercept_db", "slope_se",
             "t_stat", "p_value", "significant", count),
            rows,
        )
        return {
            "cells": len(cells),
            "unavailable": sum(r is None for r in cells.values()),
            "significant": sum(bool(r and r.significant) for r in cells.values()),
        }

    # changepoint ----------------------------------------------------------
    def changepoint(self):
        cfg, files = self.config, self.bundle.files
        used = self._used_hourly()
        self.changes = changepoint_report(
            used,
            multiple=cfg.changepoint_mode == "multiple",
            min_segment_length=cfg.min_segment_length,
            n_params=cfg.n_params,
            var_floor=cfg.var_floor,
        )
        names = {s.station_id: s for s in self.stations or ()}
        schools = school_count(self.stations, self.schools, cfg.radius_m) if self.stations and self.schools is not None else {}
        rows, curve = [], []
        for c in self.changes:
            st = names.get(c.station_id)
            meta = (st.name if st else "", _f(st.location.lat, 5) if st else "",
                    _f(st.location.lon, 5) if st else "", schools.get(c.station_id, ""))
            r = c.result
            if r is None:
                rows.append((c.station_id, *meta, "none", "", "", "", "", "", "error", "", c.error.replace(",", ";")))
                continue
            when = r.changed_at
            rows.append((
                c.station_id, *meta,
                when.date().isoformat() if when else "none",
                when.isoformat(timespec="minutes") if when else "",
                r.best_tau, _f(r.cost_unsplit), _f(r.split_objective), _f(r.penalty), r.verdict,
                " ".join(t.isoformat(timespec="minutes") for t in c.changes), "",
            ))
            hours = used[c.station_id]
            curve.extend(
                (c.station_id, int(t), hours[int(t)].hour_start.isoformat(timespec="minutes"), _f(v))
                for t, v in zip(r.taus, r.objective)
            )
        files["table1_changepoints.csv"] = _csv(
            ("station_id", "name", "lat", "lon", "schools_in_radius", "change_date", "change_time", "tau",
             "cost_unsplit", "split_objective", "penalty", "verdict", "all_changes", "error"),
            rows,
        )
        files["changepoint_curves.csv"] = _csv(("station_id", "tau", "hour_start", "objective"), curve)
        return {
            "stations": len(self.changes),
            "with_change": sum(c.changed_at is not None for c in self.changes),
            "errors": sum(c.error is not None for c in self.changes),
        }

    # linearity ------------------------------------------------------------
    def linearity(self):
        cfg = self.config
        detail, summary = [], []
        for (sid, band), s in self.band_series.items():
            try:
                d = linearity_test(s.values("avg"), cfg.max_lag, mode=cfg.linearity_mode)
            except (InsufficientDataError, UndefinedDiagnosticError) as exc:
                summary.append((sid, band, len(s.entries), "", "", "unavailable", str(exc).replace(",", ";")))
                continue
            summary.append((sid, band, d.n, _f(d.bound), _f(d.fraction_inside, 4), d.verdict, ""))
            detail.extend(
                (sid, band, lag, _f(v), _f(d.bound), int(ok))
                for lag, (v, ok) in enumerate(zip(d.phi, d.inside))
            )
        self.bundle.files["linearity.csv"] = _csv(("station_id", "band", "lag", "phi", "bound", "inside_band"), detail)
        self.bundle.files["linearity_summary.csv"] = _csv(
            ("station_id", "band", "n", "bound", "fraction_inside", "verdict", "note"), summary
        )
        return {
            "series": len(summary),
            "linear": sum(r[5] == "linear" for r in summary),
            "unavailable": sum(r[5] == "unavailable" for r in summary),
        }

    # exceedance -----------------------------------------------------------
    def exceedance(self):
        cfg, files = self.config, self.bundle.files
        rows = exceedance_report(self.hourly, cfg.threshold_db, cfg.split, strict=cfg.strict_coverage)
        files["table4_exceedance.csv"] = _csv(
            ("station_id", "pre_count", "during_count", "pre_total", "during_total", "pre_pct", "during_pct"),
            (
                (r.station_id, r.pre_count, r.during_count, r.pre_total, r.during_total,
                 _f(r.pre_pct, 2), _f(r.during_pct, 2))
                for r in rows
            ),
        )
        summ = period_summary(self.hourly, cfg.split, strict=cfg.strict_coverage)
        files["figure2_period_means.csv"] = _csv(
            ("station_id", "pre_avg_db", "during_avg_db", "reduction_db"),
            ((p.station_id, _f(p.pre_avg), _f(p.during_avg), _f(p.reduction)) for p in summ),
        )
        return {"stations": len(rows)}

    # spatial --------------------------------------------------------------
    def spatial(self):
        cfg, files = self.config, self.bundle.files
        if not self.stations:
            if self.requested == set(STEPS):
                return {"skipped": "no stations file"}
            raise IngestError("spatial step needs a stations file")
        status = {}
        if self.schools is not None:
            counts = school_count(self.stations, self.schools, cfg.radius_m)
            files["schools_in_radius.csv"] = _csv(
                ("station_id", "schools_in_radius"), sorted(counts.items(), key=lambda kv: station_key(kv[0]))
            )
            status["schools"] = sum(counts.values())
        if self.traffic is None:
            return status
        traffic = station_traffic(self.stations, self.traffic, cfg.radius_m)
        files["table3_traffic.csv"] = _csv(
            ("station_id", "night", "day", "evening", "n_points_in_radius"),
            (
                (t.station_id,
                 *((_f(t.mean_count[b], 3) if t.has_data else "no-data") for b in TimeBand),
                 t.n_points_in_radius)
                for t in traffic
            ),
        )
        status["stations_with_traffic"] = sum(t.has_data for t in traffic)
        if not self.hourly:
            return status
        # pre-period energy mean of the hourly averages in each band
        lo, hi = cfg.split.bounds(Period.PRE)
        buckets: dict[tuple[str, TimeBand], list[float]] = {}
        for sid, hours in self._used_hourly().items():
            for h in hours:
                if lo <= h.hour_start < hi:
                    buckets.setdefault((sid, cfg.bands.band(h.hour_start.hour)), []).append(h.avg)
        noise = {k: energy_average(v) for k, v in buckets.items()}
        points = []
        for t in traffic:
            if not t.has_data:
                continue
            for band in TimeBand:
                if (t.station_id, band) in noise:
                    points.append((t.station_id, band, t.mean_count[band], noise[(t.station_id, band)]))
        files["figure8_noise_traffic.csv"] = _csv(
            ("station_id", "band", "mean_traffic", "mean_noise_db", "group"),
            ((sid, band, _f(tr, 3), _f(nz), cfg.groups.get(sid, "all")) for sid, band, tr, nz in points),
        )
        fits = grouped_fits(points, cfg.groups)
        files["figure8_fits.csv"] = _csv(
            ("band", "group", "slope_db_per_vehicle", "intercept_db", "r_squared", "n"),
            (
                (band, grp, _g(f.slope), _f(f.intercept), _f(f.r_squared), f.n) if f else (band, grp, "", "", "", "")
                for (band, grp), f in fits.items()
            ),
        )
        status["fits"] = sum(f is not None for f in fits.values())
        return status


def _digest(path: Path | None) -> dict | None:
    if path is None:
        return None
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        return {"name": Path(path).name, "error": exc.strerror or str(exc)}
    return {"name": Path(path).name, "sha256": hashlib.sha256(data).hexdigest()}


def run_pipeline(
    config: AnalysisConfig,
    inputs: Inputs,
    out_dir: Path | None = None,
    steps: Iterable[str] = STEPS,
) -> Bundle:
    """Run ``steps`` (plus their prerequisites) and optionally write the bundle.

    Raises
    ------
    PipelineError
        When a step fails. The partial bundle, whose manifest names the failed
        step, is written to ``out_dir`` before raising.
    """
    requested = wanted = set(steps)
    unknown = wanted - set(STEPS)
    if unknown:
        raise ValueError(f"unknown steps {sorted(unknown)}")
    wanted = set(requested)
    for s in requested:
        wanted.update(_REQUIRES.get(s, ()))
    order = [s for s in STEPS if s in wanted]

    run = _Run(config, inputs, requested)
    manifest = run.bundle.manifest
    manifest.update({
        "tool": "noisescape",
        "version": __version__,
        "config": config.to_dict(),
        "config_text": config.to_text(),
        "inputs": {k: _digest(getattr(inputs, k)) for k in ("samples", "stations", "traffic", "schools")},
        "steps": [],
        "status": "ok",
    })
    run.bundle.files["config.txt"] = config.to_text()

    for name in order:
        try:
            result = getattr(run, name)()
        except Exception as exc:
            log.info("step %s failed: %s", name, exc)
            msg = str(exc)
            if isinstance(exc, OSError) and exc.filename:
                # keep absolute paths out of the manifest
                msg = f"{exc.strerror}: {Path(exc.filename).name}"
            manifest["steps"].append({"step": name, "status": "failed", "error": msg})
            manifest["status"] = "failed"
            manifest["failed_step"] = name
            if out_dir is not None:
                run.bundle.write(out_dir)
            raise PipelineError(name, exc, run.bundle) from exc
        manifest["steps"].append({"step": name, "status": "ok", "summary": result})

    manifest["files"] = sorted(run.bundle.files)
    if out_dir is not None:
        run.bundle.write(out_dir)
    return run.bundle
