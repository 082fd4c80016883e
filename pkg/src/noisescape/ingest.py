"""CSV ingestion and validation for samples, stations, traffic and schools.

File formats (header row required, comma separated, UTF-8, LF or CRLF)::

    samples.csv   station_id,timestamp,leq_db,lmax_db
    stations.csv  station_id,name,lat,lon      (lon signed degrees east)
                  station_id,name,lat,lon_w    (lon positive degrees west)
    traffic.csv   lat,lon,night_count,day_count,evening_count
    schools.csv   name,lat,lon

Timestamps are ISO-8601 local civil time without an offset.

Rows that violate a contract are *flagged* (kept in the report with a reason
code), never silently dropped. Structural problems such as a missing header
or a duplicated station id raise :class:`IngestError`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import IO, Iterable

from .model import (
    DB_MAX,
    DB_MIN,
    SLOT,
    GeoPoint,
    NoiseSample,
    PeriodSplit,
    Station,
    TimeBand,
    station_key,
)

__all__ = [
    "IngestError",
    "FlaggedRow",
    "IngestReport",
    "TrafficPoint",
    "SchoolPoint",
    "SNAP_TOLERANCE",
    "parse_samples",
    "write_samples",
    "audit_gaps",
    "count_slots",
    "load_stations",
    "load_traffic",
    "load_schools",
]

SNAP_TOLERANCE = timedelta(seconds=60)

# reason codes
OUT_OF_RANGE = "out-of-range dB"
LMAX_BELOW_LEQ = "lmax<leq"
DUPLICATE = "duplicate"
MISALIGNED = "misaligned timestamp"
MALFORMED = "malformed"
COORD_RANGE = "coordinate out of range"
NEGATIVE_COUNT = "negative count"

SAMPLE_COLUMNS = ("station_id", "timestamp", "leq_db", "lmax_db")


class IngestError(Exception):
    """Fatal input problem: unreadable stream, bad header, duplicate ids."""


@dataclass(frozen=True, slots=True)
class FlaggedRow:
    row: int  # 1-based line number in the file, header is line 1
    reason: str
    raw: tuple[str, ...]


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_accepted: int = 0
    flagged: list[FlaggedRow] = field(default_factory=list)
    gaps: dict[str, list[datetime]] = field(default_factory=dict)

    @property
    def rows_flagged(self) -> int:
        return len(self.flagged)

    def reason_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for f in self.flagged:
            counts[f.reason] = counts.get(f.reason, 0) + 1
        return dict(sorted(counts.items()))

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_accepted": self.rows_accepted,
            "rows_flagged": self.rows_flagged,
            "reasons": self.reason_counts(),
            "flagged": [
                {"row": f.row, "reason": f.reason, "raw": list(f.raw)} for f in self.flagged
            ],
            "gap_slots": {sid: len(g) for sid, g in sorted(self.gaps.items(), key=lambda kv: station_key(kv[0]))},
        }


@dataclass(frozen=True, slots=True)
class TrafficPoint:
    location: GeoPoint
    counts: dict[TimeBand, float]

    def __post_init__(self):
        for band in TimeBand:
            c = self.counts[band]
            if not (math.isfinite(c) and c >= 0):
                raise ValueError(f"traffic count for {band} must be >= 0, got {c!r}")


@dataclass(frozen=True, slots=True)
class SchoolPoint:
    location: GeoPoint
    name: str


def _read_rows(stream: IO[str] | str, required: Iterable[str]) -> tuple[list[str], Iterable]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IngestError(f"unreadable input: {exc}") from exc
    if header is None:
        raise IngestError("empty input: header row missing")
    header = [h.strip().lstrip("﻿") for h in header]
    missing = [c for c in required if c not in header]
    if missing:
        raise IngestError(f"header {header} lacks required column(s) {missing}")
    return header, reader


def _snap(ts: datetime) -> datetime | None:
    """Snap to the nearest 5-minute boundary, or None beyond the tolerance."""
    base = ts.replace(minute=0, second=0, microsecond=0)
    offset = ts - base
    k = round(offset / SLOT)
    snapped = base + k * SLOT
    return snapped if abs(ts - snapped) <= SNAP_TOLERANCE else None


def parse_samples(stream: IO[str] | str) -> tuple[list[NoiseSample], IngestReport]:
    """Parse ``samples.csv`` content.

    Returns the accepted samples sorted by ``(station_id, timestamp)`` and an
    :class:`IngestReport`. Timestamps within 60 s of a 5-minute boundary are
    snapped to it. Of several rows landing on the same station slot only the
    first is kept; the others are flagged as duplicates.
    """
    header, reader = _read_rows(stream, SAMPLE_COLUMNS)
    i_sid, i_ts, i_leq, i_lmax = idx = [header.index(c) for c in SAMPLE_COLUMNS]
    width = max(idx) + 1
    report = IngestReport()
    seen: set[tuple[str, datetime]] = set()
    accepted: list[NoiseSample] = []
    flag = report.flagged.append

    try:
        for lineno, raw in enumerate(reader, start=2):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue
            report.rows_read += 1
            if len(raw) < width:
                flag(FlaggedRow(lineno, MALFORMED, tuple(raw)))
                continue
            sid = raw[i_sid].strip()
            try:
                ts = datetime.fromisoformat(raw[i_ts].strip())
                leq = float(raw[i_leq])
                lmax = float(raw[i_lmax])
            except ValueError:
                flag(FlaggedRow(lineno, MALFORMED, tuple(raw)))
                continue
            if not sid or ts.tzinfo is not None:
                flag(FlaggedRow(lineno, MALFORMED, tuple(raw)))
                continue
            # chained comparisons also reject NaN and infinities
            if not (DB_MIN <= leq <= DB_MAX and DB_MIN <= lmax <= DB_MAX):
                flag(FlaggedRow(lineno, OUT_OF_RANGE, tuple(raw)))
                continue
            if lmax < leq:
                flag(FlaggedRow(lineno, LMAX_BELOW_LEQ, tuple(raw)))
                continue
            if ts.minute % 5 or ts.second or ts.microsecond:
                ts = _snap(ts)
                if ts is None:
                    flag(FlaggedRow(lineno, MISALIGNED, tuple(raw)))
                    continue
            key = (sid, ts)
            if key in seen:
                flag(FlaggedRow(lineno, DUPLICATE, tuple(raw)))
                continue
            seen.add(key)
            accepted.append(NoiseSample(sid, ts, leq, lmax))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IngestError(f"unreadable input: {exc}") from exc

    accepted.sort()
    report.rows_accepted = len(accepted)
    return accepted, report


def _fmt_db(x: float) -> str:
    return repr(float(x))


def write_samples(samples: Iterable[NoiseSample], stream: IO[str]) -> None:
    """Serialize samples in the ``samples.csv`` format."""
    stream.write(",".join(SAMPLE_COLUMNS) + "\n")
    for s in samples:
        stream.write(
            f"{s.station_id},{s.timestamp.isoformat(timespec='minutes')},"
            f"{_fmt_db(s.leq)},{_fmt_db(s.lmax)}\n"
        )


def count_slots(window: PeriodSplit, start: datetime | None = None, end: datetime | None = None) -> int:
    """Number of 5-minute slots in ``[start, end)``, defaulting to the window."""
    lo = window.analysis_start if start is None else start
    hi = window.analysis_end if end is None else end
    return max(0, int((hi - lo) // SLOT))


def audit_gaps(
    samples: Iterable[NoiseSample],
    window: PeriodSplit,
    station_ids: Iterable[str] | None = None,
) -> dict[str, list[datetime]]:
    """List every 5-minute slot in the analysis window without a sample.

    Stations named in ``station_ids`` but absent from ``samples`` get every
    slot of the window reported.
    """
    present: dict[str, set[datetime]] = {}
    for s in samples:
        present.setdefault(s.station_id, set()).add(s.timestamp)
    for sid in station_ids or ():
        present.setdefault(sid, set())

    n = count_slots(window)
    slots = [window.analysis_start + k * SLOT for k in range(n)]
    return {
        sid: [t for t in slots if t not in have] for sid, have in sorted(present.items(), key=lambda kv: station_key(kv[0]))
    }


def _geo(lat: str, lon: str) -> GeoPoint:
    return GeoPoint(float(lat), float(lon))


def load_stations(stream: IO[str] | str) -> tuple[list[Station], IngestReport]:
    """Load ``stations.csv``.

    A ``lon_w`` column (positive degrees west, as printed in station tables)
    is converted to signed degrees east.

    Raises
    ------
    IngestError
        On a duplicated ``station_id``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    header, reader = _read_rows(stream, ("station_id", "name", "lat"))
    if "lon" in header:
        lon_col, west = header.index("lon"), False
    elif "lon_w" in header:
        lon_col, west = header.index("lon_w"), True
    else:
        raise IngestError("stations header needs a 'lon' or 'lon_w' column")
    i_id, i_name, i_lat = (header.index(c) for c in ("station_id", "name", "lat"))

    report = IngestReport()
    stations: list[Station] = []
    ids: set[str] = set()
    for lineno, raw in enumerate(reader, start=2):
        if not raw:
            continue
        report.rows_read += 1
        raw = tuple(raw)
        try:
            sid, name = raw[i_id].strip(), raw[i_name].strip()
            lat, lon = float(raw[i_lat]), float(raw[lon_col])
        except (IndexError, ValueError):
            report.flagged.append(FlaggedRow(lineno, MALFORMED, raw))
            continue
        if sid in ids:
            raise IngestError(f"duplicate station_id {sid!r} at line {lineno}")
        try:
            loc = GeoPoint(lat, -lon if west else lon)
        except ValueError:
            report.flagged.append(FlaggedRow(lineno, COORD_RANGE, raw))
            continue
        ids.add(sid)
        stations.append(Station(sid, name, loc))
    report.rows_accepted = len(stations)
    return stations, report


def load_traffic(stream: IO[str] | str) -> tuple[list[TrafficPoint], IngestReport]:
    """Load ``traffic.csv``: detector location and mean hourly count per band."""
    cols = ("lat", "lon", "night_count", "day_count", "evening_count")
    header, reader = _read_rows(stream, cols)
    idx = [header.index(c) for c in cols]
    report = IngestReport()
    points: list[TrafficPoint] = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw:
            continue
        report.rows_read += 1
        raw = tuple(raw)
        try:
            lat, lon, night, day, evening = (float(raw[i]) for i in idx)
        except (IndexError, ValueError):
            report.flagged.append(FlaggedRow(lineno, MALFORMED, raw))
            continue
        try:
            loc = GeoPoint(lat, lon)
        except ValueError:
            report.flagged.append(FlaggedRow(lineno, COORD_RANGE, raw))
            continue
        counts = {TimeBand.NIGHT: night, TimeBand.DAY: day, TimeBand.EVENING: evening}
        if any(not (math.isfinite(c) and c >= 0) for c in counts.values()):
            report.flagged.append(FlaggedRow(lineno, NEGATIVE_COUNT, raw))
            continue
        points.append(TrafficPoint(loc, counts))
    report.rows_accepted = len(points)
    return points, report


def load_schools(stream: IO[str] | str) -> tuple[list[SchoolPoint], IngestReport]:
    """Load ``schools.csv``."""
    header, reader = _read_rows(stream, ("name", "lat", "lon"))
    i_name, i_lat, i_lon = (header.index(c) for c in ("name", "lat", "lon"))
    report = IngestReport()
    points: list[SchoolPoint] = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw:
            continue
        report.rows_read += 1
        raw = tuple(raw)
        try:
            name = raw[i_name].strip()
            loc = _geo(raw[i_lat], raw[i_lon])
        except IndexError:
            report.flagged.append(FlaggedRow(lineno, MALFORMED, raw))
            continue
        except ValueError as exc:
            reason = COORD_RANGE if "range" in str(exc) else MALFORMED
            report.flagged.append(FlaggedRow(lineno, reason, raw))
            continue
        points.append(SchoolPoint(loc, name))
    report.rows_accepted = len(points)
    return points, report
