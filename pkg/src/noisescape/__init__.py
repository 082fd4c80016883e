"""Energy-based analysis of multi-station 5-minute noise records.

The package turns raw sound-level samples into hourly metrics, time-band
daily series, trend and change-point tables, linearity diagnostics,
threshold exceedance counts and traffic/school radius joins. Every result
is written as CSV or JSON.
"""

__version__ = "0.1.0"

from .aggregate import HourlyAggregator, energy_average, hourly_aggregate  # noqa: E402
from .changepoint import ChangePointDetector, detect_multiple, detect_single  # noqa: E402
from .diagnostics import LinearityTest, linearity_test  # noqa: E402
from .exceedance import exceedance_report, period_summary  # noqa: E402
from .ingest import IngestError, parse_samples  # noqa: E402
from .model import GeoPoint, HourlyMetrics, NoiseSample, PeriodSplit, Station, TimeBand  # noqa: E402
from .report import AnalysisConfig, run_pipeline  # noqa: E402
from .spatial import haversine_m, noise_traffic_fit, points_within  # noqa: E402
from .trend import LinearTrend, ols_fit  # noqa: E402

__all__ = [
    "__version__",
    "AnalysisConfig",
    "ChangePointDetector",
    "GeoPoint",
    "HourlyAggregator",
    "HourlyMetrics",
    "IngestError",
    "LinearTrend",
    "LinearityTest",
    "NoiseSample",
    "PeriodSplit",
    "Station",
    "TimeBand",
    "detect_multiple",
    "detect_single",
    "energy_average",
    "exceedance_report",
    "haversine_m",
    "hourly_aggregate",
    "linearity_test",
    "noise_traffic_fit",
    "ols_fit",
    "parse_samples",
    "period_summary",
    "points_within",
    "run_pipeline",
]
