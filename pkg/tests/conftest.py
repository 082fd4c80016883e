from __future__ import annotations

import io
from datetime import datetime, timedelta

import pytest
from hypothesis import settings

# fixed example generation so every run exercises the same cases
settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")

from noisescape.ingest import write_samples
from noisescape.model import HourlyMetrics, NoiseSample


def hourly_series(values, start=datetime(2020, 1, 1), station="S1", n=12):
    """Consecutive HourlyMetrics with the given averages."""
    return [
        HourlyMetrics(station, start + timedelta(hours=k), float(v), float(v) + 5.0, float(v) - 1.0, n)
        for k, v in enumerate(values)
    ]


def samples_csv(samples) -> str:
    buf = io.StringIO()
    write_samples(samples, buf)
    return buf.getvalue()


def constant_samples(station, start, end, leq=55.0, lmax=60.0):
    out, t = [], start
    while t < end:
        out.append(NoiseSample(station, t, leq, lmax))
        t += timedelta(minutes=5)
    return out


@pytest.fixture(scope="session")
def golden_dir(tmp_path_factory):
    """Golden synthetic network written to disk once per session."""
    from noisescape.synthgen import generate, golden_scenario, golden_sites

    root = tmp_path_factory.mktemp("golden")
    out = generate(golden_scenario())
    (root / "samples.csv").write_text(out.samples_csv, encoding="utf-8", newline="")
    (root / "truth.json").write_text(out.manifest_json(), encoding="utf-8", newline="")
    for name, text in golden_sites().items():
        (root / name).write_text(text, encoding="utf-8", newline="")
    return root
