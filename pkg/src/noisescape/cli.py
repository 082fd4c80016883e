"""``noisescape`` command line interface.

Every analysis subcommand runs the pipeline up to and including its own
step and writes the resulting CSV/JSON bundle to ``--out``. ``report`` runs
all steps. Exit codes: 0 success, 1 input error, 2 analysis error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .ingest import IngestError
from .report import (
    EXIT_ANALYSIS,
    EXIT_INPUT,
    EXIT_OK,
    STEPS,
    AnalysisConfig,
    ConfigError,
    Inputs,
    PipelineError,
    config_help,
    run_pipeline,
)
from .synthgen import ScenarioSpec, generate, golden_scenario, golden_sites

log = logging.getLogger("noisescape")

_COMMANDS = {
    "ingest-check": ("ingest", "parse and validate inputs; write the ingest report and gap audit"),
    "aggregate": ("aggregate", "hourly metrics, band-daily series and percentile summaries"),
    "trend": ("trend", "OLS slope per station, band and metric with two-sided t-test"),
    "changepoint": ("changepoint", "penalized Gaussian change-point search on hourly averages"),
    "linearity": ("linearity", "cross-correlation linearity diagnostic per band series"),
    "exceedance": ("exceedance", "threshold exceedance counts and pre/during period means"),
    "spatial": ("spatial", "traffic and school radius joins and noise-traffic fits"),
    "report": (None, "full pipeline: every step above"),
}


def _add_inputs(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("inputs")
    g.add_argument("--samples", type=Path, help="samples.csv: station_id,timestamp,leq_db,lmax_db")
    g.add_argument("--stations", type=Path, help="stations.csv: station_id,name,lat,lon (or lon_w, positive west)")
    g.add_argument("--traffic", type=Path, help="traffic.csv: lat,lon,night_count,day_count,evening_count")
    g.add_argument("--schools", type=Path, help="schools.csv: name,lat,lon")
    p.add_argument("--config", type=Path, help="plain-text 'key = value' configuration file (keys below)")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one configuration key; may be repeated; applied after --config",
    )
    p.add_argument("--out", type=Path, required=True, help="output directory (created if missing)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisescape",
        description="Energy-based analysis of 5-minute noise monitoring records.",
        epilog="exit codes: 0 success, 1 input error, 2 analysis error",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    for name, (_, text) in _COMMANDS.items():
        p = sub.add_parser(
            name,
            help=text,
            description=text,
            epilog=config_help(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        _add_inputs(p)

    p = sub.add_parser(
        "synth",
        help="generate a seeded synthetic samples file with a ground-truth manifest",
        description=(
            "Write samples.csv and truth.json for a JSON scenario (--spec), or the "
            "built-in 12-station golden scenario (--golden), which also writes "
            "stations.csv, schools.csv and traffic.csv."
        ),
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", type=Path, help="scenario JSON file (format in the synthgen module docs)")
    src.add_argument("--golden", action="store_true", help="use the built-in golden scenario")
    p.add_argument("--seed", type=int, help="override the scenario seed (golden default: 20200325)")
    p.add_argument("--out", type=Path, required=True, help="output directory (created if missing)")
    return parser


def load_config(path: Path | None, overrides: list[str]) -> AnalysisConfig:
    cfg = AnalysisConfig.from_text(path.read_text(encoding="utf-8")) if path else AnalysisConfig()
    if overrides:
        pairs = {}
        for item in overrides:
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            pairs[key.strip()] = val.strip()
        cfg = AnalysisConfig.from_strings(pairs, base=cfg)
    return cfg


def _synth(args) -> int:
    if args.golden:
        spec = golden_scenario() if args.seed is None else golden_scenario(seed=args.seed)
    else:
        spec = ScenarioSpec.from_json(args.spec.read_text(encoding="utf-8"))
        if args.seed is not None:
            spec.seed = args.seed
    out = generate(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "samples.csv").write_text(out.samples_csv, encoding="utf-8", newline="")
    (args.out / "truth.json").write_text(out.manifest_json(), encoding="utf-8", newline="")
    if args.golden:
        for name, text in golden_sites().items():
            (args.out / name).write_text(text, encoding="utf-8", newline="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            return _synth(args)
        cfg = load_config(args.config, args.overrides)
        step = _COMMANDS[args.command][0]
        steps = STEPS if step is None else (step,)
        inputs = Inputs(args.samples, args.stations, args.traffic, args.schools)
        if args.command != "ingest-check" and step != "spatial" and inputs.samples is None:
            raise IngestError(f"{args.command} needs --samples")
        if all(getattr(inputs, k) is None for k in ("samples", "stations", "traffic", "schools")):
            raise IngestError("no input files given")
        run_pipeline(cfg, inputs, args.out, steps)
    except PipelineError as exc:
        print(f"noisescape: {exc}", file=sys.stderr)
        return exc.exit_code
    except (IngestError, ConfigError, OSError, ValueError) as exc:
        print(f"noisescape: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - last resort
        print(f"noisescape: analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
