"""``netload-bench`` command line: ingest, run, validate.

Exit codes: 0 success, 1 config error, 2 data error, 3 training error,
4 evaluation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from . import dataio
from .errors import ConfigError, DataError, NetloadError
from .scenario import (
    SCENARIO_IDS,
    format_table,
    get_scenario,
    relative_increase,
    run_experiment,
    run_suite,
    write_plot_csv,
    write_report_json,
    write_results_csv,
)

log = logging.getLogger("netload_bench")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--load-csv", dest="load_csv")
    p.add_argument("--temperature-csv", dest="temperature_csv", help="comma-separated list")
    p.add_argument("--solar-csv", dest="solar_csv")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netload-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="normalise GEFCom files to canonical CSVs")
    _add_common(ingest)

    run = sub.add_parser("run", help="run attack scenarios and write result artifacts")
    _add_common(run)
    group = run.add_mutually_exclusive_group()
    group.add_argument("--scenarios", metavar="LIST")
    group.add_argument("--all", action="store_true")
    run.add_argument("--seeds", metavar="LIST")
    run.add_argument("--noise-mean", dest="noise_mean")
    run.add_argument("--noise-std", dest="noise_std")
    run.add_argument("--noise-fraction", dest="noise_fraction")
    run.add_argument("--jobs", metavar="N")
    run.add_argument("--subsample", metavar="N", help="keep only the most recent N rows of each dataset")

    validate = sub.add_parser("validate", help="check a configuration")
    _add_common(validate)
    return parser


def resolve_config(args) -> tuple[cfgmod.RunConfig, list[str]]:
    raw = cfgmod.read_config_file(args.config) if args.config else {}
    for key in ("load_csv", "temperature_csv", "solar_csv", "out", "seeds", "noise_mean",
                "noise_std", "noise_fraction", "jobs", "subsample", "scenarios"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = str(value)
    if getattr(args, "all", False):
        raw["scenarios"] = "all"
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        raw[key.strip()] = value.strip()
    return cfgmod.parse(raw)


def _holidays(cfg):
    return dataio.read_holiday_file(cfg.holidays_file) if cfg.holidays_file else None


def load_frames(cfg):
    """Ingest the configured raw files. Returns (load, temp, pv, weather) frames."""
    load = temp = pv = weather = None
    if cfg.load_csv and cfg.temperature_csv:
        load = dataio.load_gefcom_load(cfg.load_csv, cfg.load_zone)
        stations = []
        for path in cfg.temperature_csv:
            stations.extend(dataio.load_gefcom_temperature(path, cfg.temperature_units))
        aligned = dataio.align(load, *stations)
        load, stations = aligned[0], aligned[1:]
        temp = dataio.virtual_weather_station(stations)
    if cfg.solar_csv:
        pv, weather = dataio.load_gefcom_solar(cfg.solar_csv, cfg.solar_zone, cfg.solar_power_scale)
    return load, temp, pv, weather


def prepare_datasets(cfg):
    load, temp, pv, weather = load_frames(cfg)
    load_ds = dataio.build_load_dataset(load, temp, _holidays(cfg))
    pv_ds = dataio.build_pv_dataset(pv, weather)
    if cfg.subsample:
        load_ds, pv_ds = load_ds.tail(cfg.subsample), pv_ds.tail(cfg.subsample)
    return load_ds, pv_ds


def cmd_ingest(args) -> int:
    cfg, errors = resolve_config(args)
    if errors:
        raise ConfigError("; ".join(errors))
    if not (cfg.load_csv or cfg.solar_csv):
        raise ConfigError("nothing to ingest: set load_csv/temperature_csv and/or solar_csv")
    if cfg.load_csv and not cfg.temperature_csv:
        raise ConfigError("missing required key 'temperature_csv'")
    out = Path(cfg.out)
    load, temp, pv, weather = load_frames(cfg)
    if load is not None:
        frame = dataio.TimeSeriesFrame(load.timestamps, {**load.columns, **temp.columns}, load.gaps)
        dataio.write_canonical(frame, out / "load")
        dataio.write_gap_report(load.gaps, out / "load" / "gaps_load.txt")
        dataio.write_gap_report(temp.gaps, out / "load" / "gaps_temperature.txt")
        print(f"load_kw (zone {cfg.load_zone}): {dataio.describe(load)}")
        print(f"temp_c (virtual station): {dataio.describe(temp)}")
    if pv is not None:
        frame = dataio.TimeSeriesFrame(pv.timestamps, {**pv.columns, **weather.columns})
        dataio.write_canonical(frame, out / "solar")
        dataio.write_gap_report(pv.gaps + weather.gaps, out / "solar" / "gaps_solar.txt")
        print(f"pv_kw (zone {cfg.solar_zone}): {dataio.describe(pv)}")
        print(f"weather columns: {', '.join(weather.column_names)}")
    return 0


def cmd_run(args) -> int:
    cfg, errors = resolve_config(args)
    errors += cfgmod.validate(cfg)
    if errors:
        raise ConfigError("; ".join(errors))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.txt").write_text(cfg.manifest())

    started = time.perf_counter()
    load_ds, pv_ds = prepare_datasets(cfg)
    print(f"load dataset: {len(load_ds)} rows ({load_ds.n_train} train / {load_ds.n_test} test), "
          f"{len(load_ds.feature_names)} features")
    print(f"pv dataset: {len(pv_ds)} rows ({pv_ds.n_train} train / {pv_ds.n_test} test), "
          f"{len(pv_ds.feature_names)} features")

    result = run_suite(cfg.seeds, load_ds, pv_ds, cfg.scenarios, cfg.noise, cfg.mlp, cfg.gbm,
                       jobs=cfg.jobs, deployment=cfg.deployment)
    write_results_csv(result.summary, out / "results.csv")
    write_report_json(result, cfg.as_dict(), out / "report.json")

    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    for seed in cfg.seeds:
        try:
            base = result.report("base", seed)
        except KeyError:
            base = run_experiment(get_scenario("base", cfg.noise.with_seed(seed)), load_ds, pv_ds,
                                  replace(cfg.mlp, seed=seed), replace(cfg.gbm, seed=seed))
        for report in result.reports:
            if report.seed == seed:
                write_plot_csv(report, base, plots / f"{report.scenario_id}_seed{seed}.csv")

    print(format_table(result.summary))
    summary = result.summary
    if {"3a", "2a"} <= set(summary.index):
        for metric, col in (("mape", "load_mape_pct"), ("rmse", "pv_rmse")):
            change = relative_increase(summary.loc["3a", col], summary.loc["2a", col])
            print(f"attack surface 3a vs 2a ({metric}, medians): {change:+.1f}%")
    print(f"wrote {out} in {time.perf_counter() - started:.1f}s")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg, errors = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}")
        return 1
    errors += cfgmod.validate(cfg)
    if errors:
        for e in errors:
            print(f"error: {e}")
        return 1
    print("OK")
    return 0


COMMANDS = {"ingest": cmd_ingest, "run": cmd_run, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NetloadError as exc:
        where = f"scenario {exc.scenario_id}: " if getattr(exc, "scenario_id", None) else ""
        print(f"{type(exc).__name__}: {where}{exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"FileNotFound: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
