"""Attack scenarios, experiment execution and result artifacts.

The seven built-in scenarios::

    id    noise on NWP    noise on load   domain
    base  -               -               central / IoPT
    1a    -               train + test    central
    1b    -               train           central
    2a    train + test    -               central / IoPT
    2b    test            -               central / IoPT
    3a    train + test    train + test    central
    3b    train + test    train           central

NWP noise hits the ``temp_c`` feature of both the load and the PV dataset;
load noise hits only the load target. Errors are always measured against
the clean test actuals.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import gbm, mlp
from .attack import TARGET, AttackTarget, NoiseSpec, apply_to_dataset, derive_seed
from .dataio import SupervisedDataset
from .errors import ConfigError, NetloadError, ZeroDenominator
from .metrics import mape_with_exclusions, net_load, rmse

log = logging.getLogger(__name__)

SCENARIO_IDS = ("base", "1a", "1b", "2a", "2b", "3a", "3b")
CENTRAL, CENTRAL_OR_IOPT = "central", "central_or_iopt"
NWP_COLUMN = "temp_c"
BOTH = frozenset({"train", "test"})


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    domain: str
    load_attack: AttackTarget | None = None
    nwp_attack: AttackTarget | None = None
    noise: NoiseSpec = NoiseSpec()

    def with_noise(self, noise: NoiseSpec) -> "ScenarioSpec":
        return ScenarioSpec(self.id, self.domain, self.load_attack, self.nwp_attack, noise)


_TABLE = {
    "base": (CENTRAL_OR_IOPT, None, None),
    "1a": (CENTRAL, BOTH, None),
    "1b": (CENTRAL, {"train"}, None),
    "2a": (CENTRAL_OR_IOPT, None, BOTH),
    "2b": (CENTRAL_OR_IOPT, None, {"test"}),
    "3a": (CENTRAL, BOTH, BOTH),
    "3b": (CENTRAL, {"train"}, BOTH),
}


def get_scenario(scenario_id: str, noise: NoiseSpec = NoiseSpec()) -> ScenarioSpec:
    if scenario_id not in _TABLE:
        raise ConfigError(f"unknown scenario id {scenario_id!r}; valid ids: {', '.join(SCENARIO_IDS)}")
    domain, load_parts, nwp_parts = _TABLE[scenario_id]
    return ScenarioSpec(
        scenario_id,
        domain,
        AttackTarget("load", frozenset(load_parts)) if load_parts else None,
        AttackTarget("nwp", frozenset(nwp_parts)) if nwp_parts else None,
        noise,
    )


SCENARIOS = {sid: get_scenario(sid) for sid in SCENARIO_IDS}


def allowed_scenarios(deployment: str) -> tuple[str, ...]:
    """Scenario ids a deployment mode may run ("central" runs everything)."""
    if deployment == "central":
        return SCENARIO_IDS
    if deployment == "iopt":
        return tuple(s for s in SCENARIO_IDS if _TABLE[s][0] == CENTRAL_OR_IOPT)
    raise ConfigError(f"deployment must be 'central' or 'iopt', got {deployment!r}")


@dataclass
class ExperimentReport:
    scenario_id: str
    load_mape_pct: float
    pv_rmse: float
    seed: int = 0
    domain: str = CENTRAL
    net_series: pd.DataFrame = field(default_factory=pd.DataFrame)
    attacked_columns: list = field(default_factory=list)
    attacked_counts: dict = field(default_factory=dict)
    mape_excluded: int = 0

    def metric(self, name: str) -> float:
        if name == "mape":
            return self.load_mape_pct
        if name == "rmse":
            return self.pv_rmse
        raise ValueError(f"metric must be 'mape' or 'rmse', got {name!r}")

    def summary(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "seed": self.seed,
            "domain": self.domain,
            "load_mape_pct": self.load_mape_pct,
            "pv_rmse": self.pv_rmse,
            "mape_excluded_points": self.mape_excluded,
            "attacked_columns": list(self.attacked_columns),
            "attacked_index_counts": dict(self.attacked_counts),
            "net_series_rows": len(self.net_series),
        }


# -- alignment -----------------------------------------------------------------

_MONTH_START = np.cumsum([0, 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30])
HOURS_PER_YEAR = 8760


def hour_of_year(timestamps: pd.DatetimeIndex) -> np.ndarray:
    """Hour index in a 365-day year; 29 February folds onto 28 February."""
    ts = pd.DatetimeIndex(timestamps)
    day = np.minimum(ts.day.to_numpy(), np.where(ts.month == 2, 28, 31))
    doy = _MONTH_START[ts.month.to_numpy() - 1] + day - 1
    return doy * 24 + ts.hour.to_numpy()


def overlay_index(target: pd.DatetimeIndex, source: pd.DatetimeIndex) -> np.ndarray:
    """For each target timestamp, the source position nearest in hour-of-year.

    Distance wraps around the year end; an exact match always wins and ties
    go to the earliest source row.
    """
    src_key = hour_of_year(source)
    keys, first = np.unique(src_key, return_index=True)
    if keys.size == 0:
        raise ValueError("cannot overlay onto an empty source window")
    tgt = hour_of_year(target)
    pos = np.searchsorted(keys, tgt)
    cand = np.stack([(pos - 1) % keys.size, pos % keys.size])
    diff = np.abs(keys[cand] - tgt[None, :])
    dist = np.minimum(diff, HOURS_PER_YEAR - diff)
    # prefer the smaller distance, then the earlier source row
    src_rows = first[cand]
    pick = np.where(
        (dist[0] < dist[1]) | ((dist[0] == dist[1]) & (src_rows[0] <= src_rows[1])), 0, 1
    )
    return src_rows[pick, np.arange(tgt.size)]


# -- experiments ---------------------------------------------------------------

def _attack(ds: SupervisedDataset, spec: ScenarioSpec, model_tag: str, counts: dict, columns: list):
    seed = derive_seed(spec.noise.seed, spec.id, model_tag)
    noise = spec.noise.with_seed(seed)
    if spec.nwp_attack is not None and NWP_COLUMN in ds.feature_names:
        ds, idx = apply_to_dataset(ds, spec.nwp_attack, noise, NWP_COLUMN, return_indices=True)
        columns.append(f"{model_tag}:{NWP_COLUMN}")
        counts.update({f"{model_tag}:{NWP_COLUMN}:{p}": len(v) for p, v in idx.items()})
    if spec.load_attack is not None and model_tag == "load":
        ds, idx = apply_to_dataset(ds, spec.load_attack, noise, TARGET, return_indices=True)
        columns.append(f"{model_tag}:target")
        counts.update({f"{model_tag}:target:{p}": len(v) for p, v in idx.items()})
    return ds


def attack_datasets(spec: ScenarioSpec, load_ds: SupervisedDataset, pv_ds: SupervisedDataset):
    """Apply a scenario's attacks. Returns (load, pv, attacked_columns, attacked_counts)."""
    counts, columns = {}, []
    load_att = _attack(load_ds, spec, "load", counts, columns)
    pv_att = _attack(pv_ds, spec, "pv", counts, columns)
    return load_att, pv_att, columns, counts


def run_experiment(
    spec: ScenarioSpec,
    load_ds: SupervisedDataset,
    pv_ds: SupervisedDataset,
    mlp_cfg: mlp.TrainConfig = mlp.TrainConfig(),
    gbm_cfg: gbm.GbmConfig = gbm.GbmConfig(),
) -> ExperimentReport:
    """Attack, train both forecasters and score them on the clean test actuals."""
    load_att, pv_att, columns, counts = attack_datasets(spec, load_ds, pv_ds)

    load_model = mlp.train(load_att, mlp_cfg)
    load_fc = mlp.predict_series(load_model, load_att, "test")
    pv_model = gbm.fit(pv_att, gbm_cfg.estimators, gbm_cfg.shrinkage, gbm_cfg.max_depth, gbm_cfg.seed)
    pv_fc = gbm.predict_series(pv_model, pv_att, "test")

    load_actual, pv_actual = load_ds.y("test"), pv_ds.y("test")
    load_mape, excluded = mape_with_exclusions(load_actual, load_fc)
    pv_err = rmse(pv_actual, pv_fc)

    pv_ts = pv_ds.timestamps[pv_ds.rows("test")]
    idx = overlay_index(pv_ts, load_ds.timestamps[load_ds.rows("test")])
    temp_col = pv_ds.column_index(NWP_COLUMN) if NWP_COLUMN in pv_ds.feature_names else None
    series = pd.DataFrame(
        {
            "timestamp": pv_ts,
            "actual_net": net_load(load_actual[idx], pv_actual),
            "forecast_net": net_load(load_fc[idx], pv_fc),
            "temp_clean": pv_ds.X("test")[:, temp_col] if temp_col is not None else np.nan,
            "temp_attacked": pv_att.X("test")[:, temp_col] if temp_col is not None else np.nan,
        }
    )
    log.info("scenario %s seed %s: load MAPE %.3f%%, PV RMSE %.4f", spec.id, mlp_cfg.seed, load_mape, pv_err)
    return ExperimentReport(
        spec.id, load_mape, pv_err, mlp_cfg.seed, spec.domain, series, columns, counts, excluded
    )


@dataclass
class SuiteResult:
    reports: list
    summary: pd.DataFrame

    def report(self, scenario_id: str, seed: int) -> ExperimentReport:
        for r in self.reports:
            if r.scenario_id == scenario_id and r.seed == seed:
                return r
        raise KeyError((scenario_id, seed))


def _run_task(args):
    try:
        return run_experiment(*args)
    except NetloadError as exc:
        exc.scenario_id = args[0].id
        raise


def run_suite(
    seeds,
    load_ds: SupervisedDataset,
    pv_ds: SupervisedDataset,
    scenario_ids=SCENARIO_IDS,
    noise: NoiseSpec = NoiseSpec(),
    mlp_cfg: mlp.TrainConfig = mlp.TrainConfig(),
    gbm_cfg: gbm.GbmConfig = gbm.GbmConfig(),
    jobs: int = 1,
    deployment: str = "central",
) -> SuiteResult:
    """Run every requested scenario once per seed and take per-scenario medians.

    For a given seed all scenarios share the network initialisation and
    batch order; their noise streams differ by scenario id.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("run_suite needs at least one seed")
    allowed = allowed_scenarios(deployment)
    for sid in scenario_ids:
        if sid not in allowed:
            raise ConfigError(f"scenario {sid!r} is not available in the {deployment} deployment")
    order = [s for s in SCENARIO_IDS if s in set(scenario_ids)]
    tasks = [
        (get_scenario(sid, noise.with_seed(seed)), load_ds, pv_ds, replace(mlp_cfg, seed=seed), replace(gbm_cfg, seed=seed))
        for seed in seeds
        for sid in order
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_task, tasks))
    else:
        reports = [_run_task(t) for t in tasks]
    return SuiteResult(reports, summarize(reports))


def summarize(reports) -> pd.DataFrame:
    """Median metrics per scenario, rows in canonical order."""
    frame = pd.DataFrame([{"scenario": r.scenario_id, "load_mape_pct": r.load_mape_pct, "pv_rmse": r.pv_rmse} for r in reports])
    if frame.empty:
        return pd.DataFrame(columns=["load_mape_pct", "pv_rmse", "n_seeds"])
    grouped = frame.groupby("scenario")
    summary = grouped[["load_mape_pct", "pv_rmse"]].median()
    summary["n_seeds"] = grouped.size()
    return summary.loc[[s for s in SCENARIO_IDS if s in summary.index]]


def relative_increase(e_a: float, e_b: float) -> float:
    if e_b == 0:
        raise ZeroDenominator("reference error is zero")
    return 100.0 * (e_a - e_b) / e_b


def attack_surface_comparison(report_a: ExperimentReport, report_b: ExperimentReport, metric: str) -> float:
    """Percent by which the wider-exposure report's error exceeds the narrower one's."""
    return relative_increase(report_a.metric(metric), report_b.metric(metric))


# -- artifacts -----------------------------------------------------------------

def format_table(summary: pd.DataFrame) -> str:
    lines = [f"{'scenario':<10}{'MAPE %':>10}{'RMSE':>10}"]
    for sid, row in summary.iterrows():
        lines.append(f"{sid:<10}{row['load_mape_pct']:>10.2f}{row['pv_rmse']:>10.2f}")
    return "\n".join(lines)


def write_results_csv(summary: pd.DataFrame, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("scenario,load_mape_pct,pv_rmse\n")
        for sid, row in summary.iterrows():
            fh.write(f"{sid},{float(row['load_mape_pct'])!r},{float(row['pv_rmse'])!r}\n")


def write_report_json(result: SuiteResult, config: dict, path) -> None:
    doc = {
        "config": config,
        "summary": [
            {"scenario": sid, "load_mape_pct": float(r["load_mape_pct"]), "pv_rmse": float(r["pv_rmse"]), "n_seeds": int(r["n_seeds"])}
            for sid, r in result.summary.iterrows()
        ],
        "reports": [r.summary() for r in result.reports],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def plot_frame(report: ExperimentReport, base: ExperimentReport) -> pd.DataFrame:
    """Net-load and temperature traces for one attacked run against its clean twin."""
    if len(report.net_series) != len(base.net_series):
        raise ValueError("reports cover different test windows")
    s, b = report.net_series, base.net_series
    return pd.DataFrame(
        {
            "timestamp": s["timestamp"].dt.strftime("%Y-%m-%dT%H:%M:%S"),
            "actual_net": s["actual_net"],
            "forecast_net_clean": b["forecast_net"].to_numpy(),
            "forecast_net_attacked": s["forecast_net"],
            "temp_clean": s["temp_clean"],
            "temp_attacked": s["temp_attacked"],
        }
    )


def write_plot_csv(report: ExperimentReport, base: ExperimentReport, path) -> None:
    plot_frame(report, base).to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
