"""Ingestion of GEFCom-style files, calendar features and supervised datasets.

Input formats
-------------
GEFCom2012 load (``Load_history.csv``)
    ``zone_id,year,month,day,h1,...,h24``; values may carry thousands
    separators and blank cells for missing hours. ``hN`` is the hour ending at
    N o'clock and is stamped at the start of the hour (``h1`` -> 00:00).
GEFCom2012 temperature (``temperature_history.csv``)
    ``station_id,year,month,day,h1,...,h24`` in degrees Fahrenheit.
GEFCom2014 solar track (``train15.csv`` and friends)
    ``ZONEID,TIMESTAMP,VAR78,...,VAR228,POWER`` with ``TIMESTAMP`` as
    ``YYYYMMDD HH:MM``. ``VAR167`` (2 m temperature, K) becomes ``temp_c``.

Canonical format
----------------
One CSV per column, ``timestamp,value``, ISO-8601 timestamps and values
written with ``repr`` so a re-read is bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from pandas.tseries.holiday import USFederalHolidayCalendar

from .errors import (
    EmptyInput,
    EmptySeries,
    MissingWeatherColumn,
    SchemaMismatch,
    TimestampMismatch,
)

HOUR = pd.Timedelta(hours=1)
TRAIN_FRACTION_NUM, TRAIN_FRACTION_DEN = 7, 10
LOAD_FEATURES = ("temp_c", "month", "day_of_week", "day_of_year", "holiday", "hour_of_day")
HOURLY_COLUMNS = [f"h{i}" for i in range(1, 25)]
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


@dataclass(frozen=True)
class GapRecord:
    timestamp: pd.Timestamp
    fill_source: pd.Timestamp
    column: str

    def line(self) -> str:
        return f"{self.timestamp.strftime(TIMESTAMP_FORMAT)},{self.fill_source.strftime(TIMESTAMP_FORMAT)}"


@dataclass(frozen=True)
class TimeSeriesFrame:
    """Hourly, gap-free columns sharing one timestamp index."""

    timestamps: pd.DatetimeIndex
    columns: dict[str, np.ndarray]
    gaps: tuple[GapRecord, ...] = field(default=())

    def __post_init__(self):
        ts = pd.DatetimeIndex(self.timestamps)
        object.__setattr__(self, "timestamps", ts)
        cols = {}
        for name, values in self.columns.items():
            arr = np.array(values, dtype=float)
            if arr.shape != (len(ts),):
                raise SchemaMismatch(
                    f"column {name!r} has {arr.size} entries, expected {len(ts)}"
                )
            if np.isnan(arr).any():
                raise SchemaMismatch(f"column {name!r} contains NaN")
            arr.setflags(write=False)
            cols[name] = arr
        object.__setattr__(self, "columns", cols)
        if len(ts) > 1:
            steps = np.diff(ts.asi8)
            if not np.all(steps == HOUR.value):
                raise TimestampMismatch("timestamps must be strictly increasing in 1-hour steps")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.columns, index=self.timestamps)

    def between(self, start, end) -> "TimeSeriesFrame":
        """Rows with ``start <= timestamp <= end``."""
        mask = (self.timestamps >= pd.Timestamp(start)) & (self.timestamps <= pd.Timestamp(end))
        gaps = tuple(g for g in self.gaps if start <= g.timestamp <= end)
        return TimeSeriesFrame(
            self.timestamps[mask], {k: v[mask] for k, v in self.columns.items()}, gaps
        )

    def select(self, names: Iterable[str]) -> "TimeSeriesFrame":
        names = list(names)
        gaps = tuple(g for g in self.gaps if g.column in names)
        return TimeSeriesFrame(self.timestamps, {k: self.columns[k] for k in names}, gaps)


def align(*frames: TimeSeriesFrame) -> list[TimeSeriesFrame]:
    """Trim frames to their common time span."""
    if not frames:
        raise EmptyInput("no frames to align")
    start = max(f.timestamps[0] for f in frames)
    end = min(f.timestamps[-1] for f in frames)
    if start > end:
        raise TimestampMismatch("frames do not overlap in time")
    return [f.between(start, end) for f in frames]


def _fill_hourly(df: pd.DataFrame) -> tuple[pd.DataFrame, tuple[GapRecord, ...]]:
    """Reindex onto a full hourly grid, trim leading/trailing blanks and forward-fill."""
    df = df.sort_index()
    valid = df.notna().any(axis=1)
    if not valid.any():
        raise EmptySeries("no parseable values")
    df = df.loc[valid.idxmax(): valid[::-1].idxmax()]
    full = pd.date_range(df.index[0], df.index[-1], freq="h")
    df = df.reindex(full)

    gaps = []
    for name in df.columns:
        col = df[name]
        missing = col.isna().to_numpy()
        if not missing.any():
            continue
        stamps = pd.Series(df.index.where(~missing), index=df.index)
        source = stamps.ffill().bfill()
        for ts in df.index[missing]:
            gaps.append(GapRecord(ts, source[ts], name))
        df[name] = col.ffill().bfill()
    gaps.sort(key=lambda g: (g.timestamp, g.column))
    return df, tuple(gaps)


def _read_csv(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        df = pd.read_csv(path, thousands=",", skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptySeries(f"{path} is empty") from None
    df.columns = [str(c).strip() for c in df.columns]
    return df


def _require(df: pd.DataFrame, columns: Sequence[str], path) -> None:
    for col in columns:
        if col not in df.columns:
            raise SchemaMismatch(f"{path}: missing column {col!r}")


def _wide_to_long(rows: pd.DataFrame) -> pd.Series:
    """Wide ``year,month,day,h1..h24`` rows -> hourly series (NaN kept)."""
    dates = pd.to_datetime(rows[["year", "month", "day"]])
    values = rows[HOURLY_COLUMNS].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    offsets = np.arange(24) * HOUR.value
    stamps = pd.DatetimeIndex((dates.to_numpy().astype("datetime64[ns]").astype(np.int64)[:, None] + offsets).ravel())
    series = pd.Series(values.ravel(), index=stamps)
    if series.index.has_duplicates:
        dup = series.index[series.index.duplicated()][0]
        raise SchemaMismatch(f"duplicate hourly record at {dup}")
    return series


def load_gefcom_load(path, zone: int) -> TimeSeriesFrame:
    """Hourly ``load_kw`` for one GEFCom2012 zone.

    Zone 21 is the system total; when the file has no explicit zone 21 rows
    it is summed from zones 1-20 (an hour is missing if any zone is).
    """
    df = _read_csv(path)
    _require(df, ["zone_id", "year", "month", "day", *HOURLY_COLUMNS], path)
    if df.empty:
        raise EmptySeries(f"{path}: zero rows")
    zones = sorted(int(z) for z in df["zone_id"].dropna().unique())
    if zone in zones:
        series = _wide_to_long(df[df["zone_id"] == zone])
    elif zone == 21 and set(range(1, 21)) <= set(zones):
        parts = [_wide_to_long(df[df["zone_id"] == z]) for z in range(1, 21)]
        series = pd.concat(parts, axis=1).sum(axis=1, min_count=20)
    else:
        raise SchemaMismatch(f"{path}: zone {zone} not present in column 'zone_id'")
    filled, gaps = _fill_hourly(series.to_frame("load_kw"))
    return TimeSeriesFrame(filled.index, {"load_kw": filled["load_kw"].to_numpy()}, gaps)


def load_gefcom_temperature(path, units: str = "F") -> list[TimeSeriesFrame]:
    """One ``temp_c`` frame per weather station, ordered by station id."""
    if units not in ("F", "C"):
        raise ValueError(f"units must be 'F' or 'C', got {units!r}")
    df = _read_csv(path)
    _require(df, ["station_id", "year", "month", "day", *HOURLY_COLUMNS], path)
    if df.empty:
        raise EmptySeries(f"{path}: zero rows")
    frames = []
    for station in sorted(df["station_id"].dropna().unique()):
        series = _wide_to_long(df[df["station_id"] == station])
        if units == "F":
            series = (series - 32.0) * 5.0 / 9.0
        filled, gaps = _fill_hourly(series.to_frame("temp_c"))
        frames.append(TimeSeriesFrame(filled.index, {"temp_c": filled["temp_c"].to_numpy()}, gaps))
    return frames


def load_gefcom_solar(path, zone: int = 1, power_scale: float = 100.0) -> tuple[TimeSeriesFrame, TimeSeriesFrame]:
    """Split a GEFCom2014 solar file into (``pv_kw``, weather) frames.

    ``POWER`` is capacity-normalised in the source; ``power_scale`` maps it to
    percent of capacity by default.
    """
    df = _read_csv(path)
    _require(df, ["ZONEID", "TIMESTAMP", "POWER"], path)
    if df.empty:
        raise EmptySeries(f"{path}: zero rows")
    df = df[df["ZONEID"] == zone]
    if df.empty:
        raise SchemaMismatch(f"{path}: zone {zone} not present in column 'ZONEID'")
    stamps = pd.to_datetime(df["TIMESTAMP"].astype(str).str.strip(), format="%Y%m%d %H:%M", errors="coerce")
    if stamps.isna().all():
        stamps = pd.to_datetime(df["TIMESTAMP"], errors="coerce")
    df = df.assign(_ts=stamps).dropna(subset=["_ts"]).set_index("_ts")
    if df.index.has_duplicates:
        raise SchemaMismatch(f"{path}: duplicate TIMESTAMP {df.index[df.index.duplicated()][0]}")

    weather_cols = [c for c in df.columns if c.upper().startswith("VAR")]
    body = df[["POWER", *weather_cols]].apply(pd.to_numeric, errors="coerce")
    body["POWER"] = body["POWER"] * power_scale
    if "VAR167" in body:
        body["VAR167"] = body["VAR167"] - 273.15
        body = body.rename(columns={"VAR167": "temp_c"})
    filled, gaps = _fill_hourly(body.rename(columns={"POWER": "pv_kw"}))
    pv_gaps = tuple(g for g in gaps if g.column == "pv_kw")
    w_gaps = tuple(g for g in gaps if g.column != "pv_kw")
    pv = TimeSeriesFrame(filled.index, {"pv_kw": filled["pv_kw"].to_numpy()}, pv_gaps)
    weather = TimeSeriesFrame(
        filled.index, {c: filled[c].to_numpy() for c in filled.columns if c != "pv_kw"}, w_gaps
    )
    return pv, weather


def virtual_weather_station(stations: Sequence[TimeSeriesFrame]) -> TimeSeriesFrame:
    """Unweighted mean of the station ``temp_c`` columns at each hour."""
    if not stations:
        raise EmptyInput("no station frames given")
    ref = stations[0].timestamps
    for s in stations[1:]:
        if not s.timestamps.equals(ref):
            raise TimestampMismatch("station frames have different timestamps")
    stacked = np.vstack([s["temp_c"] for s in stations])
    gaps = tuple(sorted({g for s in stations for g in s.gaps}, key=lambda g: (g.timestamp, g.fill_source)))
    return TimeSeriesFrame(ref, {"temp_c": stacked.mean(axis=0)}, gaps)


# -- canonical CSV -------------------------------------------------------------

def write_canonical(frame: TimeSeriesFrame, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stamps = frame.timestamps.strftime(TIMESTAMP_FORMAT)
    written = []
    for name, values in frame.columns.items():
        path = directory / f"{name}.csv"
        with open(path, "w", newline="\n") as fh:
            fh.write("timestamp,value\n")
            for ts, v in zip(stamps, values):
                fh.write(f"{ts},{float(v)!r}\n")
        written.append(path)
    return written


def read_canonical(paths: Iterable) -> TimeSeriesFrame:
    """Read canonical column files; the column name is the file stem."""
    columns, index = {}, None
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"no such file: {path}")
        stamps, values = [], []
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "timestamp,value":
                raise SchemaMismatch(f"{path}: expected header 'timestamp,value', got {header!r}")
            for line in fh:
                if not line.strip():
                    continue
                ts, v = line.rstrip("\n").split(",")
                stamps.append(ts)
                values.append(float(v))
        if not stamps:
            raise EmptySeries(f"{path}: zero rows")
        ts_index = pd.DatetimeIndex(pd.to_datetime(stamps, format=TIMESTAMP_FORMAT))
        if index is None:
            index = ts_index
        elif not index.equals(ts_index):
            raise TimestampMismatch(f"{path}: timestamps differ from the other columns")
        columns[path.stem] = np.array(values)
    if index is None:
        raise EmptyInput("no canonical files given")
    return TimeSeriesFrame(index, columns)


def write_gap_report(gaps: Iterable[GapRecord], path) -> None:
    with open(path, "w", newline="\n") as fh:
        for g in gaps:
            fh.write(g.line() + "\n")


# -- calendar ------------------------------------------------------------------

def us_federal_holidays(start, end) -> set:
    days = USFederalHolidayCalendar().holidays(start=pd.Timestamp(start).normalize(), end=pd.Timestamp(end))
    return {d.date() for d in days}


def read_holiday_file(path) -> set:
    """One ISO date per line; blank lines and ``#`` comments ignored."""
    days = set()
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            days.add(pd.Timestamp(line).date())
    return days


def calendar_features(timestamps: pd.DatetimeIndex, holidays=None) -> pd.DataFrame:
    """Integer-coded month, day_of_week (Mon=0), day_of_year, holiday, hour_of_day."""
    ts = pd.DatetimeIndex(timestamps)
    if holidays is None:
        holidays = us_federal_holidays(ts.min(), ts.max()) if len(ts) else set()
    dates = ts.date
    return pd.DataFrame(
        {
            "month": ts.month,
            "day_of_week": ts.dayofweek,
            "day_of_year": ts.dayofyear,
            "holiday": np.fromiter((d in holidays for d in dates), dtype=int, count=len(ts)),
            "hour_of_day": ts.hour,
        },
        index=ts,
    )


def one_hot(values: np.ndarray, categories: Sequence[int], prefix: str) -> tuple[np.ndarray, list[str]]:
    cats = np.asarray(categories)
    encoded = (np.asarray(values)[:, None] == cats[None, :]).astype(float)
    return encoded, [f"{prefix}_{c}" for c in cats]


# -- supervised datasets -----------------------------------------------------------

def train_size(n_rows: int) -> int:
    return n_rows * TRAIN_FRACTION_NUM // TRAIN_FRACTION_DEN


@dataclass(frozen=True)
class SupervisedDataset:
    """Feature matrix and target with a chronological 70/30 split.

    Rows ``[0, n_train)`` are the training partition and the rest the test
    partition. Arrays are read-only; use :meth:`replace` to derive new data.
    """

    features: np.ndarray
    target: np.ndarray
    timestamps: pd.DatetimeIndex
    feature_names: tuple[str, ...]
    n_train: int = -1

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.target, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or len(self.timestamps) != y.shape[0]:
            raise SchemaMismatch("features, target and timestamps must share a row count")
        names = tuple(self.feature_names)
        if len(names) != X.shape[1]:
            raise SchemaMismatch(f"{len(names)} feature names for {X.shape[1]} columns")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "timestamps", pd.DatetimeIndex(self.timestamps))
        if self.n_train < 0:
            object.__setattr__(self, "n_train", train_size(len(y)))

    def __len__(self) -> int:
        return len(self.target)

    @property
    def n_test(self) -> int:
        return len(self) - self.n_train

    def rows(self, partition: str) -> slice:
        if partition == "train":
            return slice(0, self.n_train)
        if partition == "test":
            return slice(self.n_train, len(self))
        raise ValueError(f"partition must be 'train' or 'test', got {partition!r}")

    def X(self, partition: str) -> np.ndarray:
        return self.features[self.rows(partition)]

    def y(self, partition: str) -> np.ndarray:
        return self.target[self.rows(partition)]

    def column_index(self, name: str) -> int:
        return self.feature_names.index(name)

    def replace(self, features=None, target=None) -> "SupervisedDataset":
        return SupervisedDataset(
            self.features if features is None else features,
            self.target if target is None else target,
            self.timestamps,
            self.feature_names,
            self.n_train,
        )

    def tail(self, n_rows: int) -> "SupervisedDataset":
        """Most recent ``n_rows`` rows, re-split 70/30."""
        if n_rows >= len(self):
            return self
        sl = slice(len(self) - n_rows, None)
        return SupervisedDataset(self.features[sl], self.target[sl], self.timestamps[sl], self.feature_names)


def _check_aligned(a: TimeSeriesFrame, b: TimeSeriesFrame) -> None:
    if not a.timestamps.equals(b.timestamps):
        raise TimestampMismatch(
            f"timestamps differ ({len(a)} rows {a.timestamps[0] if len(a) else None} .. vs "
            f"{len(b)} rows {b.timestamps[0] if len(b) else None} ..)"
        )


def build_load_dataset(load: TimeSeriesFrame, temp: TimeSeriesFrame, holidays=None) -> SupervisedDataset:
    _check_aligned(load, temp)
    cal = calendar_features(load.timestamps, holidays)
    X = np.column_stack([temp["temp_c"], *(cal[c].to_numpy(dtype=float) for c in LOAD_FEATURES[1:])])
    return SupervisedDataset(X, load["load_kw"], load.timestamps, LOAD_FEATURES)


def build_pv_dataset(pv: TimeSeriesFrame, weather: TimeSeriesFrame) -> SupervisedDataset:
    """Weather columns followed by one-hot month (12), weekday (7) and hour (24)."""
    _check_aligned(pv, weather)
    if "temp_c" not in weather.columns:
        raise MissingWeatherColumn("weather frame has no 'temp_c' column")
    ts = pv.timestamps
    blocks = [np.column_stack([weather[c] for c in weather.column_names])]
    names = list(weather.column_names)
    for values, cats, prefix in (
        (ts.month, range(1, 13), "month"),
        (ts.dayofweek, range(7), "day_of_week"),
        (ts.hour, range(24), "hour_of_day"),
    ):
        enc, enc_names = one_hot(np.asarray(values), list(cats), prefix)
        blocks.append(enc)
        names.extend(enc_names)
    return SupervisedDataset(np.hstack(blocks), pv["pv_kw"], ts, tuple(names))


def describe(frame: TimeSeriesFrame) -> str:
    if not len(frame):
        return "0 rows"
    span = frame.timestamps[-1] - frame.timestamps[0]
    days = math.floor(span / pd.Timedelta(days=1))
    return (
        f"{len(frame)} rows {frame.timestamps[0]:%Y-%m-%d %H:%M} .. "
        f"{frame.timestamps[-1]:%Y-%m-%d %H:%M} ({days} days, {len(frame.gaps)} filled)"
    )
