from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gefcom_synth import write_gefcom2012, write_gefcom2014_solar  # noqa: E402

from netload_bench import dataio  # noqa: E402
from netload_bench.gbm import GbmConfig  # noqa: E402
from netload_bench.mlp import TrainConfig  # noqa: E402

# small settings so end-to-end tests stay fast
TINY_MLP = TrainConfig(learning_rate=0.05, epochs=3, batch_size=32, hidden_units=8)
TINY_GBM = GbmConfig(estimators=5, shrinkage=0.1, max_depth=2)


@pytest.fixture(scope="session")
def gefcom_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("gefcom")
    load_path, temp_path = write_gefcom2012(d, days=60, stations=3, blank_hours=(30, 31, 32))
    solar_path = write_gefcom2014_solar(d, days=60)
    return {"dir": d, "load": load_path, "temp": temp_path, "solar": solar_path}


@pytest.fixture(scope="session")
def datasets(gefcom_dir):
    load = dataio.load_gefcom_load(gefcom_dir["load"], 21)
    stations = dataio.load_gefcom_temperature(gefcom_dir["temp"])
    aligned = dataio.align(load, *stations)
    temp = dataio.virtual_weather_station(aligned[1:])
    pv, weather = dataio.load_gefcom_solar(gefcom_dir["solar"], 1)
    return dataio.build_load_dataset(aligned[0], temp), dataio.build_pv_dataset(pv, weather)


def toy_dataset(features, target, start="2020-01-01", names=None) -> dataio.SupervisedDataset:
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    ts = pd.date_range(start, periods=len(features), freq="h")
    names = names or tuple(f"x{i}" for i in range(features.shape[1]))
    return dataio.SupervisedDataset(features, np.asarray(target, dtype=float), ts, tuple(names))


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
