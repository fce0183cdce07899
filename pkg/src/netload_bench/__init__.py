"""Net-load forecasting benchmark under Gaussian noise-injection attacks."""

from .attack import AttackTarget, NoiseSpec, apply_to_dataset, detect_anomalies, inject
from .dataio import SupervisedDataset, TimeSeriesFrame, build_load_dataset, build_pv_dataset
from .gbm import GbmConfig, GbmModel
from .metrics import mape, net_load, rmse
from .mlp import MlpModel, TrainConfig
from .scenario import SCENARIO_IDS, SCENARIOS, ExperimentReport, attack_datasets, run_experiment, run_suite

__version__ = "0.1.0"
