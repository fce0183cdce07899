"""Seeded Gaussian noise injection emulating data-integrity attacks.

Random-number contract (kept simple so it can be reproduced elsewhere):

* Generator: NumPy ``PCG64`` seeded through ``SeedSequence(seed)``. Every
  uniform is ``(next_uint64 >> 11) * 2**-53`` (``Generator.random``).
* Selection: ``k = floor(fraction * N + 0.5)`` indices come from a partial
  Fisher-Yates shuffle of ``0..N-1``: for ``i < k`` swap slot ``i`` with slot
  ``i + floor(u * (N - i))``. The first ``k`` slots are the attacked indices.
* Noise: after selection, ``P = ceil(k / 2)`` uniforms ``u1`` are drawn,
  then ``P`` uniforms ``u2``. Pair ``p`` yields the standard normals
  ``sqrt(-2 ln(1 - u1[p])) * (cos, sin)(2 pi u2[p])`` in that order; the
  first ``k`` become ``mean + std * z`` and noise ``i`` goes to the ``i``-th
  selected index (selection order, not sorted order).
* Sub-streams (per column, partition, scenario) use :func:`derive_seed`.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .dataio import SupervisedDataset
from .errors import DegenerateStats, EmptyInput, InvalidTarget, UnknownColumn

TARGET = "__target__"
STREAMS = ("load", "nwp")
PARTITIONS = ("train", "test")


@dataclass(frozen=True)
class NoiseSpec:
    fraction: float = 0.10
    mean: float = 10.0
    std: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {self.fraction}")
        if not self.std >= 0.0:
            raise ValueError(f"std must be >= 0, got {self.std}")

    def with_seed(self, seed: int) -> "NoiseSpec":
        return NoiseSpec(self.fraction, self.mean, self.std, seed)


@dataclass(frozen=True)
class AttackTarget:
    stream: str
    partitions: frozenset

    def __post_init__(self):
        if self.stream not in STREAMS:
            raise InvalidTarget(f"stream must be one of {STREAMS}, got {self.stream!r}")
        parts = frozenset(self.partitions)
        if not parts or not parts <= set(PARTITIONS):
            raise InvalidTarget(f"partitions must be a non-empty subset of {PARTITIONS}, got {sorted(parts)}")
        object.__setattr__(self, "partitions", parts)


def _tag_code(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode("utf-8"))


def derive_seed(seed: int, *tags) -> int:
    """64-bit child seed of ``seed`` for a tuple of tags (CRC-32 of strings)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_tag_code(t) for t in tags))
    return int(ss.generate_state(1, np.uint64)[0])


def attacked_count(fraction: float, n: int) -> int:
    return int(math.floor(fraction * n + 0.5))


def inject(values, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Add ``Normal(mean, std)`` noise to a seeded random subset of ``values``.

    Returns the attacked copy and the sorted attacked indices. Entries outside
    the subset are returned unchanged.
    """
    clean = np.asarray(values, dtype=float)
    if clean.ndim != 1 or clean.size == 0:
        raise EmptyInput("inject() needs a non-empty 1-D vector")
    n = clean.size
    k = attacked_count(spec.fraction, n)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(spec.seed))))

    slots = np.arange(n)
    u = rng.random(k)
    for i in range(k):
        j = i + int(u[i] * (n - i))
        slots[i], slots[j] = slots[j], slots[i]
    chosen = slots[:k]

    pairs = (k + 1) // 2
    u1, u2 = rng.random(pairs), rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    z = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).ravel()[:k]

    attacked = clean.copy()
    attacked[chosen] = clean[chosen] + (spec.mean + spec.std * z)
    return attacked, np.sort(chosen)


def apply_to_dataset(
    dataset: SupervisedDataset,
    target: AttackTarget,
    spec: NoiseSpec,
    column: str = TARGET,
    return_indices: bool = False,
):
    """Return a new dataset with ``column`` attacked in the target partitions.

    ``column`` is a feature name for the ``nwp`` stream and :data:`TARGET` for
    the ``load`` stream. Each partition draws from its own seed derived from
    ``(spec.seed, column, partition)``. With ``return_indices`` the result is
    ``(dataset, {partition: attacked row indices into the full dataset})``.
    """
    if target.stream == "load" and column != TARGET:
        raise InvalidTarget(f"load attacks modify the target vector, not feature {column!r}")
    if target.stream == "nwp":
        if column == TARGET:
            raise InvalidTarget("nwp attacks modify a weather feature, not the target")
        if column not in dataset.feature_names:
            raise UnknownColumn(f"dataset has no feature {column!r}")

    if column == TARGET:
        values = dataset.target.copy()
    else:
        j = dataset.column_index(column)
        values = dataset.features[:, j].copy()

    indices = {}
    for partition in sorted(target.partitions):
        rows = dataset.rows(partition)
        part = values[rows]
        if part.size == 0:
            indices[partition] = np.empty(0, dtype=np.int64)
            continue
        part_spec = spec.with_seed(derive_seed(spec.seed, column, partition))
        attacked, idx = inject(part, part_spec)
        values[rows] = attacked
        indices[partition] = idx + rows.start

    if column == TARGET:
        result = dataset.replace(target=values)
    else:
        features = dataset.features.copy()
        features[:, j] = values
        result = dataset.replace(features=features)
    return (result, indices) if return_indices else result


def column_stats(dataset: SupervisedDataset, column: str = TARGET, partition: str = "train") -> tuple[float, float]:
    """Mean and population std of a column over one partition."""
    if column == TARGET:
        values = dataset.y(partition)
    else:
        if column not in dataset.feature_names:
            raise UnknownColumn(f"dataset has no feature {column!r}")
        values = dataset.X(partition)[:, dataset.column_index(column)]
    return float(values.mean()), float(values.std())


def detect_anomalies(clean_train_stats: tuple[float, float], series, threshold_z: float) -> np.ndarray:
    """Indices whose z-score against clean statistics exceeds ``threshold_z``."""
    mean, std = clean_train_stats
    if not std > 0:
        raise DegenerateStats(f"std must be > 0, got {std}")
    if not threshold_z > 0:
        raise ValueError(f"threshold_z must be > 0, got {threshold_z}")
    z = np.abs(np.asarray(series, dtype=float) - mean) / std
    return np.flatnonzero(z > threshold_z)
