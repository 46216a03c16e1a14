"""Grid enumeration and adequacy labeling of candidate generation mixes.

Feature vectors are enumerated on an integer grid inside per-type bounds,
merged with the fixed nonfeature counts into full generation mixes, and
labeled by simulated loss-of-load hours.  The resulting dataset is the
training input for the reliability classifier.
"""

from __future__ import annotations

import csv
import itertools
import math
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .adequacy import (
    AdequacyConfig,
    derive_seed,
    label_sample,
    simulate_lolh,
)
from .errors import ParseError, RelgepError, ValidationError
from .fleet import GenerationMix, GeneratorType, HourlySeries
from .sweep import FeatureBounds, FeaturePartition

__all__ = [
    "LabeledSample",
    "Dataset",
    "DatasetSummary",
    "enumerate_grid",
    "merge_feature_counts",
    "per_sample_config",
    "build_dataset",
    "dataset_summary",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_summary_text",
]


@dataclass(frozen=True)
class LabeledSample:
    """One labeled mix: feature unit counts, simulated LOLH, and 0/1 label."""

    features: tuple[int, ...]
    lolh: float
    label: int

    def __post_init__(self):
        features = tuple(int(v) for v in self.features)
        if any(v < 0 for v in features):
            raise ValidationError(f"sample features must be nonnegative, got {features}")
        object.__setattr__(self, "features", features)
        if not math.isfinite(self.lolh) or self.lolh < 0.0:
            raise ValidationError(f"sample lolh must be finite and >= 0, got {self.lolh}")
        if self.label not in (0, 1):
            raise ValidationError(f"sample label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Dataset:
    """Labeled samples for one year, plus the grid settings that produced them.

    ``feature_names`` is the canonical (sorted-name) feature order; every
    sample's feature vector and every downstream consumer use this order.
    """

    year: int
    feature_names: tuple[str, ...]
    bounds: FeatureBounds
    samples: tuple[LabeledSample, ...]
    stride: Mapping[str, int]
    max_samples: int | None = None
    seed: int = 0

    def __post_init__(self):
        names = tuple(self.feature_names)
        if list(names) != sorted(names):
            raise ValidationError(f"feature_names must be in sorted order, got {list(names)}")
        if self.bounds.feature_names() != list(names):
            raise ValidationError(
                f"dataset features {list(names)} do not match bounds features "
                f"{self.bounds.feature_names()}"
            )
        if self.bounds.year != self.year:
            raise ValidationError(
                f"dataset year {self.year} does not match bounds year {self.bounds.year}"
            )
        object.__setattr__(self, "feature_names", names)
        stride = _stride_map(list(names), self.stride)
        object.__setattr__(self, "stride", stride)
        samples = tuple(self.samples)
        for index, sample in enumerate(samples):
            if len(sample.features) != len(names):
                raise ValidationError(
                    f"sample {index}: expected {len(names)} features, "
                    f"got {len(sample.features)}"
                )
            for name, value in zip(names, sample.features):
                if not self.bounds.lower[name] <= value <= self.bounds.upper[name]:
                    raise ValidationError(
                        f"sample {index}: {name}={value} outside bounds "
                        f"[{self.bounds.lower[name]}, {self.bounds.upper[name]}]"
                    )
        object.__setattr__(self, "samples", samples)
        if self.max_samples is not None and self.max_samples < 1:
            raise ValidationError(f"max_samples must be positive, got {self.max_samples}")

    def label_counts(self) -> dict[int, int]:
        counts = {0: 0, 1: 0}
        for sample in self.samples:
            counts[sample.label] += 1
        return counts

    def feature_matrix(self) -> np.ndarray:
        """Samples as a (count, num_features) float array in canonical order."""
        return np.array([s.features for s in self.samples], dtype=np.float64)

    def label_vector(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.float64)


@dataclass(frozen=True)
class DatasetSummary:
    """Flat distribution summary of a dataset's LOLH values and labels."""

    count: int
    label_one_fraction: float
    lolh_min: float
    lolh_max: float
    lolh_mean: float
    lolh_q1: float
    lolh_median: float
    lolh_q3: float


def _stride_map(names: Sequence[str], stride) -> dict[str, int]:
    if stride is None:
        values = {name: 1 for name in names}
    elif isinstance(stride, Mapping):
        unknown = sorted(set(stride) - set(names))
        if unknown:
            raise ValidationError(f"stride given for unknown features {unknown}")
        values = {name: int(stride.get(name, 1)) for name in names}
    else:
        values = {name: int(stride) for name in names}
    for name, value in values.items():
        if value < 1:
            raise ValidationError(f"stride for {name!r} must be >= 1, got {value}")
    return values


def enumerate_grid(
    bounds: FeatureBounds,
    stride=None,
    max_samples: int | None = None,
    seed: int = 0,
) -> list[tuple[int, ...]]:
    """Feature vectors on the grid {lower, lower+stride, ...} per feature.

    Vectors come out in lexicographic order over the canonical feature
    order.  When the full product exceeds ``max_samples``, a seeded
    uniform subsample of exactly ``max_samples`` vectors is returned,
    still in lexicographic order.
    """
    names = bounds.feature_names()
    strides = _stride_map(names, stride)
    if max_samples is not None and max_samples < 1:
        raise ValidationError(f"max_samples must be positive, got {max_samples}")
    axes = []
    for name in names:
        lower, upper = bounds.lower[name], bounds.upper[name]
        if lower > upper:
            raise ValidationError(f"feature {name!r}: empty grid (lower {lower} > upper {upper})")
        axes.append(range(lower, upper + 1, strides[name]))
    total = math.prod(len(axis) for axis in axes)
    if max_samples is None or total <= max_samples:
        return [tuple(point) for point in itertools.product(*axes)]
    # uniform subsample of lexicographic ranks, kept in ascending order
    ranks = sorted(random.Random(seed).sample(range(total), max_samples))
    radices = [len(axis) for axis in axes]
    vectors = []
    for rank in ranks:
        digits = [0] * len(axes)
        for pos in reversed(range(len(axes))):
            rank, digits[pos] = divmod(rank, radices[pos])
        vectors.append(tuple(axes[pos][digit] for pos, digit in enumerate(digits)))
    return vectors


def merge_feature_counts(
    partition: FeaturePartition,
    feature_names: Sequence[str],
    vector: Sequence[int],
) -> dict[str, int]:
    """Merge one feature vector with the partition's fixed nonfeature counts."""
    names = list(feature_names)
    if names != partition.feature_names():
        raise ValidationError(
            f"feature names {names} do not match partition features "
            f"{partition.feature_names()}"
        )
    if len(vector) != len(names):
        raise ValidationError(f"expected {len(names)} feature values, got {len(vector)}")
    counts = {name: int(count) for name, count in sorted(partition.fixed_counts.items())}
    for name, value in zip(names, vector):
        counts[name] = int(value)
    return counts


def per_sample_config(cfg: AdequacyConfig, index: int) -> AdequacyConfig:
    """Adequacy settings for one sample: an independent seed per sample index."""
    if cfg.mode != "monte_carlo":
        return cfg
    return replace(cfg, seed=derive_seed(cfg.seed, index))


def build_dataset(
    year: int,
    vectors: Sequence[Sequence[int]],
    partition: FeaturePartition,
    fleet: Sequence[GeneratorType],
    load: HourlySeries,
    cf_map: Mapping[str, HourlySeries],
    cfg: AdequacyConfig,
    bounds: FeatureBounds,
    stride=None,
    max_samples: int | None = None,
    seed: int = 0,
) -> Dataset:
    """Simulate and label every vector, preserving input order.

    Each vector is merged with the fixed nonfeature counts into a full
    mix for ``year`` and labeled by its simulated LOLH.  Monte Carlo
    draws use a per-sample seed derived from (``cfg.seed``, index), so
    results do not depend on evaluation order.
    """
    names = partition.feature_names()
    samples = []
    for index, vector in enumerate(vectors):
        counts = merge_feature_counts(partition, names, vector)
        mix = GenerationMix(year=year, counts=counts)
        try:
            result = simulate_lolh(fleet, mix, load, cf_map, per_sample_config(cfg, index))
        except RelgepError as exc:
            raise type(exc)(f"sample {index}: {exc}") from exc
        samples.append(
            LabeledSample(
                features=tuple(int(v) for v in vector),
                lolh=result.lolh,
                label=label_sample(result, cfg),
            )
        )
    return Dataset(
        year=year,
        feature_names=tuple(names),
        bounds=bounds,
        samples=tuple(samples),
        stride=_stride_map(names, stride),
        max_samples=max_samples,
        seed=seed,
    )


def dataset_summary(ds: Dataset) -> DatasetSummary:
    """Count, label-1 fraction, and LOLH spread (linear-interpolation quantiles)."""
    if not ds.samples:
        raise ValidationError("dataset is empty")
    lolh = np.array([s.lolh for s in ds.samples], dtype=np.float64)
    q1, median, q3 = np.quantile(lolh, [0.25, 0.5, 0.75])
    ones = sum(s.label for s in ds.samples)
    return DatasetSummary(
        count=len(ds.samples),
        label_one_fraction=ones / len(ds.samples),
        lolh_min=float(lolh.min()),
        lolh_max=float(lolh.max()),
        lolh_mean=float(lolh.mean()),
        lolh_q1=float(q1),
        lolh_median=float(median),
        lolh_q3=float(q3),
    )


def write_dataset_csv(ds: Dataset, path: str) -> None:
    """One row per sample: feature counts in canonical order, lolh, label."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([*ds.feature_names, "lolh", "label"])
        for sample in ds.samples:
            writer.writerow(
                [*(str(v) for v in sample.features), repr(float(sample.lolh)), str(sample.label)]
            )


def read_dataset_csv(
    path: str,
    year: int,
    bounds: FeatureBounds,
    stride=None,
    max_samples: int | None = None,
    seed: int = 0,
) -> Dataset:
    """Read a dataset CSV back; grid settings are supplied by the caller."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty dataset file") from None
        if len(header) < 3 or header[-2:] != ["lolh", "label"]:
            raise ParseError(f"{path}:1: header must end with 'lolh,label', got {header}")
        names = tuple(header[:-2])
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                features = tuple(int(v) for v in row[: len(names)])
                lolh = float(row[-2])
                label = int(row[-1])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            samples.append(LabeledSample(features=features, lolh=lolh, label=label))
    return Dataset(
        year=year,
        feature_names=names,
        bounds=bounds,
        samples=tuple(samples),
        stride=stride,
        max_samples=max_samples,
        seed=seed,
    )


def write_summary_text(summary: DatasetSummary, path: str) -> None:
    """Flat key-value report, one `name: value` line per field."""
    lines = [
        f"count: {summary.count}",
        f"label_one_fraction: {summary.label_one_fraction!r}",
        f"lolh_min: {summary.lolh_min!r}",
        f"lolh_max: {summary.lolh_max!r}",
        f"lolh_mean: {summary.lolh_mean!r}",
        f"lolh_q1: {summary.lolh_q1!r}",
        f"lolh_median: {summary.lolh_median!r}",
        f"lolh_q3: {summary.lolh_q3!r}",
    ]
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")
