"""Dataset ingestion, normalization, splitting and the RMSE metric.

CSV contract (UTF-8, '.' decimal separator, one sample per row):

    id,f1,...,f16,dg

with 16 feature columns and the binding energy ``dg`` in kcal/mol.
Feature values are min-max normalized to [0, 1] before training; the
(min, max) pairs fitted on the training split are re-applied verbatim
to held-out sets, whose values may then fall outside [0, 1] (never
clipped -- clipping would silently distort the evaluation).

A synthetic generator stands in for the curated datasets this format
was built for.  Its target is the documented nonlinear map

    u  = 0.3 f1 f2 + 0.2 f3 (1 - f4) + 0.25 sin^2(pi f5)
         + 0.25 mean(f6..f16)                      (u in [0, 1])
    dg = -18 + 16 * clip(u + 0.1 eps, 0, 1),       eps ~ N(0, 1)

so generated energies always lie in [-18, -2] kcal/mol.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError, ParseError

N_FEATURES = 16
HEADER = ["id"] + [f"f{i}" for i in range(1, N_FEATURES + 1)] + ["dg"]


@dataclass
class SampleSet:
    features: np.ndarray  # (N, 16) float64
    targets: np.ndarray   # (N,) float64, kcal/mol
    ids: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[1] != N_FEATURES:
            raise InputError(f"expected {N_FEATURES} features, got shape {self.features.shape}")
        if len(self.ids) != self.features.shape[0] or self.targets.shape[0] != self.features.shape[0]:
            raise InputError("features, targets and ids must have equal length")
        if self.features.shape[0] < 1:
            raise InputError("empty sample set")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.targets))):
            raise InputError("non-finite value in sample set")

    def __len__(self) -> int:
        return self.features.shape[0]

    def take(self, indices) -> "SampleSet":
        idx = np.asarray(indices, dtype=np.intp)
        return SampleSet(self.features[idx], self.targets[idx], [self.ids[i] for i in idx])


def load_samples(path) -> SampleSet:
    """Parse a dataset CSV; errors name the offending row/column."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise ParseError(f"cannot read dataset {path}: {exc}") from None
    if not lines:
        raise ParseError(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) != len(HEADER):
        n_feat = len(header) - 2
        raise ParseError(f"{path}: expected {N_FEATURES} features, header has {n_feat} "
                         f"feature columns")
    if header != HEADER:
        raise ParseError(f"{path}: header must be {','.join(HEADER)!r}, got {lines[0]!r}")
    ids, feats, targets = [], [], []
    for r, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(HEADER):
            raise ParseError(f"{path}: row {r}: expected {len(HEADER)} columns, got {len(cells)}")
        ids.append(cells[0])
        row = []
        for c, cell in enumerate(cells[1:], start=2):
            try:
                row.append(float(cell))
            except ValueError:
                raise ParseError(f"{path}: row {r}, column {HEADER[c - 1]!r}: "
                                 f"non-numeric value {cell!r}") from None
        feats.append(row[:-1])
        targets.append(row[-1])
    return SampleSet(np.array(feats), np.array(targets), ids)


def save_samples(samples: SampleSet, path) -> None:
    """Write the CSV contract; repr() keeps floats byte-stable and exact."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(HEADER) + "\n")
        for i in range(len(samples)):
            cells = [samples.ids[i]]
            cells += [repr(float(v)) for v in samples.features[i]]
            cells.append(repr(float(samples.targets[i])))
            fh.write(",".join(cells) + "\n")


def minmax_normalize(samples: SampleSet):
    """Map each feature column through (x - min) / (max - min).

    Constant columns map to 0.  Returns (normalized set, mins, maxs) so
    the identical transform can be applied to held-out data.
    """
    mins = samples.features.min(axis=0)
    maxs = samples.features.max(axis=0)
    return apply_normalization(samples, mins, maxs), mins, maxs


def apply_normalization(samples: SampleSet, mins, maxs) -> SampleSet:
    """Apply previously fitted (min, max); out-of-range values are kept."""
    mins = np.asarray(mins, dtype=np.float64)
    maxs = np.asarray(maxs, dtype=np.float64)
    span = maxs - mins
    scaled = np.where(span > 0, (samples.features - mins) / np.where(span > 0, span, 1.0), 0.0)
    return SampleSet(scaled, samples.targets.copy(), list(samples.ids))


def split_train_test(samples: SampleSet, test_fraction: float, seed: int):
    """Disjoint, exhaustive, seed-deterministic shuffle split."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(samples)
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n_test >= n:
        raise ConfigurationError(
            f"split of {n} samples at fraction {test_fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(n)
    return samples.take(perm[n_test:]), samples.take(perm[:n_test])


def partition_ensemble_subsets(samples: SampleSet, k: int, seed: int) -> list[SampleSet]:
    """Seeded shuffle partitioned into k near-equal disjoint subsets.

    Sampling without replacement: every training sample lands in
    exactly one subset; sizes differ by at most one.
    """
    n = len(samples)
    if k < 1 or n < k:
        raise ConfigurationError(f"cannot partition {n} samples into {k} subsets")
    perm = np.random.default_rng(seed).permutation(n)
    return [samples.take(chunk) for chunk in np.array_split(perm, k)]


def rmse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise InputError(f"length mismatch: {predictions.shape} vs {targets.shape}")
    if predictions.size < 1:
        raise InputError("rmse of empty vectors")
    return float(np.sqrt(np.mean((predictions - targets) ** 2)))


def generate_synthetic(n_samples: int, seed: int) -> SampleSet:
    """Deterministic synthetic dataset per the documented target map."""
    if n_samples < 10:
        raise ConfigurationError(f"need at least 10 samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    f = rng.uniform(0.0, 1.0, (n_samples, N_FEATURES))
    u = (0.3 * f[:, 0] * f[:, 1]
         + 0.2 * f[:, 2] * (1.0 - f[:, 3])
         + 0.25 * np.sin(np.pi * f[:, 4]) ** 2
         + 0.25 * f[:, 5:].mean(axis=1))
    noisy = np.clip(u + 0.1 * rng.standard_normal(n_samples), 0.0, 1.0)
    dg = -18.0 + 16.0 * noisy
    ids = [f"s{i:04d}" for i in range(n_samples)]
    return SampleSet(f, dg, ids)
