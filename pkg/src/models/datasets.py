"""
Dataset ingestion, synthetic generators and preprocessing.

CSV files carry a header row; the label column is named by the caller and
labels are mapped to 0..k-1 by first appearance. IDX files follow the
classic big-endian image/label layout.
"""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from src.models.errors import ParseError, ValidationError
from src.models.seeding import DATA_STREAM, FOLD_STREAM, SPLIT_STREAM, derive_seed

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-12
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    k: int
    feature_means: Optional[np.ndarray] = None
    feature_stds: Optional[np.ndarray] = None
    label_names: Tuple[str, ...] = ()
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValidationError(f"Features must be a non-empty N x d matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ValidationError(f"Expected {features.shape[0]} labels, got shape {labels.shape}")
        if self.k < 1 or np.any(labels < 0) or np.any(labels >= self.k):
            raise ValidationError(f"Labels must lie in [0, {self.k})")
        if not np.all(np.isfinite(features)):
            raise ValidationError("Features contain non-finite values")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if not self.label_names:
            object.__setattr__(self, "label_names", tuple(str(c) for c in range(self.k)))
        if not self.feature_names:
            object.__setattr__(self, "feature_names",
                               tuple(f"x{j}" for j in range(features.shape[1])))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_fitted(self) -> bool:
        return self.feature_means is not None and self.feature_stds is not None

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0:
            raise ValidationError("Cannot take an empty subset of a dataset")
        return replace(self, features=self.features[indices], labels=self.labels[indices])


@dataclass(frozen=True)
class FoldSplit:
    fold_indices: Tuple[np.ndarray, ...] = field(default_factory=tuple)

    @property
    def n_folds(self) -> int:
        return len(self.fold_indices)

    def indices(self, folds: Sequence[int]) -> np.ndarray:
        """Concatenated sample indices of the given folds (0-based fold numbers)."""
        return np.concatenate([self.fold_indices[f] for f in folds])


def _parse_float(cell: str, path, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"Non-numeric feature value {cell!r}", path=path, row=row, column=column)
    if not math.isfinite(value):
        raise ParseError(f"Non-finite feature value {cell!r}", path=path, row=row, column=column)
    return value


def load_csv(path, label_column: str = "label",
             label_names: Optional[Sequence[str]] = None) -> Dataset:
    """Load a UTF-8 CSV with a header row.

    Args:
        path: CSV file
        label_column: Name of the label column
        label_names: Known label mapping (e.g. from a saved ensemble); labels
            outside it are rejected instead of extending the mapping

    Returns:
        Dataset with labels mapped by first appearance (or by `label_names`)
    """
    path = Path(path)
    if not path.is_file():
        raise ParseError("File not found", path=path)
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise ParseError("Missing header row", path=path)
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ParseError(f"Label column {label_column!r} not found in header", path=path)
        label_pos = header.index(label_column)
        feature_columns = [h for i, h in enumerate(header) if i != label_pos]

        mapping = {}
        fixed_mapping = label_names is not None
        if fixed_mapping:
            mapping = {name: i for i, name in enumerate(label_names)}
        rows, labels = [], []
        for row_number, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if len(cells) != len(header):
                raise ParseError(f"Expected {len(header)} cells, got {len(cells)}", path=path, row=row_number)
            label = cells[label_pos].strip()
            if label not in mapping:
                if fixed_mapping:
                    raise ParseError(f"Unseen label {label!r}", path=path, row=row_number, column=label_column)
                mapping[label] = len(mapping)
            labels.append(mapping[label])
            rows.append([_parse_float(cells[i].strip(), path, row_number, header[i])
                         for i in range(len(header)) if i != label_pos])
    if not rows:
        raise ParseError("No data rows", path=path)
    names = tuple(mapping)
    logger.info(f"Loaded {len(rows)} rows, {len(feature_columns)} features, {len(names)} classes from {path}")
    return Dataset(np.array(rows, dtype=np.float64), np.array(labels), len(names),
                   label_names=names, feature_names=tuple(feature_columns))


def write_csv(dataset: Dataset, path, label_column: str = "label") -> Path:
    """Write features (round-trip exact) and label names, partner of `load_csv`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(dataset.feature_names) + [label_column])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [dataset.label_names[y]])
    return path


def _read_idx(path: Path, magic: int) -> np.ndarray:
    if not path.is_file():
        raise ParseError("File not found", path=path)
    raw = path.read_bytes()
    if len(raw) < 8:
        raise ParseError("Truncated IDX header", path=path)
    found = int.from_bytes(raw[:4], "big")
    if found != magic:
        raise ParseError(f"Bad IDX magic 0x{found:08x}, expected 0x{magic:08x}", path=path)
    n_dims = magic & 0xFF
    header_len = 4 + 4 * n_dims
    if len(raw) < header_len:
        raise ParseError("Truncated IDX header", path=path)
    dims = np.frombuffer(raw[4:header_len], dtype=">u4").astype(np.int64)
    size = int(np.prod(dims))
    if len(raw) - header_len < size:
        raise ParseError(f"Truncated IDX payload: expected {size} bytes, got {len(raw) - header_len}", path=path)
    return np.frombuffer(raw[header_len:header_len + size], dtype=np.uint8).reshape(tuple(dims))


def load_idx(images_path, labels_path, limit: Optional[int] = None, k: Optional[int] = None) -> Dataset:
    """Load the first `limit` samples of an IDX image/label pair, pixels scaled to [0, 1].

    The class count comes from the whole label file unless `k` is given.
    """
    images = _read_idx(Path(images_path), IDX_IMAGES_MAGIC)
    labels = _read_idx(Path(labels_path), IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(f"{images.shape[0]} images but {labels.shape[0]} labels", path=labels_path)
    n_classes = int(labels.max()) + 1 if labels.size else 0
    if limit is not None:
        if limit < 1:
            raise ValidationError(f"limit must be positive, got {limit}")
        images, labels = images[:limit], labels[:limit]
    if k is not None:
        if labels.size and int(labels.max()) >= k:
            raise ValidationError(f"Labels reach class {int(labels.max())}, expected {k} classes")
        n_classes = k
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(features, labels.astype(np.int64), n_classes)


def make_blobs(n_per_class: int, k: int, d: int, spread: float, seed: int,
               sample_seed: Optional[int] = None, centers=None) -> Dataset:
    """k Gaussian clusters with seed-determined centers.

    `sample_seed` draws a different sample from the same clusters (e.g. a test set).
    `centers` fixes the (k, d) cluster centers instead of drawing them from `seed`.
    """
    if n_per_class < 1 or k < 1 or d < 1:
        raise ValidationError("n_per_class, k and d must be positive")
    if spread < 0:
        raise ValidationError(f"spread must be non-negative, got {spread}")
    if centers is None:
        centers = np.random.default_rng(derive_seed(seed, DATA_STREAM, 0)).uniform(-5.0, 5.0, size=(k, d))
    else:
        centers = np.asarray(centers, dtype=np.float64)
        if centers.shape != (k, d):
            raise ValidationError(f"centers must have shape ({k}, {d}), got {centers.shape}")
    rng = np.random.default_rng(derive_seed(seed, DATA_STREAM, 1 if sample_seed is None else 2 + sample_seed))
    labels = np.repeat(np.arange(k), n_per_class)
    features = centers[labels] + spread * rng.standard_normal((labels.size, d))
    order = rng.permutation(labels.size)
    return Dataset(features[order], labels[order], k)


def fold_split(dataset: Dataset, n: int, seed: int) -> FoldSplit:
    if n < 1 or n > dataset.n_samples:
        raise ValidationError(f"Cannot split {dataset.n_samples} samples into {n} folds")
    order = np.random.default_rng(derive_seed(seed, FOLD_STREAM)).permutation(dataset.n_samples)
    return FoldSplit(tuple(np.array_split(order, n)))


def split_dataset(dataset: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Shuffled train/test split."""
    if not 0 < test_fraction < 1:
        raise ValidationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = int(round(dataset.n_samples * test_fraction))
    if n_test < 1 or n_test >= dataset.n_samples:
        raise ValidationError(f"test_fraction {test_fraction} leaves an empty split of {dataset.n_samples} samples")
    order = np.random.default_rng(derive_seed(seed, SPLIT_STREAM)).permutation(dataset.n_samples)
    return dataset.subset(np.sort(order[n_test:])), dataset.subset(np.sort(order[:n_test]))


def fit_stats(dataset: Dataset) -> Dataset:
    """Record per-feature mean and std of this dataset."""
    return replace(dataset, feature_means=dataset.features.mean(axis=0),
                   feature_stds=dataset.features.std(axis=0))


def normalize(dataset: Dataset, stats_from: Dataset) -> Dataset:
    """Standardize `dataset` with the statistics of `stats_from` (fitted if needed)."""
    if not stats_from.is_fitted:
        stats_from = fit_stats(stats_from)
    means, stds = stats_from.feature_means, stats_from.feature_stds
    if means.shape != (dataset.n_features,):
        raise ValidationError(
            f"Statistics for {means.shape[0]} features cannot normalize {dataset.n_features} features")
    constant = stds <= STD_FLOOR
    scaled = (dataset.features - means) / np.maximum(stds, STD_FLOOR)
    scaled[:, constant] = 0.0
    return replace(dataset, features=scaled, feature_means=means.copy(), feature_stds=stds.copy())


def one_hot(label, k: int) -> np.ndarray:
    """One-hot vector of a label, or one row per label for a label vector."""
    labels = np.asarray(label)
    if labels.ndim > 1:
        raise ValidationError(f"Labels must be a scalar or a vector, got shape {labels.shape}")
    if k < 1 or np.any(labels < 0) or np.any(labels >= k):
        raise ValidationError(f"Label {label} out of range [0, {k})")
    out = np.zeros(labels.shape + (k,), dtype=np.float64)
    if labels.ndim == 0:
        out[int(labels)] = 1.0
    else:
        out[np.arange(labels.size), labels] = 1.0
    return out
