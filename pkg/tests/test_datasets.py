import struct

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.configs.loader import load_run_config
from src.controllers.run_controller import RunController
from src.models.datasets import (Dataset, fold_split, load_csv, load_idx, make_blobs, normalize, one_hot,
                                 split_dataset, write_csv)
from src.models.errors import ParseError, ValidationError


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def _idx_pair(tmp_path, n=150, side=4, seed=0):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(n, side, side), dtype=np.uint8)
    labels = rng.integers(0, 10, size=n, dtype=np.uint8)
    images_path, labels_path = tmp_path / "images.idx", tmp_path / "labels.idx"
    images_path.write_bytes(struct.pack(">IIII", 0x803, n, side, side) + pixels.tobytes())
    labels_path.write_bytes(struct.pack(">II", 0x801, n) + labels.tobytes())
    return images_path, labels_path, pixels, labels


def test_labels_are_mapped_by_first_appearance(tmp_path):
    path = _write(tmp_path / "d.csv", "x0,x1,label\n1,2,a\n3,4,b\n5,6,a\n")
    ds = load_csv(path)
    assert ds.k == 2
    assert_array_equal(ds.labels, [0, 1, 0])
    assert ds.label_names == ("a", "b")
    assert ds.feature_names == ("x0", "x1")
    assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])


def test_label_column_can_be_anywhere(tmp_path):
    path = _write(tmp_path / "d.csv", "class,f\ncat,0.5\ndog,1.5\n")
    ds = load_csv(path, label_column="class")
    assert_array_equal(ds.features[:, 0], [0.5, 1.5])
    assert ds.label_names == ("cat", "dog")


def test_non_numeric_feature_reports_row_and_column(tmp_path):
    lines = ["x0,x1,label"] + [f"{i},{i},a" for i in range(4)] + ["1,oops,b"]
    path = _write(tmp_path / "d.csv", "\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.row == 5
    assert info.value.column == "x1"


def test_round_trip_through_csv(tmp_path):
    ds = make_blobs(5, 3, 4, 1.0, seed=2)
    back = load_csv(write_csv(ds, tmp_path / "out.csv"))
    assert_array_equal(back.features, ds.features)
    assert back.label_names[0] == ds.label_names[ds.labels[0]]
    assert [back.label_names[y] for y in back.labels] == [ds.label_names[y] for y in ds.labels]


@pytest.mark.parametrize("text", [
    "",
    "x0,x1\n1,2\n",
    "x0,label\n1,a,3\n",
    "x0,label\n",
    "x0,label\nnan,a\n",
])
def test_malformed_csv(tmp_path, text):
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path / "bad.csv", text))


def test_missing_csv(tmp_path):
    with pytest.raises(ParseError):
        load_csv(tmp_path / "missing.csv")


def test_fixed_label_mapping_rejects_unseen_labels(tmp_path):
    path = _write(tmp_path / "d.csv", "x0,label\n1,b\n2,c\n")
    with pytest.raises(ParseError) as info:
        load_csv(path, label_names=("a", "b"))
    assert info.value.row == 2
    assert_array_equal(load_csv(_write(tmp_path / "ok.csv", "x0,label\n1,b\n"), label_names=("a", "b")).labels, [1])


def test_idx_limit_and_label_histogram(tmp_path):
    images_path, labels_path, pixels, labels = _idx_pair(tmp_path)
    ds = load_idx(images_path, labels_path, limit=100)
    assert ds.n_samples == 100
    assert ds.n_features == 16
    assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0
    assert_allclose(ds.features[3], pixels[3].ravel() / 255.0)
    assert_array_equal(np.bincount(ds.labels, minlength=10), np.bincount(labels[:100], minlength=10))


def test_idx_bad_magic(tmp_path):
    images_path, labels_path, _, _ = _idx_pair(tmp_path)
    with pytest.raises(ParseError):
        load_idx(labels_path, labels_path)
    raw = bytearray(images_path.read_bytes())
    raw[3] = 0x02
    images_path.write_bytes(bytes(raw))
    with pytest.raises(ParseError):
        load_idx(images_path, labels_path)


def test_idx_truncated_payload(tmp_path):
    images_path, labels_path, _, _ = _idx_pair(tmp_path)
    images_path.write_bytes(images_path.read_bytes()[:-10])
    with pytest.raises(ParseError):
        load_idx(images_path, labels_path)


def _idx_labels(tmp_path, labels, prefix):
    labels = np.asarray(labels, dtype=np.uint8)
    images_path, labels_path = tmp_path / f"{prefix}-images.idx", tmp_path / f"{prefix}-labels.idx"
    images_path.write_bytes(struct.pack(">IIII", 0x803, labels.size, 2, 2) + bytes(4 * labels.size))
    labels_path.write_bytes(struct.pack(">II", 0x801, labels.size) + labels.tobytes())
    return images_path, labels_path


def test_idx_limit_keeps_the_class_count_of_the_whole_file(tmp_path):
    ds = load_idx(*_idx_labels(tmp_path, [0, 1, 0, 1, 2, 2], "train"), limit=4)
    assert ds.n_samples == 4
    assert ds.k == 3


def test_idx_explicit_class_count(tmp_path):
    paths = _idx_labels(tmp_path, [0, 2, 1], "test")
    assert load_idx(*paths, k=5).k == 5
    assert load_idx(*paths, limit=1, k=1).k == 1
    with pytest.raises(ValidationError):
        load_idx(*paths, k=2)


def test_controller_loads_an_idx_test_file_against_a_limited_training_file(tmp_path):
    train_images, train_labels = _idx_labels(tmp_path, [0, 1, 0, 1, 2, 2], "train")
    test_images, test_labels = _idx_labels(tmp_path, [2, 0, 1], "test")
    config = load_run_config(overrides=[
        "data.source=idx", f"data.images_path={train_images}", f"data.labels_path={train_labels}",
        f"data.test_images_path={test_images}", f"data.test_labels_path={test_labels}", "data.limit=4",
        "data.normalize=no",
    ])
    split = RunController(config, tmp_path / "run").load_data()
    assert (split.train.k, split.test.k) == (3, 3)
    assert_array_equal(split.test.labels, [2, 0, 1])


def test_blobs_without_spread_sit_on_their_centers():
    ds = make_blobs(20, 4, 3, 0.0, seed=5)
    centers = np.array([ds.features[ds.labels == c][0] for c in range(4)])
    nearest = np.argmin(np.linalg.norm(ds.features[:, None, :] - centers[None], axis=2), axis=1)
    assert_array_equal(nearest, ds.labels)
    assert_array_equal(np.bincount(ds.labels), [20] * 4)


def test_blobs_are_deterministic():
    a, b = make_blobs(10, 3, 2, 1.0, seed=1), make_blobs(10, 3, 2, 1.0, seed=1)
    assert_array_equal(a.features, b.features)
    assert_array_equal(a.labels, b.labels)
    other = make_blobs(10, 3, 2, 1.0, seed=1, sample_seed=0)
    assert not np.array_equal(a.features, other.features)


def test_blobs_around_fixed_centers():
    centers = [[0.0, 0.0], [4.0, 0.0]]
    ds = make_blobs(30, 2, 2, 0.0, seed=3, centers=centers)
    assert_array_equal(ds.features, np.asarray(centers)[ds.labels])
    other = make_blobs(30, 2, 2, 0.0, seed=4, centers=centers)
    assert_array_equal(np.unique(other.features, axis=0), centers)
    with pytest.raises(ValidationError):
        make_blobs(5, 3, 2, 1.0, seed=0, centers=centers)


def test_fold_split_partitions_the_data():
    ds = make_blobs(20, 3, 2, 1.0, seed=0)
    split = fold_split(ds, 6, seed=3)
    assert [len(f) for f in split.fold_indices] == [10] * 6
    assert_array_equal(np.sort(np.concatenate(split.fold_indices)), np.arange(60))
    again = fold_split(ds, 6, seed=3)
    for a, b in zip(split.fold_indices, again.fold_indices):
        assert_array_equal(a, b)
    assert_array_equal(split.indices([0, 1]), np.concatenate(split.fold_indices[:2]))


def test_too_many_folds():
    with pytest.raises(ValidationError):
        fold_split(make_blobs(2, 2, 2, 1.0, seed=0), 5, seed=0)


def test_split_dataset_is_disjoint():
    ds = make_blobs(25, 2, 2, 1.0, seed=0)
    train, test = split_dataset(ds, 0.2, seed=4)
    assert (train.n_samples, test.n_samples) == (40, 10)
    rows = {tuple(r) for r in train.features} | {tuple(r) for r in test.features}
    assert len(rows) == 50


@pytest.mark.parametrize("fraction", [0.0, 1.0, 0.001])
def test_split_dataset_rejects_empty_splits(fraction):
    with pytest.raises(ValidationError):
        split_dataset(make_blobs(10, 2, 2, 1.0, seed=0), fraction, seed=0)


def test_normalize_standardizes_training_data():
    ds = make_blobs(50, 2, 3, 2.0, seed=1)
    out = normalize(ds, ds)
    assert_allclose(out.features.mean(axis=0), 0.0, atol=1e-9)
    assert_allclose(out.features.std(axis=0), 1.0, atol=1e-6)
    assert out.is_fitted


def test_constant_feature_normalizes_to_zero():
    ds = Dataset(np.array([[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]]), [0, 1, 0], 2)
    assert_array_equal(normalize(ds, ds).features[:, 1], 0.0)


def test_test_statistics_do_not_leak():
    train, test = split_dataset(make_blobs(30, 2, 2, 1.0, seed=0), 0.3, seed=0)
    fitted = normalize(train, train)
    shifted = Dataset(test.features + 100.0, test.labels, test.k)
    out = normalize(shifted, fitted)
    assert_array_equal(out.feature_means, fitted.feature_means)
    assert_allclose(out.features, (shifted.features - fitted.feature_means) / fitted.feature_stds)


def test_one_hot():
    assert_array_equal(one_hot(2, 4), [0, 0, 1, 0])
    assert_array_equal(one_hot(0, 1), [1])
    with pytest.raises(ValidationError):
        one_hot(4, 4)


def test_one_hot_rows_for_a_label_vector():
    assert_array_equal(one_hot(np.array([2, 0, 1]), 3), [[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    assert one_hot(np.array([], dtype=int), 2).shape == (0, 2)
    with pytest.raises(ValidationError):
        one_hot(np.array([0, 3]), 3)
    with pytest.raises(ValidationError):
        one_hot(np.zeros((2, 2), dtype=int), 3)


@pytest.mark.parametrize("features, labels, k", [
    (np.zeros((0, 2)), [], 2),
    (np.zeros((2, 2)), [0], 2),
    (np.zeros((2, 2)), [0, 2], 2),
    (np.array([[np.inf, 0.0]]), [0], 1),
])
def test_invalid_dataset(features, labels, k):
    with pytest.raises(ValidationError):
        Dataset(features, labels, k)
