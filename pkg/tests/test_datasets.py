"""Tests for IDX parsing and dataset handling."""

import gzip
import struct

import numpy as np
import pytest

from spinbayes.datasets import (
    DatasetHandle,
    load_digits_surrogate,
    load_mnist,
    mnist_available,
    read_idx,
    stratified_subset,
)
from spinbayes.errors import DataFormatError, InvalidArgumentError


def write_idx_images(path, array):
    """Serialize a (n, r, c) ubyte array in IDX image layout."""
    n, r, c = array.shape
    blob = struct.pack(">IIII", 2051, n, r, c) + array.astype(np.uint8).tobytes()
    if str(path).endswith(".gz"):
        with gzip.open(path, "wb") as fh:
            fh.write(blob)
    else:
        path.write_bytes(blob)


def write_idx_labels(path, labels):
    blob = struct.pack(">II", 2049, len(labels)) + bytes(int(v) for v in labels)
    path.write_bytes(blob)


@pytest.fixture
def mini_mnist_dir(tmp_path):
    rng = np.random.default_rng(0)
    tr = rng.integers(0, 256, size=(40, 28, 28), dtype=np.uint8)
    te = rng.integers(0, 256, size=(20, 28, 28), dtype=np.uint8)
    write_idx_images(tmp_path / "train-images-idx3-ubyte", tr)
    write_idx_labels(tmp_path / "train-labels-idx1-ubyte", rng.integers(0, 10, 40))
    write_idx_images(tmp_path / "t10k-images-idx3-ubyte.gz", te)
    write_idx_labels(tmp_path / "t10k-labels-idx1-ubyte", rng.integers(0, 10, 20))
    return tmp_path


def test_read_idx_roundtrip(tmp_path):
    arr = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
    write_idx_images(tmp_path / "a", arr)
    back = read_idx(tmp_path / "a")
    assert np.array_equal(back, arr)


def test_read_idx_gzip(tmp_path):
    arr = np.arange(8, dtype=np.uint8).reshape(2, 2, 2)
    write_idx_images(tmp_path / "a.gz", arr)
    assert np.array_equal(read_idx(tmp_path / "a.gz"), arr)


def test_read_idx_bad_magic(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"\x12\x34\x56\x78" + b"\x00" * 16)
    with pytest.raises(DataFormatError):
        read_idx(path)


def test_read_idx_truncated_payload(tmp_path):
    path = tmp_path / "short"
    path.write_bytes(struct.pack(">IIII", 2051, 5, 28, 28) + b"\x00" * 10)
    with pytest.raises(OSError):
        read_idx(path)


def test_wrong_rank_for_labels(mini_mnist_dir, tmp_path):
    # an image payload (rank 3, magic 2051) in a label slot must be rejected
    rng = np.random.default_rng(1)
    imgs = rng.integers(0, 256, size=(4, 28, 28), dtype=np.uint8)
    write_idx_images(mini_mnist_dir / "train-labels-idx1-ubyte", imgs)
    with pytest.raises(DataFormatError):
        load_mnist(mini_mnist_dir)


def test_load_mnist_shapes_and_scaling(mini_mnist_dir):
    handle = load_mnist(mini_mnist_dir)
    assert handle.train_images.shape == (40, 784)
    assert handle.test_images.shape == (20, 784)
    assert handle.train_images.min() >= 0 and handle.train_images.max() <= 1
    assert handle.name == "mnist"
    assert mnist_available(mini_mnist_dir)


def test_load_mnist_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mnist(tmp_path)
    assert not mnist_available(tmp_path)


def test_load_mnist_env_resolution(mini_mnist_dir, monkeypatch):
    monkeypatch.setenv("SPINBAYES_MNIST_DIR", str(mini_mnist_dir))
    handle = load_mnist()
    assert handle.train_images.shape[0] == 40
    monkeypatch.delenv("SPINBAYES_MNIST_DIR")
    with pytest.raises(InvalidArgumentError):
        load_mnist()


def test_handle_validation():
    with pytest.raises(DataFormatError):
        DatasetHandle(
            train_images=np.zeros((3, 4)),
            train_labels=np.zeros(2, dtype=int),
            test_images=np.zeros((1, 4)),
            test_labels=np.zeros(1, dtype=int),
        )
    with pytest.raises(DataFormatError):
        DatasetHandle(
            train_images=np.full((2, 4), 3.0),
            train_labels=np.zeros(2, dtype=int),
            test_images=np.zeros((1, 4)),
            test_labels=np.zeros(1, dtype=int),
        )


def test_digits_surrogate_handle():
    handle = load_digits_surrogate()
    assert handle.name == "digits-surrogate"
    assert handle.n_features == 64
    assert handle.n_classes == 10
    assert handle.train_images.max() <= 1.0
    again = load_digits_surrogate()
    assert np.array_equal(handle.train_labels, again.train_labels)


def test_stratified_subset_counts_and_determinism():
    rng = np.random.default_rng(3)
    labels = rng.integers(0, 10, size=5000)
    images = rng.uniform(0, 1, size=(5000, 16))
    xa, ya = stratified_subset(images, labels, 1000, seed=42)
    xb, yb = stratified_subset(images, labels, 1000, seed=42)
    assert np.array_equal(xa, xb) and np.array_equal(ya, yb)
    assert ya.size == 1000
    counts = np.bincount(ya, minlength=10)
    assert counts.max() - counts.min() <= 1
    xc, yc = stratified_subset(images, labels, 1000, seed=43)
    assert not np.array_equal(ya, yc) or not np.array_equal(xa, xc)


def test_stratified_subset_validation():
    images = np.zeros((10, 2))
    labels = np.array([0] * 9 + [1])
    with pytest.raises(InvalidArgumentError):
        stratified_subset(images, labels, 0, seed=0)
    with pytest.raises(InvalidArgumentError):
        stratified_subset(images, labels, 11, seed=0)
    with pytest.raises(InvalidArgumentError):
        stratified_subset(images, labels, 6, seed=0)  # class 1 has one sample
