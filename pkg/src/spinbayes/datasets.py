"""Dataset ingestion: IDX-format digit images plus a desk-scale surrogate.

The IDX reader handles the classic big-endian layout (magic, dims, raw
ubytes), gzipped or plain.  Image files carry magic 2051 and three dims;
label files carry 2049 and one dim.  Pixels are scaled to [0, 1].

When the full 28x28 dataset is not on disk the 8x8 scikit-learn digits set
serves as a stand-in with the same handle shape, so every pipeline stage can
be exercised at desk scale.
"""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgumentError

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049
MNIST_DIR_ENV = "SPINBAYES_MNIST_DIR"

_MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class DatasetHandle:
    """Flattened image rows in [0, 1] with integer labels, both splits."""

    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray
    name: str = "mnist"

    def __post_init__(self) -> None:
        for images, labels, tag in (
            (self.train_images, self.train_labels, "train"),
            (self.test_images, self.test_labels, "test"),
        ):
            if images.ndim != 2 or images.shape[0] != labels.shape[0]:
                raise DataFormatError(f"{tag} split images/labels disagree")
            if images.size and (images.min() < 0 or images.max() > 1):
                raise DataFormatError(f"{tag} images not normalized to [0, 1]")

    @property
    def n_features(self) -> int:
        return self.train_images.shape[1]

    @property
    def n_classes(self) -> int:
        return int(max(self.train_labels.max(), self.test_labels.max())) + 1


def _open_maybe_gzip(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path: str | Path) -> np.ndarray:
    """Parse one IDX file into an ubyte ndarray with its declared dims."""
    path = Path(path)
    with _open_maybe_gzip(path) as fh:
        header = fh.read(4)
        if len(header) < 4:
            raise DataFormatError(f"{path.name}: too short for an IDX header")
        magic = struct.unpack(">I", header)[0]
        if magic >> 16 != 0:
            raise DataFormatError(f"{path.name}: bad IDX magic {magic:#010x}")
        dtype_code = (magic >> 8) & 0xFF
        ndims = magic & 0xFF
        if dtype_code != 0x08:
            raise DataFormatError(
                f"{path.name}: only ubyte IDX payloads supported, got code {dtype_code:#x}"
            )
        if not 1 <= ndims <= 3:
            raise DataFormatError(f"{path.name}: unsupported rank {ndims}")
        raw_dims = fh.read(4 * ndims)
        if len(raw_dims) < 4 * ndims:
            raise OSError(f"{path.name}: truncated before dimension table")
        dims = struct.unpack(f">{ndims}I", raw_dims)
        expected = int(np.prod(dims))
        payload = fh.read(expected)
        if len(payload) < expected:
            raise OSError(
                f"{path.name}: truncated payload, wanted {expected} bytes got {len(payload)}"
            )
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def _read_images(path: Path) -> np.ndarray:
    arr = read_idx(path)
    if arr.ndim != 3:
        raise DataFormatError(
            f"{path.name}: expected an image file (magic {IMAGES_MAGIC}), got rank {arr.ndim}"
        )
    return arr.reshape(arr.shape[0], -1).astype(float) / 255.0


def _read_labels(path: Path) -> np.ndarray:
    arr = read_idx(path)
    if arr.ndim != 1:
        raise DataFormatError(
            f"{path.name}: expected a label file (magic {LABELS_MAGIC}), got rank {arr.ndim}"
        )
    labels = arr.astype(int)
    if labels.size and (labels.min() < 0 or labels.max() > 9):
        raise DataFormatError(f"{path.name}: labels outside 0-9")
    return labels


def _resolve(root: Path, stem: str) -> Path:
    for candidate in (root / stem, root / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{stem}[.gz] not found under {root}")


def mnist_dir(path: str | Path | None = None) -> Path | None:
    """Resolve the dataset directory from the argument or the environment."""
    if path is not None:
        return Path(path)
    env = os.environ.get(MNIST_DIR_ENV)
    return Path(env) if env else None


def mnist_available(path: str | Path | None = None) -> bool:
    root = mnist_dir(path)
    if root is None or not root.is_dir():
        return False
    try:
        for stem in _MNIST_FILES.values():
            _resolve(root, stem)
    except FileNotFoundError:
        return False
    return True


def load_mnist(path: str | Path | None = None) -> DatasetHandle:
    """Load the four standard IDX files from a directory."""
    root = mnist_dir(path)
    if root is None:
        raise InvalidArgumentError(
            f"no dataset directory given and {MNIST_DIR_ENV} is unset"
        )
    return DatasetHandle(
        train_images=_read_images(_resolve(root, _MNIST_FILES["train_images"])),
        train_labels=_read_labels(_resolve(root, _MNIST_FILES["train_labels"])),
        test_images=_read_images(_resolve(root, _MNIST_FILES["test_images"])),
        test_labels=_read_labels(_resolve(root, _MNIST_FILES["test_labels"])),
        name="mnist",
    )


def load_digits_surrogate() -> DatasetHandle:
    """Desk-scale 8x8 digit set with the same handle shape as the real thing."""
    from sklearn.datasets import load_digits
    from sklearn.model_selection import train_test_split

    X, y = load_digits(return_X_y=True)
    X = X / 16.0
    x_tr, x_te, y_tr, y_te = train_test_split(
        X, y, test_size=0.25, random_state=0, stratify=y
    )
    return DatasetHandle(
        train_images=x_tr,
        train_labels=y_tr,
        test_images=x_te,
        test_labels=y_te,
        name="digits-surrogate",
    )


def stratified_subset(
    images: np.ndarray, labels: np.ndarray, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic label-stratified subset, per-class counts within +-1.

    Classes get floor(n / n_classes) items each; the remainder goes to a
    seed-determined subset of classes.  Raises if any class is too small.
    """
    labels = np.asarray(labels)
    if n < 1 or n > labels.size:
        raise InvalidArgumentError(f"subset size {n} outside [1, {labels.size}]")
    classes = np.unique(labels)
    rng = np.random.default_rng(seed)
    base, extra = divmod(n, classes.size)
    lucky = set(rng.permutation(classes)[:extra].tolist())
    chosen = []
    for cls in classes:
        want = base + (1 if cls in lucky else 0)
        pool = np.flatnonzero(labels == cls)
        if pool.size < want:
            raise InvalidArgumentError(
                f"class {cls} has {pool.size} samples, need {want}"
            )
        chosen.append(rng.choice(pool, size=want, replace=False))
    idx = np.concatenate(chosen)
    rng.shuffle(idx)
    return images[idx], labels[idx]
