"""Datasets and complementary-label generation.

Labels are 1-based throughout (values in 1..K). IDX files store 0-based
labels; the loader and writer translate at the file boundary.
"""

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import FormatError
from .transition import TransitionMatrix

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _check_labels(labels: np.ndarray, k: int, name: str) -> None:
    if labels.ndim != 1:
        raise ValueError(f"{name} must be a 1-D array")
    if labels.size and (labels.min() < 1 or labels.max() > k):
        raise ValueError(f"{name} must lie in 1..{k}")


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with ordinary labels in 1..k."""

    features: np.ndarray
    labels: np.ndarray
    k: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=int)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ValueError(f"features must be a nonempty 2-D matrix, got {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise ValueError("features and labels disagree on sample count")
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        _check_labels(y, self.k, "labels")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def save_csv(self, path) -> None:
        _write_csv(path, self.features, self.labels)


@dataclass(frozen=True)
class ComplementaryDataset:
    """Feature matrix with complementary labels; the ordinary labels, when
    carried along, are for evaluation only and never feed training."""

    features: np.ndarray
    complementary_labels: np.ndarray
    k: int
    hidden_ordinary: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        ybar = np.asarray(self.complementary_labels, dtype=int)
        if x.ndim != 2 or x.shape[0] == 0:
            raise ValueError(f"features must be a nonempty 2-D matrix, got {x.shape}")
        if x.shape[0] != ybar.shape[0]:
            raise ValueError("features and labels disagree on sample count")
        _check_labels(ybar, self.k, "complementary labels")
        x.setflags(write=False)
        ybar.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "complementary_labels", ybar)
        if self.hidden_ordinary is not None:
            y = np.asarray(self.hidden_ordinary, dtype=int)
            _check_labels(y, self.k, "hidden ordinary labels")
            if y.shape[0] != x.shape[0]:
                raise ValueError("hidden ordinary labels disagree on sample count")
            y.setflags(write=False)
            object.__setattr__(self, "hidden_ordinary", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def save_csv(self, path) -> None:
        _write_csv(path, self.features, self.complementary_labels)


@dataclass(frozen=True)
class SplitPair:
    train: ComplementaryDataset
    validation: ComplementaryDataset


def _write_csv(path, features: np.ndarray, labels: np.ndarray) -> None:
    d = features.shape[1]
    with open(path, "w") as fh:
        fh.write("label," + ",".join(f"f{j + 1}" for j in range(d)) + "\n")
        for y, row in zip(labels, features):
            fh.write(str(int(y)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def synthesize_complementary(
    data: LabeledDataset, t: TransitionMatrix, rng: np.random.Generator
) -> ComplementaryDataset:
    """Draw one complementary label per sample from the transition row of its
    ordinary label. Ordinary labels ride along as hidden evaluation targets.
    """
    if data.k != t.k:
        raise ValueError(f"class counts differ: data {data.k} vs matrix {t.k}")
    cdf = np.cumsum(t.rows, axis=1)
    u = rng.random(data.n)
    row_cdf = cdf[data.labels - 1]
    idx = np.argmax(row_cdf > u[:, None], axis=1)
    # Guard the float tail: if u exceeded the last cumsum, take the last
    # positive-probability class of the row instead of a zero-probability one.
    overflow = row_cdf[np.arange(data.n), -1] <= u
    if np.any(overflow):
        last_pos = t.rows.shape[1] - 1 - np.argmax(t.rows[:, ::-1] > 0, axis=1)
        idx[overflow] = last_pos[data.labels[overflow] - 1]
    ybar = idx + 1
    if t.clean and np.any(ybar == data.labels):
        raise AssertionError("clean matrix emitted a complementary label equal "
                             "to the ordinary one")
    return ComplementaryDataset(
        features=data.features,
        complementary_labels=ybar,
        k=data.k,
        hidden_ordinary=data.labels,
    )


def split_train_validation(
    data: ComplementaryDataset, fraction: float, rng: np.random.Generator
) -> SplitPair:
    """Uniformly random split without replacement; validation gets
    round(fraction * N) samples, at least 1 and at most N-1."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie strictly in (0, 1), got {fraction}")
    if data.n < 2:
        raise ValueError("need at least 2 samples to split")
    n_val = int(round(fraction * data.n))
    n_val = min(max(n_val, 1), data.n - 1)
    perm = rng.permutation(data.n)
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])

    def take(idx):
        return ComplementaryDataset(
            features=data.features[idx],
            complementary_labels=data.complementary_labels[idx],
            k=data.k,
            hidden_ordinary=None
            if data.hidden_ordinary is None
            else data.hidden_ordinary[idx],
        )

    return SplitPair(train=take(train_idx), validation=take(val_idx))


def make_gaussian_blobs(
    k: int,
    d: int,
    n_per_class: int,
    separation: float,
    rng: np.random.Generator,
) -> LabeledDataset:
    """Isotropic unit-variance Gaussian blobs, one per class.

    Class centers sit at separation * v_c for distinct unit vectors v_c:
    axis-aligned when d >= k, otherwise evenly rotated in the first two
    dimensions.
    """
    if k <= 2 or d < 2 or n_per_class < 1 or separation < 0:
        raise ValueError("need k > 2, d >= 2, n_per_class >= 1, separation >= 0")
    centers = np.zeros((k, d))
    if d >= k:
        for c in range(k):
            centers[c, c] = 1.0
    else:
        angles = 2.0 * np.pi * np.arange(k) / k
        centers[:, 0] = np.cos(angles)
        centers[:, 1] = np.sin(angles)
    centers *= separation
    n = k * n_per_class
    features = rng.standard_normal((n, d))
    labels = np.repeat(np.arange(1, k + 1), n_per_class)
    features += centers[labels - 1]
    return LabeledDataset(features=features, labels=labels, k=k)


# IDX container, big endian:
#   images: u32 magic 0x00000803 | u32 N | u32 rows | u32 cols | u8 pixels
#   labels: u32 magic 0x00000801 | u32 N | u8 labels (0-based)


def _read_u32(fh, path, offset):
    data = fh.read(4)
    if len(data) != 4:
        raise FormatError(f"{path}: truncated header", offset)
    return struct.unpack(">I", data)[0]


def read_idx_images(path) -> np.ndarray:
    """Raw (N, rows, cols) u8 array from an IDX image file."""
    with open(path, "rb") as fh:
        magic = _read_u32(fh, path, 0)
        if magic != IDX_IMAGES_MAGIC:
            raise FormatError(f"{path}: bad image magic {magic:#010x}", 0)
        n = _read_u32(fh, path, 4)
        rows = _read_u32(fh, path, 8)
        cols = _read_u32(fh, path, 12)
        payload = fh.read(n * rows * cols)
        if len(payload) != n * rows * cols:
            raise FormatError(f"{path}: truncated image payload", 16 + len(payload))
        return np.frombuffer(payload, dtype=np.uint8).reshape(n, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    """Raw (N,) u8 array of 0-based labels from an IDX label file."""
    with open(path, "rb") as fh:
        magic = _read_u32(fh, path, 0)
        if magic != IDX_LABELS_MAGIC:
            raise FormatError(f"{path}: bad label magic {magic:#010x}", 0)
        n = _read_u32(fh, path, 4)
        payload = fh.read(n)
        if len(payload) != n:
            raise FormatError(f"{path}: truncated label payload", 8 + len(payload))
        return np.frombuffer(payload, dtype=np.uint8)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError("images must be (N, rows, cols) u8")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if labels.ndim != 1:
        raise ValueError("labels must be (N,) u8 with 0-based values")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def load_idx_pair(images_path, labels_path) -> LabeledDataset:
    """Load an IDX image/label file pair.

    Images are flattened row-major and scaled to [0, 1] by dividing by 255;
    the file's 0-based labels become 1-based.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"image count {images.shape[0]} != label count {labels.shape[0]}", 4
        )
    n = images.shape[0]
    features = images.reshape(n, -1).astype(float) / 255.0
    k = int(labels.max()) + 1 if labels.size else 0
    return LabeledDataset(features=features, labels=labels.astype(int) + 1, k=k)
