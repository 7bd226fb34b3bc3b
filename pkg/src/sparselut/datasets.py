"""Dataset loading and synthesis.

All features live in [0, 1] as float64; labels are int64 class indices.
Loaders raise FormatError on malformed files, with enough position context
to find the damage.
"""

from __future__ import annotations

import gzip
import itertools
import math
import struct
from dataclasses import dataclass

import numpy as np

from sparselut.errors import FormatError
from sparselut.numerics import RngStream

__all__ = ["Dataset", "load_mnist_idx", "load_csv_dataset", "synth_centered_blobs"]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    """Labeled features with train/test splits."""

    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    n_classes: int

    def __post_init__(self):
        for name in ("train", "test"):
            x, y = self.split(name)
            if x.shape[0] != y.shape[0]:
                raise ValueError(
                    f"{name} split: {x.shape[0]} samples vs {y.shape[0]} labels")
            if y.size and (y.min() < 0 or y.max() >= self.n_classes):
                raise ValueError(
                    f"{name} split: labels outside [0, {self.n_classes})")

    @property
    def n_features(self) -> int:
        return self.train_x.shape[1]

    def split(self, name: str):
        if name == "train":
            return self.train_x, self.train_y
        if name == "test":
            return self.test_x, self.test_y
        raise ValueError(f"unknown split {name!r}")

    @classmethod
    def from_splits(cls, train: "Dataset", test: "Dataset") -> "Dataset":
        """Train split of one dataset combined with another's as test."""
        if train.n_features != test.n_features:
            raise ValueError(
                f"feature dims differ: {train.n_features} vs {test.n_features}")
        return cls(train.train_x, train.train_y, test.train_x, test.train_y,
                   max(train.n_classes, test.n_classes))


def _open_maybe_gzip(path):
    f = open(path, "rb")
    if f.peek(2)[:2] == b"\x1f\x8b":
        return gzip.GzipFile(fileobj=f)
    return f


def _read_exact(f, n, path, what):
    data = f.read(n)
    if len(data) != n:
        raise FormatError(
            f"{path}: truncated {what}: expected {n} bytes, got {len(data)}")
    return data


def load_mnist_idx(images_path, labels_path) -> Dataset:
    """Load one IDX image/label file pair as a single-split dataset.

    Pixels are scaled by 1/256 into [0, 1). The data lands in the train
    split; combine two loads with ``Dataset.from_splits`` for train + test.
    """
    with _open_maybe_gzip(images_path) as f:
        magic, count, rows, cols = struct.unpack(
            ">IIII", _read_exact(f, 16, images_path, "image header"))
        if magic != IDX_IMAGE_MAGIC:
            raise FormatError(
                f"{images_path}: bad image magic 0x{magic:08x}, "
                f"expected 0x{IDX_IMAGE_MAGIC:08x}")
        n_bytes = count * rows * cols
        pixels = np.frombuffer(
            _read_exact(f, n_bytes, images_path, "pixel data"), dtype=np.uint8)
    with _open_maybe_gzip(labels_path) as f:
        magic, label_count = struct.unpack(
            ">II", _read_exact(f, 8, labels_path, "label header"))
        if magic != IDX_LABEL_MAGIC:
            raise FormatError(
                f"{labels_path}: bad label magic 0x{magic:08x}, "
                f"expected 0x{IDX_LABEL_MAGIC:08x}")
        labels = np.frombuffer(
            _read_exact(f, label_count, labels_path, "label data"), dtype=np.uint8)
    if label_count != count:
        raise FormatError(
            f"{labels_path}: {label_count} labels for {count} images")
    x = pixels.astype(np.float64).reshape(count, rows * cols) / 256.0
    y = labels.astype(np.int64)
    empty_x = np.empty((0, rows * cols), dtype=np.float64)
    empty_y = np.empty((0,), dtype=np.int64)
    return Dataset(x, y, empty_x, empty_y, n_classes=10)


def load_csv_dataset(path, n_features: int, n_classes: int,
                     test_path=None, test_fraction: float = 0.2) -> Dataset:
    """CSV rows of n_features numeric columns followed by an integer label.

    A non-numeric first row is treated as a header. Features are min-max
    scaled per column using train-split statistics only; constant train
    columns scale to zero everywhere. Without a separate test file the last
    test_fraction of rows becomes the test split (deterministic).
    """
    train_x, train_y = _read_csv_rows(path, n_features, n_classes)
    if test_path is not None:
        test_x, test_y = _read_csv_rows(test_path, n_features, n_classes)
    else:
        cut = train_x.shape[0] - int(round(test_fraction * train_x.shape[0]))
        cut = max(min(cut, train_x.shape[0]), 0)
        test_x, test_y = train_x[cut:], train_y[cut:]
        train_x, train_y = train_x[:cut], train_y[:cut]
    if train_x.shape[0] == 0:
        raise FormatError(f"{path}: no training rows")

    lo = train_x.min(axis=0)
    hi = train_x.max(axis=0)
    span = hi - lo
    span[span == 0.0] = np.inf  # zero-range rule: constant columns -> 0

    def scale(m):
        return np.clip((m - lo) / span, 0.0, 1.0)

    return Dataset(scale(train_x), train_y, scale(test_x), test_y, n_classes)


def _read_csv_rows(path, n_features, n_classes):
    features, labels = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            if line_no == 1:
                try:
                    float(cells[0])
                except ValueError:
                    continue  # header row
            if len(cells) != n_features + 1:
                raise FormatError(
                    f"{path}:{line_no}: expected {n_features + 1} columns, "
                    f"got {len(cells)}")
            try:
                row = [float(c) for c in cells[:-1]]
                label = int(cells[-1])
            except ValueError as exc:
                raise FormatError(f"{path}:{line_no}: non-numeric cell ({exc})")
            if not 0 <= label < n_classes:
                raise FormatError(
                    f"{path}:{line_no}: label {label} outside [0, {n_classes})")
            features.append(row)
            labels.append(label)
    if not features:
        raise FormatError(f"{path}: no data rows")
    return np.array(features, dtype=np.float64), np.array(labels, dtype=np.int64)


def synth_centered_blobs(n_samples: int, side: int, n_classes: int,
                         rng: RngStream, *, sites: int = 6,
                         center_noise: float = 0.08,
                         test_fraction: float = 0.2) -> Dataset:
    """Synthetic side x side images whose class signal sits in the center.

    A fixed pool of Gaussian bump sites is placed inside the central side/2
    window; each class lights up its own half of the sites (a distinct
    balanced on/off code), so classification requires reading relative
    intensities at several central locations. Per-sample position jitter,
    amplitude jitter, and pixel noise keep the task from saturating. Border
    pixels carry only i.i.d. noise of amplitude <= 0.02, so informative
    connections must target the central window.
    """
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")
    if n_samples < 1 or n_classes < 1:
        raise ValueError("need n_samples >= 1 and n_classes >= 1")

    half = side // 2
    margin = side // 4  # central window: [margin, margin + half)
    sigma = side / 20.0

    n_sites = max(2, sites)
    while math.comb(n_sites, n_sites // 2) < n_classes:
        n_sites += 1

    # site pool spread over the window interior, clear of the window edge
    centers = margin + 1.5 + rng.uniform((n_sites, 2)) * (half - 3.0)
    # distinct balanced codes: each class turns on exactly half of the sites
    combos = list(itertools.combinations(range(n_sites), n_sites // 2))
    picks = rng.permutation(len(combos))[:n_classes]
    codes = np.full((n_classes, n_sites), 0.25)
    for c, p in enumerate(picks):
        codes[c, list(combos[int(p)])] = 1.0

    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    labels = rng.integers(0, n_classes, size=n_samples).astype(np.int64)
    jitter = rng.normal((n_samples, n_sites, 2)) * (side / 30.0)
    amp_jit = np.clip(1.0 + 0.3 * rng.normal((n_samples, n_sites)), 0.55, 1.45)
    # a per-sample global gain makes single-site intensities ambiguous:
    # classes are only decodable from relative levels across sites, which
    # keeps the training loss (and so the connectivity gradients) alive
    gain = np.clip(1.0 + 0.25 * rng.normal((n_samples, 1)), 0.55, 1.45)
    amp_jit = amp_jit * gain

    central = np.zeros((side, side), dtype=bool)
    central[margin:margin + half, margin:margin + half] = True

    x = np.empty((n_samples, side * side), dtype=np.float64)
    block = 2048  # bound temporaries for large sample counts
    for start in range(0, n_samples, block):
        stop = min(start + block, n_samples)
        noise = rng.uniform((stop - start, side, side))
        images = np.where(central, center_noise * noise, 0.02 * noise)
        lab = labels[start:stop]
        for b in range(n_sites):
            cy = centers[b, 0] + jitter[start:stop, b, 0]
            cx = centers[b, 1] + jitter[start:stop, b, 1]
            a = codes[lab, b] * amp_jit[start:stop, b]
            d2 = ((yy[None] - cy[:, None, None]) ** 2
                  + (xx[None] - cx[:, None, None]) ** 2)
            bump = a[:, None, None] * np.exp(-d2 / (2 * sigma ** 2))
            images += np.where(central, bump, 0.0)
        x[start:stop] = np.clip(images, 0.0, 0.999).reshape(stop - start, -1)
    cut = n_samples - int(round(test_fraction * n_samples))
    return Dataset(x[:cut], labels[:cut], x[cut:], labels[cut:], n_classes)
