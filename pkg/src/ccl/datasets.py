"""Small classification datasets: synthetic generators, IDX and CSV loaders, splits."""
from __future__ import annotations

import csv
import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ClassStarvationError,
    FormatError,
    InvalidParamsError,
    NonNumericFeatureError,
    ParseError,
)
from .selection import balanced_counts

__all__ = [
    "Dataset",
    "gen_blobs",
    "gen_two_spirals",
    "load_idx",
    "load_csv",
    "split",
]

SPLITS = ("train", "val", "test")
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """Feature matrix, dense integer labels and a per-row split tag."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    split: np.ndarray

    def __post_init__(self):
        n = self.X.shape[0]
        if self.X.ndim != 2 or self.y.shape != (n,) or self.split.shape != (n,):
            raise InvalidParamsError("X, y and split must have matching row counts")
        if not np.all(np.isfinite(self.X)):
            raise InvalidParamsError("features contain non-finite values")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise InvalidParamsError("labels out of range")
        if not np.isin(self.split, SPLITS).all():
            raise InvalidParamsError("unknown split tag")
        for arr in (self.X, self.y, self.split):
            arr.flags.writeable = False

    def __len__(self):
        return self.X.shape[0]

    def part(self, name):
        """``(X, y)`` rows of one split."""
        mask = self.split == name
        return self.X[mask], self.y[mask]

    @property
    def train(self):
        return self.part("train")

    @property
    def val(self):
        return self.part("val")

    @property
    def test(self):
        return self.part("test")

    @classmethod
    def from_arrays(cls, X, y, n_classes=None, split=None):
        X = np.array(X, dtype=np.float64)
        y = np.array(y, dtype=np.intp)
        if n_classes is None:
            n_classes = int(y.max()) + 1 if y.size else 0
        if split is None:
            split = np.full(X.shape[0], "train")
        return cls(X, y, int(n_classes), np.array(split, dtype="<U5"))


def _class_counts(n, C):
    counts = np.full(C, n // C)
    counts[: n % C] += 1
    return counts


def gen_blobs(n, C, noise=0.5, seed=0, radius=3.0):
    """``C`` isotropic Gaussian clusters with centres evenly spaced on a circle."""
    if not (n >= C >= 2) or not noise > 0:
        raise InvalidParamsError("need n >= C >= 2 and noise > 0")
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(C) / C
    centers = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    y = np.repeat(np.arange(C), _class_counts(n, C))
    X = centers[y] + noise * rng.standard_normal((n, 2))
    order = rng.permutation(n)
    return Dataset.from_arrays(X[order], y[order], C)


def gen_two_spirals(n, noise=0.2, seed=0, turns=1.0):
    """Two interleaved Archimedean spirals, ``n / 2`` points each.

    Points are uniform in angle along ``turns`` full turns. Class 1 is class 0
    rotated by pi. Radius grows by 1 per half turn, so neighbouring arms are
    one unit apart. With whole turns neither class dominates a half-plane, so
    a linear classifier stays near chance.
    """
    if n < 2 or n % 2 or noise < 0:
        raise InvalidParamsError("n must be a positive even integer and noise >= 0")
    rng = np.random.default_rng(seed)
    half = n // 2
    theta = np.pi / 2 + rng.random(half) * (2.0 * np.pi * turns)
    r = theta / np.pi
    arm = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    X = np.vstack([arm, -arm]) + noise * rng.standard_normal((n, 2))
    y = np.repeat([0, 1], half)
    order = rng.permutation(n)
    return Dataset.from_arrays(X[order], y[order], 2)


def _read_idx(path, expected_magic, ndim):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read IDX file {path}: {exc}") from exc
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated header", offset=len(raw))
    (magic,) = struct.unpack(">i", raw[:4])
    if magic != expected_magic:
        raise FormatError(f"{path}: bad magic number 0x{magic:08x}", offset=0)
    dims = struct.unpack(">" + "i" * ndim, raw[4:header])
    for j, d in enumerate(dims):
        if d < 0:
            raise FormatError(f"{path}: negative dimension", offset=4 + 4 * j)
    needed = header + int(np.prod(dims, dtype=np.int64))
    if len(raw) < needed:
        raise FormatError(f"{path}: truncated data, need {needed} bytes", offset=len(raw))
    if len(raw) > needed:
        raise FormatError(f"{path}: {len(raw) - needed} trailing bytes", offset=needed)
    data = np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)
    return data


def load_idx(images_path, labels_path):
    """Read an IDX image/label pair (MNIST layout); pixels scaled to [0, 1]."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"{labels_path}: {labels.shape[0]} labels for {images.shape[0]} images", offset=4
        )
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset.from_arrays(X, labels.astype(np.intp))


def write_idx(images_path, labels_path, images, labels):
    """Write uint8 images ``(n, rows, cols)`` and labels in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">iiii", IDX_IMAGES_MAGIC, *images.shape))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">ii", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def _label_key(v):
    try:
        return (0, float(v), v)
    except ValueError:
        return (1, 0.0, v)


def load_csv(path, label_column):
    """Numeric CSV with a header row; ``label_column`` is a name or 0-based index.

    Labels are remapped to ``0..C-1`` in sorted order of their original values.
    """
    if not os.path.exists(path):
        raise OSError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", line=1)
    header = [h.strip() for h in rows[0]]
    if isinstance(label_column, int):
        if not 0 <= label_column < len(header):
            raise ParseError(f"label column {label_column} out of range", line=1)
        li = label_column
    else:
        if label_column not in header:
            raise ParseError(f"no column named {label_column!r}", line=1)
        li = header.index(label_column)
    body = [(n, r) for n, r in enumerate(rows[1:], start=2) if any(c.strip() for c in r)]
    if not body:
        raise ParseError("no data rows", line=2)

    features, raw_labels = [], []
    for lineno, row in body:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        vals = []
        for j, cell in enumerate(row):
            if j == li:
                continue
            try:
                x = float(cell)
            except ValueError:
                raise NonNumericFeatureError(
                    f"non-numeric value {cell!r} in column {header[j]!r}", line=lineno
                ) from None
            if not math.isfinite(x):
                raise NonNumericFeatureError(f"non-finite value in column {header[j]!r}", line=lineno)
            vals.append(x)
        features.append(vals)
        raw_labels.append(row[li].strip())

    uniques = sorted(set(raw_labels), key=_label_key)
    mapping = {v: i for i, v in enumerate(uniques)}
    y = np.array([mapping[v] for v in raw_labels], dtype=np.intp)
    X = np.array(features, dtype=np.float64).reshape(len(body), len(header) - 1)
    return Dataset.from_arrays(X, y, len(uniques))


def _allocate(n, frac):
    return int(math.floor(n * frac + 0.5))


def split(dataset, val_fraction=0.1, test_fraction=0.2, seed=0, stratified=True):
    """Re-tag rows as train/val/test.

    Sizes are ``round(f * N)``. In stratified mode those totals are shared out
    across classes by largest remainder, so every class keeps its ratio to
    within one sample per split.
    """
    if not (val_fraction > 0 and test_fraction > 0 and val_fraction + test_fraction < 1):
        raise InvalidParamsError("fractions must be positive and sum to less than 1")
    N = len(dataset)
    rng = np.random.default_rng(seed)
    tags = np.full(N, "train", dtype="<U5")
    n_test = _allocate(N, test_fraction)
    n_val = _allocate(N, val_fraction)
    if stratified:
        test_counts = balanced_counts(dataset.y, n_test)
        val_counts = balanced_counts(dataset.y, n_val)
        for c in np.unique(dataset.y):
            idx = rng.permutation(np.flatnonzero(dataset.y == c))
            t, v = test_counts[c], val_counts[c]
            tags[idx[:t]] = "test"
            tags[idx[t : t + v]] = "val"
    else:
        idx = rng.permutation(N)
        tags[idx[:n_test]] = "test"
        tags[idx[n_test : n_test + n_val]] = "val"
    present = np.unique(dataset.y[tags == "train"])
    if present.size != dataset.n_classes:
        missing = sorted(set(range(dataset.n_classes)) - set(present.tolist()))
        raise ClassStarvationError(f"classes {missing} have no training rows")
    return Dataset(dataset.X, dataset.y, dataset.n_classes, tags)
