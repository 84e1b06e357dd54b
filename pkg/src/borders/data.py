"""Data ingestion, standardization, splitting and rank-preserving subsampling.

Files are read and written in the LIBSVM sparse format
(``<label> <index>:<value> ...``, 1-based indices) but held densely in
memory: the classifiers are dense-distance based, so sparse storage buys
nothing here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, PreconditionError


def round_half_up(x: float) -> int:
    """Round to nearest integer with ties going up (0.5 -> 1)."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with integer class identifiers.

    ``labels`` index into ``class_names``, which preserves the original
    label strings in first-appearance order.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise PreconditionError("features must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(features)):
            raise PreconditionError("features must be finite")
        if labels.shape != (features.shape[0],):
            raise PreconditionError("labels length must match the number of rows")
        if len(self.class_names) and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise PreconditionError("every label must index class_names")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def select(self, rows) -> "Dataset":
        """Row subset sharing this dataset's class table."""
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], self.class_names)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine transform fitted on training data.

    Constant features are dropped; ``kept_features`` lists the surviving
    original column indices in ascending order, and ``means``/``stddevs``
    are aligned with it.
    """

    means: np.ndarray
    stddevs: np.ndarray
    kept_features: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "means", np.asarray(self.means, dtype=float))
        object.__setattr__(self, "stddevs", np.asarray(self.stddevs, dtype=float))
        if np.any(self.stddevs <= 0):
            raise PreconditionError("stddevs must be strictly positive")
        kept = list(self.kept_features)
        if kept != sorted(set(kept)):
            raise PreconditionError("kept_features must be sorted and unique")
        if len(kept) != len(self.means) or len(kept) != len(self.stddevs):
            raise PreconditionError("means/stddevs must align with kept_features")


def parse_libsvm_data(text) -> Dataset:
    """Parse LIBSVM sparse data into a dense :class:`Dataset`.

    ``text`` may be a string or any iterable of lines.  Width is the
    maximum feature index seen anywhere in the input; absent indices are
    zero.  Labels are mapped to identifiers in first-appearance order.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = list(text)

    rows: list[dict[int, float]] = []
    labels: list[int] = []
    class_names: list[str] = []
    name_to_id: dict[str, int] = {}
    width = 0

    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        name = parts[0]
        if ":" in name:
            raise FormatError(f"line {line_no}: missing label")
        if name not in name_to_id:
            name_to_id[name] = len(class_names)
            class_names.append(name)
        labels.append(name_to_id[name])

        feats: dict[int, float] = {}
        prev_idx = 0
        for tok in parts[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise FormatError(f"line {line_no}: malformed token '{tok}'")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise FormatError(f"line {line_no}: non-numeric token '{tok}'") from None
            if idx < 1:
                raise FormatError(f"line {line_no}: index must be >= 1, got {idx}")
            if idx in feats:
                raise FormatError(f"line {line_no}: duplicate index {idx}")
            if idx <= prev_idx:
                raise FormatError(f"line {line_no}: indices must be strictly increasing")
            prev_idx = idx
            feats[idx] = val
        rows.append(feats)
        width = max(width, prev_idx)

    if not rows:
        raise FormatError("no samples in input")
    width = max(width, 1)

    features = np.zeros((len(rows), width))
    for r, feats in enumerate(rows):
        for idx, val in feats.items():
            features[r, idx - 1] = val
    return Dataset(features, np.array(labels, dtype=int), tuple(class_names))


def serialize_libsvm_data(d: Dataset) -> str:
    """Write a dataset back out in LIBSVM sparse format (zeros omitted)."""
    out = []
    for row, label in zip(d.features, d.labels):
        parts = [d.class_names[label]]
        for idx in np.nonzero(row)[0]:
            parts.append(f"{idx + 1}:{row[idx]:.17g}")
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def standardize_fit(train: Dataset) -> Standardizer:
    """Fit per-feature mean and population stddev; drop constant features."""
    if train.n_samples < 2:
        raise PreconditionError("standardization needs at least 2 rows")
    means = train.features.mean(axis=0)
    stds = train.features.std(axis=0)
    kept = tuple(int(i) for i in np.nonzero(stds > 0)[0])
    return Standardizer(means[list(kept)], stds[list(kept)], kept)


def standardize_apply(s: Standardizer, d: Dataset) -> Dataset:
    """Project onto the kept features and scale to zero mean, unit stddev."""
    if s.kept_features and d.n_features <= max(s.kept_features):
        raise PreconditionError(
            f"dataset has {d.n_features} features but standardizer "
            f"references column {max(s.kept_features)}"
        )
    cols = list(s.kept_features)
    transformed = (d.features[:, cols] - s.means) / s.stddevs
    return Dataset(transformed, d.labels, d.class_names)


def split(d: Dataset, f: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded train/test split with the test set taking round(f*n) rows."""
    if not 0 < f < 1:
        raise PreconditionError("split fraction must be in (0, 1)")
    n_test = round_half_up(f * d.n_samples)
    if n_test < 1 or n_test > d.n_samples - 1:
        raise PreconditionError(
            f"degenerate split: {n_test} test rows out of {d.n_samples}"
        )
    perm = np.random.default_rng(seed).permutation(d.n_samples)
    test_rows = np.sort(perm[:n_test])
    train_rows = np.sort(perm[n_test:])
    return d.select(train_rows), d.select(test_rows)


def _subsample_exponent(sizes: np.ndarray, f: float, tol: float = 1e-10) -> float:
    """Solve for the decay exponent of the per-class retention fraction.

    The retention function alpha(n) = C * n^-zeta with C = n_min^zeta keeps
    the smallest class in full.  zeta in [0, 1] is found by bisection on the
    total-count constraint sum_i alpha(n_i) * n_i = f * N, which is monotone
    non-increasing in zeta for unequal class sizes.
    """
    n_min = sizes.min()
    total = sizes.sum()
    target = f * total

    def retained(zeta: float) -> float:
        return float(n_min ** zeta * np.sum(sizes ** (1.0 - zeta)))

    if np.all(sizes == n_min):
        raise PreconditionError(
            "all classes are the same size: the retained total is independent "
            "of the exponent, so only f = 1 is feasible"
        )
    if target < len(sizes) * n_min - 1e-9:
        raise PreconditionError(
            f"infeasible fraction {f}: cannot keep the smallest class in full "
            f"({len(sizes)} classes of at least {n_min} rows exceed "
            f"{target:.1f} retained rows)"
        )

    lo, hi = 0.0, 1.0
    if retained(hi) >= target:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if retained(mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def subsample(d: Dataset, f: float, seed: int) -> Dataset:
    """Reduce the dataset to about f*n rows, preserving class-size rank order.

    Larger classes are thinned more aggressively than smaller ones; the
    smallest class is kept in full.  Per-class row selection is a seeded
    shuffle, deterministic for a fixed seed.
    """
    if not 0 < f < 1:
        raise PreconditionError("subsample fraction must be in (0, 1)")
    class_ids = np.arange(d.n_classes)
    sizes = np.bincount(d.labels, minlength=d.n_classes).astype(float)
    present = sizes > 0
    if present.sum() < 2:
        raise PreconditionError("subsampling needs at least two classes")
    class_ids = class_ids[present]
    sizes = sizes[present]

    zeta = _subsample_exponent(sizes, f)
    n_min = sizes.min()

    keep_rows = []
    for cid, size in zip(class_ids, sizes):
        kept = round_half_up(n_min ** zeta * size ** (1.0 - zeta))
        kept = min(kept, int(size))
        rows = np.nonzero(d.labels == cid)[0]
        rng = np.random.default_rng([seed, int(cid)])
        chosen = rng.permutation(len(rows))[:kept]
        keep_rows.append(rows[np.sort(chosen)])
    keep = np.sort(np.concatenate(keep_rows))
    return d.select(keep)
