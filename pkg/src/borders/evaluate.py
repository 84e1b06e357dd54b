"""Skill scores and the timing harness behind the speed comparisons."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError

# Natural logs throughout: the uncertainty coefficient is a ratio of
# entropies, so the base cancels and "bits" vs "nats" makes no difference.


@dataclass(frozen=True)
class ConfusionMatrix:
    """Count table with rows = truth, columns = estimate."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise PreconditionError("counts must be square")
        if np.any(counts < 0):
            raise PreconditionError("counts must be non-negative")
        if counts.sum() < 1:
            raise PreconditionError("confusion matrix must contain at least one count")

    @classmethod
    def from_predictions(cls, truth, estimate, n_classes: int) -> "ConfusionMatrix":
        truth = np.asarray(truth, dtype=int)
        estimate = np.asarray(estimate, dtype=int)
        if truth.shape != estimate.shape:
            raise PreconditionError("truth and estimate must have the same length")
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (truth, estimate), 1)
        return cls(counts)

    @property
    def n_test(self) -> int:
        return int(self.counts.sum())


def accuracy(c: ConfusionMatrix) -> float:
    """Fraction of correct guesses."""
    return float(np.trace(c.counts) / c.n_test)


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]  # 0 log 0 = 0
    return float(-(p * np.log(p)).sum())


def uncertainty_coefficient(c: ConfusionMatrix) -> float:
    """Fraction of the class information conveyed by the estimate.

    (H_prior - H_posterior) / H_prior, where the prior entropy comes from
    the true-class marginal and the posterior entropy conditions on the
    estimated class.  Undefined when only one true class is present.
    """
    counts = c.counts.astype(float)
    n = counts.sum()
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)

    h_prior = _entropy(row / n)
    if h_prior == 0.0:
        raise PreconditionError(
            "uncertainty coefficient is undefined with a single true class"
        )
    # H(i|j) = -sum_ij (c_ij / n) log(c_ij / col_j)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(counts > 0, counts / np.where(col > 0, col, 1.0)[None, :], 1.0)
    h_post = float(-((counts / n) * np.log(ratio)).sum())
    return (h_prior - h_post) / h_prior


@dataclass(frozen=True)
class TimingReport:
    """Per-point classification time, optionally swept over a model size."""

    per_point_seconds: tuple[float, ...]
    sizes: tuple[int, ...]
    repetitions: int
    slope: float | None = None
    intercept: float | None = None
    r_squared: float | None = None


def time_classifier(
    classify_batch: Callable[[np.ndarray], object],
    test_features: np.ndarray,
    reps: int = 5,
) -> float:
    """Median-of-reps wall time per test point for a batch classifier.

    A warm-up pass runs first and is excluded.  The monotonic clock must
    resolve the measured duration; when it cannot, the error asks for more
    repetitions (or more test points) rather than reporting noise.
    """
    if reps < 3:
        raise PreconditionError("timing needs at least 3 repetitions")
    test_features = np.asarray(test_features, dtype=float)
    classify_batch(test_features)  # warm-up
    durations = []
    for _ in range(reps):
        start = time.perf_counter_ns()
        classify_batch(test_features)
        durations.append(time.perf_counter_ns() - start)
    median_ns = float(np.median(durations))
    if median_ns < 1000:
        raise PreconditionError(
            "measured duration is below the timer's useful resolution; "
            "increase reps or the number of test points"
        )
    return median_ns * 1e-9 / len(test_features)


def fit_time_scaling(sizes: Sequence[int], times: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through (size, time) with its R^2."""
    sizes = np.asarray(sizes, dtype=float)
    times = np.asarray(times, dtype=float)
    slope, intercept = np.polyfit(sizes, times, 1)
    predicted = slope * sizes + intercept
    ss_res = float(((times - predicted) ** 2).sum())
    ss_tot = float(((times - times.mean()) ** 2).sum())
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r_squared


def time_sweep(
    make_classifier: Callable[[int], Callable[[np.ndarray], object]],
    sizes: Sequence[int],
    test_features: np.ndarray,
    reps: int = 5,
) -> TimingReport:
    """Time one classifier per size and fit the time-vs-size line."""
    times = tuple(
        time_classifier(make_classifier(size), test_features, reps) for size in sizes
    )
    slope, intercept, r2 = fit_time_scaling(sizes, times)
    return TimingReport(
        per_point_seconds=times,
        sizes=tuple(int(s) for s in sizes),
        repetitions=reps,
        slope=slope,
        intercept=intercept,
        r_squared=r2,
    )


def report_lines(
    c: ConfusionMatrix,
    per_point_seconds: float | None = None,
) -> list[str]:
    """Key/value evaluation report (documented schema)."""
    lines = [
        f"n_test {c.n_test}",
        f"accuracy {accuracy(c):.17g}",
    ]
    try:
        lines.append(f"uc {uncertainty_coefficient(c):.17g}")
    except PreconditionError:
        lines.append("uc nan")
    for row in c.counts:
        lines.append("confusion " + " ".join(str(int(v)) for v in row))
    if per_point_seconds is not None:
        lines.append(f"per_point_seconds {per_point_seconds:.17g}")
    return lines
