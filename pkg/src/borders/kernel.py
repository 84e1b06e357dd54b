"""Gaussian kernel estimation with an adaptively solved bandwidth.

The binary decision functions here estimate the difference in conditional
probabilities r = p(+1|x) - p(-1|x).  The adaptive variant picks, for each
query point, the bandwidth sigma at which the total Gaussian weight over
the contributing samples equals a fixed target W, so the effective
neighbourhood size plays the role of k in k-nearest-neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import PreconditionError, RootFindingError

BANDWIDTH_RESIDUAL_TOL = 1e-10
_MAX_BRACKET_DOUBLINGS = 60


@dataclass(frozen=True)
class AgfConfig:
    """Adaptive-bandwidth settings: total kernel weight W and neighbour count k.

    ``n_neighbours = 0`` means every sample participates in the kernel sums.
    """

    total_weight: float
    n_neighbours: int = 0

    def __post_init__(self):
        if self.total_weight <= 0:
            raise PreconditionError("total_weight must be positive")
        if self.n_neighbours < 0:
            raise PreconditionError("n_neighbours must be non-negative")
        if self.n_neighbours > 0 and self.total_weight >= self.n_neighbours:
            raise PreconditionError(
                "total_weight must be below n_neighbours: a sum of k Gaussian "
                "terms each at most 1 cannot reach k"
            )


@dataclass(frozen=True)
class BinaryProblem:
    """Training samples with class signs in {-1, +1}."""

    samples: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        signs = np.asarray(self.signs, dtype=float)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "signs", signs)
        if samples.ndim != 2:
            raise PreconditionError("samples must be a 2-D matrix")
        if signs.shape != (samples.shape[0],):
            raise PreconditionError("signs length must match sample count")
        if not np.all(np.isin(signs, (-1.0, 1.0))):
            raise PreconditionError("signs must be -1 or +1")
        if not (np.any(signs > 0) and np.any(signs < 0)):
            raise PreconditionError("both signs must be present")

    @classmethod
    def from_dataset(cls, d: Dataset, class_minus: int, class_plus: int) -> "BinaryProblem":
        """Restrict a dataset to two classes, mapping them onto -1/+1."""
        mask = (d.labels == class_minus) | (d.labels == class_plus)
        if not np.any(d.labels == class_minus) or not np.any(d.labels == class_plus):
            raise PreconditionError(
                f"classes {class_minus} and {class_plus} must both have samples"
            )
        signs = np.where(d.labels[mask] == class_plus, 1.0, -1.0)
        return cls(d.features[mask], signs)


def gaussian_kernel(distance, sigma: float):
    """exp(-distance^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise PreconditionError("sigma must be positive")
    distance = np.asarray(distance, dtype=float)
    return np.exp(-(distance ** 2) / (2.0 * sigma ** 2))


def _neighbourhood(x: np.ndarray, p: BinaryProblem, cfg: AgfConfig):
    """Distances, offsets and signs of the samples participating at x."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise PreconditionError("query point must be finite")
    diff = p.samples - x
    dist2 = np.einsum("ij,ij->i", diff, diff)
    k = cfg.n_neighbours
    if k > 0:
        if k > len(dist2):
            raise PreconditionError(
                f"n_neighbours={k} exceeds the {len(dist2)} available samples"
            )
        order = np.argsort(dist2, kind="stable")[:k]
        diff = diff[order]
        dist2 = dist2[order]
        signs = p.signs[order]
    else:
        signs = p.signs
    return diff, dist2, signs


def _solve_bandwidth_from_dist2(dist2: np.ndarray, w: float) -> float:
    n_zero = int(np.count_nonzero(dist2 == 0.0))
    if n_zero >= w:
        raise RootFindingError(
            f"query coincides with {n_zero} samples, already reaching the "
            f"weight target {w} at any bandwidth"
        )
    if w >= len(dist2):
        raise RootFindingError(
            f"weight target {w} is unreachable with {len(dist2)} samples"
        )
    positive = dist2[dist2 > 0]

    def residual(sigma: float) -> float:
        return float(np.exp(-dist2 / (2.0 * sigma ** 2)).sum()) - w

    lo = 1e-8 * np.sqrt(positive.min())
    while residual(lo) > 0:
        lo *= 1e-4
        if lo == 0.0:  # pragma: no cover - would need absurd data scales
            raise RootFindingError("could not bracket the bandwidth from below")
    hi = 10.0 * np.sqrt(positive.max())
    doublings = 0
    while residual(hi) < 0:
        hi *= 2.0
        doublings += 1
        if doublings > _MAX_BRACKET_DOUBLINGS:
            raise RootFindingError("could not bracket the bandwidth from above")

    for _ in range(500):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) <= BANDWIDTH_RESIDUAL_TOL:
            return mid
        if r < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-300:
            break
    raise RootFindingError("bandwidth bisection failed to meet the residual tolerance")


def solve_bandwidth(x, p: BinaryProblem, cfg: AgfConfig) -> float:
    """Bandwidth at which the total Gaussian weight over the neighbourhood is W.

    The weight sum is monotone increasing in sigma so the root, when it
    exists, is unique; it is isolated by bracketed bisection to an absolute
    residual of 1e-10.
    """
    _, dist2, _ = _neighbourhood(x, p, cfg)
    return _solve_bandwidth_from_dist2(dist2, cfg.total_weight)


def agf_decision(x, p: BinaryProblem, cfg: AgfConfig) -> float:
    """Adaptive-bandwidth estimate of p(+1|x) - p(-1|x)."""
    _, dist2, signs = _neighbourhood(x, p, cfg)
    sigma = _solve_bandwidth_from_dist2(dist2, cfg.total_weight)
    weights = np.exp(-dist2 / (2.0 * sigma ** 2))
    # dividing by the realized weight sum (= W up to the bisection residual)
    # keeps unanimous neighbourhoods at exactly +/-1
    return float(np.clip((signs * weights).sum() / weights.sum(), -1.0, 1.0))


def agf_gradient(x, p: BinaryProblem, cfg: AgfConfig) -> np.ndarray:
    """Gradient of :func:`agf_decision`, including the bandwidth's x-dependence.

    Differentiating the constant-weight condition sum_k K_k = W gives the
    correction term: the bandwidth shifts with x so that the total weight
    stays put, which couples every sample into each component.  Samples at
    zero distance drop out of both sums in the limit.
    """
    diff, dist2, signs = _neighbourhood(x, p, cfg)
    sigma = _solve_bandwidth_from_dist2(dist2, cfg.total_weight)
    weights = np.exp(-dist2 / (2.0 * sigma ** 2))

    correction_den = float((weights * dist2).sum())
    if correction_den == 0.0:
        raise RootFindingError("all contributing samples coincide with the query point")
    # sum_k K_k (x_k - x), the numerator of d(sigma)/dx over sigma
    correction_num = weights @ diff

    signed = signs * weights
    grad = signed @ diff - ((signed * dist2).sum() / correction_den) * correction_num
    return grad / (sigma ** 2 * cfg.total_weight)


def fixed_kernel_decision(x, p: BinaryProblem, sigma: float) -> float:
    """Fixed-bandwidth kernel estimate of p(+1|x) - p(-1|x)."""
    x = np.asarray(x, dtype=float)
    dist = np.linalg.norm(p.samples - x, axis=1)
    weights = gaussian_kernel(dist, sigma)
    total = weights.sum()
    if total == 0.0:
        raise RootFindingError("all kernel weights underflowed to zero")
    return float(np.clip((p.signs * weights).sum() / total, -1.0, 1.0))


def knn_classify(x, d: Dataset, k: int) -> tuple[int, np.ndarray]:
    """Majority vote among the k nearest samples.

    Distance ties are broken by lower row index, vote ties by lower class
    id.  Returns the winning class id and per-class vote fractions.
    """
    if k < 1 or k > d.n_samples:
        raise PreconditionError(f"k must be in [1, {d.n_samples}]")
    x = np.asarray(x, dtype=float)
    dist = np.linalg.norm(d.features - x, axis=1)
    nearest = np.argsort(dist, kind="stable")[:k]
    votes = np.bincount(d.labels[nearest], minlength=d.n_classes)
    fractions = votes / k
    return int(np.argmax(votes)), fractions


def agf_oracle(p: BinaryProblem, cfg: AgfConfig):
    """Decision oracle (value, gradient) pair over a fixed binary problem."""
    from .border import DecisionOracle

    return DecisionOracle(
        value=lambda x: agf_decision(x, p, cfg),
        gradient=lambda x: agf_gradient(x, p, cfg),
    )
