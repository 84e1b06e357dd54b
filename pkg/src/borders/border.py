"""Border sampling: map a binary decision boundary as (point, normal) pairs.

Training repeatedly draws one sample from each class, bisects the decision
function to zero along the connecting segment, and records the gradient at
the root.  Classification then needs only the nearest border point and one
dot product, so its cost is linear in the number of border points and
independent of the training-set size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import FormatError, PreconditionError, TrainingError
from .kernel import BinaryProblem

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ATTEMPTS = 100
DEFAULT_MIN_GRAD = 1e-12


@dataclass(frozen=True)
class DecisionOracle:
    """A differentiable decision function r(x) in [-1, 1] with its gradient."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]

    def check_gradient(self, points, rtol: float = 1e-3, step: float = 1e-6) -> None:
        """Spot-check the gradient against central finite differences."""
        for x in np.atleast_2d(np.asarray(points, dtype=float)):
            g = np.asarray(self.gradient(x), dtype=float)
            fd = np.empty_like(g)
            for j in range(len(x)):
                h = step * (1.0 + abs(x[j]))
                e = np.zeros_like(x)
                e[j] = h
                fd[j] = (self.value(x + e) - self.value(x - e)) / (2.0 * h)
            scale = max(np.linalg.norm(g), np.linalg.norm(fd), 1e-12)
            if np.linalg.norm(g - fd) > rtol * scale:
                raise PreconditionError(
                    f"gradient disagrees with finite differences at {x}: "
                    f"analytic {g}, numeric {fd}"
                )


@dataclass(frozen=True)
class BinaryBordersModel:
    """Border points with paired gradient normals for one class pair.

    Normals are raw (unnormalized) gradients of the decision function at
    each border point; their magnitude feeds the tanh probability
    calibration, so they must not be rescaled.
    """

    points: np.ndarray
    normals: np.ndarray
    class_plus: int = 1
    class_minus: int = 0

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "normals", normals)
        if points.shape != normals.shape or points.shape[0] < 1:
            raise PreconditionError("points and normals must share a non-empty shape")
        if np.any(np.linalg.norm(normals, axis=1) == 0):
            raise PreconditionError("every normal must have positive magnitude")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_borders(self) -> int:
        return self.points.shape[0]

    def head(self, n: int) -> "BinaryBordersModel":
        """First n border pairs; with per-index seeding this equals a
        shorter training run."""
        return BinaryBordersModel(
            self.points[:n], self.normals[:n], self.class_plus, self.class_minus
        )


def find_border_point(o: DecisionOracle, x_plus, x_minus, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Zero the decision function along the segment from x_minus to x_plus.

    Plain bisection on the segment parameter: robust to the plateaus a
    saturating decision function produces, at the cost of more evaluations
    than a gradient-aware method would need.
    """
    x_plus = np.asarray(x_plus, dtype=float)
    x_minus = np.asarray(x_minus, dtype=float)
    v_plus = o.value(x_plus)
    v_minus = o.value(x_minus)
    if not (np.isfinite(v_plus) and np.isfinite(v_minus)):
        raise PreconditionError("decision value is not finite at a segment endpoint")
    if not (v_plus > 0 and v_minus < 0):
        raise PreconditionError(
            f"endpoints must straddle the border: r(x_plus)={v_plus}, "
            f"r(x_minus)={v_minus}"
        )
    lo, hi = 0.0, 1.0  # r < 0 at lo (x_minus side), r > 0 at hi
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        x = x_minus + mid * (x_plus - x_minus)
        v = o.value(x)
        if not np.isfinite(v):
            raise PreconditionError(f"decision value is not finite at {x}")
        if abs(v) <= tol:
            return x
        if v < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    mid = 0.5 * (lo + hi)
    return x_minus + mid * (x_plus - x_minus)


@dataclass(frozen=True)
class TrainOptions:
    tol: float = DEFAULT_TOL
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    min_grad: float = DEFAULT_MIN_GRAD


def _seed_key(seed) -> tuple:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)


def train_borders(
    o: DecisionOracle,
    p: BinaryProblem,
    n_borders: int,
    seed,
    opts: TrainOptions = TrainOptions(),
    class_plus: int = 1,
    class_minus: int = 0,
) -> BinaryBordersModel:
    """Sample ``n_borders`` (point, normal) pairs on the decision border.

    Each border point draws its endpoints from an RNG stream derived from
    (seed, point index), so the result is identical regardless of execution
    order or parallel schedule.  Candidate pairs whose decision values do
    not straddle zero are redrawn, as are roots with a vanishing gradient;
    the per-point attempt budget turns exhaustion into a hard error rather
    than a fabricated border point.
    """
    if n_borders < 1:
        raise PreconditionError("n_borders must be at least 1")
    plus_pool = p.samples[p.signs > 0]
    minus_pool = p.samples[p.signs < 0]
    key = _seed_key(seed)

    points = np.empty((n_borders, p.samples.shape[1]))
    normals = np.empty_like(points)
    for b in range(n_borders):
        rng = np.random.default_rng([*key, b])
        for _ in range(opts.max_attempts):
            xp = plus_pool[rng.integers(len(plus_pool))]
            xm = minus_pool[rng.integers(len(minus_pool))]
            vp = o.value(xp)
            vm = o.value(xm)
            if vp > 0 and vm < 0:
                root = find_border_point(o, xp, xm, opts.tol)
            elif vm > 0 and vp < 0:
                root = find_border_point(o, xm, xp, opts.tol)
            else:
                continue
            grad = np.asarray(o.gradient(root), dtype=float)
            if np.linalg.norm(grad) < opts.min_grad:
                continue
            points[b] = root
            normals[b] = grad
            break
        else:
            raise TrainingError(
                f"border point {b}: no sign-straddling sample pair found in "
                f"{opts.max_attempts} attempts; the decision function may be "
                "single-signed over the data"
            )
    return BinaryBordersModel(points, normals, class_plus, class_minus)


def border_decision(m: BinaryBordersModel, x) -> float:
    """Linear decision value against the nearest border point.

    Positive means ``class_plus``.  Nearest-point ties resolve to the
    lowest index (argmin semantics).
    """
    x = np.asarray(x, dtype=float)
    diff = x - m.points
    i = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
    return float(m.normals[i] @ diff[i])


def border_decision_batch(m: BinaryBordersModel, xs) -> np.ndarray:
    """Vectorized :func:`border_decision` over the rows of ``xs``."""
    xs = np.asarray(xs, dtype=float)
    d2 = (
        np.einsum("ij,ij->i", xs, xs)[:, None]
        - 2.0 * xs @ m.points.T
        + np.einsum("ij,ij->i", m.points, m.points)[None, :]
    )
    idx = np.argmin(d2, axis=1)
    return np.einsum("ij,ij->i", m.normals[idx], xs - m.points[idx])


def border_probability(m: BinaryBordersModel, x) -> float:
    """tanh-calibrated probability difference p(class_plus) - p(class_minus)."""
    return float(np.tanh(border_decision(m, x)))


def serialize_borders(m: BinaryBordersModel) -> str:
    """Versioned text serialization; one line per (point, normal) pair."""
    out = [
        "borders-model v1",
        f"classes {m.class_minus} {m.class_plus}",
        f"dim {m.dim}",
        f"nb {m.n_borders}",
    ]
    for point, normal in zip(m.points, m.normals):
        vals = [f"{v:.17g}" for v in point] + [f"{v:.17g}" for v in normal]
        out.append(" ".join(vals))
    return "\n".join(out) + "\n"


def deserialize_borders(text: str) -> BinaryBordersModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    model, _ = _parse_borders_block(lines, 0)
    return model


def _parse_borders_block(lines: list[str], start: int) -> tuple[BinaryBordersModel, int]:
    """Parse one borders-model record beginning at ``lines[start]``."""
    if start >= len(lines):
        raise FormatError("truncated borders model: missing header")
    if lines[start].strip() != "borders-model v1":
        raise FormatError(f"unknown borders model version: '{lines[start].strip()}'")

    def header(pos: int, name: str) -> list[str]:
        if pos >= len(lines):
            raise FormatError(f"truncated borders model: missing '{name}'")
        parts = lines[pos].split()
        if not parts or parts[0] != name:
            raise FormatError(f"expected '{name}' header, got '{lines[pos].strip()}'")
        return parts[1:]

    class_minus, class_plus = (int(v) for v in header(start + 1, "classes"))
    dim = int(header(start + 2, "dim")[0])
    nb = int(header(start + 3, "nb")[0])
    if dim < 1 or nb < 1:
        raise FormatError("dim and nb must be positive")

    rows = lines[start + 4 : start + 4 + nb]
    if len(rows) < nb:
        raise FormatError(f"truncated borders model: expected {nb} rows, found {len(rows)}")
    points = np.empty((nb, dim))
    normals = np.empty((nb, dim))
    for r, raw in enumerate(rows):
        vals = raw.split()
        if len(vals) != 2 * dim:
            raise FormatError(
                f"borders row {r}: expected {2 * dim} values, found {len(vals)}"
            )
        try:
            nums = [float(v) for v in vals]
        except ValueError:
            raise FormatError(f"borders row {r}: non-numeric value") from None
        points[r] = nums[:dim]
        normals[r] = nums[dim:]
    model = BinaryBordersModel(points, normals, class_plus, class_minus)
    return model, start + 4 + nb
