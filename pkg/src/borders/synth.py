"""Fixed 2-D synthetic class pair with analytically known probabilities.

Class +1 is a unit isotropic Gaussian at the origin; class -1 is an
equal-weight mixture of unit Gaussians at (2, 2) and (2, -2).  Priors are
equal.  The closed-form densities give the exact conditional-probability
difference and its gradient, so border experiments against the true
decision function are fully checkable.  The constants are frozen: changing
them would silently move every downstream expectation.
"""

from __future__ import annotations

import numpy as np

from .border import DecisionOracle
from .data import Dataset
from .errors import PreconditionError
from .kernel import BinaryProblem

MEAN_PLUS = np.zeros(2)
MEANS_MINUS = np.array([[2.0, 2.0], [2.0, -2.0]])


def density_plus(x) -> float:
    """Class +1 density (unit isotropic Gaussian at the origin)."""
    x = np.asarray(x, dtype=float)
    return float(np.exp(-0.5 * (x @ x)) / (2.0 * np.pi))


def density_minus(x) -> float:
    """Class -1 density (two-component unit-spread mixture)."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for mean in MEANS_MINUS:
        d = x - mean
        total += 0.5 * np.exp(-0.5 * (d @ d))
    return float(total / (2.0 * np.pi))


def synth_true_r(x) -> float:
    """Exact p(+1|x) - p(-1|x) under equal priors."""
    a = density_plus(x)
    b = density_minus(x)
    return (a - b) / (a + b)


def synth_true_r_gradient(x) -> np.ndarray:
    """Hand-differentiated gradient of :func:`synth_true_r`."""
    x = np.asarray(x, dtype=float)
    a = density_plus(x)
    grad_a = -a * (x - MEAN_PLUS)
    b = 0.0
    grad_b = np.zeros(2)
    for mean in MEANS_MINUS:
        d = x - mean
        comp = 0.5 * np.exp(-0.5 * (d @ d)) / (2.0 * np.pi)
        b += comp
        grad_b += -comp * d
    return 2.0 * (b * grad_a - a * grad_b) / (a + b) ** 2


def true_r_oracle() -> DecisionOracle:
    return DecisionOracle(value=synth_true_r, gradient=synth_true_r_gradient)


def synth_sample(n: int, seed: int) -> BinaryProblem:
    """Draw n labeled points: fair-coin class, then that class's density.

    The astronomically unlikely single-class draw is regenerated with a
    shifted seed so the result is always a valid binary problem.
    """
    if n < 2:
        raise PreconditionError("need at least 2 samples")
    for attempt in range(64):
        rng = np.random.default_rng([seed, attempt])
        signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        samples = np.empty((n, 2))
        plus = signs > 0
        samples[plus] = MEAN_PLUS + rng.standard_normal((int(plus.sum()), 2))
        n_minus = int((~plus).sum())
        component = rng.integers(2, size=n_minus)
        samples[~plus] = MEANS_MINUS[component] + rng.standard_normal((n_minus, 2))
        if plus.any() and (~plus).any():
            return BinaryProblem(samples, signs)
    raise PreconditionError("could not draw both classes")  # pragma: no cover


def synth_dataset(n: int, seed: int) -> Dataset:
    """Same draw as :func:`synth_sample`, packaged with label strings.

    Class id 0 is "+1" (the positive class), id 1 is "-1".
    """
    problem = synth_sample(n, seed)
    labels = np.where(problem.signs > 0, 0, 1)
    return Dataset(problem.samples, labels, ("+1", "-1"))
