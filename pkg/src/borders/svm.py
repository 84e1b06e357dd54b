"""Pre-trained LIBSVM RBF model evaluation.

Only c_svc models with an RBF kernel are accepted; training, Platt fitting
and every other LIBSVM feature live outside this toolkit.  Pairwise
decision values follow LIBSVM's one-vs-one coefficient layout, and the
Platt coefficients (probA/probB) turn them into calibrated probability
differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FormatError, PreconditionError


@dataclass(frozen=True)
class SvmModel:
    """Parsed LIBSVM RBF model (c_svc, one-vs-one)."""

    gamma: float
    labels: tuple[str, ...]
    support_vectors: np.ndarray  # (total_sv, dim)
    sv_coef: np.ndarray          # (n_classes - 1, total_sv), LIBSVM layout
    nr_sv: tuple[int, ...]
    rho: tuple[float, ...]
    prob_a: Optional[tuple[float, ...]] = None
    prob_b: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "support_vectors", np.asarray(self.support_vectors, dtype=float))
        object.__setattr__(self, "sv_coef", np.asarray(self.sv_coef, dtype=float))
        nc = len(self.labels)
        n_pairs = nc * (nc - 1) // 2
        if self.gamma <= 0:
            raise FormatError("gamma must be positive")
        if sum(self.nr_sv) != self.support_vectors.shape[0]:
            raise FormatError(
                f"nr_sv sums to {sum(self.nr_sv)} but {self.support_vectors.shape[0]} "
                "support vectors are present"
            )
        if self.sv_coef.shape != (nc - 1, self.support_vectors.shape[0]):
            raise FormatError("sv_coef shape must be (n_classes - 1, total_sv)")
        if len(self.rho) != n_pairs:
            raise FormatError(f"expected {n_pairs} rho entries, got {len(self.rho)}")
        if (self.prob_a is None) != (self.prob_b is None):
            raise FormatError("probA and probB must both be present or both absent")
        if self.prob_a is not None and (len(self.prob_a) != n_pairs or len(self.prob_b) != n_pairs):
            raise FormatError(f"expected {n_pairs} probA/probB entries")

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def total_sv(self) -> int:
        return self.support_vectors.shape[0]

    @property
    def has_probability(self) -> bool:
        return self.prob_a is not None

    def class_start(self, i: int) -> int:
        """First support-vector row of class i in the stacked SV block."""
        return sum(self.nr_sv[:i])


def pair_index(i: int, j: int, n_classes: int) -> int:
    """Position of the (i, j) classifier, i < j, in LIBSVM's pair ordering."""
    if not 0 <= i < j < n_classes:
        raise PreconditionError(f"need 0 <= i < j < {n_classes}, got ({i}, {j})")
    return i * n_classes - i * (i + 1) // 2 + (j - i - 1)


def parse_libsvm_model(text: str) -> SvmModel:
    """Parse a LIBSVM model file as written by svm-train (with -b 1 for
    probability support)."""
    lines = text.splitlines()
    header: dict[str, list[str]] = {}
    sv_start = None
    for ln, raw in enumerate(lines):
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "SV":
            sv_start = ln + 1
            break
        header[parts[0]] = parts[1:]
    if sv_start is None:
        raise FormatError("missing SV section")

    def need(key: str) -> list[str]:
        if key not in header:
            raise FormatError(f"missing header key '{key}'")
        return header[key]

    svm_type = need("svm_type")[0]
    if svm_type != "c_svc":
        raise FormatError(f"unsupported svm_type '{svm_type}': only c_svc models are accepted")
    kernel_type = need("kernel_type")[0]
    if kernel_type != "rbf":
        raise FormatError(
            f"unsupported kernel_type '{kernel_type}': only rbf models are accepted"
        )
    gamma = float(need("gamma")[0])
    nc = int(need("nr_class")[0])
    total_sv = int(need("total_sv")[0])
    rho = tuple(float(v) for v in need("rho"))
    labels = tuple(need("label"))
    nr_sv = tuple(int(v) for v in need("nr_sv"))
    if len(labels) != nc or len(nr_sv) != nc:
        raise FormatError("label/nr_sv length must equal nr_class")
    prob_a = tuple(float(v) for v in header["probA"]) if "probA" in header else None
    prob_b = tuple(float(v) for v in header["probB"]) if "probB" in header else None

    coef_rows: list[list[float]] = []
    sparse_rows: list[dict[int, float]] = []
    width = 0
    for ln in range(sv_start, len(lines)):
        parts = lines[ln].split()
        if not parts:
            continue
        try:
            coefs = [float(v) for v in parts[: nc - 1]]
            feats: dict[int, float] = {}
            for tok in parts[nc - 1:]:
                idx_s, _, val_s = tok.partition(":")
                feats[int(idx_s)] = float(val_s)
        except ValueError:
            raise FormatError(f"malformed SV line {ln + 1}") from None
        if len(coefs) != nc - 1:
            raise FormatError(f"SV line {ln + 1}: expected {nc - 1} coefficients")
        coef_rows.append(coefs)
        sparse_rows.append(feats)
        width = max(width, max(feats, default=0))

    if len(coef_rows) != total_sv:
        raise FormatError(f"expected {total_sv} support vectors, found {len(coef_rows)}")
    sv = np.zeros((total_sv, max(width, 1)))
    for r, feats in enumerate(sparse_rows):
        for idx, val in feats.items():
            sv[r, idx - 1] = val
    return SvmModel(
        gamma=gamma,
        labels=labels,
        support_vectors=sv,
        sv_coef=np.array(coef_rows).T.reshape(nc - 1, total_sv),
        nr_sv=nr_sv,
        rho=rho,
        prob_a=prob_a,
        prob_b=prob_b,
    )


def serialize_libsvm_model(m: SvmModel) -> str:
    """Write the model back out in LIBSVM's text layout."""
    out = [
        "svm_type c_svc",
        "kernel_type rbf",
        f"gamma {m.gamma:.17g}",
        f"nr_class {m.n_classes}",
        f"total_sv {m.total_sv}",
        "rho " + " ".join(f"{v:.17g}" for v in m.rho),
        "label " + " ".join(m.labels),
    ]
    if m.has_probability:
        out.append("probA " + " ".join(f"{v:.17g}" for v in m.prob_a))
        out.append("probB " + " ".join(f"{v:.17g}" for v in m.prob_b))
    out.append("nr_sv " + " ".join(str(v) for v in m.nr_sv))
    out.append("SV")
    for r in range(m.total_sv):
        parts = [f"{m.sv_coef[c, r]:.17g}" for c in range(m.n_classes - 1)]
        row = m.support_vectors[r]
        parts.extend(f"{idx + 1}:{row[idx]:.17g}" for idx in np.nonzero(row)[0])
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def _kernel_row(m: SvmModel, x: np.ndarray) -> np.ndarray:
    """RBF kernel values between x and every support vector.

    Sparse-format semantics: coordinates absent on either side count as
    zero, so x and the stored vectors may differ in trailing width.
    """
    d = m.dim
    if len(x) < d:
        x = np.concatenate([x, np.zeros(d - len(x))])
    diff = m.support_vectors - x[:d]
    dist2 = np.einsum("ij,ij->i", diff, diff) + float(x[d:] @ x[d:])
    return np.exp(-m.gamma * dist2)


def _pair_decision_from_kernels(m: SvmModel, i: int, j: int, kx: np.ndarray) -> float:
    si, ei = m.class_start(i), m.class_start(i) + m.nr_sv[i]
    sj, ej = m.class_start(j), m.class_start(j) + m.nr_sv[j]
    g = float(m.sv_coef[j - 1, si:ei] @ kx[si:ei] + m.sv_coef[i, sj:ej] @ kx[sj:ej])
    return g - m.rho[pair_index(i, j, m.n_classes)]


def svm_pair_decision(m: SvmModel, i: int, j: int, x) -> float:
    """Raw one-vs-one decision value; positive votes for labels[i].

    Swapping (i, j) negates the value (the pair classifier is the same,
    with the coefficient and rho sign conventions applied).
    """
    if i > j:
        return -svm_pair_decision(m, j, i, x)
    x = np.asarray(x, dtype=float)
    return _pair_decision_from_kernels(m, i, j, _kernel_row(m, x))


def svm_pair_probability(m: SvmModel, i: int, j: int, x) -> float:
    """Calibrated probability difference p(labels[i]|x) - p(labels[j]|x).

    Computed as tanh(-(probA*g + probB)/2), which equals 2*sigmoid - 1 of
    the Platt sigmoid LIBSVM applies to the raw decision value g.  Swapping
    (i, j) negates the result.
    """
    if i > j:
        return -svm_pair_probability(m, j, i, x)
    if not m.has_probability:
        raise PreconditionError(
            "model has no probability information: retrain with -b 1"
        )
    g = svm_pair_decision(m, i, j, x)
    p = pair_index(i, j, m.n_classes)
    return float(np.tanh(-0.5 * (m.prob_a[p] * g + m.prob_b[p])))


def svm_pair_gradient(m: SvmModel, i: int, j: int, x) -> np.ndarray:
    """Gradient of :func:`svm_pair_probability` in feature space.

    Chain rule through the tanh calibration: the probA/2 factor scales (and
    with LIBSVM's typically negative probA, flips) the raw decision
    gradient, so it cannot be dropped when the result is used as a normal.
    """
    if i > j:
        return -svm_pair_gradient(m, j, i, x)
    if not m.has_probability:
        raise PreconditionError(
            "model has no probability information: retrain with -b 1"
        )
    x = np.asarray(x, dtype=float)
    kx = _kernel_row(m, x)
    g = _pair_decision_from_kernels(m, i, j, kx)
    p = pair_index(i, j, m.n_classes)
    r = np.tanh(-0.5 * (m.prob_a[p] * g + m.prob_b[p]))

    width = max(len(x), m.dim)
    xw = np.zeros(width)
    xw[: len(x)] = x
    si, ei = m.class_start(i), m.class_start(i) + m.nr_sv[i]
    sj, ej = m.class_start(j), m.class_start(j) + m.nr_sv[j]
    grad_g = np.zeros(width)
    for s, e, row in ((si, ei, j - 1), (sj, ej, i)):
        coefs = m.sv_coef[row, s:e] * kx[s:e]
        svw = np.zeros((e - s, width))
        svw[:, : m.dim] = m.support_vectors[s:e]
        grad_g += -2.0 * m.gamma * (coefs @ (xw - svw))
    return (1.0 - r ** 2) * (-0.5 * m.prob_a[p]) * grad_g[: len(x)]


def svm_pair_oracle(m: SvmModel, i: int, j: int, positive_class: str = "j"):
    """Decision oracle for the (i, j) pair.

    With ``positive_class="j"`` the oracle is the negated pair probability,
    so +1 corresponds to labels[j]; this matches the convention that a pair
    model's positive side is the higher class index.
    """
    from .border import DecisionOracle

    sign = -1.0 if positive_class == "j" else 1.0
    return DecisionOracle(
        value=lambda x: sign * svm_pair_probability(m, i, j, x),
        gradient=lambda x: sign * svm_pair_gradient(m, i, j, x),
    )


def svm_pairwise_r_batch(m: SvmModel, xs) -> np.ndarray:
    """Pairwise probability differences for every row of ``xs``.

    Returns an (n_points, n_pairs) array oriented positive => class j.
    The kernel matrix against the shared support vectors is built once.
    """
    if not m.has_probability:
        raise PreconditionError(
            "model has no probability information: retrain with -b 1"
        )
    xs = np.asarray(xs, dtype=float)
    sv = m.support_vectors
    d2 = (
        np.einsum("ij,ij->i", xs, xs)[:, None]
        - 2.0 * xs @ sv.T
        + np.einsum("ij,ij->i", sv, sv)[None, :]
    )
    kx = np.exp(-m.gamma * np.maximum(d2, 0.0))
    nc = m.n_classes
    out = np.empty((len(xs), nc * (nc - 1) // 2))
    for i in range(nc):
        si, ei = m.class_start(i), m.class_start(i) + m.nr_sv[i]
        for j in range(i + 1, nc):
            sj, ej = m.class_start(j), m.class_start(j) + m.nr_sv[j]
            p = pair_index(i, j, nc)
            g = (
                kx[:, si:ei] @ m.sv_coef[j - 1, si:ei]
                + kx[:, sj:ej] @ m.sv_coef[i, sj:ej]
                - m.rho[p]
            )
            out[:, p] = -np.tanh(-0.5 * (m.prob_a[p] * g + m.prob_b[p]))
    return out


def svm_pairwise_r(m: SvmModel, x) -> np.ndarray:
    """All pairwise probability differences at x, oriented positive => class j.

    Kernel values against the shared support vectors are computed once and
    reused across every pair.
    """
    if not m.has_probability:
        raise PreconditionError(
            "model has no probability information: retrain with -b 1"
        )
    x = np.asarray(x, dtype=float)
    kx = _kernel_row(m, x)
    nc = m.n_classes
    out = np.zeros(nc * (nc - 1) // 2)
    for i in range(nc):
        for j in range(i + 1, nc):
            p = pair_index(i, j, nc)
            g = _pair_decision_from_kernels(m, i, j, kx)
            out[p] = -np.tanh(-0.5 * (m.prob_a[p] * g + m.prob_b[p]))
    return out
