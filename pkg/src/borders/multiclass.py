"""One-vs-one orchestration and pairwise probability coupling.

Each unordered class pair (i, j), i < j, owns one binary model whose
positive side is class j.  Its probability difference r_ij estimates
(p_j - p_i) / (p_i + p_j); coupling solves the Wu-Lin least-squares system
that maps all pairwise differences to a single probability vector over
the classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .border import (
    BinaryBordersModel,
    TrainOptions,
    _parse_borders_block,
    border_probability,
    serialize_borders,
    train_borders,
)
from .data import Dataset
from .errors import FormatError, PreconditionError
from .kernel import AgfConfig, BinaryProblem, agf_oracle
from .svm import SvmModel, pair_index, svm_pair_oracle

NEGATIVE_PROBABILITY_TOL = 1e-10


@dataclass(frozen=True)
class PairwiseR:
    """Pairwise probability differences r_ij for i < j, positive => class j.

    Stored flat in lexicographic (i, j) order; the antisymmetric extension
    r_ji = -r_ij is applied wherever the reversed order is needed.
    """

    values: np.ndarray
    n_classes: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        n_pairs = self.n_classes * (self.n_classes - 1) // 2
        if self.n_classes < 2:
            raise PreconditionError("need at least 2 classes")
        if values.shape != (n_pairs,):
            raise PreconditionError(f"expected {n_pairs} pair values")
        if np.any(np.abs(values) > 1):
            raise PreconditionError("pairwise differences must lie in [-1, 1]")

    def matrix(self) -> np.ndarray:
        """Full antisymmetric matrix with R[i, j] = r_ij."""
        nc = self.n_classes
        r = np.zeros((nc, nc))
        for i in range(nc):
            for j in range(i + 1, nc):
                v = self.values[pair_index(i, j, nc)]
                r[i, j] = v
                r[j, i] = -v
        return r


def couple_probabilities(r: PairwiseR) -> np.ndarray:
    """Couple pairwise probability differences into class probabilities.

    Solves the KKT system of the pairwise least-squares coupling problem:
    with mu_ij = (1 - r_ij)/2 the pairwise probability of class i,
    minimize sum over pairs of (mu_ji p_i - mu_ij p_j)^2 subject to
    sum p = 1.  A dense solve with partial pivoting is sufficient; the
    minimizer is provably non-negative, so anything below -1e-10 is
    surfaced as an error rather than clamped away.
    """
    nc = r.n_classes
    rmat = r.matrix()
    mu = (1.0 - rmat) / 2.0  # mu[i, j] approximates p_i / (p_i + p_j)
    np.fill_diagonal(mu, 0.0)

    q = -(mu.T * mu)
    np.fill_diagonal(q, (mu ** 2).sum(axis=0))  # Q_ii = sum_j mu_ji^2

    a = np.zeros((nc + 1, nc + 1))
    a[:nc, :nc] = q
    a[:nc, nc] = 1.0
    a[nc, :nc] = 1.0
    b = np.zeros(nc + 1)
    b[nc] = 1.0
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        raise PreconditionError("singular coupling system") from None
    p = sol[:nc]
    if np.any(p < -NEGATIVE_PROBABILITY_TOL):
        raise PreconditionError(
            f"coupling produced a negative probability ({p.min()}): "
            "the solver or the pairwise inputs are inconsistent"
        )
    p = np.clip(p, 0.0, None)
    return p / p.sum()


@dataclass(frozen=True)
class MultiBordersModel:
    """Class label list plus one binary borders model per unordered pair."""

    class_names: tuple[str, ...]
    pairs: tuple[tuple[int, int, BinaryBordersModel], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        nc = len(self.class_names)
        expected = {(i, j) for i in range(nc) for j in range(i + 1, nc)}
        seen = {(i, j) for i, j, _ in self.pairs}
        if seen != expected:
            raise PreconditionError("pairs must cover every (i, j) with i < j exactly once")
        dims = {m.dim for _, _, m in self.pairs}
        if len(dims) > 1:
            raise PreconditionError("all pair models must share the same dimension")
        for i, j, m in self.pairs:
            if m.class_plus != j or m.class_minus != i:
                raise PreconditionError(
                    f"pair ({i}, {j}) model must have class_plus={j}, class_minus={i}"
                )

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def dim(self) -> int:
        return self.pairs[0][2].dim

    @property
    def total_borders(self) -> int:
        return sum(m.n_borders for _, _, m in self.pairs)


def pairwise_r(m: MultiBordersModel, x) -> PairwiseR:
    nc = m.n_classes
    values = np.zeros(nc * (nc - 1) // 2)
    for i, j, pair_model in m.pairs:
        values[pair_index(i, j, nc)] = border_probability(pair_model, x)
    return PairwiseR(values, nc)


def multi_predict(m: MultiBordersModel, x) -> tuple[int, np.ndarray]:
    """Class id and coupled probability vector at x; ties go to the lowest id."""
    p = couple_probabilities(pairwise_r(m, x))
    winner = int(np.nonzero(p >= p.max() - 1e-12)[0][0])
    return winner, p


def _match_label(class_names, label: str) -> int:
    """Map a model label onto a dataset class id, numerically when possible."""
    for cid, name in enumerate(class_names):
        if name == label:
            return cid
    try:
        target = float(label)
    except ValueError:
        raise PreconditionError(f"model label '{label}' not present in dataset") from None
    for cid, name in enumerate(class_names):
        try:
            if float(name) == target:
                return cid
        except ValueError:
            continue
    raise PreconditionError(f"model label '{label}' not present in dataset")


def _train_pairs(class_names, problems, oracles, n_borders, seed, opts, n_threads=1):
    def train_one(args):
        (i, j), problem, oracle = args
        model = train_borders(
            oracle,
            problem,
            n_borders,
            (seed, i, j),
            opts,
            class_plus=j,
            class_minus=i,
        )
        return i, j, model

    jobs = list(zip(problems.keys(), problems.values(), oracles))
    if n_threads > 1 and len(jobs) > 1:
        # per-pair seeds derive from (seed, i, j), so the schedule cannot
        # change the result
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            pairs = list(pool.map(train_one, jobs))
    else:
        pairs = [train_one(job) for job in jobs]
    pairs.sort(key=lambda entry: (entry[0], entry[1]))
    return MultiBordersModel(tuple(class_names), tuple(pairs))


def accelerate_svm(
    m: SvmModel,
    train: Dataset,
    n_borders: int,
    seed: int,
    opts: TrainOptions = TrainOptions(),
    n_threads: int = 1,
) -> MultiBordersModel:
    """Replace an SVM's decision evaluation with border sampling, pair by pair.

    Every unordered class pair gets its own borders model trained on the
    pair-restricted training rows against the calibrated SVM pair
    probability.  Per-pair seeds derive from (seed, i, j), so the assembly
    is schedule-independent.
    """
    if not m.has_probability:
        raise PreconditionError(
            "model has no probability information (probA/probB): retrain the "
            "SVM with probability output enabled (-b 1)"
        )
    if train.n_features != m.dim:
        raise PreconditionError(
            f"training data has {train.n_features} features but the model has {m.dim}"
        )
    dataset_ids = [_match_label(train.class_names, lab) for lab in m.labels]

    problems = {}
    oracles = []
    for i in range(m.n_classes):
        for j in range(i + 1, m.n_classes):
            rows_i = train.labels == dataset_ids[i]
            rows_j = train.labels == dataset_ids[j]
            if not rows_i.any() or not rows_j.any():
                raise PreconditionError(
                    f"classes {m.labels[i]}/{m.labels[j]} need training rows on both sides"
                )
            samples = np.concatenate([train.features[rows_i], train.features[rows_j]])
            signs = np.concatenate(
                [np.full(rows_i.sum(), -1.0), np.full(rows_j.sum(), 1.0)]
            )
            problems[(i, j)] = BinaryProblem(samples, signs)
            oracles.append(svm_pair_oracle(m, i, j))
    return _train_pairs(
        [str(lab) for lab in m.labels], problems, oracles, n_borders, seed, opts, n_threads
    )


def train_agf_multi(
    train: Dataset,
    cfg: AgfConfig,
    n_borders: int,
    seed: int,
    opts: TrainOptions = TrainOptions(),
    n_threads: int = 1,
) -> MultiBordersModel:
    """Train one adaptive-kernel borders model per class pair."""
    if train.n_classes < 2:
        raise PreconditionError("multi-class training needs at least two classes")
    problems = {}
    oracles = []
    for i in range(train.n_classes):
        for j in range(i + 1, train.n_classes):
            problem = BinaryProblem.from_dataset(train, class_minus=i, class_plus=j)
            problems[(i, j)] = problem
            oracles.append(agf_oracle(problem, cfg))
    return _train_pairs(
        train.class_names, problems, oracles, n_borders, seed, opts, n_threads
    )


def serialize_multi_borders(m: MultiBordersModel) -> str:
    """Versioned container: header, then pair blocks in (i, j) order."""
    out = [
        "multi-borders v1",
        f"nclass {m.n_classes}",
        "classes " + " ".join(m.class_names),
    ]
    for i, j, pair_model in sorted(m.pairs):
        out.append(f"pair {i} {j}")
        out.append(serialize_borders(pair_model).rstrip("\n"))
    return "\n".join(out) + "\n"


def deserialize_multi_borders(text: str) -> MultiBordersModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "multi-borders v1":
        head = lines[0].strip() if lines else "<empty>"
        raise FormatError(f"unknown multi-borders version: '{head}'")
    if len(lines) < 3 or not lines[1].startswith("nclass") or not lines[2].startswith("classes"):
        raise FormatError("malformed multi-borders header")
    nc = int(lines[1].split()[1])
    class_names = tuple(lines[2].split()[1:])
    if len(class_names) != nc:
        raise FormatError("class name count does not match nclass")

    pairs = []
    pos = 3
    for _ in range(nc * (nc - 1) // 2):
        if pos >= len(lines) or not lines[pos].startswith("pair"):
            raise FormatError("truncated multi-borders container: missing pair block")
        _, i_s, j_s = lines[pos].split()
        model, pos = _parse_borders_block(lines, pos + 1)
        pairs.append((int(i_s), int(j_s), model))
    return MultiBordersModel(class_names, tuple(pairs))
