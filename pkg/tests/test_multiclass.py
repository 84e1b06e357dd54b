import itertools

import numpy as np
import pytest
from scipy.optimize import minimize

from borders.border import BinaryBordersModel
from borders.data import parse_libsvm_data
from borders.errors import FormatError, PreconditionError
from borders.multiclass import (
    MultiBordersModel,
    PairwiseR,
    accelerate_svm,
    couple_probabilities,
    deserialize_multi_borders,
    multi_predict,
    pairwise_r,
    serialize_multi_borders,
    train_agf_multi,
)
from borders.svm import pair_index, svm_pairwise_r
from borders.synth import synth_dataset


def coupling_oracle(r: PairwiseR) -> np.ndarray:
    """Minimize the pairwise least-squares objective on the simplex with SLSQP."""
    nc = r.n_classes
    mu = (1.0 - r.matrix()) / 2.0

    def objective(p):
        total = 0.0
        for i in range(nc):
            for j in range(i + 1, nc):
                total += (mu[j, i] * p[i] - mu[i, j] * p[j]) ** 2
        return total

    best = None
    for start in range(3):
        rng = np.random.default_rng(start)
        p0 = rng.dirichlet(np.ones(nc))
        res = minimize(
            objective,
            p0,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * nc,
            constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1.0}],
            options={"ftol": 1e-16, "maxiter": 500},
        )
        if best is None or res.fun < best.fun:
            best = res
    return best.x


def random_pairwise(nc, seed, scale=0.9):
    rng = np.random.default_rng(seed)
    n_pairs = nc * (nc - 1) // 2
    return PairwiseR(rng.uniform(-scale, scale, size=n_pairs), nc)


class TestCoupling:
    def test_two_class_closed_form(self):
        # with two classes the coupling reduces to p_2 = (1 + r) / 2
        for r in (-0.9, -0.3, 0.0, 0.5, 0.99):
            p = couple_probabilities(PairwiseR(np.array([r]), 2))
            assert p[1] == pytest.approx((1.0 + r) / 2.0, abs=1e-12)
            assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_indifferent_pairs_give_uniform(self):
        for nc in (2, 3, 4, 5):
            p = couple_probabilities(PairwiseR(np.zeros(nc * (nc - 1) // 2), nc))
            assert np.allclose(p, 1.0 / nc, atol=1e-12)

    def test_matches_simplex_optimizer(self):
        for nc in (3, 4, 5):
            for seed in range(8):
                r = random_pairwise(nc, 100 * nc + seed)
                p = couple_probabilities(r)
                oracle = coupling_oracle(r)
                assert np.max(np.abs(p - oracle)) <= 1e-6

    def test_permutation_equivariance(self):
        nc = 4
        r = random_pairwise(nc, 3)
        p = couple_probabilities(r)
        rmat = r.matrix()
        for perm in itertools.permutations(range(nc)):
            perm = np.array(perm)
            permuted = rmat[np.ix_(perm, perm)]
            values = np.array(
                [permuted[i, j] for i in range(nc) for j in range(i + 1, nc)]
            )
            p_perm = couple_probabilities(PairwiseR(values, nc))
            assert np.allclose(p_perm, p[perm], atol=1e-10)

    def test_saturated_winner(self):
        # class 2 beats both others outright
        values = np.zeros(3)
        values[pair_index(0, 2, 3)] = 1.0
        values[pair_index(1, 2, 3)] = 1.0
        p = couple_probabilities(PairwiseR(values, 3))
        assert int(np.argmax(p)) == 2
        assert p[2] >= 0.99

    def test_probabilities_sum_to_one(self):
        for seed in range(20):
            p = couple_probabilities(random_pairwise(4, seed))
            assert p.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(p >= 0.0)

    def test_rejects_out_of_range(self):
        with pytest.raises(PreconditionError):
            PairwiseR(np.array([1.5]), 2)

    def test_rejects_wrong_length(self):
        with pytest.raises(PreconditionError):
            PairwiseR(np.zeros(2), 3)


def plane_pair_model(i, j, direction):
    """Borders model whose positive side (class j) is along ``direction``."""
    d = np.asarray(direction, dtype=float)
    return BinaryBordersModel(
        points=np.zeros((1, 2)), normals=d[None, :], class_plus=j, class_minus=i
    )


def three_wedge_model():
    """Three classes separated by fixed hyperplanes through the origin."""
    return MultiBordersModel(
        class_names=("a", "b", "c"),
        pairs=(
            (0, 1, plane_pair_model(0, 1, [1.0, 0.0])),
            (0, 2, plane_pair_model(0, 2, [0.0, 1.0])),
            (1, 2, plane_pair_model(1, 2, [-0.7, 0.7])),
        ),
    )


class TestMultiPredict:
    def test_wedge_regions(self):
        m = three_wedge_model()
        assert multi_predict(m, np.array([-2.0, -2.0]))[0] == 0
        assert multi_predict(m, np.array([3.0, -1.0]))[0] == 1
        assert multi_predict(m, np.array([-1.0, 3.0]))[0] == 2

    def test_probabilities_are_coupled_pairwise(self):
        m = three_wedge_model()
        x = np.array([0.4, -0.8])
        _, p = multi_predict(m, x)
        expected = couple_probabilities(pairwise_r(m, x))
        assert np.array_equal(p, expected)

    def test_origin_tie_takes_lowest_id(self):
        winner, p = multi_predict(three_wedge_model(), np.zeros(2))
        assert np.allclose(p, 1.0 / 3.0, atol=1e-12)
        assert winner == 0

    def test_pair_convention_enforced(self):
        with pytest.raises(PreconditionError, match="class_plus"):
            MultiBordersModel(
                class_names=("a", "b"),
                pairs=((0, 1, plane_pair_model(1, 0, [1.0, 0.0])),),
            )

    def test_missing_pair_rejected(self):
        with pytest.raises(PreconditionError, match="cover"):
            MultiBordersModel(
                class_names=("a", "b", "c"),
                pairs=((0, 1, plane_pair_model(0, 1, [1.0, 0.0])),),
            )


class TestAccelerateSvm:
    def test_pair_count_and_shape(self, blobs3_model, blobs3_data_text):
        train = parse_libsvm_data(blobs3_data_text)
        m = accelerate_svm(blobs3_model, train, n_borders=8, seed=0)
        assert len(m.pairs) == 3
        assert m.total_borders == 24
        assert m.class_names == tuple(str(lab) for lab in blobs3_model.labels)

    def test_agrees_with_svm_on_confident_points(self, blobs3_model, blobs3_data_text):
        train = parse_libsvm_data(blobs3_data_text)
        m = accelerate_svm(blobs3_model, train, n_borders=24, seed=1)
        rng = np.random.default_rng(6)
        agree = total = 0
        for _ in range(150):
            x = rng.normal(size=2) * 2.0 + np.array([1.0, 1.0])
            r_svm = svm_pairwise_r(blobs3_model, x)
            if np.min(np.abs(r_svm)) < 0.1:
                continue
            p_svm = couple_probabilities(PairwiseR(r_svm, 3))
            winner, _ = multi_predict(m, x)
            total += 1
            agree += winner == int(np.argmax(p_svm))
        assert total >= 50
        assert agree / total >= 0.95

    def test_deterministic_across_thread_counts(self, blobs3_model, blobs3_data_text):
        train = parse_libsvm_data(blobs3_data_text)
        a = accelerate_svm(blobs3_model, train, n_borders=4, seed=9, n_threads=1)
        b = accelerate_svm(blobs3_model, train, n_borders=4, seed=9, n_threads=3)
        for (ia, ja, ma), (ib, jb, mb) in zip(a.pairs, b.pairs):
            assert (ia, ja) == (ib, jb)
            assert np.array_equal(ma.points, mb.points)
            assert np.array_equal(ma.normals, mb.normals)

    def test_requires_probability_model(self, blobs3_model, blobs3_data_text):
        import dataclasses

        train = parse_libsvm_data(blobs3_data_text)
        stripped = dataclasses.replace(blobs3_model, prob_a=None, prob_b=None)
        with pytest.raises(PreconditionError, match="probability"):
            accelerate_svm(stripped, train, n_borders=2, seed=0)

    def test_feature_width_mismatch_rejected(self, blobs3_model):
        train = parse_libsvm_data("1 1:0.5\n2 1:-0.5\n3 1:0.1")
        with pytest.raises(PreconditionError, match="features"):
            accelerate_svm(blobs3_model, train, n_borders=2, seed=0)


class TestTrainAgfMulti:
    def test_binary_synth(self):
        from borders.kernel import AgfConfig

        train = synth_dataset(300, seed=4)
        m = train_agf_multi(train, AgfConfig(total_weight=10.0), n_borders=12, seed=2)
        assert len(m.pairs) == 1
        assert m.total_borders == 12
        # the synthetic border passes near the midpoint between the class
        # centres, far from either peak
        winner_plus, _ = multi_predict(m, np.array([0.0, 0.0]))
        winner_minus, _ = multi_predict(m, np.array([2.0, 2.0]))
        assert winner_plus == 0
        assert winner_minus == 1

    def test_single_class_rejected(self):
        from borders.data import Dataset
        from borders.kernel import AgfConfig

        d = Dataset(np.zeros((3, 1)), np.zeros(3, dtype=int), ("a",))
        with pytest.raises(PreconditionError):
            train_agf_multi(d, AgfConfig(total_weight=1.0), n_borders=2, seed=0)


class TestMultiSerialization:
    def test_round_trip(self, blobs3_model, blobs3_data_text):
        train = parse_libsvm_data(blobs3_data_text)
        m = accelerate_svm(blobs3_model, train, n_borders=5, seed=3)
        m2 = deserialize_multi_borders(serialize_multi_borders(m))
        assert m2.class_names == m.class_names
        for (i, j, pm), (i2, j2, pm2) in zip(m.pairs, m2.pairs):
            assert (i, j) == (i2, j2)
            assert np.array_equal(pm.points, pm2.points)
            assert np.array_equal(pm.normals, pm2.normals)

    def test_round_trip_preserves_predictions(self):
        m = three_wedge_model()
        m2 = deserialize_multi_borders(serialize_multi_borders(m))
        for x in (np.array([-2.0, -2.0]), np.array([3.0, -1.0]), np.array([-1.0, 3.0])):
            assert multi_predict(m2, x)[0] == multi_predict(m, x)[0]

    def test_unknown_version_rejected(self):
        with pytest.raises(FormatError, match="version"):
            deserialize_multi_borders("multi-borders v2\nnclass 2\nclasses a b\n")

    def test_truncated_container_rejected(self):
        text = serialize_multi_borders(three_wedge_model())
        lines = text.splitlines()
        with pytest.raises(FormatError):
            deserialize_multi_borders("\n".join(lines[:-2]))
