import numpy as np
import pytest

from borders.border import (
    BinaryBordersModel,
    DecisionOracle,
    TrainOptions,
    border_decision,
    border_decision_batch,
    border_probability,
    deserialize_borders,
    find_border_point,
    serialize_borders,
    train_borders,
)
from borders.errors import FormatError, PreconditionError, TrainingError
from borders.kernel import AgfConfig, BinaryProblem, agf_oracle
from borders.synth import synth_sample, true_r_oracle


def linear_oracle(shift=0.0):
    """r(x) = tanh(x0 - shift): border is the hyperplane x0 = shift."""
    return DecisionOracle(
        value=lambda x: float(np.tanh(x[0] - shift)),
        gradient=lambda x: np.concatenate(
            [[1.0 / np.cosh(x[0] - shift) ** 2], np.zeros(len(x) - 1)]
        ),
    )


def line_problem(n=40, seed=0, shift=0.0):
    rng = np.random.default_rng(seed)
    xs = rng.normal(size=(n, 2)) * 2
    signs = np.where(xs[:, 0] > shift, 1.0, -1.0)
    return BinaryProblem(xs, signs)


class TestFindBorderPoint:
    def test_linear_midpoint(self):
        root = find_border_point(linear_oracle(), np.array([1.0, 5.0]), np.array([-1.0, 5.0]))
        assert abs(root[0]) <= 1e-8
        assert root[1] == 5.0

    def test_shifted_plane(self):
        root = find_border_point(
            linear_oracle(0.7), np.array([3.0, 0.0]), np.array([-2.0, 0.0])
        )
        assert root[0] == pytest.approx(0.7, abs=1e-7)

    def test_cubic_saturating_oracle(self):
        # plateaus on both sides of the root stress the bisection; compare
        # against an independent scalar root-finder on the same segment
        o = DecisionOracle(
            value=lambda x: float(np.tanh((x[0] - 0.3) ** 3 * 50.0)),
            gradient=lambda x: x,  # unused
        )
        root = find_border_point(o, np.array([2.0]), np.array([-2.0]))
        grid = np.linspace(-2.0, 2.0, 400001)
        vals = np.tanh((grid - 0.3) ** 3 * 50.0)
        crossing = grid[np.argmin(np.abs(vals))]
        assert abs(o.value(root)) <= 1e-8
        assert root[0] == pytest.approx(crossing, abs=1e-3)

    def test_value_at_root_within_tol(self):
        o = true_r_oracle()
        root = find_border_point(o, np.array([0.0, 0.0]), np.array([2.0, 2.0]), tol=1e-10)
        assert abs(o.value(root)) <= 1e-10

    def test_rejects_same_sign_endpoints(self):
        with pytest.raises(PreconditionError, match="straddle"):
            find_border_point(linear_oracle(), np.array([2.0, 0.0]), np.array([1.0, 0.0]))

    def test_rejects_swapped_endpoints(self):
        with pytest.raises(PreconditionError, match="straddle"):
            find_border_point(linear_oracle(), np.array([-1.0, 0.0]), np.array([1.0, 0.0]))


class TestTrainBorders:
    def test_points_lie_on_linear_border(self):
        m = train_borders(linear_oracle(), line_problem(), 16, seed=1)
        assert np.all(np.abs(m.points[:, 0]) <= 1e-7)

    def test_normals_point_to_plus_side(self):
        m = train_borders(linear_oracle(), line_problem(), 16, seed=1)
        assert np.all(m.normals[:, 0] > 0)

    def test_deterministic(self):
        a = train_borders(linear_oracle(), line_problem(), 8, seed=42)
        b = train_borders(linear_oracle(), line_problem(), 8, seed=42)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.normals, b.normals)

    def test_head_equals_shorter_run(self):
        # per-index RNG streams make a truncated model identical to training
        # fewer points outright
        long = train_borders(linear_oracle(), line_problem(), 20, seed=7)
        short = train_borders(linear_oracle(), line_problem(), 5, seed=7)
        assert np.array_equal(long.head(5).points, short.points)
        assert np.array_equal(long.head(5).normals, short.normals)

    def test_tuple_seed(self):
        a = train_borders(linear_oracle(), line_problem(), 4, seed=(3, 1, 2))
        b = train_borders(linear_oracle(), line_problem(), 4, seed=(3, 1, 2))
        assert np.array_equal(a.points, b.points)

    def test_single_signed_oracle_exhausts_attempts(self):
        o = DecisionOracle(value=lambda x: 0.5, gradient=lambda x: np.ones(2))
        with pytest.raises(TrainingError, match="attempts"):
            train_borders(o, line_problem(), 2, seed=0, opts=TrainOptions(max_attempts=10))

    def test_agf_oracle_roots_are_on_border(self):
        prob = synth_sample(200, 6)
        o = agf_oracle(prob, AgfConfig(total_weight=10.0))
        m = train_borders(o, prob, 12, seed=3)
        for pt in m.points:
            assert abs(o.value(pt)) <= 1e-8

    def test_normal_orientation_local(self):
        # stepping a small distance along the normal must cross into the
        # positive class, and against it into the negative class
        prob = synth_sample(200, 6)
        o = agf_oracle(prob, AgfConfig(total_weight=10.0))
        m = train_borders(o, prob, 12, seed=3)
        for pt, nv in zip(m.points, m.normals):
            unit = nv / np.linalg.norm(nv)
            assert o.value(pt + 1e-4 * unit) > 0
            assert o.value(pt - 1e-4 * unit) < 0

    def test_sign_fidelity_against_oracle(self):
        prob = synth_sample(400, 2)
        o = agf_oracle(prob, AgfConfig(total_weight=10.0))
        m = train_borders(o, prob, 48, seed=5)
        rng = np.random.default_rng(10)
        agree = total = 0
        for _ in range(400):
            x = rng.normal(size=2) * 2
            r = o.value(x)
            if abs(r) < 0.2:
                continue
            total += 1
            agree += np.sign(border_decision(m, x)) == np.sign(r)
        assert total >= 150
        assert agree / total >= 0.95


class TestBorderDecision:
    def setup_method(self):
        self.m = BinaryBordersModel(
            points=np.array([[0.0, 0.0], [4.0, 0.0]]),
            normals=np.array([[1.0, 0.0], [0.0, 2.0]]),
        )

    def test_nearest_point_dot_product(self):
        assert border_decision(self.m, np.array([1.0, 3.0])) == 1.0
        assert border_decision(self.m, np.array([4.0, -1.5])) == -3.0

    def test_tie_resolves_to_lowest_index(self):
        # x = (2, 0) is equidistant from both border points
        assert border_decision(self.m, np.array([2.0, 0.0])) == 2.0

    def test_probability_is_tanh(self):
        x = np.array([0.5, 0.2])
        assert border_probability(self.m, x) == pytest.approx(
            np.tanh(border_decision(self.m, x)), abs=1e-15
        )

    def test_batch_matches_scalar(self):
        xs = np.random.default_rng(4).normal(size=(50, 2)) * 3
        batch = border_decision_batch(self.m, xs)
        for k, x in enumerate(xs):
            assert batch[k] == pytest.approx(border_decision(self.m, x), abs=1e-9)

    def test_rejects_zero_normal(self):
        with pytest.raises(PreconditionError, match="magnitude"):
            BinaryBordersModel(np.zeros((1, 2)), np.zeros((1, 2)))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(PreconditionError):
            BinaryBordersModel(np.zeros((2, 2)), np.ones((3, 2)))


class TestSerialization:
    def test_round_trip_exact(self):
        m = train_borders(linear_oracle(), line_problem(), 6, seed=2)
        m2 = deserialize_borders(serialize_borders(m))
        assert np.array_equal(m.points, m2.points)
        assert np.array_equal(m.normals, m2.normals)
        assert (m2.class_minus, m2.class_plus) == (m.class_minus, m.class_plus)

    def test_class_ids_preserved(self):
        m = BinaryBordersModel(np.ones((1, 2)), np.ones((1, 2)), class_plus=3, class_minus=1)
        m2 = deserialize_borders(serialize_borders(m))
        assert (m2.class_minus, m2.class_plus) == (1, 3)

    def test_unknown_version_rejected(self):
        text = serialize_borders(BinaryBordersModel(np.ones((1, 1)), np.ones((1, 1))))
        with pytest.raises(FormatError, match="version"):
            deserialize_borders(text.replace("v1", "v9"))

    def test_truncated_rows_rejected(self):
        m = BinaryBordersModel(np.ones((3, 2)), np.ones((3, 2)))
        lines = serialize_borders(m).splitlines()
        with pytest.raises(FormatError, match="truncated"):
            deserialize_borders("\n".join(lines[:-1]))

    def test_short_row_rejected(self):
        text = "borders-model v1\nclasses 0 1\ndim 2\nnb 1\n1.0 2.0 3.0\n"
        with pytest.raises(FormatError, match="expected 4 values"):
            deserialize_borders(text)

    def test_non_numeric_row_rejected(self):
        text = "borders-model v1\nclasses 0 1\ndim 1\nnb 1\n1.0 oops\n"
        with pytest.raises(FormatError, match="non-numeric"):
            deserialize_borders(text)
