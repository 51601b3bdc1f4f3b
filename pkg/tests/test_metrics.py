import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archevo.evaluators import SyntheticEvaluator
from archevo.genome import enumerate_space
from archevo.metrics import (
    hypervolume,
    igd,
    nondominated_indices,
    pairwise_nondominated_indices,
    true_front,
    write_front_csv,
)
from archevo.objectives import ObjectiveConfig

from oracles import oracle_hypervolume, oracle_nondominated

CFG = ObjectiveConfig()
RESTRICTION = {"n_c": [2], "n_f": [3], "i2": [0], "i3": [0], "o4": ["CONV2D"]}

vectors = st.tuples(
    st.floats(min_value=0.0, max_value=6.0, allow_nan=False),
    st.floats(min_value=10.0, max_value=18.0, allow_nan=False),
)


class TestNondominatedFilter:
    def test_empty(self):
        assert nondominated_indices([]) == []

    def test_single(self):
        assert nondominated_indices([(1.0, 2.0)]) == [0]

    def test_simple_front(self):
        points = [(1.0, 3.0), (3.0, 1.0), (2.0, 2.0), (3.0, 3.0)]
        assert nondominated_indices(points) == [0, 1, 2]

    def test_duplicates_of_front_points_all_kept(self):
        points = [(1.0, 3.0), (1.0, 3.0), (2.0, 1.0)]
        assert nondominated_indices(points) == [0, 1, 2]

    def test_equal_f1_group(self):
        points = [(1.0, 5.0), (1.0, 4.0), (2.0, 3.0)]
        assert nondominated_indices(points) == [1, 2]

    def test_weakly_dominated_dropped(self):
        points = [(1.0, 3.0), (1.0, 4.0)]
        assert nondominated_indices(points) == [0]

    @settings(max_examples=120, deadline=None)
    @given(st.lists(vectors, min_size=0, max_size=60))
    def test_sweep_matches_naive(self, points):
        assert nondominated_indices(points) == oracle_nondominated(points)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(vectors, min_size=1, max_size=60))
    def test_sweep_matches_pairwise_implementation(self, points):
        assert nondominated_indices(points) == pairwise_nondominated_indices(points)

    def test_low_precision_ties(self):
        # exactly representable equal coordinates in both axes
        points = [(0.5, 0.5), (0.5, 0.5), (0.25, 0.75), (0.75, 0.25), (0.5, 0.75)]
        assert nondominated_indices(points) == oracle_nondominated(points)


class TestHypervolume:
    def test_two_point_example(self):
        assert hypervolume([(1.0, 2.0), (2.0, 1.0)], (3.0, 3.0)) == pytest.approx(3.0)

    def test_single_point_rectangle(self):
        assert hypervolume([(1.5, 12.0)], (4.0, 16.0)) == pytest.approx(2.5 * 4.0)

    def test_empty_front(self):
        assert hypervolume([], (1.0, 1.0)) == 0.0

    def test_dominated_points_do_not_change_area(self):
        base = hypervolume([(1.0, 2.0), (2.0, 1.0)], (3.0, 3.0))
        more = hypervolume([(1.0, 2.0), (2.0, 1.0), (2.5, 2.5)], (3.0, 3.0))
        assert more == pytest.approx(base)

    def test_duplicate_points_do_not_change_area(self):
        base = hypervolume([(1.0, 2.0)], (3.0, 3.0))
        more = hypervolume([(1.0, 2.0), (1.0, 2.0)], (3.0, 3.0))
        assert more == pytest.approx(base)

    def test_point_on_reference_rejected(self):
        with pytest.raises(ValueError):
            hypervolume([(3.0, 1.0)], (3.0, 3.0))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            hypervolume([(float("nan"), 1.0)], (3.0, 3.0))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(vectors, min_size=1, max_size=30))
    def test_matches_rectangle_oracle(self, points):
        reference = (7.0, 19.0)
        assert hypervolume(points, reference) == pytest.approx(
            oracle_hypervolume(points, reference), rel=1e-12
        )

    @settings(max_examples=50, deadline=None)
    @given(st.lists(vectors, min_size=1, max_size=20), vectors)
    def test_adding_a_point_never_shrinks_area(self, points, extra):
        reference = (7.0, 19.0)
        base = hypervolume(points, reference)
        assert hypervolume(points + [extra], reference) >= base - 1e-12


class TestIgd:
    def test_zero_when_fronts_match(self):
        front = [(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]
        assert igd(front, front) == pytest.approx(0.0, abs=1e-15)

    def test_missing_one_of_two_reference_points(self):
        # one reference point matched exactly, the other at normalized
        # distance 1 from its nearest neighbour: mean = 0.5
        reference = [(0.0, 5.0), (4.0, 7.0)]
        candidate = [(0.0, 5.0), (4.0, 5.0)]
        assert igd(candidate, reference) == pytest.approx(0.5)

    def test_superset_candidate_still_zero(self):
        reference = [(1.0, 3.0), (3.0, 1.0)]
        candidate = [(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]
        assert igd(candidate, reference) == pytest.approx(0.0, abs=1e-15)

    def test_degenerate_reference_span(self):
        # a single reference point has zero span; fall back to raw distance
        assert igd([(2.0, 3.0)], [(2.0, 3.0)]) == pytest.approx(0.0, abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            igd([], [(1.0, 1.0)])
        with pytest.raises(ValueError):
            igd([(1.0, 1.0)], [])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(vectors, min_size=1, max_size=15), st.lists(vectors, min_size=1, max_size=15))
    def test_nonnegative(self, candidate, reference):
        assert igd(candidate, reference) >= 0.0


@pytest.fixture(scope="module")
def small_front():
    return true_front(SyntheticEvaluator(), CFG, restriction=RESTRICTION)


class TestTrueFront:
    def test_counts_whole_restricted_space(self, small_front):
        from archevo.genome import space_size

        assert small_front.enumerated == space_size(RESTRICTION)

    def test_front_points_sorted_and_distinct(self, small_front):
        points = list(small_front.points)
        assert points == sorted(points)
        assert len(set(points)) == len(points)

    def test_front_matches_pairwise_filter(self, small_front):
        ev = SyntheticEvaluator()
        from archevo.objectives import objectives_for

        pts = []
        for g in enumerate_space(RESTRICTION):
            vec = objectives_for(g, ev.evaluate(g, CFG), CFG)
            pts.append((vec.f1, vec.f2))
        kept = {pts[i] for i in pairwise_nondominated_indices(pts)}
        assert set(small_front.points) == kept

    def test_representatives_reproduce_their_points(self, small_front):
        ev = SyntheticEvaluator()
        from archevo.objectives import objectives_for

        for genome, point in zip(small_front.representatives, small_front.points):
            vec = objectives_for(genome, ev.evaluate(genome, CFG), CFG)
            assert (vec.f1, vec.f2) == point

    def test_reference_point_is_scaled_componentwise_max(self, small_front):
        ev = SyntheticEvaluator()
        from archevo.objectives import objectives_for

        max_f1 = max_f2 = float("-inf")
        for g in enumerate_space(RESTRICTION):
            vec = objectives_for(g, ev.evaluate(g, CFG), CFG)
            max_f1 = max(max_f1, vec.f1)
            max_f2 = max(max_f2, vec.f2)
        assert small_front.reference_point[0] == pytest.approx(1.1 * max_f1, rel=1e-12)
        assert small_front.reference_point[1] == pytest.approx(1.1 * max_f2, rel=1e-12)

    def test_hypervolume_positive_and_consistent(self, small_front):
        assert small_front.hypervolume > 0.0
        assert small_front.hypervolume == pytest.approx(
            hypervolume(list(small_front.points), small_front.reference_point)
        )

    def test_front_has_a_genuine_tradeoff(self, small_front):
        # at least two points means neither axis can be optimized for free
        assert len(small_front.points) >= 2

    def test_explicit_genome_list(self, small_front):
        genomes = list(enumerate_space(RESTRICTION))
        explicit = true_front(SyntheticEvaluator(), CFG, genomes=genomes)
        assert explicit.points == small_front.points
        assert explicit.enumerated == small_front.enumerated

    def test_json_summary_shape(self, small_front):
        data = small_front.to_json_dict()
        assert data["size"] == len(small_front.points)
        assert data["enumerated"] == small_front.enumerated
        assert data["hypervolume"] == small_front.hypervolume

    def test_front_csv_round_trip(self, small_front, tmp_path):
        path = tmp_path / "front.csv"
        write_front_csv(path, small_front)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(small_front.points)
        assert float(rows[0]["f1"]) == small_front.points[0][0]
        assert float(rows[0]["f2"]) == small_front.points[0][1]
