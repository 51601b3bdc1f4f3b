import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from archevo.genome import Genome
from archevo.objectives import (
    MetricRangeError,
    ObjectiveConfig,
    TrainingMetrics,
    ese,
    ese_max,
    objectives_for,
    size_objective,
)

CFG = ObjectiveConfig()


def metrics(train, val, e_best, total_epochs=60):
    return TrainingMetrics(
        mc_dice_train=train, mc_dice_val=val, e_max=e_best, total_epochs=total_epochs
    )


class TestEse:
    def test_hand_computed_midrange(self):
        # 0.25*0.5 + 0.8 + 0.1*(15/60)
        assert ese(metrics(3.5, 3.2, 45), CFG) == pytest.approx(0.95, abs=1e-9)

    def test_hand_computed_near_worst(self):
        # 0.25*4 + 4 + 0.1*(59/60)
        value = ese(metrics(0.0, 0.0, 1), CFG)
        assert value == pytest.approx(1.0 + 4.0 + 0.1 * 59 / 60, abs=1e-9)
        assert value == pytest.approx(5.0983, abs=5e-5)

    def test_perfect_run_scores_zero(self):
        assert ese(metrics(4.0, 4.0, 60), CFG) == pytest.approx(0.0, abs=1e-12)

    def test_upper_bound(self):
        assert ese_max(CFG) == pytest.approx(5.1, abs=1e-12)
        worst = ese(metrics(0.0, 0.0, 1), CFG)
        assert worst < ese_max(CFG)

    def test_upper_bound_other_config(self):
        cfg = ObjectiveConfig(alpha=0.5, beta=0.2, num_classes=2, total_epochs=30)
        assert ese_max(cfg) == pytest.approx((0.5 + 1.0) * 2 + 0.2, abs=1e-12)

    def test_strictly_positive_gap_everywhere(self):
        # the bound must stay strictly above any attainable value
        for e_best in (1, 30, 60):
            assert ese(metrics(0.0, 0.0, e_best), CFG) < ese_max(CFG)

    @given(
        st.floats(min_value=0.0, max_value=4.0),
        st.floats(min_value=0.0, max_value=4.0),
        st.integers(min_value=1, max_value=60),
    )
    def test_range(self, train, val, e_best):
        value = ese(metrics(train, val, e_best), CFG)
        assert 0.0 <= value < ese_max(CFG)

    def test_affine_in_train_dice(self):
        # coefficient of mc_dice_train is -alpha
        lo = ese(metrics(1.0, 2.0, 30), CFG)
        hi = ese(metrics(3.0, 2.0, 30), CFG)
        assert (hi - lo) / 2.0 == pytest.approx(-CFG.alpha, abs=1e-12)

    def test_affine_in_val_dice(self):
        lo = ese(metrics(2.0, 1.0, 30), CFG)
        hi = ese(metrics(2.0, 3.0, 30), CFG)
        assert (hi - lo) / 2.0 == pytest.approx(-1.0, abs=1e-12)

    def test_linear_in_epoch_of_best(self):
        lo = ese(metrics(2.0, 2.0, 12), CFG)
        hi = ese(metrics(2.0, 2.0, 42), CFG)
        assert hi - lo == pytest.approx(-CFG.beta * 30 / 60, abs=1e-12)


class TestMetricValidation:
    @pytest.mark.parametrize(
        "bad",
        [
            dict(train=-0.1, val=2.0, e_best=30),
            dict(train=4.1, val=2.0, e_best=30),
            dict(train=2.0, val=-1.0, e_best=30),
            dict(train=2.0, val=5.0, e_best=30),
            dict(train=2.0, val=2.0, e_best=0),
            dict(train=2.0, val=2.0, e_best=61),
        ],
    )
    def test_out_of_range_rejected(self, bad):
        with pytest.raises(MetricRangeError):
            metrics(bad["train"], bad["val"], bad["e_best"]).validate(CFG)

    def test_total_epochs_mismatch_rejected(self):
        with pytest.raises(MetricRangeError):
            metrics(2.0, 2.0, 30, total_epochs=40).validate(CFG)

    def test_nan_rejected(self):
        with pytest.raises(MetricRangeError):
            metrics(float("nan"), 2.0, 30).validate(CFG)

    def test_boundaries_accepted(self):
        metrics(0.0, 0.0, 1).validate(CFG)
        metrics(4.0, 4.0, 60).validate(CFG)


class TestConfigValidation:
    def test_defaults(self):
        assert (CFG.alpha, CFG.beta, CFG.num_classes, CFG.total_epochs) == (
            0.25,
            0.10,
            4,
            60,
        )

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(alpha=-0.1),
            dict(beta=-1.0),
            dict(num_classes=1),
            dict(total_epochs=0),
        ],
    )
    def test_bad_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ObjectiveConfig(**kwargs)


class TestSizeObjective:
    def test_log_identity(self):
        assert size_objective(math.e**10) == pytest.approx(10.0, rel=1e-12)

    def test_reference_scale(self):
        assert size_objective(7.1e6) == pytest.approx(15.776, abs=5e-4)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            size_objective(0)

    @given(st.integers(min_value=1, max_value=10**9))
    def test_monotone(self, n):
        assert size_objective(n + 1) > size_objective(n)


class TestObjectivesFor:
    def test_combines_both_axes(self):
        g = Genome(0, 0, 0, "CONV2D", "CONV2D", "CONV2D", "CONV2D", 2, 3, 4)
        vec = objectives_for(g, metrics(3.5, 3.2, 45), CFG)
        assert vec.f1 == pytest.approx(0.95, abs=1e-9)
        assert vec.f2 > 0
        assert vec.as_tuple() == (vec.f1, vec.f2)
