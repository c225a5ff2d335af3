import numpy as np
import pytest

from contrastlab import (
    FunctionClass,
    LossKind,
    RepresentationFn,
    ValidationError,
    block_loss_exact,
    erm_block,
    erm_descent,
    erm_finite,
    sample_batch,
    sample_block_batch,
    select_best_exact,
    unsup_loss_exact,
    unsup_loss_empirical,
    zero_representation,
)
from contrastlab.scenarios import build
from conftest import singleton_model, two_class_model

HINGE = LossKind("hinge")
LOGISTIC = LossKind("logistic")


class TestErmFinite:
    def test_picks_suboptimal_on_large_r(self):
        sc = build("appC1", n=8, r=10.0)
        fclass = FunctionClass("finite_list", members=(sc.f0, sc.f1))
        res = select_best_exact(fclass, sc.model, 1, HINGE)
        assert res.selected_index == 0
        assert res.empirical_loss == pytest.approx(1.0, abs=1e-12)

    def test_picks_good_on_small_r(self):
        sc = build("appC1", n=8, r=2.0)
        fclass = FunctionClass("finite_list", members=(sc.f0, sc.f1))
        res = select_best_exact(fclass, sc.model, 1, HINGE)
        assert res.selected_index == 1
        assert res.empirical_loss == pytest.approx(0.21875, abs=1e-12)

    def test_single_member(self, model2, zero2):
        fclass = FunctionClass("finite_list", members=(zero2,))
        batch = sample_batch(model2, 1, 10, 0)
        res = erm_finite(fclass, batch, HINGE, model2)
        assert res.selected_index == 0
        assert res.f_hat is zero2

    def test_exhaustive_minimum(self, model2):
        from conftest import random_representation

        rng = np.random.default_rng(0)
        members = tuple(random_representation(rng, model2) for _ in range(5))
        fclass = FunctionClass("finite_list", members=members)
        batch = sample_batch(model2, 2, 100, 1)
        res = erm_finite(fclass, batch, HINGE, model2)
        for m in members:
            assert res.empirical_loss <= unsup_loss_empirical(m, batch, HINGE, model2) + 1e-12

    def test_tie_broken_by_lowest_index(self, model2, zero2):
        other = zero_representation(model2, 2)
        fclass = FunctionClass("finite_list", members=(zero2, other))
        batch = sample_batch(model2, 1, 10, 0)
        assert erm_finite(fclass, batch, HINGE, model2).selected_index == 0

    def test_empirical_matches_reported(self, model2, zero2):
        fclass = FunctionClass("finite_list", members=(zero2,))
        batch = sample_batch(model2, 1, 50, 2)
        res = erm_finite(fclass, batch, HINGE, model2)
        assert res.empirical_loss == pytest.approx(
            unsup_loss_empirical(res.f_hat, batch, HINGE, model2), abs=1e-9
        )


class TestErmDescent:
    def test_reaches_population_floor(self):
        m = singleton_model()
        batch = sample_batch(m, 1, 2000, 11)
        fclass = FunctionClass("linear_class", d=2, norm_bound=1.0)
        res = erm_descent(fclass, batch, HINGE, m, steps=500, seed=3)
        assert res.empirical_loss <= 0.55

    def test_zero_steps_rejected(self, model2):
        batch = sample_batch(model2, 1, 10, 0)
        fclass = FunctionClass("table_class", d=2, norm_bound=1.0)
        with pytest.raises(ValidationError):
            erm_descent(fclass, batch, HINGE, model2, steps=0)

    def test_deterministic(self, model2):
        batch = sample_batch(model2, 1, 200, 4)
        fclass = FunctionClass("table_class", d=2, norm_bound=1.5)
        a = erm_descent(fclass, batch, LOGISTIC, model2, steps=50, seed=9)
        b = erm_descent(fclass, batch, LOGISTIC, model2, steps=50, seed=9)
        assert a.empirical_loss == b.empirical_loss
        assert a.trace == b.trace

    def test_trace_monotone_best_so_far(self, model2):
        batch = sample_batch(model2, 2, 300, 1)
        fclass = FunctionClass("table_class", d=3, norm_bound=2.0)
        res = erm_descent(fclass, batch, HINGE, model2, steps=100, seed=0)
        vals = [v for _, v in res.trace]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_norm_bound_respected(self, model2):
        batch = sample_batch(model2, 1, 100, 5)
        fclass = FunctionClass("table_class", d=2, norm_bound=0.8)
        res = erm_descent(fclass, batch, HINGE, model2, steps=30, seed=1)
        from contrastlab import apply

        for pid in model2.point_ids:
            assert np.linalg.norm(apply(res.f_hat, pid, model2)) <= 0.8 + 1e-9

    def test_finite_class_rejected(self, model2, zero2):
        batch = sample_batch(model2, 1, 10, 0)
        with pytest.raises(ValidationError):
            erm_descent(FunctionClass("finite_list", members=(zero2,)), batch, HINGE, model2)


class TestErmBlock:
    def test_singleton_classes_match_pair_objective(self):
        m = singleton_model()
        bb = sample_block_batch(m, 2, 500, 7)
        fclass = FunctionClass("linear_class", d=2, norm_bound=1.0)
        res = erm_block(fclass, bb, HINGE, m, steps=200, seed=2)
        # block means collapse to the single support point
        assert res.empirical_loss <= 0.6

    def test_block_training_not_worse_than_pair(self, model2):
        fclass = FunctionClass("table_class", d=2, norm_bound=1.5)
        pair = erm_descent(
            fclass, sample_batch(model2, 1, 1500, 3), HINGE, model2, steps=300, seed=5
        )
        blk = erm_block(
            fclass, sample_block_batch(model2, 2, 1500, 3), HINGE, model2, steps=300, seed=5
        )
        pop_pair = unsup_loss_exact(pair.f_hat, model2, 1, HINGE)
        pop_blk = block_loss_exact(blk.f_hat, model2, 2, HINGE)
        assert pop_blk <= pop_pair + 0.05


class TestGeneralizationScaling:
    def test_gap_shrinks_with_m(self, model2):
        import statistics

        from conftest import random_representation

        rng = np.random.default_rng(42)
        members = [random_representation(rng, model2) for _ in range(6)]
        fclass = FunctionClass("finite_list", members=tuple(members))
        star = select_best_exact(fclass, model2, 1, HINGE).empirical_loss
        gaps = {}
        for M in (256, 4096):
            g = []
            for seed in range(20):
                fit = erm_finite(fclass, sample_batch(model2, 1, M, seed), HINGE, model2)
                g.append(unsup_loss_exact(fit.f_hat, model2, 1, HINGE) - star)
            gaps[M] = statistics.median(g)
        assert gaps[4096] <= 0.75 * gaps[256] + 1e-12
