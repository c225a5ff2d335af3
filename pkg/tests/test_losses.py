import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contrastlab import (
    DegenerateModelError,
    EnumerationCapError,
    FiniteDistribution,
    LatentClassModel,
    LossKind,
    ValidationError,
    block_loss_empirical,
    block_loss_exact,
    collision_split,
    decompose_unsup,
    identity_representation,
    loss_value,
    sample_batch,
    sample_block_batch,
    unsup_loss_empirical,
    unsup_loss_exact,
    zero_representation,
)
from contrastlab.losses import _Eval, _unsup_hinge_fast
import oracles
from conftest import random_pair, singleton_model, two_class_model

HINGE = LossKind("hinge")
LOGISTIC = LossKind("logistic")


class TestLossValue:
    def test_hinge_at_zero(self):
        assert loss_value(HINGE, [0.0]) == 1.0

    def test_hinge_two_way(self):
        assert loss_value(HINGE, [-1.0, 3.0]) == 2.0

    def test_logistic_two_zero(self):
        assert loss_value(LOGISTIC, [0.0, 0.0]) == pytest.approx(math.log2(3), abs=1e-12)

    def test_hinge_margin(self):
        assert loss_value(LossKind("hinge", 2.0), [-1.0]) == pytest.approx(1.5)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            loss_value(HINGE, [])

    def test_logistic_margin_rejected(self):
        with pytest.raises(ValidationError):
            LossKind("logistic", 2.0)

    @given(
        st.lists(st.floats(-5, 5), min_size=1, max_size=5),
        st.lists(st.floats(-5, 5), min_size=1, max_size=5),
        st.floats(0, 1),
    )
    @settings(max_examples=100, deadline=None)
    def test_convexity(self, v, w, lam):
        n = min(len(v), len(w))
        v, w = np.array(v[:n]), np.array(w[:n])
        mix = lam * v + (1 - lam) * w
        for kind in (HINGE, LOGISTIC, LossKind("hinge", 1.7)):
            lhs = loss_value(kind, mix)
            rhs = lam * loss_value(kind, v) + (1 - lam) * loss_value(kind, w)
            assert lhs <= rhs + 1e-12

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=6), st.integers(1, 5))
    @settings(max_examples=100, deadline=None)
    def test_sandwich_split(self, v, cut):
        cut = min(cut, len(v) - 1)
        v1, v2 = v[:cut], v[cut:]
        for kind in (HINGE, LOGISTIC):
            full = loss_value(kind, v)
            a = loss_value(kind, v1)
            b = loss_value(kind, v2)
            assert a <= full + 1e-12
            assert full <= a + b + 1e-12


class TestUnsupExact:
    def test_zero_map_hinge(self, model2, zero2):
        for k in (1, 2, 3):
            assert unsup_loss_exact(zero2, model2, k, HINGE) == pytest.approx(1.0, abs=1e-12)

    def test_zero_map_logistic(self, model2, zero2):
        assert unsup_loss_exact(zero2, model2, 2, LOGISTIC) == pytest.approx(
            math.log2(3), abs=1e-12
        )

    def test_two_class_value(self, model2, identity2):
        assert unsup_loss_exact(identity2, model2, 1, HINGE) == pytest.approx(0.625, abs=1e-12)

    def test_matches_oracle_random(self):
        for seed in range(25):
            model, f = random_pair(seed)
            for k in (1, 2):
                for kind, fam in ((HINGE, "hinge"), (LOGISTIC, "logistic")):
                    got = unsup_loss_exact(f, model, k, kind)
                    want = oracles.unsup_loss(f, model, k, fam)
                    assert got == pytest.approx(want, abs=1e-9), (seed, k, fam)

    def test_hinge_fast_path_matches_generic(self):
        for seed in range(15):
            model, f = random_pair(seed)
            ev = _Eval(f, model)
            for k in (1, 2, 3):
                fast = _unsup_hinge_fast(ev, k, HINGE, False)
                generic = unsup_loss_exact(f, model, k, HINGE)
                assert fast == pytest.approx(generic, abs=1e-9)

    def test_fast_path_used_beyond_cap(self, model2, identity2):
        # cap forces the order-statistic route; value must not change
        full = unsup_loss_exact(identity2, model2, 2, HINGE)
        capped = unsup_loss_exact(identity2, model2, 2, HINGE, cap=10)
        assert capped == pytest.approx(full, abs=1e-12)

    def test_logistic_cap_error(self, model2, identity2):
        with pytest.raises(EnumerationCapError):
            unsup_loss_exact(identity2, model2, 2, LOGISTIC, cap=10)

    def test_variance_nonnegative_and_consistent(self, model2, identity2):
        mean, var = unsup_loss_exact(identity2, model2, 1, HINGE, with_variance=True)
        assert mean == pytest.approx(0.625, abs=1e-12)
        assert var >= 0.0


class TestUnsupEmpirical:
    def test_zero_map_constant(self, model2, zero2):
        batch = sample_batch(model2, 2, 50, 1)
        assert unsup_loss_empirical(zero2, batch, HINGE, model2) == 1.0

    def test_single_tuple_equals_loss_value(self, model2, identity2):
        batch = sample_batch(model2, 1, 1, 5)
        x, xp, (xn,) = batch.tuples[0]
        vx = np.array(model2.points[x])
        score = vx @ np.array(model2.points[xp]) - vx @ np.array(model2.points[xn])
        assert unsup_loss_empirical(identity2, batch, HINGE, model2) == pytest.approx(
            loss_value(HINGE, [score]), abs=1e-12
        )

    def test_converges_to_exact(self, model2, identity2):
        mean, var = unsup_loss_exact(identity2, model2, 1, HINGE, with_variance=True)
        M = 100_000
        emp = unsup_loss_empirical(identity2, sample_batch(model2, 1, M, 0), HINGE, model2)
        assert abs(emp - mean) <= 3 * math.sqrt(var / M)


class TestBlockLoss:
    def test_b1_equals_pair_loss(self):
        for seed in range(10):
            model, f = random_pair(seed)
            assert block_loss_exact(f, model, 1, HINGE) == pytest.approx(
                unsup_loss_exact(f, model, 1, HINGE), abs=1e-9
            )

    def test_two_class_value(self, model2, identity2):
        assert block_loss_exact(identity2, model2, 2, HINGE) == pytest.approx(
            0.59375, abs=1e-12
        )

    def test_singleton_support_b_independent(self):
        m = singleton_model()
        f = identity_representation(m)
        base = block_loss_exact(f, m, 1, HINGE)
        for b in (2, 3):
            assert block_loss_exact(f, m, b, HINGE) == pytest.approx(base, abs=1e-12)

    def test_matches_oracle(self):
        for seed in range(10):
            model, f = random_pair(seed)
            got = block_loss_exact(f, model, 2, HINGE)
            want = oracles.block_loss(f, model, 2, "hinge")
            assert got == pytest.approx(want, abs=1e-9)

    def test_block_never_exceeds_pair(self):
        for seed in range(20):
            model, f = random_pair(seed)
            for kind in (HINGE, LOGISTIC):
                blk = block_loss_exact(f, model, 2, kind)
                pair = unsup_loss_exact(f, model, 1, kind)
                assert blk <= pair + 1e-9

    def test_empirical_block(self, model2, identity2):
        batch = sample_block_batch(model2, 2, 500, 3)
        val = block_loss_empirical(identity2, batch, HINGE, model2)
        assert 0.0 <= val <= 2.0


class TestDecompose:
    def test_two_class_values(self, model2, identity2):
        d = decompose_unsup(identity2, model2, HINGE)
        assert (d.l_un, d.l_eq, d.l_neq, d.tau) == pytest.approx(
            (0.625, 1.0, 0.25, 0.5), abs=1e-12
        )

    def test_singleton_values(self):
        m = singleton_model()
        d = decompose_unsup(identity_representation(m), m, HINGE)
        assert (d.l_un, d.l_eq, d.l_neq) == pytest.approx((0.5, 1.0, 0.0), abs=1e-12)

    def test_zero_map(self, model2, zero2):
        d = decompose_unsup(zero2, model2, HINGE)
        assert d.l_eq == pytest.approx(1.0, abs=1e-12)
        assert d.l_neq == pytest.approx(1.0, abs=1e-12)

    def test_identity_holds_randomly(self):
        for seed in range(100):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            d = decompose_unsup(f, model, kind)
            direct = unsup_loss_exact(f, model, 1, kind)
            assert abs(direct - (d.tau * d.l_eq + (1 - d.tau) * d.l_neq)) <= 1e-9

    def test_l_eq_floor(self):
        for seed in range(30):
            model, f = random_pair(seed)
            for kind in (HINGE, LOGISTIC):
                d = decompose_unsup(f, model, kind)
                assert d.l_eq >= kind.at_zero(1) - 1e-9

    def test_single_class_degenerate(self):
        m = LatentClassModel(
            2,
            {"p": [1, 0]},
            {"c": FiniteDistribution.uniform(["p"])},
            FiniteDistribution.uniform(["c"]),
        )
        with pytest.raises(DegenerateModelError):
            decompose_unsup(identity_representation(m), m, HINGE)


class TestCollisionSplit:
    def test_zero_map_hinge(self, model2, zero2):
        s = collision_split(zero2, model2, 2, HINGE)
        assert s.baseline_term == pytest.approx(1.0, abs=1e-12)
        assert s.collision_term == pytest.approx(1.0, abs=1e-12)
        assert s.delta == pytest.approx(0.0, abs=1e-12)

    def test_zero_map_logistic_baseline(self, model2, zero2):
        s = collision_split(zero2, model2, 2, LOGISTIC)
        want = 2 / 3 + math.log2(3) / 3
        assert s.baseline_term == pytest.approx(want, abs=1e-12)

    def test_k1_matches_decompose(self):
        for seed in range(20):
            model, f = random_pair(seed)
            s = collision_split(f, model, 1, HINGE)
            d = decompose_unsup(f, model, HINGE)
            assert s.l_neq_k == pytest.approx(d.l_neq, abs=1e-9)

    def test_delta_nonnegative(self):
        for seed in range(50):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            for k in (1, 2, 3):
                s = collision_split(f, model, k, kind)
                assert s.delta >= -1e-9
