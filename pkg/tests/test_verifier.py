import json
import math

import pytest

from contrastlab import (
    BoundCheck,
    FunctionClass,
    LossKind,
    check_corollary_4_7,
    check_eq_8_identity,
    check_lemma_4_3,
    check_lemma_4_4,
    check_lemma_4_6,
    check_lemma_B2_population,
    check_prop_6_2,
    check_theorem_4_1_statistical,
    check_theorem_4_5_population,
    check_theorem_B1_population,
    identity_representation,
    run_counterexample,
    summarize,
    sweep_negative_samples,
    write_report,
    zero_representation,
)
from contrastlab.scenarios import build
from conftest import random_pair, singleton_model, two_class_model

HINGE = LossKind("hinge")
LOGISTIC = LossKind("logistic")


class TestEq8Identity:
    def test_two_class(self, model2, identity2):
        c = check_eq_8_identity(identity2, model2)
        assert c.passed
        assert c.details["l_un"] == pytest.approx(0.625, abs=1e-12)
        assert c.details["tau"] == pytest.approx(0.5, abs=1e-12)

    def test_random(self):
        for seed in range(30):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            assert check_eq_8_identity(f, model, kind).passed


class TestLemma43:
    def test_singleton_equality(self):
        m = singleton_model()
        c = check_lemma_4_3(identity_representation(m), m)
        assert c.passed
        assert c.lhs == pytest.approx(0.0, abs=1e-12)
        assert c.rhs == pytest.approx(0.0, abs=1e-12)

    def test_zero_map_equality(self, model2, zero2):
        c = check_lemma_4_3(zero2, model2)
        assert c.passed
        assert c.lhs == pytest.approx(1.0, abs=1e-12)
        assert c.rhs == pytest.approx(1.0, abs=1e-12)

    def test_random(self):
        for seed in range(30):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            assert check_lemma_4_3(f, model, kind).passed


class TestLemma44:
    def test_two_class_values(self, model2, identity2):
        c = check_lemma_4_4(identity2, model2)
        assert c.passed
        assert c.lhs == pytest.approx(0.0, abs=1e-12)
        assert c.rhs == pytest.approx(math.sqrt(2) * math.sqrt(0.5), abs=1e-9)
        assert c.details["c_prime"] == pytest.approx(math.sqrt(2))

    def test_logistic_constant(self, model2, identity2):
        c = check_lemma_4_4(identity2, model2, LOGISTIC)
        assert c.details["c_prime"] == pytest.approx(math.sqrt(2) / math.log(2))
        assert c.passed

    def test_random(self):
        for seed in range(30):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            assert check_lemma_4_4(f, model, kind).passed


class TestTheorem45:
    def test_random(self):
        for seed in range(30):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            assert check_theorem_4_5_population(f, model, kind).passed

    def test_zero_map(self, model2, zero2):
        c = check_theorem_4_5_population(zero2, model2)
        assert c.passed
        assert c.details["s_value"] == 0.0


class TestTheorem41Statistical:
    def test_finite_class_passes(self, model2, identity2, zero2):
        fclass = FunctionClass("finite_list", members=(zero2, identity2))
        checks = check_theorem_4_1_statistical(
            model2, fclass, HINGE, M_list=(64, 256), seeds=(0, 1)
        )
        assert len(checks) == 4
        for c in checks:
            assert c.passed
            assert c.details["note"] == "explicit-constant reconstruction"
            assert c.details["generalization_gap"] >= -1e-12


class TestLemma46:
    def test_zero_map(self, model2, zero2):
        c = check_lemma_4_6(zero2, model2)
        assert c.passed
        assert c.details["gamma"] == 1.0

    def test_random(self):
        for seed in range(20):
            model, f = random_pair(seed)
            assert check_lemma_4_6(f, model).passed


class TestCorollary47:
    def test_random(self):
        for seed in range(10):
            model, f = random_pair(seed)
            assert check_corollary_4_7(f, f, model, gen_value=0.0).passed

    def test_gen_value_enlarges_rhs(self, model2, identity2):
        a = check_corollary_4_7(identity2, identity2, model2, gen_value=0.0)
        b = check_corollary_4_7(identity2, identity2, model2, gen_value=0.5)
        assert b.rhs > a.rhs


class TestProp62:
    def test_two_class_chain_values(self, model2, identity2):
        lo, up = check_prop_6_2(identity2, model2, 2)
        assert lo.passed and up.passed
        assert lo.lhs == pytest.approx(0.0, abs=1e-12)
        assert lo.rhs == pytest.approx((0.59375 - 0.5) / 0.5, abs=1e-12)
        assert up.rhs == pytest.approx((0.625 - 0.5) / 0.5, abs=1e-12)
        assert up.slack > 0.0

    def test_block_bound_monotone_in_b(self, model2, identity2):
        mids = []
        for b in (1, 2, 4):
            lo, up = check_prop_6_2(identity2, model2, b)
            assert lo.passed and up.passed
            mids.append(lo.rhs)
        assert mids[0] >= mids[1] - 1e-12 >= mids[2] - 2e-12

    def test_random(self):
        for seed in range(20):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            for c in check_prop_6_2(f, model, 2, kind):
                assert c.passed


class TestTheoremB1:
    def test_zero_map_hand_values(self, model2, zero2):
        step2, step3, delta, comp = check_theorem_B1_population(zero2, model2, 2)
        assert all(c.passed for c in (step2, step3, delta, comp))
        # tau_2 = 0.75, every loss term is exactly 1, weighted avg is 1
        assert step2.lhs == pytest.approx(0.25, abs=1e-12)
        assert step2.rhs == pytest.approx(0.25, abs=1e-12)
        assert step3.lhs == pytest.approx(1.0, abs=1e-12)
        assert delta.lhs == pytest.approx(0.0, abs=1e-12)
        assert delta.rhs == pytest.approx(0.0, abs=1e-12)

    def test_random(self):
        for seed in range(20):
            model, f = random_pair(seed)
            kind = HINGE if seed % 2 else LOGISTIC
            for k in (1, 2, 3):
                for c in check_theorem_B1_population(f, model, k, kind):
                    assert c.passed, (seed, k, c.id, c.slack)


class TestLemmaB2:
    def test_k1_matches_structure(self, model2, identity2):
        c = check_lemma_B2_population(identity2, model2, 1)
        assert c.passed
        assert c.details["gamma"] >= 1.0

    def test_random(self):
        for seed in range(20):
            model, f = random_pair(seed)
            for k in (1, 2):
                assert check_lemma_B2_population(f, model, k).passed


class TestCounterexamples:
    def test_appC1_large_r(self):
        rep = run_counterexample("appC1", n=8, r=10.0)
        assert rep.chosen == "f0"
        assert "as predicted" in rep.verdict
        assert rep.loss_table["f0"] == pytest.approx(1.0, abs=1e-12)
        assert rep.loss_table["f1"] == pytest.approx(103.0 / 32.0, abs=1e-9)
        assert rep.sup_table["f1"] == pytest.approx(0.0, abs=1e-12)
        assert rep.sup_table["f0"] == pytest.approx(1.0, abs=1e-12)

    def test_appC1_small_r(self):
        rep = run_counterexample("appC1", n=8, r=2.0)
        assert rep.chosen == "f1"
        assert "as predicted" in rep.verdict

    def test_appC2_flip(self):
        lo = run_counterexample("appC2", n=8, r=2.0, k=4)
        hi = run_counterexample("appC2", n=8, r=2.0, k=16)
        assert lo.chosen == "f1"
        assert hi.chosen == "f0"
        assert "as predicted" in lo.verdict
        assert "as predicted" in hi.verdict

    def test_fig1a(self):
        rep = run_counterexample("fig1a", r=5.0)
        assert rep.chosen == "f0"
        assert rep.loss_table["f1"] == pytest.approx(6.5, abs=1e-9)
        assert "as predicted" in rep.verdict

    def test_deterministic(self):
        a = run_counterexample("appC1", n=8, r=10.0)
        b = run_counterexample("appC1", n=8, r=10.0)
        assert a == b


class TestSweep:
    def test_appC2_sweep_hurts(self):
        sc = build("appC2", n=8, r=2.0)
        fclass = FunctionClass("finite_list", members=(sc.f0, sc.f1))
        rows = sweep_negative_samples(
            sc.model, fclass, HINGE, k_list=(4, 64), M=400, seeds=(0, 1, 2)
        )
        data = [r for r in rows if r.get("seed") not in ("mean", None)]
        assert len(data) == 6
        means = {r["k"]: r["avg_sup_loss"] for r in rows if r.get("seed") == "mean"}
        assert means[64] > means[4]
        verdict = rows[-1]["verdict"]
        assert "no better" in verdict


class TestReporting:
    def test_summarize_counts(self, model2, identity2):
        recs = [
            check_eq_8_identity(identity2, model2),
            check_lemma_4_3(identity2, model2),
            run_counterexample("appC1", n=8, r=10.0),
        ]
        s = summarize(recs)
        assert s == {"total": 3, "passed": 3, "failed": 0}

    def test_write_report_roundtrip(self, tmp_path, model2, identity2):
        recs = [check_lemma_4_4(identity2, model2)]
        path = tmp_path / "report.jsonl"
        write_report(path, recs, summarize(recs))
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert first["kind"] == "bound_check"
        assert first["pass"] is True
        last = json.loads(lines[1])
        assert last == {"kind": "summary", "total": 1, "passed": 1, "failed": 0}

    def test_bound_check_fields(self, model2, identity2):
        c = check_lemma_4_3(identity2, model2)
        assert isinstance(c, BoundCheck)
        assert c.slack == pytest.approx(c.rhs - c.lhs, abs=1e-15)
        assert len(c.inputs_digest) == 16
