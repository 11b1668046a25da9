import json
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from msqss.protocol import Adversary, run_protocol
from msqss.quantum_core import MINUS_STATE, ONE, ZERO, PureState
from msqss.records import Announcement, CheckConfig, CheckReport, ProtocolConfig
from msqss.sequence_perm import Kind, TaggedQubit
from msqss.verification import (
    encrypt,
    eavesdropping_check,
    secrecy_violations,
    xor_bits,
)

CFG = ProtocolConfig(L=8, M=2, epsilon=Fraction(1, 8))


def _flip(item):
    return TaggedQubit(ONE if item.state.close_to(ZERO) else ZERO, item.origin, item.kind)


class FlipSiftBeforeBobs(Adversary):
    def before_bob(self, run, i, seq):
        return [_flip(x) if i == 1 and x.kind == Kind.SIFT else x for x in seq]


class FlipSiftAfterBobs(Adversary):
    def after_bob(self, run, i, seq):
        return [_flip(x) if i == run.config.M and x.kind == Kind.SIFT else x for x in seq]


class MinusOnCtrl(Adversary):
    def after_bob(self, run, i, seq):
        if i != run.config.M:
            return seq
        return [TaggedQubit(MINUS_STATE, x.origin, x.kind) if x.kind == Kind.CTRL else x for x in seq]


class TestForcedAborts:
    def test_sift_mismatch_always_caught(self):
        caught = 0
        for s in range(40):
            tr = run_protocol(CFG.with_seed(s), FlipSiftBeforeBobs())
            tested = sum(b["sift_total"] for b in tr.checks["eavesdropping"].per_bob)
            if tested:
                caught += 1
                assert tr.abort_reason.startswith("eavesdropping")
        assert caught > 30

    def test_case01_sign_flip_always_caught(self):
        for s in range(40):
            tr = run_protocol(CFG.with_seed(s), MinusOnCtrl())
            if tr.checks["honesty"].cases.get("X_CTRL", {}).get("total", 0):
                assert tr.abort_reason.startswith("honesty")

    def test_test_bit_mismatch_always_caught(self):
        script = {"tp.basis": [["Z"] * CFG.final_len]}
        for s in range(20):
            tr = run_protocol(replace(CFG, seed=s, script=script), FlipSiftAfterBobs())
            assert tr.detected
            assert "Z_SIFT" in tr.abort_reason or "Z_CTRL" in tr.abort_reason or "Z_SIFT" in str(tr.checks["honesty"].cases)

    def test_out_of_range_disclosure_is_a_violation(self):
        tr = run_protocol(CFG.with_seed(1))
        idx = next(i for i, a in enumerate(tr.announcements) if a.step == "check.upstream")
        a = tr.announcements[idx]
        bad = {**a.payload, "map": [[p, 10_000] for p, _ in a.payload["map"]]}
        tr.replace_announcement(idx, Announcement(a.step, a.sender, bad))
        report = eavesdropping_check(tr)
        assert not report.passed and "protocol-violation" in report.reason

    def test_missing_disclosure_is_a_violation(self):
        tr = run_protocol(CFG.with_seed(1))
        idx = next(i for i, a in enumerate(tr.announcements) if a.step == "check.upstream")
        a = tr.announcements[idx]
        tr.replace_announcement(idx, Announcement("noise", a.sender, a.payload))
        assert "protocol-violation" in eavesdropping_check(tr).reason


class TestCheckConfig:
    def test_balance_band(self):
        cfg = CheckConfig(deviation_z=3.0)
        assert cfg.balanced(50, 100) and cfg.balanced(65, 100) and not cfg.balanced(66, 100)
        assert cfg.balanced(3, 3)  # below min_samples

    @pytest.mark.parametrize("n, L, expected", [(7, 5, 2), (5, 5, 1), (3, 5, 1), (0, 5, 0)])
    def test_surplus_test_bits(self, n, L, expected):
        assert CheckConfig().n_test_bits(n, L) == expected

    def test_explicit_test_bit_count(self):
        assert CheckConfig(test_bit_count=3).n_test_bits(10, 5) == 3
        assert CheckConfig(test_bit_count=0.5).n_test_bits(10, 5) == 5

    def test_default_false_abort_bound(self):
        import math

        z = CheckConfig().deviation_z
        assert 2 * math.exp(-z * z / 2) < 1e-6


class TestXor:
    def test_example_values(self):
        assert encrypt("10110", "00101") == "10011"
        assert encrypt("10110", "00000") == "10110"

    @given(st.integers(1, 64).flatmap(lambda n: st.tuples(st.text("01", min_size=n, max_size=n), st.text("01", min_size=n, max_size=n))))
    def test_involution(self, pair):
        s, k = pair
        assert xor_bits(encrypt(s, k), k) == s

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            encrypt("101", "10")


class TestReports:
    def test_report_json_shape(self):
        tr = run_protocol(CFG.with_seed(2))
        d = json.loads(tr.checks["honesty"].to_json())
        assert set(d) == {"per_bob", "cases", "verdict", "reason"}
        assert set(d["cases"]) == {"X_CTRL", "X_SIFT", "Z_CTRL", "Z_SIFT"}

    def test_fail_keeps_first_reason(self):
        r = CheckReport("x")
        r.fail("first")
        r.fail("second")
        assert r.verdict == "abort" and r.reason == "first"


class TestSecrecyScan:
    def test_planted_outcome_leak_found(self):
        tr = run_protocol(CFG.with_seed(4))
        tr.announce("leak", "Alice", {"outcomes": [0, 1]})
        assert any("outcomes" in p for p in secrecy_violations(tr))

    def test_planted_key_position_leak_found(self):
        for s in range(20):
            tr = run_protocol(CFG.with_seed(s))
            if tr.key is None:
                continue
            sa = tr.find("secret.key_order")[0].payload["map"][0][1]
            tr.announce("leak", "Alice", {"sa_positions": [sa]})
            assert secrecy_violations(tr)
            return
        pytest.fail("no keyed run found")
