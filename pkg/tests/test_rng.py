import pytest
from hypothesis import given
from hypothesis import strategies as st

from msqss.rng import Decisions, RngStream, ScriptedStream, ScriptError, derive_seed


class TestRngStream:
    def test_replayable(self):
        a, b = RngStream(11, "alice.sift"), RngStream(11, "alice.sift")
        assert a.bits(64) == b.bits(64)
        assert a.permutation(30) == b.permutation(30)

    def test_names_and_seeds_are_independent(self):
        assert RngStream(11, "alice.sift").bits(64) != RngStream(11, "bob1.sift").bits(64)
        assert RngStream(11, "alice.sift").bits(64) != RngStream(12, "alice.sift").bits(64)

    @given(st.integers(0, 2**64 - 1), st.integers(1, 40))
    def test_permutation_is_a_destination_table(self, seed, n):
        assert sorted(RngStream(seed, "p").permutation(n)) == list(range(1, n + 1))

    @given(st.integers(0, 2**64 - 1), st.integers(0, 20))
    def test_subset_sorted_and_distinct(self, seed, k):
        sub = RngStream(seed, "s").subset(list(range(1, 21)), k)
        assert sub == sorted(set(sub)) and len(sub) == k

    def test_choose_never_picks_zero_weight(self):
        rng = RngStream(0, "c")
        assert all(rng.choose([0.0, 1.0, 0.0]) == 1 for _ in range(200))

    def test_rejects_bad_seed(self):
        with pytest.raises(ValueError):
            RngStream(-1, "x")

    def test_derive_seed_distinct(self):
        seeds = {derive_seed(5, t) for t in range(1000)}
        assert len(seeds) == 1000 and derive_seed(5, 1) == derive_seed(5, 1)


class TestScripted:
    def test_script_then_fallback(self):
        s = ScriptedStream([[3, 1]], RngStream(0, "x"))
        assert s.subset([1, 2, 3, 4], 2) == [1, 3]
        assert len(s.subset([1, 2, 3, 4], 2)) == 2
        assert s.exhausted

    def test_impossible_born_outcome_rejected(self):
        s = ScriptedStream([1], RngStream(0, "x"))
        with pytest.raises(ScriptError):
            s.choose([1.0, 0.0])

    def test_sign_outcomes(self):
        s = ScriptedStream(["-", "+"], RngStream(0, "x"))
        assert s.choose([0.5, 0.5]) == 1 and s.choose([0.5, 0.5]) == 0

    def test_bad_permutation_length(self):
        with pytest.raises(ScriptError):
            ScriptedStream([[1, 2]], RngStream(0, "x")).permutation(3)

    def test_subset_size_override_flagged(self):
        d = Decisions(0, {"alice.sift": [[1, 2, 3]]})
        d.stream("alice.sift").subset([1, 2, 3, 4, 5, 6], 2)
        assert d.overridden("alice.sift")
        assert d.unused_script() == []
