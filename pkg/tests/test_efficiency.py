from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from msqss.efficiency import (
    EfficiencyParams,
    EfficiencyRangeError,
    efficiency,
    efficiency_table,
    parse_m_range,
    qubit_efficiency,
    resource_counts,
)


class TestClosedForms:
    def test_ghz_four_bobs(self):
        assert efficiency(4, protocol="ghz") == Fraction(1, 160)
        assert float(efficiency(4, protocol="ghz")) == 0.00625

    def test_ours_example_instance(self):
        assert efficiency(2, Fraction(1, 6), "ours") == Fraction(3, 19)

    def test_graph_one_bob(self):
        assert efficiency(1, protocol="graph") == Fraction(1, 8)

    @pytest.mark.parametrize("M", range(1, 11))
    def test_ours_formula(self, M):
        eps = Fraction(1, 8)
        assert efficiency(M, eps) == Fraction(1) / (6 + M * eps)

    def test_derived_variant_equals_resource_count(self):
        for M in range(1, 6):
            eps = Fraction(1, 4)
            c, q, b = resource_counts(7, M, eps)
            assert efficiency(M, eps, "ours-derived") == qubit_efficiency(c, q, b) == 1 / (6 * (1 + M * eps))

    @given(st.integers(1, 10))
    def test_crossover_at_one_eighth(self, M):
        ours = efficiency(M, Fraction(1, 8))
        assert ours > efficiency(M, protocol="ghz")
        assert ours > efficiency(M, protocol="graph")

    def test_results_are_exact(self):
        assert isinstance(efficiency(3, "1/8"), Fraction)


class TestValidation:
    def test_absurd_M(self):
        with pytest.raises(EfficiencyRangeError):
            efficiency(10**6, protocol="ghz")

    @pytest.mark.parametrize("kwargs", [dict(M=0), dict(M=2, epsilon=0), dict(M=2, epsilon=1), dict(M=2, protocol="bb84")])
    def test_bad_params(self, kwargs):
        with pytest.raises(ValueError):
            EfficiencyParams(**kwargs)

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            qubit_efficiency(1, 0, 0)


class TestTable:
    def test_range_parse(self):
        assert list(parse_m_range("1..10")) == list(range(1, 11))
        assert list(parse_m_range("4")) == [4]
        with pytest.raises(ValueError):
            parse_m_range("5..2")

    def test_row_counts(self):
        rows = list(efficiency_table(["ours", "ghz", "graph"], range(1, 11), ["0.125", "0.5"]))
        assert len(rows) == 20 + 10 + 10
        assert ("ghz", 4, None, Fraction(1, 160)) in rows
