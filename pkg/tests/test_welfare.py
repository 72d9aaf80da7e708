from __future__ import annotations

from itertools import combinations

import pytest
from hypothesis import given, settings

from cla_audit.core import NotRationalizable, ThresholdProfile, validate_dataset, verify_witness
from cla_audit.oracle import oracle_min_contour
from cla_audit.solver import solve_rationalizability
from cla_audit.welfare import guaranteed_welfare_bound, min_lower_contour, revealed_contour_matches

from .conftest import datasets


class TestIntro:
    def test_k2_contour_of_x(self, intro):
        r = min_lower_contour(intro, ThresholdProfile.of(2), "x")
        assert r.size == 2
        assert sorted(intro.labels(r.lower_set)) == ["w", "z"]
        assert verify_witness(intro, ThresholdProfile.of(2), r.witness)
        assert revealed_contour_matches(intro, r)

    def test_k1_no_revelation(self, intro):
        rep = guaranteed_welfare_bound(intro, ThresholdProfile.of(1))
        assert rep.bound_W == 0
        assert rep.sizes() == [0, 0, 0, 0]

    def test_k2_bound(self, intro):
        rep = guaranteed_welfare_bound(intro, ThresholdProfile.of(2))
        assert rep.bound_W == 2
        assert intro.label(rep.argmax_alternative) == "x"
        assert dict(zip("xyzw", rep.sizes())) == {"x": 2, "y": 1, "z": 0, "w": 0}

    def test_k3_bound(self, intro):
        rep = guaranteed_welfare_bound(intro, ThresholdProfile.of(3))
        assert rep.bound_W == 3
        assert sorted(intro.labels(rep.per_alternative[intro.index("x")].lower_set)) == ["w", "y", "z"]


class TestSmall:
    def test_single_pair(self):
        d = validate_dataset([("ab", "a")])
        r = min_lower_contour(d, ThresholdProfile.of(2), "a")
        assert (r.size, d.labels(r.lower_set)) == (1, ["b"])

    def test_never_chosen_is_zero(self, intro):
        r = min_lower_contour(intro, ThresholdProfile.of(3), "w")
        assert r.size == 0 and r.lower_set == 0
        assert verify_witness(intro, ThresholdProfile.of(3), r.witness)

    def test_not_rationalizable(self, doubleton_cycle):
        with pytest.raises(NotRationalizable):
            guaranteed_welfare_bound(doubleton_cycle, ThresholdProfile.of(2))
        with pytest.raises(NotRationalizable):
            min_lower_contour(doubleton_cycle, ThresholdProfile.of(2), "a")

    def test_rational_complete_domain(self):
        order = "dbeac"
        raw = [
            (set(m), min(m, key=order.index)) for r in range(1, 6) for m in combinations(order, r)
        ]
        d = validate_dataset(raw, universe="abcde")
        assert guaranteed_welfare_bound(d, ThresholdProfile.of(1)).bound_W == 0
        full = guaranteed_welfare_bound(d, ThresholdProfile.of(5))
        assert full.bound_W == 4
        assert d.label(full.argmax_alternative) == "d"

    def test_argmax_lowest_id_on_ties(self):
        d = validate_dataset([("ab", "a"), ("cd", "c")], universe="abcd")
        rep = guaranteed_welfare_bound(d, ThresholdProfile.of(2))
        assert rep.bound_W == 1 and rep.argmax_alternative == 0


class TestProperties:
    @given(datasets(max_n=4, max_obs=6))
    @settings(max_examples=120, deadline=None)
    def test_matches_oracle_and_is_tight(self, data):
        for k in range(1, data.n_alternatives + 1):
            p = ThresholdProfile.of(k)
            if not solve_rationalizability(data, p, explain=False):
                continue
            for x in range(data.n_alternatives):
                r = min_lower_contour(data, p, x)
                assert r.size == oracle_min_contour(data, p, x)
                assert verify_witness(data, p, r.witness)
                assert revealed_contour_matches(data, r)

    @given(datasets(max_n=6, max_obs=10))
    @settings(max_examples=80, deadline=None)
    def test_bound_nondecreasing_in_k(self, data):
        last = None
        for k in range(1, data.n_alternatives + 1):
            p = ThresholdProfile.of(k)
            if not solve_rationalizability(data, p, explain=False):
                break
            w = guaranteed_welfare_bound(data, p).bound_W
            assert 0 <= w <= data.n_alternatives - 1
            if last is not None:
                assert w >= last
            last = w
