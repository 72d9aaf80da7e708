from __future__ import annotations

from itertools import combinations

from hypothesis import given, settings

from cla_audit.axioms import (
    Axiom,
    check_heterogeneous,
    check_k_contraction,
    check_nbc,
    check_sarp_k,
    check_warp_la_k,
    sarp_warp_holds,
    transitive_closure,
)
from cla_audit.core import ThresholdProfile, validate_dataset

from .conftest import datasets


def complete(choices: dict[str, str], universe: str = "abc"):
    return validate_dataset([(set(menu), c) for menu, c in choices.items()], universe=universe)


def rational(order: str):
    """Complete data from maximizing ``order`` (best first) with full attention."""
    raw = []
    for r in range(1, len(order) + 1):
        for menu in combinations(order, r):
            raw.append((set(menu), min(menu, key=order.index)))
    return validate_dataset(raw, universe=sorted(order))


class TestClosure:
    def test_chain(self):
        assert transitive_closure([0b010, 0b100, 0]) == [0b110, 0b100, 0]

    def test_cycle_reaches_itself(self):
        closure = transitive_closure([0b10, 0b01])
        assert closure[0] >> 0 & 1 and closure[1] >> 1 & 1


class TestSarpK:
    def test_doubleton_cycle(self, doubleton_cycle):
        v = check_sarp_k(doubleton_cycle, 2)
        assert v.axiom is Axiom.SARPk
        assert doubleton_cycle.labels(v.cycle_or_tuple) == ["a", "b", "c"]
        assert v.witness_observations == (0, 1, 2)

    def test_intro_ok(self, intro):
        assert check_sarp_k(intro, 2) is None

    def test_k1_vacuous(self, doubleton_cycle, forced_pair):
        assert check_sarp_k(doubleton_cycle, 1) is None
        assert check_sarp_k(forced_pair, 1) is None

    @given(datasets(max_n=6, max_obs=10))
    @settings(max_examples=100, deadline=None)
    def test_violations_persist_as_k_grows(self, data):
        found = [check_sarp_k(data, k) is not None for k in range(1, data.n_alternatives + 1)]
        assert found == sorted(found)

    def test_describe(self, doubleton_cycle):
        assert check_sarp_k(doubleton_cycle, 2).describe(doubleton_cycle) == "SARPk violation: cycle a > b > c > a"


class TestWarpLaK:
    def test_reversal(self):
        data = complete({"ab": "b", "ac": "c", "bc": "b", "abc": "a"})
        v = check_warp_la_k(data, 2)
        assert v is not None and v.axiom is Axiom.WARPLAk
        s, t, r = v.witness_observations
        assert data.labels(data.observations[s].budget.members) == ["a", "b", "c"]
        assert data.labels(data.observations[t].budget.members) == ["a", "b"]
        assert data.label(data.observations[r].choice) == "c"
        assert data.labels(v.cycle_or_tuple) == ["a", "b", "c"]

    def test_rational_ok(self):
        data = rational("bca")
        for k in (1, 2, 3):
            assert check_warp_la_k(data, k) is None
            assert check_sarp_k(data, k) is None

    def test_intro_ok(self, intro):
        assert check_warp_la_k(intro, 2) is None


class TestNbc:
    def test_cycle(self, doubleton_cycle):
        v = check_nbc(doubleton_cycle)
        assert doubleton_cycle.labels(v.cycle_or_tuple) == ["a", "b", "c"]

    def test_transitive(self):
        data = validate_dataset([("ab", "a"), ("bc", "b"), ("ac", "a")])
        assert check_nbc(data) is None

    def test_no_doubletons(self):
        assert check_nbc(validate_dataset([("abc", "a"), ("abcd", "d")])) is None

    @given(datasets(max_n=5, max_obs=10))
    @settings(max_examples=100, deadline=None)
    def test_matches_sarp2_without_singletons(self, data):
        assert (check_nbc(data) is None) == (check_sarp_k(data, 2) is None)


class TestKContraction:
    def test_violation(self):
        data = complete({"abc": "a", "ab": "b", "ac": "c"})
        v = check_k_contraction(data, 2)
        assert v.axiom is Axiom.KContraction
        assert data.labels(data.observations[v.witness_observations[0]].budget.members) == ["a", "b", "c"]

    def test_one_win_is_enough(self):
        data = complete({"abc": "a", "ab": "a", "ac": "c"})
        assert check_k_contraction(data, 2) is None
        assert check_k_contraction(data, 3) is not None

    def test_rational_full_attention(self):
        data = rational("cadb")
        assert check_k_contraction(data, 4) is None

    def test_unknown_pairs_count_as_possible(self):
        data = validate_dataset([("abc", "a")])
        assert check_k_contraction(data, 3) is None


class TestHeterogeneous:
    @given(datasets(max_n=5, max_obs=8))
    @settings(max_examples=80, deadline=None)
    def test_uniform_specialization(self, data):
        for k in range(1, data.n_alternatives + 1):
            het = {v.axiom for v in check_heterogeneous(data, ThresholdProfile.of(k))}
            assert (Axiom.SARPhet in het) == (check_sarp_k(data, k) is not None)
            assert (Axiom.WARPLAhet in het) == (check_warp_la_k(data, k) is not None)

    def test_doubleton_cycle(self, doubleton_cycle):
        [v] = check_heterogeneous(doubleton_cycle, ThresholdProfile.heterogeneous([2, 2, 2]))
        assert v.axiom is Axiom.SARPhet

    def test_all_ones_vacuous(self, doubleton_cycle, forced_pair):
        assert check_heterogeneous(doubleton_cycle, ThresholdProfile.heterogeneous([1, 1, 1])) == []
        assert check_heterogeneous(forced_pair, ThresholdProfile.heterogeneous([1] * 4)) == []


def test_sarp_warp_on_rational():
    assert sarp_warp_holds(rational("abc"), 2)
