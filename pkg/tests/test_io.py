from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cla_audit.core import ChoiceNotInBudget, ConflictingDuplicateBudget, ThresholdProfile, verify_witness
from cla_audit.io import (
    CLA,
    NoisyRational,
    Rational,
    SchemaError,
    StudyFile,
    Subject,
    Uniform,
    bundled_universe,
    generate_synthetic_study,
    load_profile,
    load_study,
    parse_study,
    read_study,
)
from cla_audit.power import DomainError
from cla_audit.solver import solve_rationalizability

from .conftest import DATA, INTRO_RAW


class TestJson:
    def test_intro_parses(self, intro):
        datasets, design = parse_study((DATA / "intro.json").read_text())
        assert datasets == [intro]
        assert [b.size for b in design] == [2, 3, 2]

    def test_roundtrip_is_bit_exact(self):
        text = (DATA / "intro.json").read_text()
        study = load_study(text)
        again = study.to_json()
        assert load_study(again).to_json() == again
        assert json.loads(again) == json.loads(text)

    def test_bundled_universe(self):
        study = bundled_universe()
        assert len(study.universe) == 10
        assert study.attributes[0] == {"in 1 month": 450, "in 3 months": 800, "in 5 months": 1150}
        assert load_study(study.to_json()) == study

    def test_missing_choices_allowed(self):
        text = json.dumps(
            {"schema": 1, "universe": ["a", "b", "c"], "design": [["a", "b"], ["b", "c"]],
             "subjects": [{"id": "p", "choices": [None, "c"]}]}
        )
        study = load_study(text)
        [data] = study.datasets()
        assert len(data) == 1 and study.design_indices(0) == [1]
        assert study.subject_profile(0, [1, 2]) == ThresholdProfile.heterogeneous([2])

    @pytest.mark.parametrize(
        "obj, where",
        [
            ({"schema": 2, "universe": []}, "schema"),
            ({"schema": 1, "universe": "abc"}, "universe"),
            ({"schema": 1, "universe": ["a"], "design": [["a", "z"]]}, "design[0]"),
            ({"schema": 1, "universe": ["a", "b"], "design": [["a", "b"], ["b", "a"]]}, "design[1]"),
            ({"schema": 1, "universe": ["a", "b"], "design": [["a", "b"]], "subjects": [{"choices": []}]},
             "subjects[0].choices"),
            ({"schema": 1, "universe": ["a", "a"]}, "universe"),
        ],
    )
    def test_schema_errors_carry_location(self, obj, where):
        with pytest.raises(SchemaError) as err:
            load_study(json.dumps(obj))
        assert err.value.location == where

    def test_syntax_error_location(self):
        with pytest.raises(SchemaError) as err:
            load_study('{"schema": 1,\n "universe": [}')
        assert err.value.location.startswith("line 2")

    def test_choice_outside_budget(self):
        text = json.dumps(
            {"schema": 1, "universe": ["a", "b", "c"], "design": [["a", "b"]],
             "subjects": [{"id": "p", "choices": ["c"]}]}
        )
        with pytest.raises(ChoiceNotInBudget, match=r"subjects\[0\]\.choices\[0\]"):
            load_study(text)


class TestCsv:
    def test_parse(self):
        text = "subject,budget,choice\n" + "\n".join(
            f"s1,{';'.join(sorted(menu))},{c}" for menu, c in INTRO_RAW
        )
        [data], design = parse_study(text, "csv")
        assert {(frozenset(m), c) for m, c in data.to_raw()} == {(frozenset(m), c) for m, c in INTRO_RAW}
        assert len(design) == 3

    def test_choice_outside_budget_reports_row(self):
        text = "subject,budget,choice\n1,a;b,a\n1,b;c,d\n"
        with pytest.raises(ChoiceNotInBudget, match="line 3"):
            load_study(text, "csv")

    def test_conflicting_rows(self):
        text = "subject,budget,choice\n1,a;b,a\n1,b;a,b\n"
        with pytest.raises(ConflictingDuplicateBudget, match="line 3"):
            load_study(text, "csv")

    def test_missing_column(self):
        with pytest.raises(SchemaError) as err:
            load_study("subject,budget\n1,a;b\n", "csv")
        assert err.value.location == "line 1"

    def test_shared_design_and_gaps(self):
        text = "subject,budget,choice\n1,a;b,a\n2,b;c,c\n2,a;b,b\n"
        study = load_study(text, "csv")
        assert study.design == (("a", "b"), ("b", "c"))
        assert [s.choices for s in study.subjects] == [("a", None), ("b", "c")]

    def test_csv_roundtrip(self):
        study = generate_synthetic_study(6, 5, (2, 4), 3, Uniform(), seed=2)
        again = load_study(study.to_csv(), "csv")
        assert again.to_csv() == study.to_csv()
        assert [d.to_raw() for d in again.datasets()] == [
            [(sorted(m, key=again.universe.index), c) for m, c in d.to_raw()] for d in study.datasets()
        ]

    def test_read_study_by_extension(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("subject,budget,choice\n1,a;b,a\n")
        assert read_study(str(path)).universe == ("a", "b")


class TestStudyFile:
    def test_rejects_bad_subject_length(self):
        with pytest.raises(SchemaError):
            StudyFile(("a", "b"), (("a", "b"),), (Subject("1", ()),))

    def test_json_roundtrip_generated(self):
        study = generate_synthetic_study(7, 10, (2, 6), 4, NoisyRational(0.3), seed=5)
        assert load_study(study.to_json()) == study


class TestProfiles:
    def test_uniform(self):
        assert load_profile('{"schema": 1, "k": 3}') == ThresholdProfile.of(3)

    def test_per_budget(self):
        assert load_profile('{"schema": 1, "thresholds": [1, 2]}', 2) == ThresholdProfile.heterogeneous([1, 2])

    @pytest.mark.parametrize(
        "text", ['{"k": 3}', '{"schema": 1}', '{"schema": 1, "k": 0}', '{"schema": 1, "thresholds": [1]}']
    )
    def test_errors(self, text):
        with pytest.raises(SchemaError):
            load_profile(text, 2)


class TestSynthetic:
    def test_paper_shape_rational(self):
        study = generate_synthetic_study(10, 20, (2, 8), 113, Rational(), seed=1)
        assert len(study.subjects) == 113 and len(study.design) == 20
        assert len({frozenset(b) for b in study.design}) == 20
        assert all(2 <= len(b) <= 8 for b in study.design)
        data = study.datasets()
        for k in (1, 4, 8):
            assert all(solve_rationalizability(d, ThresholdProfile.of(k), explain=False) for d in data)

    def test_cla_small(self):
        study = generate_synthetic_study(4, 4, (2, 3), 1, CLA(2, "random"), seed=3)
        [data] = study.datasets()
        assert verify_witness(data, ThresholdProfile.of(2), study.witnesses[0])
        assert solve_rationalizability(data, ThresholdProfile.of(2))

    @given(
        st.integers(3, 7), st.integers(1, 3), st.sampled_from(["random", "salience"]), st.integers(0, 2**32)
    )
    @settings(max_examples=40, deadline=None)
    def test_cla_witness_verifies(self, n, k, rule, seed):
        study = generate_synthetic_study(n, min(6, 2 ** n - n - 1), (2, n), 2, CLA(k, rule), seed=seed)
        for data, w in zip(study.datasets(), study.witnesses):
            assert verify_witness(data, ThresholdProfile.of(k), w)

    def test_deterministic(self):
        a = generate_synthetic_study(8, 12, (2, 6), 5, NoisyRational(0.2), seed=9)
        b = generate_synthetic_study(8, 12, (2, 6), 5, NoisyRational(0.2), seed=9)
        assert a == b

    def test_uniform_covers_members(self):
        study = generate_synthetic_study(5, 1, (3, 3), 600, Uniform(), seed=0)
        picks = {s.choices[0] for s in study.subjects}
        assert picks == set(study.design[0])

    def test_exhausts_small_domains(self):
        study = generate_synthetic_study(4, 6, (2, 2), 1, Rational(), seed=0)
        assert len(set(study.design)) == 6

    @pytest.mark.parametrize(
        "args",
        [
            (4, 7, (2, 2), 1, Rational()),
            (4, 2, (1, 2), 1, Rational()),
            (4, 2, (2, 5), 1, Rational()),
            (4, 2, (2, 3), 1, NoisyRational(1.5)),
            (4, 2, (2, 3), 1, CLA(0)),
            (4, 2, (2, 3), 1, CLA(2, "psychic")),
        ],
    )
    def test_impossible_parameters(self, args):
        with pytest.raises(DomainError):
            generate_synthetic_study(*args, seed=0)

    def test_custom_universe(self):
        study = generate_synthetic_study(10, 3, (2, 3), 1, Rational(), seed=0, universe=bundled_universe().universe)
        assert study.universe == bundled_universe().universe
