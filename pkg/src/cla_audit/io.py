"""Study files: JSON (canonical) and CSV, plus synthetic study generation.

A study is one shared universe and budget design answered by many subjects.
See ``docs/formats.md`` for the schemas.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
from dataclasses import dataclass, field
from importlib import resources
from math import comb
from typing import Any, Sequence

import numpy as np

from .core import (
    Alternative,
    Budget,
    ChoiceDataset,
    ChoiceNotInBudget,
    ConflictingDuplicateBudget,
    Observation,
    PreferenceOrder,
    ThresholdProfile,
    UnknownAlternative,
    ValidationError,
    Witness,
    bits,
)
from .power import DomainError

SCHEMA_VERSION = 1
CSV_FIELDS = ("subject", "budget", "choice")


class SchemaError(ValueError):
    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


@dataclass(frozen=True)
class Subject:
    id: str
    choices: tuple[str | None, ...]


@dataclass(frozen=True)
class StudyFile:
    """Universe, budget design and per-subject choices parallel to the design.

    A ``None`` choice means the subject never faced that budget.
    ``witnesses`` is only filled by the synthetic generator and is not
    serialized.
    """

    universe: tuple[str, ...]
    design: tuple[tuple[str, ...], ...]
    subjects: tuple[Subject, ...]
    attributes: tuple[dict[str, Any] | None, ...] | None = None
    witnesses: tuple[Witness | None, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        ids = self._ids()
        if len(ids) != len(self.universe):
            raise SchemaError("universe labels must be unique", "universe")
        seen: dict[int, int] = {}
        for j, budget in enumerate(self.design):
            if not budget:
                raise SchemaError("budget is empty", f"design[{j}]")
            for a in budget:
                if a not in ids:
                    raise SchemaError(f"unknown alternative {a!r}", f"design[{j}]")
            m = self._mask(budget)
            if m in seen:
                raise SchemaError(f"duplicates design budget {seen[m]}", f"design[{j}]")
            seen[m] = j
        for s, subj in enumerate(self.subjects):
            if len(subj.choices) != len(self.design):
                raise SchemaError(
                    f"has {len(subj.choices)} choices for {len(self.design)} budgets",
                    f"subjects[{s}].choices",
                )
            for j, c in enumerate(subj.choices):
                if c is None:
                    continue
                if c not in ids:
                    raise UnknownAlternative(f"subjects[{s}].choices[{j}]: unknown alternative {c!r}")
                if c not in self.design[j]:
                    raise ChoiceNotInBudget(f"subjects[{s}].choices[{j}]: {c!r} is not in its budget")

    def _ids(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.universe)}

    def _mask(self, budget: Sequence[str]) -> int:
        ids = self._ids()
        m = 0
        for a in budget:
            m |= 1 << ids[a]
        return m

    @property
    def alternatives(self) -> tuple[Alternative, ...]:
        return tuple(Alternative(i, label) for i, label in enumerate(self.universe))

    def design_budgets(self) -> list[Budget]:
        return [Budget(self._mask(b)) for b in self.design]

    def design_indices(self, s: int) -> list[int]:
        """Design index of each observation of subject ``s``."""
        return [j for j, c in enumerate(self.subjects[s].choices) if c is not None]

    def dataset(self, s: int) -> ChoiceDataset:
        ids = self._ids()
        budgets = self.design_budgets()
        choices = self.subjects[s].choices
        obs = tuple(Observation(budgets[j], ids[choices[j]]) for j in self.design_indices(s))
        return ChoiceDataset(self.alternatives, obs)

    def datasets(self) -> list[ChoiceDataset]:
        return [self.dataset(s) for s in range(len(self.subjects))]

    def subject_profile(self, s: int, profile: ThresholdProfile | Sequence[int]) -> ThresholdProfile:
        """Map design-indexed thresholds onto subject ``s``'s observations."""
        if isinstance(profile, ThresholdProfile):
            if profile.is_uniform:
                return profile
            thresholds = dict(profile.per_budget)
        else:
            thresholds = dict(enumerate(profile))
        try:
            return ThresholdProfile.heterogeneous(
                {i: thresholds[j] for i, j in enumerate(self.design_indices(s))}
            )
        except KeyError as exc:
            raise SchemaError(f"profile has no threshold for design budget {exc.args[0]}") from None

    # Serialization

    def to_json_obj(self) -> dict:
        if self.attributes and any(a for a in self.attributes):
            universe: list = [
                {"label": label, "attributes": attrs} if attrs else {"label": label}
                for label, attrs in zip(self.universe, self.attributes)
            ]
        else:
            universe = list(self.universe)
        return {
            "schema": SCHEMA_VERSION,
            "universe": universe,
            "design": [list(b) for b in self.design],
            "subjects": [{"id": s.id, "choices": list(s.choices)} for s in self.subjects],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = _stdio.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for subj in self.subjects:
            for budget, c in zip(self.design, subj.choices):
                if c is not None:
                    writer.writerow([subj.id, ";".join(budget), c])
        return buf.getvalue()

    def serialize(self, format: str = "json") -> str:
        return self.to_json() if format == "json" else self.to_csv()


def _canonical_budget(labels: Sequence[str], ids: dict[str, int]) -> tuple[str, ...]:
    return tuple(sorted(labels, key=lambda a: ids[a]))


def _load_json(text: str) -> StudyFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object")
    if obj.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {obj.get('schema')!r}", "schema")
    raw_universe = obj.get("universe")
    if not isinstance(raw_universe, list):
        raise SchemaError("must be a list", "universe")
    labels, attrs = [], []
    for i, entry in enumerate(raw_universe):
        if isinstance(entry, str):
            labels.append(entry)
            attrs.append(None)
        elif isinstance(entry, dict) and isinstance(entry.get("label"), str):
            labels.append(entry["label"])
            attrs.append(entry.get("attributes"))
        else:
            raise SchemaError("must be a label or an object with a label", f"universe[{i}]")
    ids = {label: i for i, label in enumerate(labels)}
    design = obj.get("design", [])
    if not isinstance(design, list):
        raise SchemaError("must be a list", "design")
    budgets = []
    for j, b in enumerate(design):
        if not isinstance(b, list) or not all(isinstance(a, str) for a in b):
            raise SchemaError("must be a list of labels", f"design[{j}]")
        unknown = [a for a in b if a not in ids]
        if unknown:
            raise SchemaError(f"unknown alternative {unknown[0]!r}", f"design[{j}]")
        if len(set(b)) != len(b):
            raise SchemaError("repeats an alternative", f"design[{j}]")
        budgets.append(_canonical_budget(b, ids))
    subjects = []
    raw_subjects = obj.get("subjects", [])
    if not isinstance(raw_subjects, list):
        raise SchemaError("must be a list", "subjects")
    for s, entry in enumerate(raw_subjects):
        if not isinstance(entry, dict) or not isinstance(entry.get("choices"), list):
            raise SchemaError("must be an object with a choices list", f"subjects[{s}]")
        choices = entry["choices"]
        if not all(c is None or isinstance(c, str) for c in choices):
            raise SchemaError("choices must be labels or null", f"subjects[{s}].choices")
        subjects.append(Subject(str(entry.get("id", s)), tuple(choices)))
    return StudyFile(
        tuple(labels),
        tuple(budgets),
        tuple(subjects),
        tuple(attrs) if any(a for a in attrs) else None,
    )


def _load_csv(text: str) -> StudyFile:
    reader = csv.DictReader(_stdio.StringIO(text))
    if reader.fieldnames is None:
        raise SchemaError("missing header row", "line 1")
    missing = [f for f in CSV_FIELDS if f not in reader.fieldnames]
    if missing:
        raise SchemaError(f"header lacks column(s) {', '.join(missing)}", "line 1")
    universe: dict[str, int] = {}
    rows = []
    for row in reader:
        line = reader.line_num
        subject, budget, choice = (row[f] for f in CSV_FIELDS)
        if budget is None or choice is None or not budget.strip():
            raise SchemaError("incomplete row", f"line {line}")
        members = [a.strip() for a in budget.split(";") if a.strip()]
        choice = choice.strip()
        for a in members:
            universe.setdefault(a, len(universe))
        if choice not in members:
            raise ChoiceNotInBudget(f"line {line}: choice {choice!r} is not in budget {budget!r}")
        rows.append((line, subject.strip(), members, choice))
    design: dict[frozenset, int] = {}
    budgets: list[tuple[str, ...]] = []
    picks: dict[str, dict[int, tuple[str, int]]] = {}
    for line, subject, members, choice in rows:
        key = frozenset(members)
        if key not in design:
            design[key] = len(budgets)
            budgets.append(_canonical_budget(members, universe))
        j = design[key]
        mine = picks.setdefault(subject, {})
        if j in mine:
            if mine[j][0] != choice:
                raise ConflictingDuplicateBudget(
                    f"line {line}: subject {subject!r} already chose {mine[j][0]!r} from this budget "
                    f"at line {mine[j][1]}"
                )
            continue
        mine[j] = (choice, line)
    subjects = tuple(
        Subject(sid, tuple(chosen[j][0] if j in chosen else None for j in range(len(budgets))))
        for sid, chosen in picks.items()
    )
    return StudyFile(tuple(universe), tuple(budgets), subjects)


def load_study(text: str, format: str = "json") -> StudyFile:
    if format == "json":
        return _load_json(text)
    if format == "csv":
        return _load_csv(text)
    raise SchemaError(f"unknown format {format!r}")


def parse_study(text: str, format: str = "json") -> tuple[list[ChoiceDataset], list[Budget]]:
    """Parse a study into one validated dataset per subject plus the design."""
    study = load_study(text, format)
    return study.datasets(), study.design_budgets()


def read_study(path: str) -> StudyFile:
    fmt = "csv" if str(path).lower().endswith(".csv") else "json"
    with open(path, encoding="utf-8") as fh:
        return load_study(fh.read(), fmt)


def bundled_universe() -> StudyFile:
    """The ten installment plans of the Japanese intertemporal-choice experiment."""
    text = resources.files("cla_audit").joinpath("data/inoue_universe.json").read_text(encoding="utf-8")
    return load_study(text, "json")


# Synthetic studies


@dataclass(frozen=True)
class Rational:
    pass


@dataclass(frozen=True)
class NoisyRational:
    epsilon: float


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class CLA:
    """Limited attention with a salience-ranked filter of capacity at least ``k``.

    ``attention_rule="salience"`` attends exactly the ``min(k, |B|)`` most
    salient members; ``"random"`` draws a per-subject capacity uniformly
    between ``k`` and the largest budget size first.
    """

    k: int
    attention_rule: str = "random"


def _draw_budgets(rng: np.random.Generator, n: int, n_budgets: int, lo: int, hi: int) -> list[int]:
    capacity = {s: comb(n, s) for s in range(lo, hi + 1)}
    if n_budgets > sum(capacity.values()):
        raise DomainError(f"only {sum(capacity.values())} distinct budgets of sizes {lo}..{hi} exist")
    used: set[int] = set()
    per_size = {s: 0 for s in capacity}
    out = []
    while len(out) < n_budgets:
        open_sizes = [s for s in capacity if per_size[s] < capacity[s]]
        size = open_sizes[int(rng.integers(len(open_sizes)))]
        if per_size[size] * 2 < capacity[size]:
            while True:
                m = 0
                for a in rng.choice(n, size=size, replace=False):
                    m |= 1 << int(a)
                if m not in used:
                    break
        else:
            rest = [m for m in range(1 << n) if m.bit_count() == size and m not in used]
            m = rest[int(rng.integers(len(rest)))]
        used.add(m)
        per_size[size] += 1
        out.append(m)
    return out


def generate_synthetic_study(
    universe_size: int,
    n_budgets: int,
    size_range: tuple[int, int],
    n_subjects: int,
    behavior: Rational | NoisyRational | Uniform | CLA,
    seed: int,
    universe: Sequence[str] | None = None,
) -> StudyFile:
    """Draw a distinct-budget design and simulate subjects on it.

    Budget sizes are uniform over ``size_range``; members are uniform given
    the size. Rational and CLA subjects come with the witness that
    generated them.
    """
    lo, hi = size_range
    if not 2 <= lo <= hi <= universe_size:
        raise DomainError(f"size range {size_range} must lie within [2, {universe_size}]")
    if n_subjects < 0 or n_budgets < 0:
        raise DomainError("counts must be non-negative")
    if isinstance(behavior, NoisyRational) and not 0 <= behavior.epsilon <= 1:
        raise DomainError("epsilon must lie in [0, 1]")
    if isinstance(behavior, CLA) and behavior.k < 1:
        raise DomainError("k must be positive")
    if isinstance(behavior, CLA) and behavior.attention_rule not in ("random", "salience"):
        raise DomainError(f"unknown attention rule {behavior.attention_rule!r}")
    labels = list(universe) if universe is not None else [f"x{i + 1}" for i in range(universe_size)]
    if len(labels) != universe_size:
        raise DomainError("universe labels do not match universe_size")
    rng = np.random.default_rng(seed)
    masks = _draw_budgets(rng, universe_size, n_budgets, lo, hi)
    members = [list(bits(m)) for m in masks]
    subjects, witnesses = [], []
    for s in range(n_subjects):
        ranking = [int(a) for a in rng.permutation(universe_size)]
        pos = {a: p for p, a in enumerate(ranking)}
        witness = None
        if isinstance(behavior, Uniform):
            picks = [mem[int(rng.integers(len(mem)))] for mem in members]
        elif isinstance(behavior, CLA):
            salience = {int(a): p for p, a in enumerate(rng.permutation(universe_size))}
            cap = behavior.k
            if behavior.attention_rule == "random":
                cap = int(rng.integers(behavior.k, max(behavior.k, hi) + 1))
            attention = []
            for mem in members:
                seen = sorted(mem, key=salience.__getitem__)[: min(cap, len(mem))]
                attention.append(sum(1 << a for a in seen))
            picks = [min(bits(att), key=pos.__getitem__) for att in attention]
            witness = Witness(PreferenceOrder(tuple(ranking)), tuple(attention))
        else:
            picks = [min(mem, key=pos.__getitem__) for mem in members]
            if isinstance(behavior, NoisyRational):
                for j, mem in enumerate(members):
                    if rng.random() < behavior.epsilon:
                        picks[j] = mem[int(rng.integers(len(mem)))]
            else:
                witness = Witness(PreferenceOrder(tuple(ranking)), tuple(masks))
        subjects.append(Subject(f"s{s + 1:03d}", tuple(labels[a] for a in picks)))
        witnesses.append(witness)
    design = tuple(tuple(labels[a] for a in mem) for mem in members)
    return StudyFile(tuple(labels), design, tuple(subjects), witnesses=tuple(witnesses))


def load_profile(text: str, n_design: int | None = None) -> ThresholdProfile:
    """Read a threshold profile file: ``{"schema": 1, "k": 3}`` or ``{"schema": 1, "thresholds": [...]}``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(obj, dict) or obj.get("schema") != SCHEMA_VERSION:
        raise SchemaError("profile must be an object with \"schema\": 1")
    try:
        if "k" in obj:
            return ThresholdProfile.of(obj["k"])
        if "thresholds" in obj:
            ks = obj["thresholds"]
            if n_design is not None and len(ks) != n_design:
                raise SchemaError(f"has {len(ks)} thresholds for {n_design} design budgets", "thresholds")
            return ThresholdProfile.heterogeneous(ks)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(str(exc)) from None
    raise SchemaError("profile needs \"k\" or \"thresholds\"")


__all__ = [
    "CLA",
    "DomainError",
    "NoisyRational",
    "Rational",
    "SchemaError",
    "StudyFile",
    "Subject",
    "Uniform",
    "ValidationError",
    "bundled_universe",
    "generate_synthetic_study",
    "load_profile",
    "load_study",
    "parse_study",
    "read_study",
]
