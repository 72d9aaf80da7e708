from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import strategies as st

from cla_audit.core import ChoiceDataset, validate_dataset

DATA = Path(__file__).parent / "data"

INTRO_RAW = [({"x", "z"}, "x"), ({"x", "y", "w"}, "x"), ({"y", "w"}, "y")]
CYCLE_RAW = [({"a", "b"}, "a"), ({"b", "c"}, "b"), ({"a", "c"}, "c")]
FORCED_RAW = [({"a", "b", "c"}, "a"), ({"a", "c"}, "c"), ({"a", "b", "d"}, "b"), ({"b", "d"}, "d")]


@pytest.fixture
def intro() -> ChoiceDataset:
    return validate_dataset(INTRO_RAW, universe=["x", "y", "z", "w"])


@pytest.fixture
def doubleton_cycle() -> ChoiceDataset:
    return validate_dataset(CYCLE_RAW, universe=["a", "b", "c"])


@pytest.fixture
def forced_pair() -> ChoiceDataset:
    return validate_dataset(FORCED_RAW, universe=["a", "b", "c", "d"])


@st.composite
def datasets(draw, min_n: int = 2, max_n: int = 5, max_obs: int = 8) -> ChoiceDataset:
    """Random choice data on distinct budgets of size at least two."""
    n = draw(st.integers(min_n, max_n))
    universe = [chr(ord("a") + i) for i in range(n)]
    candidates = [m for m in range(1, 1 << n) if m.bit_count() >= 2]
    masks = draw(st.lists(st.sampled_from(candidates), min_size=1, max_size=max_obs, unique=True))
    raw = []
    for m in masks:
        members = [universe[i] for i in range(n) if m >> i & 1]
        raw.append((members, draw(st.sampled_from(members))))
    return validate_dataset(raw, universe=universe)


ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE, key=lambda c: (int("".join(filter(str.isdigit, c))), c)):
        ok, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
