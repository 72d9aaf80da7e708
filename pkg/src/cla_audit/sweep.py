"""Exhaustive complete-domain sweeps comparing the solver with the oracle and the axioms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .axioms import sarp_warp_holds, nbc_contraction_holds
from .core import Alternative, Budget, ChoiceDataset, Observation, ThresholdProfile, bits
from .oracle import oracle_rationalizable
from .solver import Instance

CHECKS = ("oracle", "sarp_warp", "nbc_contraction")


def complete_domain_functions(n: int) -> Iterator[ChoiceDataset]:
    """Every choice function on all non-empty subsets of an ``n``-element universe."""
    universe = tuple(Alternative(i, chr(ord("a") + i)) for i in range(n))
    sets = list(range(1, 1 << n))
    options = [list(bits(m)) for m in sets]
    for combo in itertools.product(*options):
        yield ChoiceDataset(universe, tuple(Observation(Budget(m), c) for m, c in zip(sets, combo)))


def count_functions(n: int) -> int:
    total = 1
    for m in range(1, 1 << n):
        total *= m.bit_count()
    return total


@dataclass
class SweepResult:
    n: int
    ks: tuple[int, ...]
    mode: str
    cases: int = 0
    agree: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CHECKS})
    compared: dict[str, int] = field(default_factory=lambda: {c: 0 for c in CHECKS})
    first_disagreement: dict[str, tuple[list, int]] = field(default_factory=dict)

    @property
    def functions(self) -> int:
        return count_functions(self.n)

    def all_agree(self, checks=CHECKS) -> bool:
        return all(self.agree[c] == self.compared[c] for c in checks)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "ks": list(self.ks),
            "mode": self.mode,
            "functions": self.functions,
            "cases": self.cases,
            "checks": {
                c: {"agree": self.agree[c], "compared": self.compared[c]} for c in CHECKS
            },
            "first_disagreement": {
                c: {"observations": raw, "k": k} for c, (raw, k) in self.first_disagreement.items()
            },
        }


def run_sweep(n: int, mode: str | None = None) -> SweepResult:
    """Solver vs oracle for every ``k`` in ``1..n``; the axiom pairs for ``k >= 2``."""
    mode = mode or ("full" if n <= 3 else "constraint")
    result = SweepResult(n, tuple(range(1, n + 1)), mode)
    for data in complete_domain_functions(n):
        for k in result.ks:
            profile = ThresholdProfile.of(k)
            verdict = Instance.from_data(data, profile).solve() is not None
            outcomes = {"oracle": oracle_rationalizable(data, profile, mode)}
            if k >= 2:
                outcomes["sarp_warp"] = sarp_warp_holds(data, k)
                outcomes["nbc_contraction"] = nbc_contraction_holds(data, k)
            result.cases += 1
            for check, value in outcomes.items():
                result.compared[check] += 1
                if value == verdict:
                    result.agree[check] += 1
                elif check not in result.first_disagreement:
                    result.first_disagreement[check] = (data.to_raw(), k)
    return result
