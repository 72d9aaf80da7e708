"""Axiom checkers for complete (and, restricted to observed premises, incomplete) data.

Each checker returns ``None`` when the axiom holds and an
:class:`AxiomViolation` otherwise. On incomplete data a premise that needs
an unobserved budget is skipped, never guessed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import ChoiceDataset, ThresholdProfile, bits


class Axiom(str, Enum):
    SARPk = "SARPk"
    WARPLAk = "WARPLAk"
    NBC = "NBC"
    KContraction = "KContraction"
    SARPhet = "SARPhet"
    WARPLAhet = "WARPLAhet"


@dataclass(frozen=True)
class AxiomViolation:
    axiom: Axiom
    witness_observations: tuple[int, ...]
    cycle_or_tuple: tuple[int, ...]

    def describe(self, data: ChoiceDataset) -> str:
        labels = data.labels(self.cycle_or_tuple)
        if self.axiom in (Axiom.SARPk, Axiom.SARPhet, Axiom.NBC):
            return f"{self.axiom.value} violation: cycle {' > '.join(labels + labels[:1])}"
        obs = ", ".join(str(i) for i in self.witness_observations)
        return f"{self.axiom.value} violation at observations [{obs}]: {labels}"


def _relation(data: ChoiceDataset, fully_attentive) -> tuple[list[int], dict[tuple[int, int], int]]:
    """Direct revealed relation from the budgets selected by ``fully_attentive``."""
    n = data.n_alternatives
    direct = [0] * n
    reason: dict[tuple[int, int], int] = {}
    for i, o in enumerate(data.observations):
        if not fully_attentive(i, o):
            continue
        for y in bits(o.budget.members & ~(1 << o.choice)):
            direct[o.choice] |= 1 << y
            reason.setdefault((o.choice, y), i)
    return direct, reason


def transitive_closure(direct: list[int]) -> list[int]:
    """Closure by repeated composition until nothing changes."""
    closure = direct[:]
    while True:
        nxt = closure[:]
        for a in range(len(closure)):
            for b in bits(closure[a]):
                nxt[a] |= closure[b]
        if nxt == closure:
            return closure
        closure = nxt


def _shortest_cycle(direct: list[int]) -> tuple[int, ...] | None:
    closure = transitive_closure(direct)
    on_cycle = [a for a in range(len(direct)) if closure[a] >> a & 1]
    if not on_cycle:
        return None
    best = None
    for start in on_cycle:
        parent = {start: None}
        frontier = [start]
        found = None
        while frontier and found is None:
            nxt = []
            for v in frontier:
                for w in bits(direct[v]):
                    if w == start:
                        found = v
                        break
                    if w not in parent:
                        parent[w] = v
                        nxt.append(w)
                if found is not None:
                    break
            frontier = nxt
        path = [found]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        cycle = tuple(reversed(path))
        if best is None or len(cycle) < len(best):
            best = cycle
    return best


def _cycle_violation(data, direct, reason, axiom) -> AxiomViolation | None:
    cycle = _shortest_cycle(direct)
    if cycle is None:
        return None
    steps = zip(cycle, cycle[1:] + cycle[:1])
    obs = tuple(sorted({reason[(a, b)] for a, b in steps}))
    return AxiomViolation(axiom, obs, cycle)


def check_sarp_k(data: ChoiceDataset, k: int) -> AxiomViolation | None:
    """Acyclicity of the choice relation revealed by budgets of size at most ``k``."""
    direct, reason = _relation(data, lambda i, o: o.budget.size <= k)
    return _cycle_violation(data, direct, reason, Axiom.SARPk)


def check_nbc(data: ChoiceDataset) -> AxiomViolation | None:
    direct, reason = _relation(data, lambda i, o: o.budget.size == 2)
    return _cycle_violation(data, direct, reason, Axiom.NBC)


def _warp_la(data: ChoiceDataset, attentive, axiom: Axiom) -> AxiomViolation | None:
    obs = data.observations
    index = {o.budget.members: i for i, o in enumerate(obs)}
    for s, os_ in enumerate(obs):
        x = os_.choice
        for t, ot in enumerate(obs):
            y = ot.choice
            if x == y or not attentive(t, ot):
                continue
            common = os_.budget.members & ot.budget.members
            if not (common >> x & 1 and common >> y & 1):
                continue
            r = index.get(os_.budget.members & ~(1 << y))
            if r is not None and obs[r].choice != x:
                return AxiomViolation(axiom, (s, t, r), (x, y, obs[r].choice))
    return None


def check_warp_la_k(data: ChoiceDataset, k: int) -> AxiomViolation | None:
    """Reversals against a fully attentive budget must survive removing the reversed item."""
    return _warp_la(data, lambda i, o: o.budget.size <= k, Axiom.WARPLAk)


def check_k_contraction(data: ChoiceDataset, k: int) -> AxiomViolation | None:
    """Each choice must beat ``min(|B|, k) - 1`` distinct budget-mates pairwise.

    Pairs whose doubleton is unobserved count as possible wins, so on
    incomplete data only certain violations are reported.
    """
    pair_choice = {o.budget.members: o.choice for o in data.observations if o.budget.size == 2}
    for i, o in enumerate(data.observations):
        x = o.choice
        needed = min(o.budget.size, k) - 1
        wins, unknown = [], 0
        for y in bits(o.budget.members & ~(1 << x)):
            c = pair_choice.get(1 << x | 1 << y)
            if c is None:
                unknown += 1
            elif c == x:
                wins.append(y)
        if len(wins) + unknown < needed:
            return AxiomViolation(Axiom.KContraction, (i,), (x, *wins))
    return None


def check_heterogeneous(data: ChoiceDataset, profile: ThresholdProfile) -> list[AxiomViolation]:
    """Per-budget analogues: budgets with ``|S| <= k_S`` are fully attentive."""

    def attentive(i, o):
        return o.budget.size <= profile.raw(i)

    found = []
    direct, reason = _relation(data, attentive)
    sarp = _cycle_violation(data, direct, reason, Axiom.SARPhet)
    if sarp is not None:
        found.append(sarp)
    warp = _warp_la(data, attentive, Axiom.WARPLAhet)
    if warp is not None:
        found.append(warp)
    return found


def sarp_warp_holds(data: ChoiceDataset, k: int) -> bool:
    return check_sarp_k(data, k) is None and check_warp_la_k(data, k) is None


def nbc_contraction_holds(data: ChoiceDataset, k: int) -> bool:
    return check_nbc(data) is None and check_k_contraction(data, k) is None
