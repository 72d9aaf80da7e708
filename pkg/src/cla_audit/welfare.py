"""Tight minimal lower contour sets and the guaranteed welfare bound.

The smallest revealed lower contour of ``x`` over all rationalizations
equals the smallest ``|{y : x > y}|`` over all strict orders that satisfy
the attention constraints with every below-choice alternative attended:
any optimal attention assignment can be turned into such an order by
placing every non-descendant of ``x`` above ``x``. The minimization is
therefore a branch-and-bound over the same pair orientations the
feasibility search uses, with the current descendant set of ``x`` as a
monotone lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ChoiceDataset, NotRationalizable, PreferenceOrder, ThresholdProfile, Witness
from .solver import Conflict, Instance, _State


@dataclass(frozen=True)
class ContourResult:
    alternative: int
    size: int
    lower_set: int
    witness: Witness


@dataclass(frozen=True)
class WelfareReport:
    per_alternative: tuple[ContourResult, ...]
    bound_W: int
    argmax_alternative: int

    def sizes(self) -> list[int]:
        return [r.size for r in self.per_alternative]


def _bound(inst: Instance, st: _State, x: int) -> int:
    below = st.down[x]
    extra = 0
    for c, m, need in zip(inst.choices, inst.masks, inst.needs):
        if need > 0 and (c == x or below >> c & 1):
            missing = need - (m & below & ~(1 << c)).bit_count()
            if missing > extra:
                extra = missing
    return below.bit_count() + extra


def _minimize(inst: Instance, x: int) -> _State | None:
    best: list = [inst.n, None]

    def rec(st: _State) -> None:
        try:
            branch = inst.propagate(st)
        except Conflict:
            return
        if _bound(inst, st, x) >= best[0] and best[1] is not None:
            return
        if branch is None:
            best[0], best[1] = st.down[x].bit_count(), st
            return
        c, cands = branch
        y = (cands & -cands).bit_length() - 1
        children = []
        for a, b in ((c, y), (y, c)):
            child = st.copy()
            try:
                child.add(a, b)
            except Conflict:
                continue
            children.append((_bound(inst, child, x), len(children), child))
        children.sort(key=lambda t: t[:2])
        for _, _, child in children:
            rec(child)
            if best[1] is not None and best[0] == 0:
                return

    rec(inst.root())
    return best[1]


def _tight_witness(inst: Instance, st: _State, x: int) -> Witness:
    """Order placing everything outside the contour above ``x``; maximal attention."""
    st = st.copy()
    for z in range(inst.n):
        if z != x and not st.down[x] >> z & 1:
            st.add(z, x)
    order = st.topological(inst.n)
    pref = PreferenceOrder(order)
    attention = tuple((m & pref.below(c)) | 1 << c for c, m in zip(inst.choices, inst.masks))
    return Witness(pref, attention)


def _bottom_witness(w: Witness, x: int) -> Witness:
    ranking = tuple(a for a in w.preference.ranking if a != x) + (x,)
    return Witness(PreferenceOrder(ranking), w.attention)


def min_lower_contour(
    data: ChoiceDataset, profile: ThresholdProfile, x: int | str, _checked: Witness | None = None
) -> ContourResult:
    """Smallest strict lower contour of ``x`` over every rationalization.

    Returns the size, one realizing set (a bit-set) and a witness whose
    revealed relation puts exactly that set below ``x``.
    """
    x = data.index(x)
    inst = Instance.from_data(data, profile)
    if _checked is None:
        st = inst.solve()
        if st is None:
            raise NotRationalizable("data is not rationalizable at this threshold profile")
        _checked = inst.witness(st)
    if all(c != x for c in inst.choices):
        return ContourResult(x, 0, 0, _bottom_witness(_checked, x))
    st = _minimize(inst, x)
    lower = st.down[x]
    return ContourResult(x, lower.bit_count(), lower, _tight_witness(inst, st, x))


def guaranteed_welfare_bound(data: ChoiceDataset, profile: ThresholdProfile) -> WelfareReport:
    """Largest minimal lower contour over all alternatives, with per-alternative detail."""
    inst = Instance.from_data(data, profile)
    st = inst.solve()
    if st is None:
        raise NotRationalizable("data is not rationalizable at this threshold profile")
    base = inst.witness(st)
    results = tuple(min_lower_contour(data, profile, x, _checked=base) for x in range(data.n_alternatives))
    top = max(r.size for r in results) if results else 0
    arg = next((r.alternative for r in results if r.size == top), 0)
    return WelfareReport(results, top, arg)


def revealed_contour_matches(data: ChoiceDataset, result: ContourResult) -> bool:
    """Recompute the contour from the witness's revealed relation."""
    return result.witness.revealed_lower_contour(data, result.alternative) == result.lower_set


__all__ = [
    "ContourResult",
    "NotRationalizable",
    "WelfareReport",
    "guaranteed_welfare_bound",
    "min_lower_contour",
    "revealed_contour_matches",
]
