"""Exact rationalizability test for k-th order choice under limited attention.

The mixed-integer formulation uses utilities and a big-M constant only to
say "the chosen element beats everything attended". For a fixed attention
assignment those rows are satisfiable exactly when the induced preference
digraph is acyclic, so the search here works on the digraph directly and
never touches continuous variables.

Attending an alternative that is already below the chosen one costs
nothing, so a search state is just a set of ordered pairs closed under
transitivity. The decisions are orientations of pairs ``(c(B_i), y)`` with
``y`` in ``B_i``; every constraint (cardinality rows, or-clauses) is
monotone in the set of alternatives below each chosen element.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    Budget,
    ChoiceDataset,
    PreferenceOrder,
    ThresholdProfile,
    ValidationError,
    Witness,
    bits,
    validate_dataset,
)


@dataclass(frozen=True)
class OrClause:
    """At least one of ``left`` (attended in ``i``) or ``right`` (attended in ``j``)."""

    i: int
    j: int
    left: int
    right: int

    def variables(self) -> frozenset[tuple[int, int]]:
        return frozenset([(self.i, x) for x in bits(self.left)] + [(self.j, x) for x in bits(self.right)])


@dataclass(frozen=True)
class CardinalityRow:
    observation: int
    variables: int
    minimum: int


@dataclass(frozen=True)
class ConstraintProgram:
    """The binary program for one dataset and threshold profile.

    ``delta_vars`` holds one ``(observation, alternative)`` pair per budget
    member; ``fixed`` are the variables unit propagation sets to 1 (chosen
    elements, saturated rows, singleton clauses) and ``forced_edges`` the
    preference edges those imply.
    """

    delta_vars: tuple[tuple[int, int], ...]
    fixed: frozenset[tuple[int, int]]
    forced_edges: frozenset[tuple[int, int]]
    or_clauses: tuple[OrClause, ...]
    cardinality_rows: tuple[CardinalityRow, ...]


def or_clauses(data: ChoiceDataset) -> list[OrClause]:
    obs = data.observations
    out = []
    for i in range(len(obs)):
        bi, ci = obs[i].budget.members, obs[i].choice
        for j in range(i + 1, len(obs)):
            bj, cj = obs[j].budget.members, obs[j].choice
            if ci == cj:
                continue
            common = bi & bj
            if common >> ci & 1 and common >> cj & 1:
                out.append(OrClause(i, j, bi & ~bj, bj & ~bi))
    return out


def compile(data: ChoiceDataset, profile: ThresholdProfile) -> ConstraintProgram:
    minima = profile.minima(data)
    obs = data.observations
    delta = tuple((i, x) for i, o in enumerate(obs) for x in o.budget)
    clauses = tuple(or_clauses(data))
    rows = tuple(CardinalityRow(i, o.budget.members, minima[i]) for i, o in enumerate(obs))
    fixed = {(i, o.choice) for i, o in enumerate(obs)}
    for i, o in enumerate(obs):
        if minima[i] >= o.budget.size:
            fixed.update((i, x) for x in o.budget)
    for cl in clauses:
        vs = cl.variables()
        if len(vs) == 1:
            fixed |= vs
    edges = frozenset((obs[i].choice, x) for i, x in fixed if x != obs[i].choice)
    return ConstraintProgram(delta, frozenset(fixed), edges, clauses, rows)


class Conflict(Exception):
    def __init__(self, cycle: tuple[int, ...] = ()):
        self.cycle = cycle


class _State:
    """Transitively closed strict-preference digraph over bit-sets."""

    __slots__ = ("down", "up", "succ")

    def __init__(self, down, up, succ):
        self.down = down
        self.up = up
        self.succ = succ

    @classmethod
    def empty(cls, n: int) -> _State:
        return cls([0] * n, [0] * n, [0] * n)

    def copy(self) -> _State:
        return _State(self.down[:], self.up[:], self.succ[:])

    def add(self, a: int, b: int) -> bool:
        """Insert ``a > b``; return True if the closure changed."""
        down, up = self.down, self.up
        if down[a] >> b & 1:
            return False
        if a == b or down[b] >> a & 1:
            raise Conflict(self._cycle(a, b))
        self.succ[a] |= 1 << b
        above = up[a] | 1 << a
        below = down[b] | 1 << b
        for u in bits(above):
            down[u] |= below
        for w in bits(below):
            up[w] |= above
        return True

    def _cycle(self, a: int, b: int) -> tuple[int, ...]:
        """Cycle ``a > b > ... > a`` listed without repeating ``a``."""
        if a == b:
            return (a,)
        parent = {b: None}
        frontier = [b]
        while frontier and a not in parent:
            nxt = []
            for v in frontier:
                for w in bits(self.succ[v]):
                    if w not in parent:
                        parent[w] = v
                        nxt.append(w)
            frontier = nxt
        path = [a]
        v = a
        while parent.get(v) is not None:
            v = parent[v]
            path.append(v)
        path.reverse()
        return (a, *path[:-1])

    def blocked_cycle(self, c: int, wanted: int) -> tuple[int, ...]:
        """Cycle closed by ``c > y`` for the first ``y`` in ``wanted`` above ``c``."""
        blocked = wanted & self.up[c]
        if not blocked:
            return ()
        return self._cycle(c, (blocked & -blocked).bit_length() - 1)

    def topological(self, n: int) -> tuple[int, ...]:
        order = []
        placed = 0
        for _ in range(n):
            for v in range(n):
                if not placed >> v & 1 and not self.up[v] & ~placed:
                    order.append(v)
                    placed |= 1 << v
                    break
        return tuple(order)


class Instance:
    """Observations flattened into bit-set rows for the search."""

    def __init__(self, n: int, choices: Sequence[int], masks: Sequence[int], minima: Sequence[int]):
        self.n = n
        self.choices = list(choices)
        self.masks = list(masks)
        self.needs = [m - 1 for m in minima]
        self.clauses: list[tuple[int, int, int, int]] = []
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                ci, cj = self.choices[i], self.choices[j]
                common = masks[i] & masks[j]
                if ci != cj and common >> ci & 1 and common >> cj & 1:
                    self.clauses.append((i, j, masks[i] & ~masks[j], masks[j] & ~masks[i]))

    @classmethod
    def from_data(cls, data: ChoiceDataset, profile: ThresholdProfile) -> Instance:
        return cls(
            data.n_alternatives,
            [o.choice for o in data.observations],
            [o.budget.members for o in data.observations],
            profile.minima(data),
        )

    def subset(self, keep: Sequence[int]) -> Instance:
        return Instance(
            self.n,
            [self.choices[i] for i in keep],
            [self.masks[i] for i in keep],
            [self.needs[i] + 1 for i in keep],
        )

    # Search

    def propagate(self, st: _State) -> tuple[int, int] | None:
        """Run unit propagation to a fixpoint.

        Returns ``None`` when every constraint holds, otherwise the pair
        ``(chooser, candidates)`` of the tightest open constraint. Raises
        :class:`Conflict` on a dead end.
        """
        down, up = st.down, st.up
        choices, masks, needs, clauses = self.choices, self.masks, self.needs, self.clauses
        while True:
            changed = False
            best = None
            best_count = 1 << 30
            for i, need in enumerate(needs):
                if need <= 0:
                    continue
                c = choices[i]
                have = (masks[i] & down[c]).bit_count()
                if have >= need:
                    continue
                open_ = masks[i] & ~down[c] & ~up[c] & ~(1 << c)
                room = open_.bit_count()
                if have + room < need:
                    raise Conflict(st.blocked_cycle(c, masks[i]))
                if have + room == need:
                    for y in bits(open_):
                        st.add(c, y)
                    changed = True
                elif room < best_count:
                    best, best_count = (c, open_), room
            for i, j, left, right in clauses:
                ci, cj = choices[i], choices[j]
                if left & down[ci] or right & down[cj]:
                    continue
                lo = left & ~up[ci]
                ro = right & ~up[cj]
                count = lo.bit_count() + ro.bit_count()
                if count == 0:
                    raise Conflict(st.blocked_cycle(ci, left) or st.blocked_cycle(cj, right))
                if count == 1:
                    if lo:
                        st.add(ci, lo.bit_length() - 1)
                    else:
                        st.add(cj, ro.bit_length() - 1)
                    changed = True
                elif count < best_count:
                    if lo:
                        best, best_count = (ci, lo), count
                    else:
                        best, best_count = (cj, ro), count
            if not changed:
                return best

    def root(self) -> _State:
        return _State.empty(self.n)

    def search(self, st: _State) -> _State | None:
        try:
            branch = self.propagate(st)
        except Conflict:
            return None
        if branch is None:
            return st
        c, cands = branch
        y = (cands & -cands).bit_length() - 1
        for a, b in ((c, y), (y, c)):
            child = st.copy()
            try:
                child.add(a, b)
            except Conflict:
                continue
            found = self.search(child)
            if found is not None:
                return found
        return None

    def solve(self) -> _State | None:
        return self.search(self.root())

    def root_cycle(self) -> tuple[int, ...]:
        try:
            self.propagate(self.root())
        except Conflict as exc:
            return exc.cycle
        return ()

    def witness(self, st: _State) -> Witness:
        order = st.topological(self.n)
        attention = tuple((m & st.down[c]) | 1 << c for c, m in zip(self.choices, self.masks))
        return Witness(PreferenceOrder(order), attention)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a rationalizability test.

    ``conflict`` lists observation indices of an infeasible core and
    ``cycle`` the alternatives of a forced preference cycle, when one was
    found; both are best effort.
    """

    feasible: bool
    witness: Witness | None = None
    conflict: tuple[int, ...] = ()
    cycle: tuple[int, ...] = field(default=())

    def __bool__(self) -> bool:
        return self.feasible


def explain_conflict(inst: Instance) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Shrink an infeasible instance to an irreducible infeasible subset.

    Deletion filter: drop each observation in turn and keep it out while the
    rest stays infeasible. Returns ``(observation indices, cycle)``.
    """
    keep = list(range(len(inst.masks)))
    for i in range(len(inst.masks)):
        trial = [j for j in keep if j != i]
        if inst.subset(trial).solve() is None:
            keep = trial
    return tuple(keep), inst.subset(keep).root_cycle()


def solve_rationalizability(
    data: ChoiceDataset, profile: ThresholdProfile, explain: bool = True
) -> Verdict:
    """Decide k-th order CLA rationalizability.

    With ``explain=False`` an infeasible verdict skips the conflict
    minimization, which costs one extra solve per observation.
    """
    inst = Instance.from_data(data, profile)
    st = inst.solve()
    if st is not None:
        return Verdict(True, inst.witness(st))
    if not explain:
        return Verdict(False, cycle=inst.root_cycle())
    conflict, cycle = explain_conflict(inst)
    return Verdict(False, conflict=conflict, cycle=cycle)


def _solve_cell(args) -> Verdict | Exception:
    subject, profile, explain = args
    try:
        if not isinstance(subject, ChoiceDataset):
            subject = validate_dataset(subject)
        return solve_rationalizability(subject, profile, explain=explain)
    except (ValidationError, KeyError) as exc:
        return exc


def default_jobs() -> int:
    env = os.environ.get("CLA_AUDIT_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def solve_pairs(
    pairs: Sequence[tuple[ChoiceDataset | list, ThresholdProfile]],
    jobs: int = 1,
    explain: bool = False,
) -> list[Verdict | Exception]:
    """Verdicts for explicit ``(subject, profile)`` pairs, in input order."""
    cells = [(s, p, explain) for s, p in pairs]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    return [_solve_cell(c) for c in cells]


def solve_batch(
    subjects: Sequence[ChoiceDataset | list],
    profiles: Sequence[ThresholdProfile],
    jobs: int = 1,
    explain: bool = False,
) -> list[list[Verdict | Exception]]:
    """Verdict matrix indexed ``[subject][profile]``.

    Raw subjects are validated here; a subject that fails validation gets
    the exception in each of its cells instead of aborting the batch.
    Output order never depends on ``jobs``.
    """
    flat = solve_pairs([(s, p) for s in subjects for p in profiles], jobs, explain)
    width = len(profiles)
    return [flat[r * width:(r + 1) * width] for r in range(len(subjects))]


__all__ = [
    "Budget",
    "CardinalityRow",
    "ConstraintProgram",
    "Instance",
    "OrClause",
    "Verdict",
    "compile",
    "explain_conflict",
    "or_clauses",
    "solve_batch",
    "solve_pairs",
    "solve_rationalizability",
]
