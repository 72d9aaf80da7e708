"""Brute-force ground truth for tiny instances.

Two independent routes:

``full``
    Enumerates every strict order and every attention filter on all of
    2^X, checking the filter property and the cardinality bound directly.
    Subsets are assigned from largest to smallest, so a set is either forced
    by a superset (``Gamma(S + y) = Gamma(S)`` when ``y`` is ignored) or free.
    A free unobserved set takes ``Gamma(S) = S``; that choice places no
    constraint on any subset and so loses no solutions.

``constraint``
    Enumerates one attention set per observation, then checks the pairwise
    or-condition and acyclicity of the revealed relation.

Neither route shares code with :mod:`cla_audit.solver`.
"""

from __future__ import annotations

from itertools import combinations, permutations
from typing import Iterator

from .core import ChoiceDataset, NotRationalizable, ThresholdProfile

FULL_MAX_ALTERNATIVES = 4
CONSTRAINT_MAX_ALTERNATIVES = 5
CONSTRAINT_MAX_OBSERVATIONS = 16


class InstanceTooLarge(ValueError):
    pass


def _members(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def _subsets(mask: int, min_size: int) -> list[int]:
    items = _members(mask)
    out = []
    for r in range(max(min_size, 0), len(items) + 1):
        for combo in combinations(items, r):
            m = 0
            for a in combo:
                m |= 1 << a
            out.append(m)
    return out


def _descendants(edges: dict[int, int], x: int) -> int:
    seen = 0
    stack = [x]
    while stack:
        v = stack.pop()
        nxt = edges.get(v, 0) & ~seen
        seen |= nxt
        stack.extend(_members(nxt))
    return seen & ~(1 << x)


def _check_mode(data: ChoiceDataset, mode: str) -> str:
    n = data.n_alternatives
    if mode == "auto":
        mode = "full" if n <= FULL_MAX_ALTERNATIVES else "constraint"
    if mode == "full":
        if n > FULL_MAX_ALTERNATIVES:
            raise InstanceTooLarge(f"full-filter mode needs |X| <= {FULL_MAX_ALTERNATIVES}, got {n}")
    elif mode == "constraint":
        if n > CONSTRAINT_MAX_ALTERNATIVES or len(data) > CONSTRAINT_MAX_OBSERVATIONS:
            raise InstanceTooLarge(
                f"constraint mode needs |X| <= {CONSTRAINT_MAX_ALTERNATIVES} and at most "
                f"{CONSTRAINT_MAX_OBSERVATIONS} observations"
            )
    else:
        raise ValueError(f"unknown oracle mode {mode!r}")
    return mode


# Full-filter enumeration


def _filters(data: ChoiceDataset, profile: ThresholdProfile) -> Iterator[tuple[tuple[int, ...], dict[int, int]]]:
    """Yield every (ranking, filter restricted to observed budgets) pair."""
    n = data.n_alternatives
    full = (1 << n) - 1
    chosen = {o.budget.members: (i, o.choice) for i, o in enumerate(data.observations)}
    minima = profile.minima(data)

    def minimum(s: int) -> int:
        if s in chosen:
            return minima[chosen[s][0]]
        if profile.is_uniform:
            return min(profile.uniform, s.bit_count())
        return 1

    order_of_sets = sorted(range(1, full + 1), key=lambda s: (-s.bit_count(), s))
    for ranking in permutations(range(n)):
        pos = {a: p for p, a in enumerate(ranking)}
        lower = {a: sum(1 << b for b in range(n) if pos[b] > pos[a]) for a in range(n)}
        options: dict[int, list[int]] = {}
        ok = True
        for s, (_, c) in chosen.items():
            opts = [a | 1 << c for a in _subsets(s & lower[c], minimum(s) - 1)]
            if not opts:
                ok = False
                break
            options[s] = opts
        if not ok:
            continue
        gamma: dict[int, int] = {}

        def assign(idx: int) -> Iterator[dict[int, int]]:
            if idx == len(order_of_sets):
                yield gamma
                return
            s = order_of_sets[idx]
            forced = None
            outside = full & ~s
            while outside:
                low = outside & -outside
                outside ^= low
                sup = s | low
                g = gamma[sup]
                if not g & low:
                    if forced is None:
                        forced = g
                    elif forced != g:
                        return
            if forced is not None:
                if s in chosen:
                    if forced not in options[s]:
                        return
                elif forced.bit_count() < minimum(s) or forced & ~s:
                    return
                candidates = [forced]
            elif s in chosen:
                candidates = options[s]
            else:
                candidates = [s]
            for g in candidates:
                gamma[s] = g
                yield from assign(idx + 1)
            del gamma[s]

        for g in assign(0):
            yield ranking, {s: g[s] for s in chosen}


# Constraint enumeration


def _attention_maps(data: ChoiceDataset, profile: ThresholdProfile) -> Iterator[list[int]]:
    obs = data.observations
    minima = profile.minima(data)
    opts = [
        [a | 1 << o.choice for a in _subsets(o.budget.members & ~(1 << o.choice), minima[i] - 1)]
        for i, o in enumerate(obs)
    ]
    order = sorted(range(len(obs)), key=lambda i: (len(opts[i]), i))
    pairs: dict[int, list[int]] = {i: [] for i in range(len(obs))}
    placed_before = {i: set(order[:p]) for p, i in enumerate(order)}
    for i in range(len(obs)):
        for j in range(len(obs)):
            if i == j:
                continue
            bi, bj = obs[i].budget.members, obs[j].budget.members
            ci, cj = obs[i].choice, obs[j].choice
            common = bi & bj
            if ci != cj and common >> ci & 1 and common >> cj & 1 and j in placed_before[i]:
                pairs[i].append(j)

    att = [0] * len(obs)
    succ = [0] * data.n_alternatives

    def reaches(src: int, target: int) -> bool:
        seen = 0
        stack = [src]
        while stack:
            v = stack.pop()
            if v == target:
                return True
            nxt = succ[v] & ~seen
            seen |= nxt
            stack.extend(_members(nxt))
        return False

    def rec(p: int) -> Iterator[list[int]]:
        if p == len(order):
            yield att
            return
        i = order[p]
        bi, ci = obs[i].budget.members, obs[i].choice
        for a in opts[i]:
            good = True
            for j in pairs[i]:
                bj = obs[j].budget.members
                if not (a & bi & ~bj or att[j] & bj & ~bi):
                    good = False
                    break
            if not good:
                continue
            new = a & ~(1 << ci) & ~succ[ci]
            if any(reaches(y, ci) for y in _members(new)):
                continue
            saved = succ[ci]
            succ[ci] |= new
            att[i] = a
            yield from rec(p + 1)
            succ[ci] = saved
            att[i] = 0

    yield from rec(0)


def oracle_rationalizable(data: ChoiceDataset, profile: ThresholdProfile, mode: str = "auto") -> bool:
    """Exhaustively decide rationalizability on a desk-sized instance."""
    mode = _check_mode(data, mode)
    gen = _filters(data, profile) if mode == "full" else _attention_maps(data, profile)
    for _ in gen:
        return True
    return False


def oracle_min_contour(data: ChoiceDataset, profile: ThresholdProfile, x: int, mode: str = "auto") -> int:
    """Smallest revealed strict lower contour of ``x`` over all rationalizations."""
    mode = _check_mode(data, mode)
    obs = data.observations
    best = None
    if mode == "full":
        gen = (
            [g[o.budget.members] for o in obs] for _, g in _filters(data, profile)
        )
    else:
        gen = _attention_maps(data, profile)
    for att in gen:
        edges: dict[int, int] = {}
        for o, a in zip(obs, att):
            edges[o.choice] = edges.get(o.choice, 0) | (a & ~(1 << o.choice))
        size = _descendants(edges, x).bit_count()
        if best is None or size < best:
            best = size
            if best == 0:
                break
    if best is None:
        raise NotRationalizable("no rationalizing preference and attention filter exists")
    return best
