"""Domain types for choice data under limited attention.

Alternatives are interned to dense integer ids and budgets are stored as
integer bit-sets, so a universe may hold at most :data:`MAX_UNIVERSE`
alternatives. All types are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

MAX_UNIVERSE = 64


class ValidationError(ValueError):
    """Raised when raw observations do not form a valid choice function."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"observation {index}: {message}"
        super().__init__(message)


class ChoiceNotInBudget(ValidationError):
    pass


class ConflictingDuplicateBudget(ValidationError):
    pass


class EmptyBudget(ValidationError):
    pass


class UnknownAlternative(ValidationError):
    pass


class UniverseTooLarge(ValidationError):
    pass


class NotRationalizable(ValueError):
    """Raised where a result is only defined for rationalizable data."""


def bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class Alternative:
    id: int
    label: str


@dataclass(frozen=True)
class Budget:
    """A non-empty menu, stored as a bit-set over alternative ids."""

    members: int

    def __post_init__(self):
        if self.members <= 0:
            raise EmptyBudget("budget must be non-empty")

    @property
    def size(self) -> int:
        return self.members.bit_count()

    def __contains__(self, alt: int) -> bool:
        return bool(self.members >> alt & 1)

    def __iter__(self) -> Iterator[int]:
        return bits(self.members)

    def __len__(self) -> int:
        return self.size

    @classmethod
    def of(cls, ids: Iterable[int]) -> Budget:
        return cls(mask_of(ids))


@dataclass(frozen=True)
class Observation:
    budget: Budget
    choice: int

    def __post_init__(self):
        if self.choice not in self.budget:
            raise ChoiceNotInBudget(f"choice {self.choice} is not in its budget")


@dataclass(frozen=True)
class ChoiceDataset:
    """A subject's observed (budget, choice) pairs over a finite universe."""

    universe: tuple[Alternative, ...]
    observations: tuple[Observation, ...]

    def __post_init__(self):
        n = len(self.universe)
        if n > MAX_UNIVERSE:
            raise UniverseTooLarge(f"universe has {n} alternatives; the limit is {MAX_UNIVERSE}")
        for pos, alt in enumerate(self.universe):
            if alt.id != pos:
                raise ValidationError(f"alternative ids must be 0..{n - 1} in order")
        full = (1 << n) - 1
        seen: dict[int, int] = {}
        for i, obs in enumerate(self.observations):
            if obs.budget.members & ~full:
                raise UnknownAlternative("budget contains an alternative outside the universe", i)
            if obs.budget.members in seen:
                raise ValidationError("budget observed twice", i)
            seen[obs.budget.members] = i

    @property
    def n_alternatives(self) -> int:
        return len(self.universe)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.universe)) - 1

    def __len__(self) -> int:
        return len(self.observations)

    def labels(self, ids: Iterable[int] | int) -> list[str]:
        if isinstance(ids, int):
            ids = bits(ids)
        return [self.universe[i].label for i in ids]

    def label(self, alt: int) -> str:
        return self.universe[alt].label

    def index(self, label: str | int) -> int:
        """Resolve a label (or pass through an id) to an alternative id."""
        if isinstance(label, int):
            if not 0 <= label < len(self.universe):
                raise UnknownAlternative(f"no alternative with id {label}")
            return label
        for alt in self.universe:
            if alt.label == label:
                return alt.id
        raise UnknownAlternative(f"unknown alternative {label!r}")

    def max_budget_size(self) -> int:
        return max((o.budget.size for o in self.observations), default=0)

    def is_complete(self) -> bool:
        """True when every non-empty subset of the universe is observed."""
        return len(self.observations) == (1 << len(self.universe)) - 1

    def choice_map(self) -> dict[int, int]:
        return {o.budget.members: o.choice for o in self.observations}

    def subset(self, indices: Sequence[int]) -> ChoiceDataset:
        return ChoiceDataset(self.universe, tuple(self.observations[i] for i in indices))

    def to_raw(self) -> list[tuple[list[str], str]]:
        return [(self.labels(o.budget.members), self.label(o.choice)) for o in self.observations]


def validate_dataset(
    raw: Iterable[tuple[Iterable[Hashable], Hashable]],
    universe: Sequence[Hashable] | None = None,
) -> ChoiceDataset:
    """Build a :class:`ChoiceDataset` from ``(menu, choice)`` pairs of labels.

    Labels are converted with ``str``. Without an explicit ``universe`` the
    universe is the sorted set of labels that appear. Identical repeated
    observations are dropped (first occurrence kept); a repeated menu with a
    different choice raises :class:`ConflictingDuplicateBudget`.
    """
    raw = [(list(menu), choice) for menu, choice in raw]
    if universe is None:
        found = {str(a) for menu, _ in raw for a in menu} | {str(c) for _, c in raw}
        labels = sorted(found)
    else:
        labels = [str(a) for a in universe]
        if len(set(labels)) != len(labels):
            raise ValidationError("universe labels must be unique")
    if len(labels) > MAX_UNIVERSE:
        raise UniverseTooLarge(f"universe has {len(labels)} alternatives; the limit is {MAX_UNIVERSE}")
    ids = {label: i for i, label in enumerate(labels)}

    observations: list[Observation] = []
    first: dict[int, tuple[int, int]] = {}
    for index, (menu, choice) in enumerate(raw):
        if not menu:
            raise EmptyBudget("budget is empty", index)
        members = 0
        for a in menu:
            a = str(a)
            if a not in ids:
                raise UnknownAlternative(f"alternative {a!r} is not in the universe", index)
            members |= 1 << ids[a]
        choice = str(choice)
        if choice not in ids:
            raise UnknownAlternative(f"chosen alternative {choice!r} is not in the universe", index)
        c = ids[choice]
        if not members >> c & 1:
            raise ChoiceNotInBudget(f"chosen alternative {choice!r} is not in its budget", index)
        if members in first:
            prev_index, prev_choice = first[members]
            if prev_choice != c:
                raise ConflictingDuplicateBudget(
                    f"budget already observed at {prev_index} with a different choice", index
                )
            continue
        first[members] = (index, c)
        observations.append(Observation(Budget(members), c))
    return ChoiceDataset(
        tuple(Alternative(i, label) for i, label in enumerate(labels)), tuple(observations)
    )


@dataclass(frozen=True)
class ThresholdProfile:
    """Minimum consideration-set sizes.

    Either a single ``uniform`` threshold or one threshold per observation
    (``per_budget``, keyed by observation index). The effective threshold
    of observation ``i`` is always clamped to the budget size.
    """

    uniform: int | None = None
    per_budget: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if (self.uniform is None) == (self.per_budget is None):
            raise ValueError("give exactly one of uniform or per_budget")
        if self.uniform is not None and (not isinstance(self.uniform, int) or self.uniform < 1):
            raise ValueError(f"threshold must be a positive integer, got {self.uniform!r}")
        if self.per_budget is not None:
            for i, k in self.per_budget:
                if not isinstance(k, int) or k < 1:
                    raise ValueError(f"threshold for observation {i} must be a positive integer")

    @classmethod
    def of(cls, k: int) -> ThresholdProfile:
        return cls(uniform=k)

    @classmethod
    def heterogeneous(cls, thresholds: Mapping[int, int] | Sequence[int]) -> ThresholdProfile:
        if isinstance(thresholds, Mapping):
            items = thresholds.items()
        else:
            items = enumerate(thresholds)
        return cls(per_budget=tuple(sorted((int(i), int(k)) for i, k in items)))

    @property
    def is_uniform(self) -> bool:
        return self.uniform is not None

    def raw(self, index: int) -> int:
        if self.uniform is not None:
            return self.uniform
        for i, k in self.per_budget:
            if i == index:
                return k
        raise KeyError(f"profile has no threshold for observation {index}")

    def threshold(self, index: int, size: int) -> int:
        """Effective threshold ``min(k_i, b_i)``."""
        return min(self.raw(index), size)

    def minima(self, data: ChoiceDataset) -> list[int]:
        return [self.threshold(i, o.budget.size) for i, o in enumerate(data.observations)]

    def describe(self) -> str:
        if self.uniform is not None:
            return f"k={self.uniform}"
        return "k_i=[" + ",".join(str(k) for _, k in self.per_budget) + "]"


@dataclass(frozen=True)
class PreferenceOrder:
    """A strict total order; ``ranking[0]`` is the best alternative."""

    ranking: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.ranking) != list(range(len(self.ranking))):
            raise ValueError("ranking must be a permutation of the universe ids")

    def position(self) -> list[int]:
        pos = [0] * len(self.ranking)
        for p, a in enumerate(self.ranking):
            pos[a] = p
        return pos

    def prefers(self, a: int, b: int) -> bool:
        return self.ranking.index(a) < self.ranking.index(b)

    def best(self, mask: int) -> int:
        for a in self.ranking:
            if mask >> a & 1:
                return a
        raise ValueError("empty set has no best element")

    def below(self, a: int) -> int:
        """Bit-set of alternatives strictly worse than ``a``."""
        return mask_of(self.ranking[self.ranking.index(a) + 1:])


@dataclass(frozen=True)
class Witness:
    """A preference order plus one consideration set per observation."""

    preference: PreferenceOrder
    attention: tuple[int, ...]

    def revealed_edges(self, data: ChoiceDataset) -> dict[int, int]:
        """Map each alternative to the bit-set it is directly revealed above."""
        out = [0] * data.n_alternatives
        for obs, att in zip(data.observations, self.attention):
            out[obs.choice] |= att & ~(1 << obs.choice)
        return {a: m for a, m in enumerate(out)}

    def revealed_lower_contour(self, data: ChoiceDataset, x: int) -> int:
        """Strict descendants of ``x`` in the revealed relation."""
        edges = self.revealed_edges(data)
        seen = 0
        frontier = edges[x]
        while frontier:
            seen |= frontier
            nxt = 0
            for a in bits(frontier):
                nxt |= edges[a]
            frontier = nxt & ~seen
        return seen & ~(1 << x)


def verify_witness(data: ChoiceDataset, profile: ThresholdProfile, w: Witness) -> bool:
    """Check a witness against the data without any search.

    Malformed witnesses (wrong universe, wrong number of consideration sets,
    sets leaking outside their budget) return ``False``.
    """
    if len(w.preference.ranking) != data.n_alternatives:
        return False
    if len(w.attention) != len(data.observations):
        return False
    pos = w.preference.position()
    try:
        minima = profile.minima(data)
    except KeyError:
        return False
    obs = data.observations
    for i, o in enumerate(obs):
        att = w.attention[i]
        if att & ~o.budget.members or not att >> o.choice & 1:
            return False
        if att.bit_count() < minima[i]:
            return False
        if any(pos[a] < pos[o.choice] for a in bits(att)):
            return False
    for i in range(len(obs)):
        for j in range(i + 1, len(obs)):
            bi, bj = obs[i].budget.members, obs[j].budget.members
            ci, cj = obs[i].choice, obs[j].choice
            common = bi & bj
            if ci == cj or not (common >> ci & 1 and common >> cj & 1):
                continue
            if not (w.attention[i] & bi & ~bj or w.attention[j] & bj & ~bi):
                return False
    return True
