"""Pass rates, Bronars and bootstrap power, predictive success, exact binomial CIs."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import bdtr, bdtrc

from .core import Alternative, Budget, ChoiceDataset, Observation, ThresholdProfile, bits
from .solver import solve_batch

METHODS = ("bronars", "bootstrap")


class DomainError(ValueError):
    pass


class MissingReference(ValueError):
    pass


class EmptyReferenceForBudget(ValueError):
    pass


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    """Root of a function increasing on ``[lo, hi]``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def clopper_pearson(successes: int, n: int, alpha: float = 0.05, tol: float = 1e-10) -> tuple[float, float]:
    """Exact two-sided binomial interval by inverting the binomial tails."""
    if not (isinstance(successes, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise DomainError("successes and n must be integers")
    if n < 1 or not 0 <= successes <= n:
        raise DomainError(f"need 0 <= successes <= n and n >= 1, got ({successes}, {n})")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    half = alpha / 2
    if successes == 0:
        lower = 0.0
    else:
        # P(X >= s; p) rises with p
        lower = _bisect(lambda p: bdtrc(successes - 1, n, p) - half, 0.0, 1.0, tol)
    if successes == n:
        upper = 1.0
    else:
        # P(X <= s; p) falls with p
        upper = _bisect(lambda p: half - bdtr(successes, n, p), 0.0, 1.0, tol)
    return lower, upper


@dataclass(frozen=True)
class Rate:
    successes: int
    n: int
    ci: tuple[float, float] | None

    @property
    def value(self) -> Fraction:
        return Fraction(self.successes, self.n)

    @classmethod
    def of(cls, successes: int, n: int, alpha: float) -> Rate:
        ci = clopper_pearson(successes, n, alpha) if n else None
        return cls(successes, n, ci)


def psi(pass_rate: Fraction, power: Fraction) -> Fraction:
    """Predictive success index."""
    return pass_rate - power


@dataclass(frozen=True)
class RandomSubjectSpec:
    method: str
    budgets: tuple[Budget, ...]
    n_subjects: int
    seed: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if self.n_subjects < 1:
            raise DomainError("n_subjects must be positive")


def _stream(seed: int, subject: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(subject,))))


def _reference_pools(budgets, reference) -> list[list[int]]:
    if not reference:
        raise MissingReference("bootstrap power needs real subjects as a reference")
    pools: list[list[int]] = [[] for _ in budgets]
    where = {b.members: j for j, b in enumerate(budgets)}
    for subject in reference:
        for o in subject.observations:
            j = where.get(o.budget.members)
            if j is not None:
                pools[j].append(o.choice)
    for j, pool in enumerate(pools):
        if not pool:
            raise EmptyReferenceForBudget(f"no reference subject observed design budget {j}")
    return pools


def generate_random_subjects(
    spec: RandomSubjectSpec,
    universe: Sequence[Alternative],
    reference: Sequence[ChoiceDataset] | None = None,
) -> list[ChoiceDataset]:
    """Random subjects on a fixed budget design.

    Bronars subjects pick uniformly within each budget. Bootstrap subjects
    pick, budget by budget and independently, the choice of a uniformly
    drawn reference subject on that same budget. Subject ``i`` draws from a
    stream keyed by ``(seed, i)``.
    """
    universe = tuple(universe)
    members = [list(bits(b.members)) for b in spec.budgets]
    pools = _reference_pools(spec.budgets, reference) if spec.method == "bootstrap" else members
    sizes = np.array([len(p) for p in pools])
    out = []
    for i in range(spec.n_subjects):
        picks = (_stream(spec.seed, i).random(len(pools)) * sizes).astype(np.int64)
        obs = tuple(Observation(b, pool[p]) for b, pool, p in zip(spec.budgets, pools, picks))
        out.append(ChoiceDataset(universe, obs))
    return out


@dataclass(frozen=True)
class ProfileRow:
    profile: ThresholdProfile
    pass_rate: Rate
    power: dict[str, Rate]
    psi: dict[str, Fraction]


@dataclass(frozen=True)
class PowerReport:
    rows: tuple[ProfileRow, ...]
    n_real: int
    n_random: int
    seed: int
    alpha: float
    methods: tuple[str, ...] = field(default=METHODS)

    def to_dict(self) -> dict:
        def rate(r: Rate) -> dict:
            return {
                "successes": r.successes,
                "n": r.n,
                "rate": float(r.value),
                "ci": list(r.ci) if r.ci else None,
            }

        return {
            "n_real": self.n_real,
            "n_random": self.n_random,
            "seed": self.seed,
            "alpha": self.alpha,
            "methods": list(self.methods),
            "rows": [
                {
                    "profile": row.profile.describe(),
                    "pass_rate": rate(row.pass_rate),
                    "power": {m: rate(r) for m, r in row.power.items()},
                    "psi": {m: float(v) for m, v in row.psi.items()},
                }
                for row in self.rows
            ],
        }


def _check_design(real: Sequence[ChoiceDataset], design: Sequence[Budget]) -> None:
    want = [b.members for b in design]
    for s, subject in enumerate(real):
        got = [o.budget.members for o in subject.observations]
        if got != want:
            raise DomainError(f"real subject {s} was not observed on exactly the design budgets")


def pass_counts(subjects: Sequence[ChoiceDataset], profiles: Sequence[ThresholdProfile], jobs: int = 1) -> list[int]:
    verdicts = solve_batch(subjects, profiles, jobs=jobs)
    counts = [0] * len(profiles)
    for row in verdicts:
        for p, v in enumerate(row):
            if isinstance(v, Exception):
                raise v
            counts[p] += v.feasible
    return counts


def run_power_study(
    real: Sequence[ChoiceDataset],
    design: Sequence[Budget],
    profiles: Sequence[ThresholdProfile],
    methods: Sequence[str] = METHODS,
    n_random: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    jobs: int = 1,
) -> PowerReport:
    """Pass rates of real subjects against power from simulated ones, per profile.

    Each method draws one random population that is reused across all
    profiles, so power is comparable across thresholds.
    """
    if n_random < 1:
        raise DomainError("n_random must be positive")
    if not real:
        raise DomainError("need at least one real subject")
    design = tuple(design)
    _check_design(real, design)
    universe = real[0].universe
    real_counts = pass_counts(real, profiles, jobs)
    power_counts = {}
    for method in methods:
        spec = RandomSubjectSpec(method, design, n_random, seed)
        population = generate_random_subjects(spec, universe, real if method == "bootstrap" else None)
        power_counts[method] = pass_counts(population, profiles, jobs)
    rows = []
    for p, profile in enumerate(profiles):
        pr = Rate.of(real_counts[p], len(real), alpha)
        power = {m: Rate.of(power_counts[m][p], n_random, alpha) for m in methods}
        rows.append(ProfileRow(profile, pr, power, {m: psi(pr.value, power[m].value) for m in methods}))
    return PowerReport(tuple(rows), len(real), n_random, seed, alpha, tuple(methods))
