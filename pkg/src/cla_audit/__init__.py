"""Revealed-preference toolkit for choice under k-th order limited attention."""

from .axioms import (
    Axiom,
    AxiomViolation,
    check_heterogeneous,
    check_k_contraction,
    check_nbc,
    check_sarp_k,
    check_warp_la_k,
    transitive_closure,
)
from .core import (
    Alternative,
    Budget,
    ChoiceDataset,
    ChoiceNotInBudget,
    ConflictingDuplicateBudget,
    EmptyBudget,
    NotRationalizable,
    Observation,
    PreferenceOrder,
    ThresholdProfile,
    UniverseTooLarge,
    UnknownAlternative,
    ValidationError,
    Witness,
    validate_dataset,
    verify_witness,
)
from .io import (
    CLA,
    NoisyRational,
    Rational,
    SchemaError,
    StudyFile,
    Uniform,
    bundled_universe,
    generate_synthetic_study,
    load_study,
    parse_study,
)
from .oracle import InstanceTooLarge, oracle_min_contour, oracle_rationalizable
from .power import (
    DomainError,
    EmptyReferenceForBudget,
    MissingReference,
    PowerReport,
    RandomSubjectSpec,
    clopper_pearson,
    generate_random_subjects,
    psi,
    run_power_study,
)
from .solver import ConstraintProgram, Verdict, compile, solve_batch, solve_rationalizability
from .welfare import ContourResult, WelfareReport, guaranteed_welfare_bound, min_lower_contour

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
