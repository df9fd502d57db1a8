"""Exact statistics and compatibility analysis for classical stochastic
measurement systems, with quantum commutativity cross-checks."""
from __future__ import annotations

from .core import (
    Configuration,
    DeckDynamics,
    Event,
    Item,
    MeasurementSystem,
    PState,
    ReplacementRule,
    TableDynamics,
    UrnDynamics,
    Variable,
    all_preparations,
    canonical_preparations,
    conditional_prob,
    filter_event,
    outcome_distribution,
    reachable_configs,
    sequence_prob,
    single_event_prob,
    update_config,
)
from .catalog import (
    build_card_example,
    build_urn_example,
    builtin_system,
    load_system,
    random_table_system,
    save_system,
)
from .criteria import (
    CriterionKind,
    CriterionReport,
    InterferenceRecord,
    check_ignored,
    check_nondisturbance,
    check_order_exchange,
    compatibility_matrix,
    criteria_profile,
    interference_deficit,
    relation_audit,
    repeatability_check,
    search_counterexamples,
    sharpness_audit,
)
from .quantum import (
    DensityOp,
    Projector,
    ProjectorFamily,
    commutator_defect,
    criterion_identity_check,
    equivalence_experiment,
    gen_pair,
    lueders_condition,
    make_projector,
    seq_prob_q,
)
from .simulate import MonteCarloResult, monte_carlo_estimate

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "CriterionKind",
    "CriterionReport",
    "DeckDynamics",
    "DensityOp",
    "Event",
    "InterferenceRecord",
    "Item",
    "MeasurementSystem",
    "MonteCarloResult",
    "PState",
    "Projector",
    "ProjectorFamily",
    "ReplacementRule",
    "TableDynamics",
    "UrnDynamics",
    "Variable",
    "all_preparations",
    "build_card_example",
    "build_urn_example",
    "builtin_system",
    "canonical_preparations",
    "check_ignored",
    "check_nondisturbance",
    "check_order_exchange",
    "commutator_defect",
    "compatibility_matrix",
    "conditional_prob",
    "criteria_profile",
    "criterion_identity_check",
    "equivalence_experiment",
    "filter_event",
    "gen_pair",
    "interference_deficit",
    "load_system",
    "lueders_condition",
    "make_projector",
    "monte_carlo_estimate",
    "outcome_distribution",
    "random_table_system",
    "reachable_configs",
    "relation_audit",
    "repeatability_check",
    "save_system",
    "search_counterexamples",
    "seq_prob_q",
    "sequence_prob",
    "sharpness_audit",
    "single_event_prob",
    "update_config",
]
