"""Compatibility criteria and structural audits for classical systems.

Three criteria decide whether a pair of values behaves compatibly:

  * order exchange: Pr{p and then q} equals Pr{q and then p} for every
    preparation;
  * non-disturbance: once p has occurred, an interposed q leaves a
    re-measurement of p certain (conditional probability exactly 1);
  * ignored measurement: summing an earlier measurement over all its
    outcomes leaves the later probability unchanged (the marginal
    formula).

All verdicts are decided exactly over point preparations on the reachable
configurations; every criterion expression is affine in the preparation
(after clearing the conditional's denominator), so equality on those
extreme points settles it for all mixtures.  The property-based test
suite re-verifies this sufficiency on random mixtures.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .catalog import random_table_system, save_system
from .core import (
    Configuration,
    Event,
    MeasurementSystem,
    PState,
    Variable,
    ZERO,
    ONE,
    canonical_preparations,
    event_probability,
    filter_event,
    sequence_prob,
    single_event_prob,
)
from .errors import BlockMismatchError, IncompatError
from .exhaustive import sequence_prob_exhaustive


class CriterionKind(str, Enum):
    ORDER_EXCHANGE = "order_exchange"
    NON_DISTURBANCE = "non_disturbance"
    IGNORED_MEASUREMENT = "ignored_measurement"


@dataclass(frozen=True)
class Witness:
    """A point preparation on which a criterion equality fails, with the
    exact left and right values of the failing expression."""

    preparation: Configuration
    left: Fraction
    right: Fraction


@dataclass(frozen=True)
class CriterionReport:
    """Verdict for one criterion on one value pair.

    ``witness`` is present exactly when the verdict is "fails" and
    re-evaluates to its recorded values.  ``vacuous`` marks criteria whose
    qualifying-preparation set is empty.
    """

    kind: CriterionKind
    pair: tuple[Event, Event] | tuple[Event, str]
    holds: bool
    vacuous: bool = False
    witness: Witness | None = None

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "fails"

    def to_json_dict(self) -> dict[str, Any]:
        def event_json(e):
            if isinstance(e, Event):
                return {"variable": e.variable, "value": e.value}
            return {"variable": e}

        doc: dict[str, Any] = {
            "kind": self.kind.value,
            "pair": [event_json(self.pair[0]), event_json(self.pair[1])],
            "verdict": self.verdict,
            "vacuous": self.vacuous,
        }
        if self.witness is not None:
            doc["witness"] = {
                "config": [
                    {**dict(item.labels), "count": n}
                    for item, n in self.witness.preparation.counts
                ],
                "left": _rat(self.witness.left),
                "right": _rat(self.witness.right),
            }
        else:
            doc["witness"] = None
        return doc


def _rat(f: Fraction) -> dict[str, str]:
    return {"num": str(f.numerator), "den": str(f.denominator)}


# ---------------------------------------------------------------------------
# The three criteria
# ---------------------------------------------------------------------------

def check_order_exchange(
    system: MeasurementSystem,
    p: Event,
    q: Event,
    preparations: Iterable[Configuration] | None = None,
) -> CriterionReport:
    """Pr{p & q} = Pr{q & p} for every point preparation.

    The first failure in canonical preparation order becomes the witness,
    so reports are reproducible.
    """
    for config in canonical_preparations(system, preparations):
        state = PState.point(config)
        left = sequence_prob(system, state, (p, q))
        right = sequence_prob(system, state, (q, p))
        if left != right:
            return CriterionReport(
                CriterionKind.ORDER_EXCHANGE, (p, q), False,
                witness=Witness(config, left, right),
            )
    return CriterionReport(CriterionKind.ORDER_EXCHANGE, (p, q), True)


def check_nondisturbance(
    system: MeasurementSystem,
    p: Event,
    q: Event,
    preparations: Iterable[Configuration] | None = None,
) -> CriterionReport:
    """Prob{p | p & q} = 1 for every point preparation with Pr{p & q} > 0.

    Vacuously true when no preparation qualifies.  The witness records the
    failing conditional value against the required 1.
    """
    qualifying = False
    for config in canonical_preparations(system, preparations):
        state = PState.point(config)
        p_and_q = sequence_prob(system, state, (p, q))
        if p_and_q == 0:
            continue
        qualifying = True
        again = sequence_prob(system, state, (p, q, p))
        if again != p_and_q:
            return CriterionReport(
                CriterionKind.NON_DISTURBANCE, (p, q), False,
                witness=Witness(config, again / p_and_q, ONE),
            )
    return CriterionReport(
        CriterionKind.NON_DISTURBANCE, (p, q), True, vacuous=not qualifying
    )


def check_ignored(
    system: MeasurementSystem,
    p: Event,
    ignored_variable: str | Variable,
    preparations: Iterable[Configuration] | None = None,
) -> CriterionReport:
    """Summing a preceding measurement of the ignored variable over all its
    outcomes reproduces the bare probability of p, for every preparation."""
    var = system.variable(ignored_variable)
    for config in canonical_preparations(system, preparations):
        state = PState.point(config)
        summed = sum(
            (sequence_prob(system, state, (Event(var.name, v), p)) for v in var.values),
            ZERO,
        )
        direct = single_event_prob(system, state, p)
        if summed != direct:
            return CriterionReport(
                CriterionKind.IGNORED_MEASUREMENT, (p, var.name), False,
                witness=Witness(config, summed, direct),
            )
    return CriterionReport(CriterionKind.IGNORED_MEASUREMENT, (p, var.name), True)


def criteria_profile(
    system: MeasurementSystem,
    p: Event,
    q: Event,
    preparations: Iterable[Configuration] | None = None,
) -> dict[CriterionKind, CriterionReport]:
    """All three criteria for one value pair, the ignored-measurement one
    taken against q's whole variable."""
    return {
        CriterionKind.ORDER_EXCHANGE: check_order_exchange(system, p, q, preparations),
        CriterionKind.NON_DISTURBANCE: check_nondisturbance(system, p, q, preparations),
        CriterionKind.IGNORED_MEASUREMENT: check_ignored(system, p, q.variable, preparations),
    }


# ---------------------------------------------------------------------------
# Matrices, repeatability, sharpness
# ---------------------------------------------------------------------------

@dataclass
class CompatibilityMatrix:
    variable_a: str
    variable_b: str
    cells: dict[tuple[str, str], CriterionReport]

    @property
    def all_hold(self) -> bool:
        return all(report.holds for report in self.cells.values())

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "variable_a": self.variable_a,
            "variable_b": self.variable_b,
            "all_hold": self.all_hold,
            "cells": [
                {"a": a, "b": b, **report.to_json_dict()}
                for (a, b), report in self.cells.items()
            ],
        }


def compatibility_matrix(
    system: MeasurementSystem, a: str | Variable, b: str | Variable
) -> CompatibilityMatrix:
    """One order-exchange report per value pair of the two variables."""
    var_a, var_b = system.variable(a), system.variable(b)
    preparations = canonical_preparations(system)
    cells = {
        (va, vb): check_order_exchange(
            system, Event(var_a.name, va), Event(var_b.name, vb), preparations
        )
        for va in var_a.values
        for vb in var_b.values
    }
    return CompatibilityMatrix(var_a.name, var_b.name, cells)


@dataclass(frozen=True)
class RepeatabilityCell:
    holds: bool
    expected: Fraction
    vacuous: bool = False
    witness: Witness | None = None


@dataclass
class RepeatabilityReport:
    """Checks Prob{v_j | v_k} = 1 if j = k else 0 on every qualifying
    preparation (von Neumann repeatability of observation)."""

    variable: str
    cells: dict[tuple[str, str], RepeatabilityCell]

    @property
    def all_hold(self) -> bool:
        return all(cell.holds for cell in self.cells.values())


def repeatability_check(
    system: MeasurementSystem, variable: str | Variable
) -> RepeatabilityReport:
    var = system.variable(variable)
    preparations = canonical_preparations(system)
    cells: dict[tuple[str, str], RepeatabilityCell] = {}
    for j in var.values:
        for k in var.values:
            expected = ONE if j == k else ZERO
            cell = RepeatabilityCell(True, expected, vacuous=True)
            for config in preparations:
                state = PState.point(config)
                condition = sequence_prob(system, state, (Event(var.name, k),))
                if condition == 0:
                    continue
                value = sequence_prob(
                    system, state, (Event(var.name, k), Event(var.name, j))
                ) / condition
                if value != expected:
                    cell = RepeatabilityCell(
                        False, expected, witness=Witness(config, value, expected)
                    )
                    break
                cell = RepeatabilityCell(True, expected)
            cells[(j, k)] = cell
    return RepeatabilityReport(var.name, cells)


@dataclass
class SharpnessRecord:
    """Per-variable sharp values of one point preparation (the value it
    yields with probability one, when there is one)."""

    preparation: Configuration
    sharp_values: dict[str, str | None]
    sharp_in_all_base: bool

    @property
    def state(self) -> PState:
        return PState.point(self.preparation)


def sharpness_audit(system: MeasurementSystem) -> list[SharpnessRecord]:
    """Sharp values of every reachable point preparation; flags the ones
    sharp in every base variable simultaneously."""
    records = []
    base_names = {v.name for v in system.base_variables()}
    for config in canonical_preparations(system):
        sharp: dict[str, str | None] = {}
        for var in system.variables:
            sharp[var.name] = None
            if config.is_empty:
                continue
            for value in var.values:
                if event_probability(system, config, Event(var.name, value)) == ONE:
                    sharp[var.name] = value
                    break
        all_base = bool(base_names) and all(
            sharp[name] is not None for name in base_names
        )
        records.append(SharpnessRecord(config, sharp, all_base))
    return records


# ---------------------------------------------------------------------------
# Interference
# ---------------------------------------------------------------------------

@dataclass
class InterferenceRecord:
    """Comparison of a coarse manifestation path against the sum over its
    fine alternatives.  A nonzero deficit is classical interference."""

    preparation: PState
    coarse: Event
    fine: tuple[Event, ...]
    follow: Event | None
    coarse_path: Fraction
    fine_sum: Fraction

    @property
    def deficit(self) -> Fraction:
        return self.coarse_path - self.fine_sum


def interference_deficit(
    system: MeasurementSystem,
    sigma: PState,
    coarse: Event,
    fine: Sequence[Event],
    follow: Event | None = None,
) -> InterferenceRecord:
    """Exact deficit Pr{coarse & follow} - sum of Pr{fine_i & follow}.

    The fine events must be exactly the base events of the coarse event's
    block (`BlockMismatchError` otherwise).  Omitting ``follow`` compares
    single-measurement probabilities, where coarse additivity makes the
    deficit zero.
    """
    cvar = system.variable(coarse.variable)
    if not cvar.is_coarse:
        raise BlockMismatchError(f"{coarse.variable!r} is not a coarse variable")
    block = set(cvar.block(coarse.value))
    expected = {Event(cvar.coarse_of or "", b) for b in block}
    if set(fine) != expected:
        raise BlockMismatchError(
            f"fine events must be the base events of block {sorted(block)!r}"
        )
    if follow is None:
        coarse_path = single_event_prob(system, sigma, coarse)
        fine_sum = sum((single_event_prob(system, sigma, f) for f in fine), ZERO)
    else:
        coarse_path = sequence_prob(system, sigma, (coarse, follow))
        fine_sum = sum(
            (sequence_prob(system, sigma, (f, follow)) for f in fine), ZERO
        )
    return InterferenceRecord(sigma, coarse, tuple(fine), follow, coarse_path, fine_sum)


# ---------------------------------------------------------------------------
# Relation audit
# ---------------------------------------------------------------------------

def is_event_filter_repeatable(
    system: MeasurementSystem,
    event: Event,
    preparations: Sequence[Configuration] | None = None,
) -> bool:
    """Whether filtering twice on ``event`` equals filtering once, in both
    state and probability, from every preparation where it can occur."""
    for config in canonical_preparations(system, preparations):
        prob, state = filter_event(system, PState.point(config), event)
        if prob == 0 or state is None:
            continue
        prob2, state2 = filter_event(system, state, event)
        if prob2 != ONE or state2 != state:
            return False
    return True


def is_system_filter_repeatable(system: MeasurementSystem) -> bool:
    preparations = canonical_preparations(system)
    return all(
        is_event_filter_repeatable(system, event, preparations)
        for event in system.events()
    )


def _post_filter_complete(
    system: MeasurementSystem,
    p: Event,
    variable: Variable,
    preparations: Sequence[Configuration],
) -> bool:
    """Whether a measurement of ``variable`` after a p-filter still has
    total probability one (fails only under pool exhaustion)."""
    for config in preparations:
        state = PState.point(config)
        direct = sequence_prob(system, state, (p,))
        summed = sum(
            (
                sequence_prob(system, state, (p, Event(variable.name, v)))
                for v in variable.values
            ),
            ZERO,
        )
        if summed != direct:
            return False
    return True


@dataclass
class RelationEntry:
    p: Event
    q: Event
    order_exchange: bool
    nondisturbance: bool
    ignored: bool
    order_exchange_all_values: bool
    p_filter_repeatable: bool
    post_filter_complete: bool

    @property
    def nd_implication_asserted(self) -> bool:
        return self.order_exchange and self.p_filter_repeatable

    @property
    def ignored_implication_asserted(self) -> bool:
        return self.order_exchange_all_values and self.post_filter_complete


@dataclass
class RelationAuditReport:
    """Cross-checks the implication structure between the criteria.

    Order exchange for a pair implies non-disturbance when the p-filter is
    repeatable, and order exchange across a whole variable implies the
    ignored-measurement criterion when no filter chain can exhaust the
    pool.  Violations of an asserted implication indicate an engine bug,
    never a property of the system; unguarded failures are reported as
    observations (they do occur, e.g. on decks).
    """

    system_name: str
    entries: list[RelationEntry]
    soundness_violations: list[str]
    observations: list[str]


def relation_audit(system: MeasurementSystem) -> RelationAuditReport:
    preparations = canonical_preparations(system)
    repeatable = {
        event: is_event_filter_repeatable(system, event, preparations)
        for event in system.events()
    }
    entries: list[RelationEntry] = []
    violations: list[str] = []
    observations: list[str] = []
    for var_a in system.variables:
        for var_b in system.variables:
            oe = {
                (a, b): check_order_exchange(
                    system, Event(var_a.name, a), Event(var_b.name, b), preparations
                ).holds
                for a in var_a.values
                for b in var_b.values
            }
            for a in var_a.values:
                p = Event(var_a.name, a)
                oe_all = all(oe[(a, b)] for b in var_b.values)
                ignored = check_ignored(system, p, var_b, preparations).holds
                complete = _post_filter_complete(system, p, var_b, preparations)
                for b in var_b.values:
                    q = Event(var_b.name, b)
                    nd = check_nondisturbance(system, p, q, preparations).holds
                    entry = RelationEntry(
                        p, q, oe[(a, b)], nd, ignored, oe_all,
                        repeatable[p], complete,
                    )
                    entries.append(entry)
                    tag = f"({p.variable}={p.value}, {q.variable}={q.value})"
                    if entry.nd_implication_asserted and not nd:
                        violations.append(
                            f"{tag}: order exchange holds with repeatable p-filter "
                            "but non-disturbance fails"
                        )
                    if entry.ignored_implication_asserted and not ignored:
                        violations.append(
                            f"{tag}: order exchange holds for all values with complete "
                            "post-filter outcomes but ignored-measurement fails"
                        )
                    if oe[(a, b)] and not repeatable[p] and not nd:
                        observations.append(
                            f"{tag}: order exchange without non-disturbance "
                            "(p-filter not repeatable)"
                        )
                    if oe_all and not complete and not ignored:
                        observations.append(
                            f"{tag}: order exchange for all values without "
                            "ignored-measurement (pool exhaustion)"
                        )
    return RelationAuditReport(system.name, entries, violations, observations)


# ---------------------------------------------------------------------------
# Counterexample search
# ---------------------------------------------------------------------------

PATTERN_ND_WITHOUT_IGNORED = "nondisturbance_without_ignored"
PATTERN_IGNORED_WITHOUT_ND = "ignored_without_nondisturbance"
PATTERN_BOTH_WITHOUT_OE = "both_without_order_exchange"


@dataclass
class SearchHit:
    """A random table system separating the criteria on one value pair."""

    trial: int
    seed: int
    system: MeasurementSystem
    p: Event
    q: Event
    nondisturbance: bool
    ignored: bool
    order_exchange: bool
    patterns: tuple[str, ...]

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "trial": self.trial,
            "seed": self.seed,
            "p": {"variable": self.p.variable, "value": self.p.value},
            "q": {"variable": self.q.variable, "value": self.q.value},
            "nondisturbance": self.nondisturbance,
            "ignored": self.ignored,
            "order_exchange": self.order_exchange,
            "patterns": list(self.patterns),
            "system": save_system(self.system),
        }


def verdicts_exhaustive(
    system: MeasurementSystem, p: Event, q: Event
) -> tuple[bool, bool, bool]:
    """(non-disturbance, ignored, order exchange) verdicts recomputed by
    direct enumeration, independently of the filtering engine."""
    preparations = canonical_preparations(system)
    qvar = system.variable(q.variable)
    oe = all(
        sequence_prob_exhaustive(system, c, (p, q))
        == sequence_prob_exhaustive(system, c, (q, p))
        for c in preparations
    )
    nd = all(
        sequence_prob_exhaustive(system, c, (p, q, p))
        == sequence_prob_exhaustive(system, c, (p, q))
        for c in preparations
        if sequence_prob_exhaustive(system, c, (p, q)) > 0
    )
    ign = all(
        sum(
            (
                sequence_prob_exhaustive(system, c, (Event(qvar.name, v), p))
                for v in qvar.values
            ),
            ZERO,
        )
        == sequence_prob_exhaustive(system, c, (p,))
        for c in preparations
    )
    return nd, ign, oe


def search_counterexamples(
    trials: int,
    seed: int,
    num_configs: int = 4,
    variables: Sequence[tuple[str, int]] = (("P", 2), ("Q", 2)),
) -> list[SearchHit]:
    """Search random table systems for the criterion separations that lack
    textbook examples: non-disturbance without ignored-measurement, the
    converse, and both without order exchange.

    Every hit is re-verified by direct enumeration before being returned;
    a mismatch would indicate an engine bug and raises.  Deterministic for
    a fixed seed.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    master = random.Random(seed)
    trial_seeds = [master.randrange(2**63) for _ in range(trials)]
    hits: list[SearchHit] = []
    for trial, trial_seed in enumerate(trial_seeds):
        system = random_table_system(num_configs, variables, trial_seed)
        preparations = canonical_preparations(system)
        for var_a in system.variables:
            for var_b in system.variables:
                if var_a.name == var_b.name:
                    continue
                for a in var_a.values:
                    p = Event(var_a.name, a)
                    ignored = check_ignored(system, p, var_b, preparations).holds
                    for b in var_b.values:
                        q = Event(var_b.name, b)
                        nd = check_nondisturbance(system, p, q, preparations).holds
                        oe = check_order_exchange(system, p, q, preparations).holds
                        patterns = []
                        if nd and not ignored:
                            patterns.append(PATTERN_ND_WITHOUT_IGNORED)
                        if ignored and not nd:
                            patterns.append(PATTERN_IGNORED_WITHOUT_ND)
                        if nd and ignored and not oe:
                            patterns.append(PATTERN_BOTH_WITHOUT_OE)
                        if not patterns:
                            continue
                        if verdicts_exhaustive(system, p, q) != (nd, ignored, oe):
                            raise IncompatError(
                                "verdict re-verification mismatch; "
                                "this is an engine bug"
                            )
                        hits.append(
                            SearchHit(
                                trial, trial_seed, system, p, q,
                                nd, ignored, oe, tuple(patterns),
                            )
                        )
    return hits
