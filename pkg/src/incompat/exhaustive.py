"""Direct tree enumeration of measurement histories.

A second route to sequential probabilities that multiplies branch
probabilities along the outcome tree, without the probability-state
folding in `core`.  Used to re-verify search findings; the test suite
cross-checks both routes against each other.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .core import (
    Configuration,
    DeckDynamics,
    Event,
    MeasurementSystem,
    PState,
    TableDynamics,
    UrnDynamics,
    ZERO,
    ONE,
)


def sequence_prob_exhaustive(
    system: MeasurementSystem, config: Configuration, events: Sequence[Event]
) -> Fraction:
    """Probability of the event sequence from a point preparation, by
    exhaustive recursion over draws.  A drained pool manifests nothing."""
    if not events:
        return ONE
    head, rest = events[0], events[1:]
    var = system.variable(head.variable)
    total = config.total
    if total == 0:
        return ZERO
    dyn = system.dynamics
    if isinstance(dyn, TableDynamics):
        p = Fraction(dyn.outcome[(config, var.name)].get(head.value, ZERO))
        if p == 0:
            return ZERO
        nxt = dyn.update[(config, var.name, head.value)]
        return p * sequence_prob_exhaustive(system, nxt, rest)
    if isinstance(dyn, UrnDynamics):
        hits = sum(n for it, n in config.counts if system.item_value(it, var) == head.value)
        if hits == 0:
            return ZERO
        pool = system.population.restrict(
            lambda it: system.item_value(it, var) == head.value
        )
        return Fraction(hits, total) * sequence_prob_exhaustive(system, pool, rest)
    acc = ZERO
    for it, n in config.counts:
        if system.item_value(it, var) != head.value:
            continue
        successor = config if dyn.rule.replaces(it) else config.remove_one(it)
        acc += Fraction(n, total) * sequence_prob_exhaustive(system, successor, rest)
    return acc


def state_sequence_prob_exhaustive(
    system: MeasurementSystem, sigma: PState, events: Sequence[Event]
) -> Fraction:
    return sum(
        (w * sequence_prob_exhaustive(system, c, events) for c, w in sigma.weights),
        ZERO,
    )
