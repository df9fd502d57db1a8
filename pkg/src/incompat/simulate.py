"""Seeded Monte Carlo cross-check of the exact sequence probabilities.

Preparation is operational: a run manifests the preparation events in
order and is redrawn from scratch whenever one of them reports the wrong
value (prepare-by-repetition).  Every trial runs on its own sub-seed,
drawn up front from the master seed, so aggregation is independent of
execution order and results are reproducible.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    Configuration,
    DeckDynamics,
    Event,
    MeasurementSystem,
    PState,
    TableDynamics,
    UrnDynamics,
    Variable,
    filter_event,
    sequence_prob,
)
from .errors import ZeroConditionError

_MAX_PREP_ATTEMPTS = 1_000_000


@dataclass
class MonteCarloResult:
    hits: int
    trials: int
    estimate: float
    exact: Fraction
    bound: float
    within_bound: bool
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "hits": self.hits,
            "trials": self.trials,
            "estimate": self.estimate,
            "exact": {"num": str(self.exact.numerator), "den": str(self.exact.denominator)},
            "bound": self.bound,
            "within_bound": self.within_bound,
            "seed": self.seed,
        }


class _Sampler:
    """Per-system sampling tables: flat item lists for draws, memoized urn
    pools, and integer-weighted outcome rows for table dynamics."""

    def __init__(self, system: MeasurementSystem):
        self.system = system
        self.items: dict[Configuration, list] = {}
        self.urn_pools: dict[tuple[str, str], Configuration] = {}
        self.rows: dict[tuple[Configuration, str], tuple[int, list]] = {}

    def flat_items(self, config: Configuration) -> list:
        cached = self.items.get(config)
        if cached is None:
            cached = [item for item, n in config.counts for _ in range(n)]
            self.items[config] = cached
        return cached

    def urn_pool(self, var: Variable, value: str) -> Configuration:
        key = (var.name, value)
        pool = self.urn_pools.get(key)
        if pool is None:
            system = self.system
            pool = system.population.restrict(
                lambda it: system.item_value(it, var) == value
            )
            self.urn_pools[key] = pool
        return pool

    def table_row(self, config: Configuration, var: Variable) -> tuple[int, list]:
        key = (config, var.name)
        cached = self.rows.get(key)
        if cached is None:
            dyn = self.system.dynamics
            assert isinstance(dyn, TableDynamics)
            entries = [
                (value, Fraction(p))
                for value, p in dyn.outcome[key].items()
                if p > 0
            ]
            common = math.lcm(*(p.denominator for _, p in entries))
            weighted = [
                (value, p.numerator * (common // p.denominator)) for value, p in entries
            ]
            cached = (common, weighted)
            self.rows[key] = cached
        return cached

    def sample(
        self, rng: random.Random, config: Configuration, var: Variable
    ) -> tuple[str, Configuration]:
        """One manifestation of ``var``: the reported value and the next pool."""
        dyn = self.system.dynamics
        if isinstance(dyn, TableDynamics):
            common, weighted = self.table_row(config, var)
            pick = rng.randrange(common)
            for value, weight in weighted:
                if pick < weight:
                    return value, dyn.update[(config, var.name, value)]
                pick -= weight
            raise AssertionError("unreachable")
        flat = self.flat_items(config)
        item = flat[rng.randrange(len(flat))]
        value = self.system.item_value(item, var)
        if isinstance(dyn, UrnDynamics):
            return value, self.urn_pool(var, value)
        assert isinstance(dyn, DeckDynamics)
        return value, config if dyn.rule.replaces(item) else config.remove_one(item)


def _run_trial(
    rng: random.Random,
    sampler: _Sampler,
    prep: Sequence[tuple[Event, Variable]],
    seq: Sequence[tuple[Event, Variable]],
) -> int:
    system = sampler.system
    for _ in range(_MAX_PREP_ATTEMPTS):
        config = system.initial[rng.randrange(len(system.initial))]
        prepared = True
        for event, var in prep:
            if config.total == 0:
                prepared = False
                break
            value, config = sampler.sample(rng, config, var)
            if value != event.value:
                prepared = False
                break
        if prepared:
            break
    else:
        raise RuntimeError("preparation rejection sampling did not terminate")
    for event, var in seq:
        if config.total == 0:
            return 0
        value, config = sampler.sample(rng, config, var)
        if value != event.value:
            return 0
    return 1


def monte_carlo_estimate(
    system: MeasurementSystem,
    prep: Sequence[Event],
    seq: Sequence[Event],
    trials: int,
    seed: int,
) -> MonteCarloResult:
    """Estimate the probability of ``seq`` after preparing with ``prep``.

    ``within_bound`` compares the estimate against the exact value at four
    binomial standard deviations.  Raises `ZeroConditionError` before any
    sampling when the preparation has exact probability zero.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not seq:
        raise ValueError("seq must be non-empty")
    state: PState | None = system.initial_state()
    for event in prep:
        p, state = filter_event(system, state, event)
        if p == 0 or state is None:
            raise ZeroConditionError(
                f"preparation event {event.variable}={event.value} has probability zero"
            )
    exact = sequence_prob(system, state, seq)

    prep_vars = [(e, system.variable(e.variable)) for e in prep]
    seq_vars = [(e, system.variable(e.variable)) for e in seq]
    sampler = _Sampler(system)
    sub_seeds = np.random.default_rng(seed).integers(2**63, size=trials)
    rng = random.Random()
    hits = 0
    for index in range(trials):
        rng.seed(int(sub_seeds[index]))
        hits += _run_trial(rng, sampler, prep_vars, seq_vars)
    estimate = hits / trials
    p = float(exact)
    bound = 4.0 * math.sqrt(p * (1.0 - p) / trials)
    return MonteCarloResult(
        hits, trials, estimate, exact, bound, abs(estimate - p) <= bound, seed
    )
