"""Exact probability engine for finite classical measurement systems.

A system is a finite pool of labeled items (an urn of balls, a deck of
cards, or an abstract table-driven process) together with variables that
can be "manifested": a measurement reports a value at random and updates
the pool.  This module provides

  * the immutable data model: variables (base and coarse-grained), items,
    configurations (multisets of items), events, probability states;
  * the outcome law and the pool-update dynamics for urn, deck and table
    systems;
  * event filtering, sequential "and then" probabilities, conditional
    probabilities, and the closure of reachable configurations.

All probabilities are `fractions.Fraction`, so every downstream equality
verdict is exact.  Values are immutable after construction and every
function is pure; concurrent readers need no synchronization.

A configuration with an empty pool assigns probability zero to every
event inside the probability engine (a drained deck cannot manifest
anything), while a direct `outcome_distribution` call on an empty pool
raises `EmptyPoolError`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import (
    EmptyPoolError,
    UnknownValueError,
    UnknownVariableError,
    ValidationError,
    ZeroConditionError,
)

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    """A measurable variable.

    A base variable owns its values directly.  A coarse variable pools the
    values of a base variable into blocks; manifesting a coarse value
    refills the pool with the whole block.
    """

    name: str
    values: tuple[str, ...]
    coarse_of: str | None = None
    blocks: tuple[tuple[str, tuple[str, ...]], ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("variable name must be non-empty")
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 2:
            raise ValidationError(f"variable {self.name!r} needs at least 2 values")
        if len(set(values)) != len(values):
            raise ValidationError(f"variable {self.name!r} has duplicate values")
        if any(not v for v in values):
            raise ValidationError(f"variable {self.name!r} has an empty value label")
        if (self.coarse_of is None) != (self.blocks is None):
            raise ValidationError(
                f"variable {self.name!r}: coarse_of and blocks must be given together"
            )
        if self.blocks is not None:
            blocks = tuple((cv, tuple(bvs)) for cv, bvs in self.blocks)
            object.__setattr__(self, "blocks", blocks)
            if tuple(cv for cv, _ in blocks) != values:
                raise ValidationError(
                    f"coarse variable {self.name!r}: block keys must equal its values"
                )
            if any(not bvs for _, bvs in blocks):
                raise ValidationError(
                    f"coarse variable {self.name!r}: blocks must be non-empty"
                )

    @staticmethod
    def base(name: str, values: Iterable[str]) -> Variable:
        return Variable(name, tuple(values))

    @staticmethod
    def coarse(name: str, base: str, blocks: Mapping[str, Iterable[str]]) -> Variable:
        """Build a coarse variable; block order defines the value order."""
        items = tuple((cv, tuple(bvs)) for cv, bvs in blocks.items())
        return Variable(name, tuple(cv for cv, _ in items), base, items)

    @property
    def is_coarse(self) -> bool:
        return self.coarse_of is not None

    def block(self, coarse_value: str) -> tuple[str, ...]:
        """Base values pooled by ``coarse_value``."""
        if self.blocks is None:
            raise ValidationError(f"variable {self.name!r} is not coarse")
        for cv, bvs in self.blocks:
            if cv == coarse_value:
                return bvs
        raise UnknownValueError(f"{coarse_value!r} is not a value of {self.name!r}")


@dataclass(frozen=True, order=True)
class Item:
    """One pool member, carrying exactly one label per base variable."""

    labels: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(sorted(self.labels)))

    @staticmethod
    def make(**labels: str) -> Item:
        return Item(tuple(labels.items()))

    @staticmethod
    def of(labels: Mapping[str, str]) -> Item:
        return Item(tuple(labels.items()))

    def value(self, variable_name: str) -> str:
        for name, value in self.labels:
            if name == variable_name:
                return value
        raise UnknownVariableError(f"item carries no label for {variable_name!r}")

    def label_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.labels)


@dataclass(frozen=True)
class Configuration:
    """A multiset of items: the current content of the active pool.

    Entries are canonically sorted and merged so that equal multisets
    compare (and hash) equal regardless of construction order.  The empty
    configuration is representable; it cannot be presented to a
    measurement.
    """

    counts: tuple[tuple[Item, int], ...]

    def __post_init__(self) -> None:
        merged: dict[Item, int] = {}
        for item, n in self.counts:
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise ValidationError(f"item count must be a positive integer, got {n!r}")
            merged[item] = merged.get(item, 0) + n
        object.__setattr__(self, "counts", tuple(sorted(merged.items())))

    @staticmethod
    def of(counts: Mapping[Item, int] | Iterable[tuple[Item, int]]) -> Configuration:
        pairs = counts.items() if isinstance(counts, Mapping) else counts
        return Configuration(tuple(pairs))

    @property
    def total(self) -> int:
        return sum(n for _, n in self.counts)

    @property
    def is_empty(self) -> bool:
        return not self.counts

    def count(self, item: Item) -> int:
        for it, n in self.counts:
            if it == item:
                return n
        return 0

    def remove_one(self, item: Item) -> Configuration:
        if self.count(item) < 1:
            raise ValidationError("cannot remove an item that is not present")
        return Configuration(
            tuple((it, n - 1 if it == item else n) for it, n in self.counts if n - (it == item) > 0)
        )

    def restrict(self, keep) -> Configuration:
        """Sub-multiset of the items for which ``keep(item)`` is true."""
        return Configuration(tuple((it, n) for it, n in self.counts if keep(it)))

    def is_submultiset_of(self, other: Configuration) -> bool:
        return all(other.count(it) >= n for it, n in self.counts)


@dataclass(frozen=True, order=True)
class Event:
    """The elementary proposition "variable takes this value"."""

    variable: str
    value: str


@dataclass(frozen=True)
class PState:
    """An exact probability state: positive rational weights over
    configurations, summing to one."""

    weights: tuple[tuple[Configuration, Fraction], ...]

    def __post_init__(self) -> None:
        merged: dict[Configuration, Fraction] = {}
        for config, w in self.weights:
            if not isinstance(w, (int, Fraction)) or isinstance(w, bool):
                raise ValidationError(f"weights must be exact rationals, got {type(w).__name__}")
            w = Fraction(w)
            if w <= 0:
                raise ValidationError("p-state weights must be positive")
            merged[config] = merged.get(config, ZERO) + w
        if sum(merged.values(), ZERO) != ONE:
            raise ValidationError("p-state weights must sum to exactly 1")
        object.__setattr__(
            self, "weights", tuple(sorted(merged.items(), key=lambda cw: cw[0].counts))
        )

    @staticmethod
    def point(config: Configuration) -> PState:
        return PState(((config, ONE),))

    @staticmethod
    def of(weights: Mapping[Configuration, Fraction] | Iterable[tuple[Configuration, Fraction]]) -> PState:
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        return PState(tuple(pairs))

    @staticmethod
    def mix(parts: Iterable[tuple[PState, Fraction]]) -> PState:
        """Convex combination of p-states with rational coefficients."""
        acc: dict[Configuration, Fraction] = {}
        for state, coeff in parts:
            for config, w in state.weights:
                acc[config] = acc.get(config, ZERO) + Fraction(coeff) * w
        return PState.of(acc)

    @property
    def support(self) -> tuple[Configuration, ...]:
        return tuple(c for c, _ in self.weights)

    def weight(self, config: Configuration) -> Fraction:
        for c, w in self.weights:
            if c == config:
                return w
        return ZERO


@dataclass(frozen=True)
class ReplacementRule:
    """Deck rule: the drawn item is put back iff its label for ``variable``
    is in ``replace_on``; otherwise it is discarded."""

    variable: str
    replace_on: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "replace_on", frozenset(self.replace_on))

    def replaces(self, item: Item) -> bool:
        return item.value(self.variable) in self.replace_on


@dataclass(frozen=True)
class UrnDynamics:
    """Manifesting a value refills the pool with every population item
    carrying that value (the whole block, for a coarse value)."""


@dataclass(frozen=True)
class DeckDynamics:
    """Draw one item; replace or discard it according to the rule."""

    rule: ReplacementRule


@dataclass(frozen=True, eq=False)
class TableDynamics:
    """Abstract dynamics given by explicit outcome and update tables.

    ``configs`` is the configuration universe (singleton multisets of
    synthetic state items).  ``outcome[(config, variable)]`` is an exact
    distribution over the variable's values; ``update[(config, variable,
    value)]`` is the successor configuration, present for every value of
    positive outcome probability.
    """

    configs: tuple[Configuration, ...]
    outcome: Mapping[tuple[Configuration, str], Mapping[str, Fraction]]
    update: Mapping[tuple[Configuration, str, str], Configuration]


Dynamics = Union[UrnDynamics, DeckDynamics, TableDynamics]


@dataclass(eq=False)
class MeasurementSystem:
    """A finite stochastic measurement system.

    Treated as immutable after construction; `__post_init__` validates all
    structural invariants and raises `ValidationError` on violation.
    """

    population: Configuration
    variables: tuple[Variable, ...]
    dynamics: Dynamics
    initial: tuple[Configuration, ...]
    name: str = ""

    def __post_init__(self) -> None:
        self.variables = tuple(self.variables)
        self.initial = tuple(self.initial)
        by_name: dict[str, Variable] = {}
        for var in self.variables:
            if var.name in by_name:
                raise ValidationError(f"duplicate variable name {var.name!r}")
            by_name[var.name] = var
        self._by_name = by_name
        self._validate_variables()
        coarse_value_of: dict[tuple[str, str], str] = {}
        for var in self.variables:
            if var.is_coarse:
                for cv, bvs in var.blocks or ():
                    for bv in bvs:
                        coarse_value_of[(var.name, bv)] = cv
        self._coarse_value_of = coarse_value_of
        if not self.initial:
            raise ValidationError("at least one initial configuration is required")
        if isinstance(self.dynamics, TableDynamics):
            self._validate_table()
        else:
            self._validate_pool()

    # -- validation ---------------------------------------------------------

    def _validate_variables(self) -> None:
        for var in self.variables:
            if not var.is_coarse:
                continue
            base = self._by_name.get(var.coarse_of or "")
            if base is None or base.is_coarse:
                raise ValidationError(
                    f"coarse variable {var.name!r} must refer to a base variable"
                )
            seen: list[str] = []
            for _, bvs in var.blocks or ():
                seen.extend(bvs)
            if sorted(seen) != sorted(base.values):
                raise ValidationError(
                    f"blocks of {var.name!r} must partition the values of {base.name!r}"
                )

    def _validate_pool(self) -> None:
        base_names = sorted(v.name for v in self.base_variables())
        if not base_names:
            raise ValidationError("a pool system needs at least one base variable")
        if self.population.is_empty:
            raise ValidationError("population must be non-empty")
        for item, _ in self.population.counts:
            if sorted(item.label_names()) != base_names:
                raise ValidationError(
                    f"item {dict(item.labels)!r} must carry exactly one label per base variable"
                )
            for name, value in item.labels:
                if value not in self._by_name[name].values:
                    raise ValidationError(
                        f"item label {name}={value!r} is not a value of {name!r}"
                    )
        for config in self.initial:
            if config.is_empty:
                raise ValidationError("initial configurations must be non-empty")
            if not config.is_submultiset_of(self.population):
                raise ValidationError("initial configurations must come from the population")
        if isinstance(self.dynamics, DeckDynamics):
            rule = self.dynamics.rule
            var = self._by_name.get(rule.variable)
            if var is None or var.is_coarse:
                raise ValidationError("replacement rule must name a base variable")
            if not rule.replace_on <= set(var.values):
                raise ValidationError("replace_on must be a subset of the rule variable's values")

    def _validate_table(self) -> None:
        dyn = self.dynamics
        assert isinstance(dyn, TableDynamics)
        if any(v.is_coarse for v in self.variables):
            raise ValidationError("coarse variables are not supported for table dynamics")
        if not dyn.configs:
            raise ValidationError("table dynamics needs a non-empty configuration universe")
        universe = set(dyn.configs)
        if len(universe) != len(dyn.configs):
            raise ValidationError("table configurations must be distinct")
        for config in dyn.configs:
            if len(config.counts) != 1 or config.total != 1:
                raise ValidationError("table configurations must be singleton state items")
        for config in self.initial:
            if config not in universe:
                raise ValidationError("initial configurations must belong to the table universe")
        for config in dyn.configs:
            for var in self.variables:
                row = dyn.outcome.get((config, var.name))
                if row is None:
                    raise ValidationError(
                        f"missing outcome row for ({_state_name(config)}, {var.name})"
                    )
                if not set(row) <= set(var.values):
                    raise ValidationError(
                        f"outcome row for ({_state_name(config)}, {var.name}) has unknown values"
                    )
                total = ZERO
                for value, p in row.items():
                    p = Fraction(p)
                    if p < 0:
                        raise ValidationError("outcome probabilities must be non-negative")
                    total += p
                    if p > 0 and (config, var.name, value) not in dyn.update:
                        raise ValidationError(
                            f"missing update entry for ({_state_name(config)}, {var.name}, {value})"
                        )
                if total != ONE:
                    raise ValidationError(
                        f"outcome row for ({_state_name(config)}, {var.name}) sums to {total}, not 1"
                    )
        for (_, _, _), target in dyn.update.items():
            if target not in universe:
                raise ValidationError("update entries must target the table universe")

    # -- lookups ------------------------------------------------------------

    def variable(self, name: str | Variable) -> Variable:
        if isinstance(name, Variable):
            name = name.name
        var = self._by_name.get(name)
        if var is None:
            raise UnknownVariableError(f"unknown variable {name!r}")
        return var

    def base_variables(self) -> tuple[Variable, ...]:
        return tuple(v for v in self.variables if not v.is_coarse)

    def events(self) -> Iterator[Event]:
        """All events, in variable and value declaration order."""
        for var in self.variables:
            for value in var.values:
                yield Event(var.name, value)

    def item_value(self, item: Item, variable: Variable) -> str:
        """The value ``item`` manifests for ``variable`` (block value for a
        coarse variable)."""
        if not variable.is_coarse:
            return item.value(variable.name)
        return self._coarse_value_of[(variable.name, item.value(variable.coarse_of or ""))]

    def initial_state(self) -> PState:
        """Uniform mixture over the declared initial configurations."""
        share = Fraction(1, len(self.initial))
        return PState.of({c: share for c in self.initial})

    @property
    def is_table(self) -> bool:
        return isinstance(self.dynamics, TableDynamics)


def _state_name(config: Configuration) -> str:
    """Short display name for a singleton table configuration."""
    if len(config.counts) == 1:
        item, _ = config.counts[0]
        return item.labels[0][1]
    return repr(config)


# ---------------------------------------------------------------------------
# Outcome law and updates
# ---------------------------------------------------------------------------

def _require_event(system: MeasurementSystem, event: Event) -> Variable:
    var = system.variable(event.variable)
    if event.value not in var.values:
        raise UnknownValueError(f"{event.value!r} is not a value of {var.name!r}")
    return var


def event_probability(system: MeasurementSystem, config: Configuration, event: Event) -> Fraction:
    """Probability that one measurement of the event's variable reports the
    event's value.  Zero for an empty configuration."""
    var = _require_event(system, event)
    if config.is_empty:
        return ZERO
    if isinstance(system.dynamics, TableDynamics):
        row = system.dynamics.outcome.get((config, var.name))
        if row is None:
            raise ValidationError("configuration is not in the table universe")
        return Fraction(row.get(event.value, ZERO))
    matching = sum(n for item, n in config.counts if system.item_value(item, var) == event.value)
    return Fraction(matching, config.total)


def outcome_distribution(
    system: MeasurementSystem, config: Configuration, variable: str | Variable
) -> dict[str, Fraction]:
    """Exact outcome distribution of one measurement of ``variable``.

    Raises `EmptyPoolError` when the configuration is empty and
    `UnknownVariableError` for a variable not in the system.  The returned
    probabilities sum to exactly 1 and include zero entries.
    """
    var = system.variable(variable)
    if config.is_empty:
        raise EmptyPoolError("cannot measure an empty pool")
    return {value: event_probability(system, config, Event(var.name, value)) for value in var.values}


def _urn_pool(system: MeasurementSystem, var: Variable, value: str) -> Configuration:
    return system.population.restrict(lambda it: system.item_value(it, var) == value)


def _branches(
    system: MeasurementSystem, config: Configuration, event: Event, var: Variable
) -> Iterator[tuple[Configuration, Fraction]]:
    """Positive-probability (successor, probability) branches of measuring
    ``event`` on ``config``.  Deck dynamics branch per distinct drawn item
    because the replacement rule reads the hidden label."""
    if config.is_empty:
        return
    dyn = system.dynamics
    if isinstance(dyn, TableDynamics):
        row = dyn.outcome.get((config, var.name))
        if row is None:
            raise ValidationError("configuration is not in the table universe")
        p = Fraction(row.get(event.value, ZERO))
        if p > 0:
            yield dyn.update[(config, var.name, event.value)], p
        return
    total = config.total
    if isinstance(dyn, UrnDynamics):
        matching = sum(
            n for item, n in config.counts if system.item_value(item, var) == event.value
        )
        if matching:
            yield _urn_pool(system, var, event.value), Fraction(matching, total)
        return
    rule = dyn.rule
    for item, n in config.counts:
        if system.item_value(item, var) != event.value:
            continue
        successor = config if rule.replaces(item) else config.remove_one(item)
        yield successor, Fraction(n, total)


def update_config(
    system: MeasurementSystem,
    config: Configuration,
    event: Event,
    drawn: Item | None = None,
) -> Configuration:
    """Pool content after ``event`` has been manifested on ``config``.

    Urn dynamics refill from the population (the result may be empty when
    no population item carries the value; the error surfaces at the next
    measurement).  Deck dynamics depend on the drawn item: pass ``drawn``
    when distinct items consistent with the event would update differently.
    Table dynamics look the successor up directly.
    """
    var = _require_event(system, event)
    dyn = system.dynamics
    if isinstance(dyn, UrnDynamics):
        return _urn_pool(system, var, event.value)
    if isinstance(dyn, TableDynamics):
        target = dyn.update.get((config, var.name, event.value))
        if target is None:
            raise ValueError(
                "no update entry; the event has zero probability in this configuration"
            )
        return target
    if drawn is not None:
        if config.count(drawn) < 1:
            raise ValueError("drawn item is not in the configuration")
        if system.item_value(drawn, var) != event.value:
            raise ValueError("drawn item does not carry the event value")
        return config if dyn.rule.replaces(drawn) else config.remove_one(drawn)
    successors = {succ for succ, _ in _branches(system, config, event, var)}
    if not successors:
        raise ValueError("no item in the configuration carries the event value")
    if len(successors) > 1:
        raise ValueError(
            "ambiguous deck update: distinct drawn items disagree; pass drawn="
        )
    return successors.pop()


# ---------------------------------------------------------------------------
# Filtering and sequential probability
# ---------------------------------------------------------------------------

def filter_event(
    system: MeasurementSystem, sigma: PState, event: Event
) -> tuple[Fraction, PState | None]:
    """Condition ``sigma`` on observing ``event`` in one measurement.

    Returns the exact probability of the event together with the updated
    p-state.  A zero-probability event yields ``(0, None)``: conditioning
    on it is undefined, and sequence folds treat the tail as probability
    zero.
    """
    var = _require_event(system, event)
    acc: dict[Configuration, Fraction] = {}
    prob = ZERO
    for config, w in sigma.weights:
        for successor, p in _branches(system, config, event, var):
            share = w * p
            prob += share
            acc[successor] = acc.get(successor, ZERO) + share
    if prob == 0:
        return ZERO, None
    return prob, PState.of({c: w / prob for c, w in acc.items()})


def sequence_prob(
    system: MeasurementSystem, sigma: PState, events: Sequence[Event]
) -> Fraction:
    """Probability of observing ``events`` in order ("and then"), exactly.

    Left fold of `filter_event`; a zero-probability prefix makes the whole
    sequence probability zero regardless of the tail.
    """
    if not events:
        raise ValueError("events must be non-empty")
    prob = ONE
    state: PState | None = sigma
    for event in events:
        p, state = filter_event(system, state, event)
        prob *= p
        if prob == 0:
            return ZERO
        assert state is not None
    return prob


def single_event_prob(system: MeasurementSystem, sigma: PState, event: Event) -> Fraction:
    """Probability of ``event`` in a single measurement from ``sigma``."""
    var = _require_event(system, event)
    del var
    return sum(
        (w * event_probability(system, config, event) for config, w in sigma.weights),
        ZERO,
    )


def conditional_prob(
    system: MeasurementSystem,
    sigma: PState,
    target: Event,
    conditions: Sequence[Event],
) -> Fraction:
    """Probability of ``target`` given the ``conditions`` occurred first.

    Equals the sequence-probability ratio and, equivalently, the single
    event probability after filtering along the conditions.  Raises
    `ZeroConditionError` when the conditions have probability zero.
    """
    conds = tuple(conditions)
    denominator = sequence_prob(system, sigma, conds) if conds else ONE
    if denominator == 0:
        raise ZeroConditionError("conditioning sequence has probability zero")
    numerator = sequence_prob(system, sigma, conds + (target,))
    return numerator / denominator


# ---------------------------------------------------------------------------
# Reachability
# ---------------------------------------------------------------------------

def reachable_configs(system: MeasurementSystem) -> frozenset[Configuration]:
    """Least set containing the initial configurations and closed under
    every positive-probability manifestation.

    Deck dynamics enumerate each drawn-item branch, so configurations
    produced by any filter chain are all members.  An exhausted (empty)
    configuration is included when a discard chain can produce it.
    """
    seen: set[Configuration] = set(system.initial)
    frontier = list(system.initial)
    while frontier:
        config = frontier.pop()
        if config.is_empty:
            continue
        for var in system.variables:
            for value in var.values:
                for successor, _ in _branches(system, config, Event(var.name, value), var):
                    if successor not in seen:
                        seen.add(successor)
                        frontier.append(successor)
    return frozenset(seen)


def all_preparations(system: MeasurementSystem) -> frozenset[Configuration]:
    """Widened preparation domain: every non-empty sub-multiset of the
    population (the whole table universe for table dynamics)."""
    if isinstance(system.dynamics, TableDynamics):
        return frozenset(system.dynamics.configs)
    items = system.population.counts
    configs: set[Configuration] = set()
    for counts in product(*(range(n + 1) for _, n in items)):
        if not any(counts):
            continue
        configs.add(
            Configuration(tuple((it, c) for (it, _), c in zip(items, counts) if c))
        )
    return frozenset(configs)


def preparation_order(config: Configuration) -> tuple:
    """Deterministic ordering for preparations: largest pools first, then
    canonical content order.  The full initial pool therefore comes first
    in catalog systems."""
    return (-config.total, config.counts)


def canonical_preparations(
    system: MeasurementSystem,
    preparations: Iterable[Configuration] | None = None,
    widen: bool = False,
) -> tuple[Configuration, ...]:
    """The preparation domain in canonical order.

    Defaults to the reachable closure; ``widen=True`` swaps in
    `all_preparations`.  An explicit iterable overrides both.
    """
    if preparations is None:
        domain = all_preparations(system) if widen else reachable_configs(system)
    else:
        domain = frozenset(preparations)
    return tuple(sorted(domain, key=preparation_order))
