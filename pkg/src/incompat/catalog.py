"""Constructors and serialization for the example systems.

The JSON schema for a system document:

    {
      "dynamics": "urn" | "deck" | "table",
      "variables": [
        {"name": str, "values": [str, ...]},
        {"name": str, "values": [...], "coarse_of": str,
         "blocks": {<coarse value>: [<base value>, ...]}}
      ],
      "population": [{<base variable>: <value>, ..., "count": int}, ...],
      "initial": "full" | [[{<labels>, "count": int}, ...], ...],
      "replacement_rule": {"variable": str, "replace_on": [str, ...]},   # deck only
      "outcome_table": {<state>: {<variable>: {<value>: {"num": str, "den": str}}}},  # table only
      "update_table":  {<state>: {<variable>: {<value>: <state>}}}       # table only
    }

Rationals serialize as {"num": decimal string, "den": decimal string} so
readers never lose precision or overflow.  Items serialize as flat label
objects with a trailing "count".  Unknown fields are rejected.  Table
configurations are singleton items with the reserved label "state";
update entries are required exactly for the values of positive outcome
probability.
"""
from __future__ import annotations

import json
import random
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .core import (
    Configuration,
    DeckDynamics,
    Event,
    Item,
    MeasurementSystem,
    ReplacementRule,
    TableDynamics,
    UrnDynamics,
    Variable,
    reachable_configs,
)
from .errors import SpecError

_STATE = "state"


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_card_example(replace_on: Iterable[str] = ("Spades",)) -> MeasurementSystem:
    """Four-card deck (King/Queen of Hearts/Spades) with a selective
    replacement rule, "replace if Suit is in replace_on, discard otherwise".

    The default rule replaces Spades only, which makes Face and Suit
    incompatible; pass both suits for drawing with replacement, or an
    empty iterable for drawing without replacement.
    """
    face = Variable.base("Face", ("King", "Queen"))
    suit = Variable.base("Suit", ("Hearts", "Spades"))
    cards = Configuration.of(
        {
            Item.make(Face=f, Suit=s): 1
            for f in face.values
            for s in suit.values
        }
    )
    replace = frozenset(replace_on)
    if replace == frozenset(suit.values):
        name = "deck-replace"
    elif not replace:
        name = "deck-discard"
    else:
        name = "card"
    return MeasurementSystem(
        population=cards,
        variables=(face, suit),
        dynamics=DeckDynamics(ReplacementRule("Suit", replace)),
        initial=(cards,),
        name=name,
    )


# Ball counts by (Color, Pattern).  Chosen so that every color class mixes
# at least two patterns and vice versa (no reachable state is sharp in
# both base variables) and the coarse "Grue" dynamics interfere with the
# fine ones; both facts are re-verified by the test suite's enumeration
# oracle.
URN_POPULATION: Mapping[tuple[str, str], int] = {
    ("Yellow", "Plain"): 2,
    ("Yellow", "Dotted"): 1,
    ("Green", "Plain"): 1,
    ("Green", "Dotted"): 1,
    ("Green", "Striped"): 1,
    ("Blue", "Dotted"): 2,
    ("Blue", "Striped"): 1,
}


def build_urn_example(include_colorblind: bool = True) -> MeasurementSystem:
    """Nine-ball urn over Color (Yellow, Green, Blue) and Pattern (Plain,
    Dotted, Striped).

    Manifesting a value refills the urn with all population balls carrying
    it.  With ``include_colorblind`` a coarse variable ColorBlind is
    registered alongside Color, distinguishing only Yellow and Grue
    (not-Yellow); its Grue manifestation pools all Green and Blue balls.
    """
    color = Variable.base("Color", ("Yellow", "Green", "Blue"))
    pattern = Variable.base("Pattern", ("Plain", "Dotted", "Striped"))
    variables: tuple[Variable, ...] = (color, pattern)
    if include_colorblind:
        colorblind = Variable.coarse(
            "ColorBlind", "Color", {"Yellow": ("Yellow",), "Grue": ("Green", "Blue")}
        )
        variables = (color, pattern, colorblind)
    balls = Configuration.of(
        {Item.make(Color=c, Pattern=p): n for (c, p), n in URN_POPULATION.items()}
    )
    return MeasurementSystem(
        population=balls,
        variables=variables,
        dynamics=UrnDynamics(),
        initial=(balls,),
        name="urn",
    )


_BUILTINS = {
    "urn": lambda: build_urn_example(True),
    "card": lambda: build_card_example(("Spades",)),
    "deck-replace": lambda: build_card_example(("Hearts", "Spades")),
    "deck-discard": lambda: build_card_example(()),
}


def builtin_names() -> tuple[str, ...]:
    return tuple(_BUILTINS)


def builtin_system(name: str) -> MeasurementSystem:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise SpecError(f"unknown builtin system {name!r}") from None


# ---------------------------------------------------------------------------
# Random table systems
# ---------------------------------------------------------------------------

def random_table_system(
    num_configs: int,
    variables: Sequence[tuple[str, int]],
    seed: int,
) -> MeasurementSystem:
    """Random table-driven system, deterministic for a fixed seed.

    Outcome rows are random rational distributions with denominators at
    most 12; update entries point at uniformly random states.  States
    unreachable from the first one are pruned, so the returned universe is
    reachable by construction.
    """
    if num_configs < 1:
        raise ValueError("num_configs must be at least 1")
    if any(n < 2 for _, n in variables):
        raise ValueError("every variable needs at least 2 values")
    rng = random.Random(seed)
    var_objs = tuple(
        Variable.base(name, tuple(f"{name.lower()}{k}" for k in range(n)))
        for name, n in variables
    )
    states = [Configuration.of({Item.make(state=f"c{i}"): 1}) for i in range(num_configs)]
    outcome: dict[tuple[Configuration, str], dict[str, Fraction]] = {}
    update: dict[tuple[Configuration, str, str], Configuration] = {}
    for config in states:
        for var in var_objs:
            den = rng.randint(1, 12)
            cuts = sorted(rng.randint(0, den) for _ in range(len(var.values) - 1))
            parts = [b - a for a, b in zip([0, *cuts], [*cuts, den])]
            row = {v: Fraction(p, den) for v, p in zip(var.values, parts)}
            outcome[(config, var.name)] = row
            for value, p in row.items():
                if p > 0:
                    update[(config, var.name, value)] = states[rng.randrange(num_configs)]

    # Prune states unreachable from c0 and the table entries that mention them.
    keep: set[Configuration] = {states[0]}
    frontier = [states[0]]
    while frontier:
        config = frontier.pop()
        for var in var_objs:
            for value, p in outcome[(config, var.name)].items():
                if p > 0:
                    nxt = update[(config, var.name, value)]
                    if nxt not in keep:
                        keep.add(nxt)
                        frontier.append(nxt)
    kept = tuple(c for c in states if c in keep)
    outcome = {key: row for key, row in outcome.items() if key[0] in keep}
    update = {key: tgt for key, tgt in update.items() if key[0] in keep}
    population = Configuration.of({c.counts[0][0]: 1 for c in kept})
    return MeasurementSystem(
        population=population,
        variables=var_objs,
        dynamics=TableDynamics(kept, outcome, update),
        initial=(kept[0],),
        name=f"table-{seed}",
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fraction_json(f: Fraction) -> dict[str, str]:
    return {"num": str(f.numerator), "den": str(f.denominator)}


def _item_json(item: Item, count: int, label_order: Sequence[str]) -> dict[str, Any]:
    obj: dict[str, Any] = {}
    labels = dict(item.labels)
    for name in label_order:
        if name in labels:
            obj[name] = labels[name]
    for name, value in item.labels:
        if name not in obj:
            obj[name] = value
    obj["count"] = count
    return obj


def _config_json(config: Configuration, label_order: Sequence[str]) -> list[dict[str, Any]]:
    return [_item_json(item, n, label_order) for item, n in config.counts]


def _state_label(config: Configuration) -> str:
    return config.counts[0][0].labels[0][1]


def save_system(system: MeasurementSystem) -> dict[str, Any]:
    """Serialize a system to the documented JSON shape (canonical field
    and entry ordering, so save(load(x)) == x for canonical x)."""
    doc: dict[str, Any] = {}
    variables: list[dict[str, Any]] = []
    for var in system.variables:
        entry: dict[str, Any] = {"name": var.name, "values": list(var.values)}
        if var.is_coarse:
            entry["coarse_of"] = var.coarse_of
            entry["blocks"] = {cv: list(bvs) for cv, bvs in var.blocks or ()}
        variables.append(entry)
    label_order = [v.name for v in system.base_variables()]
    dyn = system.dynamics
    if isinstance(dyn, UrnDynamics):
        doc["dynamics"] = "urn"
    elif isinstance(dyn, DeckDynamics):
        doc["dynamics"] = "deck"
    else:
        doc["dynamics"] = "table"
        label_order = [_STATE]
    doc["variables"] = variables
    doc["population"] = _config_json(system.population, label_order)
    if not isinstance(dyn, TableDynamics) and system.initial == (system.population,):
        doc["initial"] = "full"
    else:
        doc["initial"] = [_config_json(c, label_order) for c in system.initial]
    if isinstance(dyn, DeckDynamics):
        doc["replacement_rule"] = {
            "variable": dyn.rule.variable,
            "replace_on": sorted(dyn.rule.replace_on),
        }
    if isinstance(dyn, TableDynamics):
        states = sorted(dyn.configs, key=_state_label)
        doc["outcome_table"] = {
            _state_label(c): {
                var.name: {
                    value: _fraction_json(Fraction(p))
                    for value, p in dyn.outcome[(c, var.name)].items()
                }
                for var in system.variables
            }
            for c in states
        }
        doc["update_table"] = {
            _state_label(c): {
                var.name: {
                    value: _state_label(dyn.update[(c, var.name, value)])
                    for value, p in dyn.outcome[(c, var.name)].items()
                    if Fraction(p) > 0
                }
                for var in system.variables
            }
            for c in states
        }
    return doc


class _Reader:
    """Schema walker that tracks a JSON pointer for error reporting."""

    def __init__(self, doc: Any):
        self.doc = doc

    @staticmethod
    def fail(path: str, message: str) -> None:
        raise SpecError(message, path)

    def obj(self, value: Any, path: str, allowed: set[str], required: set[str]) -> dict:
        if not isinstance(value, dict):
            self.fail(path, "expected an object")
        for key in value:
            if key not in allowed:
                self.fail(f"{path}/{key}", "unknown field")
        for key in required:
            if key not in value:
                self.fail(path, f"missing required field {key!r}")
        return value

    def string(self, value: Any, path: str) -> str:
        if not isinstance(value, str):
            self.fail(path, "expected a string")
        return value

    def array(self, value: Any, path: str) -> list:
        if not isinstance(value, list):
            self.fail(path, "expected an array")
        return value

    def count(self, value: Any, path: str) -> int:
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            self.fail(path, "expected a positive integer")
        return value

    def fraction(self, value: Any, path: str) -> Fraction:
        obj = self.obj(value, path, {"num", "den"}, {"num", "den"})
        num = self.string(obj["num"], f"{path}/num")
        den = self.string(obj["den"], f"{path}/den")
        try:
            f = Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            self.fail(path, "num and den must be decimal integers with den != 0")
        return f


def _read_variables(reader: _Reader, raw: Any) -> tuple[Variable, ...]:
    variables: list[Variable] = []
    for i, entry in enumerate(reader.array(raw, "/variables")):
        path = f"/variables/{i}"
        obj = reader.obj(entry, path, {"name", "values", "coarse_of", "blocks"}, {"name", "values"})
        name = reader.string(obj["name"], f"{path}/name")
        values = tuple(
            reader.string(v, f"{path}/values/{j}")
            for j, v in enumerate(reader.array(obj["values"], f"{path}/values"))
        )
        if ("coarse_of" in obj) != ("blocks" in obj):
            reader.fail(path, "coarse_of and blocks must be given together")
        if "coarse_of" not in obj:
            variables.append(Variable.base(name, values))
            continue
        base_name = reader.string(obj["coarse_of"], f"{path}/coarse_of")
        blocks_raw = obj["blocks"]
        if not isinstance(blocks_raw, dict):
            reader.fail(f"{path}/blocks", "expected an object")
        blocks: dict[str, tuple[str, ...]] = {}
        for cv, bvs in blocks_raw.items():
            blocks[cv] = tuple(
                reader.string(b, f"{path}/blocks/{cv}/{j}")
                for j, b in enumerate(reader.array(bvs, f"{path}/blocks/{cv}"))
            )
        if set(blocks) != set(values):
            reader.fail(f"{path}/blocks", "block keys must equal the variable's values")
        base = next((v for v in variables if v.name == base_name and not v.is_coarse), None)
        if base is None:
            reader.fail(f"{path}/coarse_of", f"{base_name!r} is not a preceding base variable")
        assert base is not None
        pooled = [b for bvs in blocks.values() for b in bvs]
        if sorted(pooled) != sorted(base.values):
            reader.fail(f"{path}/blocks", f"blocks must partition the values of {base_name!r}")
        ordered = {cv: blocks[cv] for cv in values}
        variables.append(Variable.coarse(name, base_name, ordered))
    return tuple(variables)


def _read_config(reader: _Reader, raw: Any, path: str) -> Configuration:
    counts: list[tuple[Item, int]] = []
    for i, entry in enumerate(reader.array(raw, path)):
        ipath = f"{path}/{i}"
        if not isinstance(entry, dict):
            reader.fail(ipath, "expected an item object")
        if "count" not in entry:
            reader.fail(ipath, "missing required field 'count'")
        labels = {}
        for key, value in entry.items():
            if key == "count":
                continue
            labels[key] = reader.string(value, f"{ipath}/{key}")
        if not labels:
            reader.fail(ipath, "item needs at least one label")
        counts.append((Item.of(labels), reader.count(entry["count"], f"{ipath}/count")))
    return Configuration.of(counts)


def load_system(document: str | Mapping[str, Any]) -> MeasurementSystem:
    """Parse and validate a system document.

    Raises `SpecError` (with a JSON-pointer path) for schema violations
    and `ValidationError` for semantic invariant violations.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecError(f"not valid JSON: {exc}") from None
    else:
        doc = dict(document)
    reader = _Reader(doc)
    kind_fields = {
        "urn": set(),
        "deck": {"replacement_rule"},
        "table": {"outcome_table", "update_table"},
    }
    base_fields = {"dynamics", "variables", "population", "initial"}
    obj = reader.obj(doc, "", base_fields | {"replacement_rule", "outcome_table", "update_table"},
                     base_fields)
    kind = reader.string(obj["dynamics"], "/dynamics")
    if kind not in kind_fields:
        reader.fail("/dynamics", "must be one of 'urn', 'deck', 'table'")
    allowed = base_fields | kind_fields[kind]
    for key in obj:
        if key not in allowed:
            reader.fail(f"/{key}", f"field not allowed for {kind!r} dynamics")
    for key in kind_fields[kind]:
        if key not in obj:
            reader.fail("", f"missing required field {key!r} for {kind!r} dynamics")

    variables = _read_variables(reader, obj["variables"])
    population = _read_config(reader, obj["population"], "/population")

    if obj["initial"] == "full":
        if kind == "table":
            reader.fail("/initial", "table systems need explicit initial configurations")
        initial: tuple[Configuration, ...] = (population,)
    else:
        raw_initial = reader.array(obj["initial"], "/initial")
        initial = tuple(
            _read_config(reader, c, f"/initial/{i}") for i, c in enumerate(raw_initial)
        )

    if kind == "urn":
        return MeasurementSystem(population, variables, UrnDynamics(), initial)
    if kind == "deck":
        rule_obj = reader.obj(
            obj["replacement_rule"], "/replacement_rule",
            {"variable", "replace_on"}, {"variable", "replace_on"},
        )
        rule = ReplacementRule(
            reader.string(rule_obj["variable"], "/replacement_rule/variable"),
            frozenset(
                reader.string(v, f"/replacement_rule/replace_on/{i}")
                for i, v in enumerate(
                    reader.array(rule_obj["replace_on"], "/replacement_rule/replace_on")
                )
            ),
        )
        return MeasurementSystem(population, variables, DeckDynamics(rule), initial)

    by_state = {}
    for item, n in population.counts:
        if n != 1 or len(item.labels) != 1:
            reader.fail("/population", "table population must list singleton state items")
        by_state[item.labels[0][1]] = Configuration.of({item: 1})
    outcome: dict[tuple[Configuration, str], dict[str, Fraction]] = {}
    update: dict[tuple[Configuration, str, str], Configuration] = {}
    raw_outcome = obj["outcome_table"]
    raw_update = obj["update_table"]
    if not isinstance(raw_outcome, dict):
        reader.fail("/outcome_table", "expected an object")
    if not isinstance(raw_update, dict):
        reader.fail("/update_table", "expected an object")
    for state, rows in raw_outcome.items():
        spath = f"/outcome_table/{state}"
        if state not in by_state:
            reader.fail(spath, "unknown state")
        if not isinstance(rows, dict):
            reader.fail(spath, "expected an object")
        for var_name, row in rows.items():
            vpath = f"{spath}/{var_name}"
            if not isinstance(row, dict):
                reader.fail(vpath, "expected an object")
            outcome[(by_state[state], var_name)] = {
                value: reader.fraction(p, f"{vpath}/{value}") for value, p in row.items()
            }
    for state, rows in raw_update.items():
        spath = f"/update_table/{state}"
        if state not in by_state:
            reader.fail(spath, "unknown state")
        if not isinstance(rows, dict):
            reader.fail(spath, "expected an object")
        for var_name, row in rows.items():
            vpath = f"{spath}/{var_name}"
            if not isinstance(row, dict):
                reader.fail(vpath, "expected an object")
            for value, target in row.items():
                target_name = reader.string(target, f"{vpath}/{value}")
                if target_name not in by_state:
                    reader.fail(f"{vpath}/{value}", f"unknown target state {target_name!r}")
                update[(by_state[state], var_name, value)] = by_state[target_name]
    configs = tuple(by_state[s] for s in sorted(by_state))
    return MeasurementSystem(population, variables, TableDynamics(configs, outcome, update), initial)


def dumps_system(system: MeasurementSystem, indent: int | None = 2) -> str:
    return json.dumps(save_system(system), indent=indent)
