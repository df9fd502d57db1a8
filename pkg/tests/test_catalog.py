"""Catalog builders, the random table-system generator, and serialization."""
from __future__ import annotations

import json
from fractions import Fraction as F

import pytest

from incompat.catalog import (
    build_card_example,
    build_urn_example,
    builtin_system,
    dumps_system,
    load_system,
    random_table_system,
    save_system,
)
from incompat.core import Event, TableDynamics, reachable_configs, sequence_prob
from incompat.errors import SpecError, ValidationError

E = Event


class TestBuilders:
    def test_card_shape(self, card):
        assert len(card.variables) == 2
        assert all(len(v.values) == 2 for v in card.variables)
        assert card.population.total == 4
        assert card.initial == (card.population,)

    def test_card_reachable_count(self, card):
        assert len(reachable_configs(card)) == 4

    def test_card_sequence_anchor(self, card):
        state = card.initial_state()
        assert sequence_prob(card, state, [E("Face", "King"), E("Suit", "Spades")]) == F(7, 24)

    def test_urn_population(self, urn):
        assert urn.population.total == 9
        names = [v.name for v in urn.variables]
        assert names == ["Color", "Pattern", "ColorBlind"]
        cb = urn.variable("ColorBlind")
        assert cb.coarse_of == "Color"
        assert cb.block("Grue") == ("Green", "Blue")

    def test_urn_without_colorblind(self, urn_plain_colors):
        assert [v.name for v in urn_plain_colors.variables] == ["Color", "Pattern"]

    def test_builtin_names(self):
        for name in ("urn", "card", "deck-replace", "deck-discard"):
            assert builtin_system(name).name == name
        with pytest.raises(SpecError):
            builtin_system("bingo")


class TestRandomTableSystem:
    def test_deterministic_per_seed(self):
        a = random_table_system(4, [("P", 2), ("Q", 2)], seed=123)
        b = random_table_system(4, [("P", 2), ("Q", 2)], seed=123)
        assert save_system(a) == save_system(b)

    def test_single_config_self_loops(self):
        system = random_table_system(1, [("P", 2), ("Q", 3)], seed=5)
        dyn = system.dynamics
        assert isinstance(dyn, TableDynamics)
        assert len(dyn.configs) == 1
        only = dyn.configs[0]
        assert all(target == only for target in dyn.update.values())

    def test_rows_sum_to_one(self):
        system = random_table_system(5, [("P", 3), ("Q", 2)], seed=77)
        dyn = system.dynamics
        assert isinstance(dyn, TableDynamics)
        for row in dyn.outcome.values():
            assert sum(row.values()) == F(1)
            assert all(p.denominator <= 12 for p in row.values())

    def test_all_states_reachable(self):
        for seed in range(20):
            system = random_table_system(4, [("P", 2), ("Q", 2)], seed=seed)
            dyn = system.dynamics
            assert isinstance(dyn, TableDynamics)
            assert reachable_configs(system) == frozenset(dyn.configs)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            random_table_system(0, [("P", 2)], seed=1)
        with pytest.raises(ValueError):
            random_table_system(2, [("P", 1)], seed=1)


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["urn", "card", "deck-replace", "deck-discard"])
    def test_builtin_round_trip(self, name):
        system = builtin_system(name)
        doc = save_system(system)
        loaded = load_system(json.dumps(doc))
        assert save_system(loaded) == doc
        # loaded system behaves identically
        assert reachable_configs(loaded) == reachable_configs(system)

    def test_random_table_round_trip(self):
        for seed in range(8):
            system = random_table_system(4, [("P", 2), ("Q", 2)], seed=seed)
            doc = save_system(system)
            loaded = load_system(dumps_system(system))
            assert save_system(loaded) == doc
            events = [E("P", "p0"), E("Q", "q1")]
            assert sequence_prob(loaded, loaded.initial_state(), events) == sequence_prob(
                system, system.initial_state(), events
            )

    def test_loaded_card_equals_built(self, card):
        loaded = load_system(dumps_system(card))
        state = loaded.initial_state()
        assert sequence_prob(loaded, state, [E("Face", "King"), E("Suit", "Spades")]) == F(7, 24)


class TestSchemaErrors:
    def base_doc(self):
        return save_system(build_card_example())

    def test_unknown_top_level_field(self):
        doc = self.base_doc()
        doc["flavor"] = "sour"
        with pytest.raises(SpecError) as err:
            load_system(doc)
        assert "flavor" in str(err.value)

    def test_unknown_item_field_rejected(self):
        doc = self.base_doc()
        doc["population"][0]["Sleeve"] = "Long"
        with pytest.raises(ValidationError):
            load_system(doc)

    def test_missing_required_field(self):
        doc = self.base_doc()
        del doc["population"]
        with pytest.raises(SpecError):
            load_system(doc)

    def test_bad_dynamics(self):
        doc = self.base_doc()
        doc["dynamics"] = "magic"
        with pytest.raises(SpecError) as err:
            load_system(doc)
        assert err.value.path == "/dynamics"

    def test_rule_not_allowed_for_urn(self, urn):
        doc = save_system(urn)
        doc["replacement_rule"] = {"variable": "Color", "replace_on": []}
        with pytest.raises(SpecError):
            load_system(doc)

    def test_block_omitting_base_value_is_spec_error(self, urn):
        doc = save_system(urn)
        doc["variables"][2]["blocks"]["Grue"] = ["Green"]  # drops Blue
        with pytest.raises(SpecError) as err:
            load_system(doc)
        assert err.value.path == "/variables/2/blocks"

    def test_outcome_row_not_normalized_is_validation_error(self):
        system = random_table_system(2, [("P", 2), ("Q", 2)], seed=3)
        doc = save_system(system)
        row = doc["outcome_table"]["c0"]["P"]
        first = next(iter(row))
        row[first] = {"num": "5", "den": "6"}
        other = [v for v in row if v != first]
        for v in other:
            row[v] = {"num": "0", "den": "1"}
        with pytest.raises(ValidationError) as err:
            load_system(doc)
        assert "sums to" in str(err.value)

    def test_nonpositive_count_rejected(self):
        doc = self.base_doc()
        doc["population"][0]["count"] = 0
        with pytest.raises(SpecError) as err:
            load_system(doc)
        assert "count" in err.value.path

    def test_fraction_strings_required(self):
        system = random_table_system(2, [("P", 2), ("Q", 2)], seed=3)
        doc = save_system(system)
        doc["outcome_table"]["c0"]["P"]["p0"] = 0.5
        with pytest.raises(SpecError):
            load_system(doc)

    def test_not_json(self):
        with pytest.raises(SpecError):
            load_system("{not json")

    def test_initial_full_forbidden_for_table(self):
        system = random_table_system(2, [("P", 2), ("Q", 2)], seed=3)
        doc = save_system(system)
        doc["initial"] = "full"
        with pytest.raises(SpecError) as err:
            load_system(doc)
        assert err.value.path == "/initial"

    def test_initial_outside_population_is_validation_error(self, card):
        doc = save_system(card)
        doc["initial"] = [
            [{"Face": "King", "Suit": "Hearts", "count": 3}]
        ]
        with pytest.raises(ValidationError):
            load_system(doc)
