"""Command-line interface: subcommands, exit codes, determinism, JSON."""
from __future__ import annotations

import json

from incompat.catalog import dumps_system, random_table_system
from incompat.cli import run


def run_cli(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestAnalyze:
    def test_card_pair_report(self, capsys):
        code, out, _ = run_cli(
            capsys, "analyze", "--builtin", "card", "--pairs", "Face:King,Suit:Spades"
        )
        assert code == 0
        assert "7/24 vs 1/4" in out
        assert "fails" in out

    def test_full_matrix_without_pairs(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--builtin", "urn")
        assert code == 0
        assert "repeatability[Color]: all delta" in out
        assert "sharp-in-all-base states: 0 of 8" in out

    def test_assert_compatible_exit_code(self, capsys):
        code, _, _ = run_cli(
            capsys, "analyze", "--builtin", "card",
            "--pairs", "Face:King,Suit:Spades", "--assert-compatible",
        )
        assert code == 1
        code, _, _ = run_cli(
            capsys, "analyze", "--builtin", "deck-replace", "--assert-compatible"
        )
        assert code == 0

    def test_json_round_trips(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--builtin", "urn", "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["incompatible"]
        report = doc["pairs"][0]["reports"]["order_exchange"]
        assert report["verdict"] in ("holds", "fails")
        if report["witness"]:
            int(report["witness"]["left"]["num"])  # rationals as decimal strings

    def test_deterministic_output(self, capsys):
        _, first, _ = run_cli(capsys, "analyze", "--builtin", "card", "--json")
        _, second, _ = run_cli(capsys, "analyze", "--builtin", "card", "--json")
        assert first == second


class TestProb:
    def test_urn_grue_dotted(self, capsys):
        code, out, _ = run_cli(
            capsys, "prob", "--builtin", "urn",
            "--prep", "Pattern:Plain", "--seq", "ColorBlind:Grue,Pattern:Dotted",
        )
        assert code == 0
        assert out.strip() == "1/6"

    def test_zero_probability_prep_is_validation_error(self, capsys):
        code, _, err = run_cli(
            capsys, "prob", "--builtin", "urn",
            "--prep", "Pattern:Plain,Pattern:Dotted", "--seq", "Color:Green",
        )
        assert code == 3
        assert "probability zero" in err


class TestInterfere:
    def test_deficit_output(self, capsys):
        code, out, _ = run_cli(
            capsys, "interfere", "--builtin", "urn", "--prep", "Pattern:Plain",
            "--coarse", "ColorBlind:Grue", "--follow", "Pattern:Dotted",
        )
        assert code == 0
        assert "deficit:     1/18" in out

    def test_fine_defaults_to_block(self, capsys):
        code, out, _ = run_cli(
            capsys, "interfere", "--builtin", "urn", "--prep", "Pattern:Plain",
            "--coarse", "ColorBlind:Grue",
            "--fine", "Color:Green,Color:Blue", "--follow", "Pattern:Dotted",
        )
        _, out_default, _ = run_cli(
            capsys, "interfere", "--builtin", "urn", "--prep", "Pattern:Plain",
            "--coarse", "ColorBlind:Grue", "--follow", "Pattern:Dotted",
        )
        assert code == 0 and out == out_default

    def test_json_shape(self, capsys):
        code, out, _ = run_cli(
            capsys, "interfere", "--builtin", "urn", "--prep", "Pattern:Plain",
            "--coarse", "ColorBlind:Grue", "--follow", "Pattern:Dotted", "--json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["deficit"] == {"num": "1", "den": "18"}


class TestQuantum:
    def test_small_experiment(self, capsys):
        code, out, _ = run_cli(
            capsys, "quantum", "--dims", "2,3", "--trials", "10",
            "--rho-samples", "10", "--seed", "3",
        )
        assert code == 0
        assert "off-diagonal total: 0" in out

    def test_json_round_trips(self, capsys):
        code, out, _ = run_cli(
            capsys, "quantum", "--dims", "2", "--trials", "4",
            "--rho-samples", "5", "--seed", "3", "--json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["trials"] == 4 and doc["off_diagonal_total"] == 0

    def test_env_tolerance_override(self, capsys, monkeypatch):
        monkeypatch.setenv("INCOMPAT_TOLERANCE", "1e-3")
        code, out, _ = run_cli(
            capsys, "quantum", "--dims", "2", "--trials", "2",
            "--rho-samples", "2", "--seed", "3",
        )
        assert code == 0 and "tol: 0.001" in out
        # explicit flag beats the environment
        code, out, _ = run_cli(
            capsys, "quantum", "--dims", "2", "--trials", "2",
            "--rho-samples", "2", "--seed", "3", "--tolerance", "1e-7",
        )
        assert code == 0 and "tol: 1e-07" in out


class TestSimulate:
    def test_within_bound_and_deterministic(self, capsys):
        args = (
            "simulate", "--builtin", "urn", "--prep", "Pattern:Plain",
            "--seq", "ColorBlind:Grue,Pattern:Dotted",
            "--trials", "5000", "--seed", "42",
        )
        code, out, _ = run_cli(capsys, *args)
        assert code == 0
        assert "within:    yes" in out
        _, again, _ = run_cli(capsys, *args)
        assert out == again

    def test_seed_is_required(self, capsys):
        code, _, _ = run_cli(
            capsys, "simulate", "--builtin", "urn", "--seq", "Color:Green",
            "--trials", "10",
        )
        assert code == 2


class TestSearch:
    def test_runs_and_reports(self, capsys):
        code, out, _ = run_cli(capsys, "search", "--trials", "6", "--seed", "7")
        assert code == 0
        assert "re-verified" in out or "no separations" in out

    def test_json_lists_systems(self, capsys):
        code, out, _ = run_cli(
            capsys, "search", "--trials", "6", "--seed", "7", "--json"
        )
        assert code == 0
        doc = json.loads(out)
        for hit in doc:
            assert hit["system"]["dynamics"] == "table"


class TestErrorsAndHelp:
    def test_help_exits_zero(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--help")
        assert code == 0
        assert "usage" in out

    def test_unknown_flag_exits_two(self, capsys):
        code, _, err = run_cli(capsys, "analyze", "--builtin", "urn", "--bogus")
        assert code == 2
        assert "usage" in err

    def test_missing_system_exits_two(self, capsys):
        code, _, _ = run_cli(capsys, "prob", "--seq", "Color:Green")
        assert code == 2

    def test_bad_event_syntax_exits_two(self, capsys):
        code, _, err = run_cli(
            capsys, "prob", "--builtin", "urn", "--seq", "ColorGreen"
        )
        assert code == 2
        assert "Variable:Value" in err

    def test_invalid_document_exits_three(self, capsys, tmp_path):
        system = random_table_system(2, [("P", 2), ("Q", 2)], seed=3)
        doc = json.loads(dumps_system(system))
        doc["dynamics"] = "magic"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        code, _, err = run_cli(
            capsys, "prob", "--system", str(path), "--seq", "P:p0"
        )
        assert code == 3
        assert "/dynamics" in err

    def test_system_file_loads(self, capsys, tmp_path, card):
        path = tmp_path / "card.json"
        path.write_text(dumps_system(card), encoding="utf-8")
        code, out, _ = run_cli(
            capsys, "prob", "--system", str(path), "--seq", "Face:King,Suit:Spades"
        )
        assert code == 0 and out.strip() == "7/24"
