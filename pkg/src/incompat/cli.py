"""Command-line front end.

Subcommands: analyze, prob, interfere, quantum, simulate, search.  Exact
rationals print as "num/den", reals with 6 significant digits.  Results go
to stdout, diagnostics to stderr.  Exit codes: 0 success, 1 when
--assert-compatible finds an incompatibility, 2 usage error, 3 validation
error in a system document.  Output is byte-identical for identical argv.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Sequence

from . import criteria, quantum
from .catalog import builtin_names, builtin_system, load_system
from .core import Event, MeasurementSystem, PState, filter_event, sequence_prob
from .errors import IncompatError, SpecError, ValidationError
from .simulate import monte_carlo_estimate

EXIT_OK = 0
EXIT_INCOMPATIBLE = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3


def _fmt_rat(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _fmt_real(x: float) -> str:
    return format(x, ".6g")


def _parse_event(text: str) -> Event:
    variable, sep, value = text.partition(":")
    if not sep or not variable or not value:
        raise ValueError(f"expected Variable:Value, got {text!r}")
    return Event(variable, value)


def _parse_events(text: str) -> list[Event]:
    return [_parse_event(part) for part in text.split(",") if part]


def _parse_pairs(text: str) -> list[tuple[Event, Event]]:
    pairs = []
    for chunk in text.split(";"):
        events = _parse_events(chunk)
        if len(events) != 2:
            raise ValueError(f"a pair needs exactly two events, got {chunk!r}")
        pairs.append((events[0], events[1]))
    return pairs


def _add_system_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--builtin", choices=builtin_names(), help="catalog system")
    group.add_argument("--system", metavar="FILE", help="system document (JSON)")


def _resolve_system(ns: argparse.Namespace) -> MeasurementSystem:
    if ns.builtin:
        return builtin_system(ns.builtin)
    with open(ns.system, "r", encoding="utf-8") as fh:
        return load_system(fh.read())


def _prepared_state(system: MeasurementSystem, prep: Sequence[Event]) -> PState:
    state = system.initial_state()
    for event in prep:
        p, state = filter_event(system, state, event)
        if p == 0 or state is None:
            raise ValidationError(
                f"preparation event {event.variable}={event.value} has probability zero"
            )
    return state


def _table(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows)


def _witness_text(witness: criteria.Witness | None) -> str:
    if witness is None:
        return "-"
    content = ", ".join(
        f"{'+'.join(v for _, v in item.labels)}x{n}" for item, n in witness.preparation.counts
    )
    return f"[{content or 'empty'}] {_fmt_rat(witness.left)} vs {_fmt_rat(witness.right)}"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_analyze(ns: argparse.Namespace) -> int:
    system = _resolve_system(ns)
    pairs = []
    if ns.pairs:
        for chunk in ns.pairs:
            pairs.extend(_parse_pairs(chunk))
    else:
        variables = system.variables
        for i, a in enumerate(variables):
            for b in variables[i + 1 :]:
                for va in a.values:
                    for vb in b.values:
                        pairs.append((Event(a.name, va), Event(b.name, vb)))
    profiles = [(p, q, criteria.criteria_profile(system, p, q)) for p, q in pairs]
    repeatability = [criteria.repeatability_check(system, v.name) for v in system.variables]
    sharpness = criteria.sharpness_audit(system)

    incompatible = any(
        not profile[criteria.CriterionKind.ORDER_EXCHANGE].holds for _, _, profile in profiles
    )
    if ns.json:
        doc = {
            "system": system.name,
            "pairs": [
                {
                    "p": {"variable": p.variable, "value": p.value},
                    "q": {"variable": q.variable, "value": q.value},
                    "reports": {k.value: r.to_json_dict() for k, r in profile.items()},
                }
                for p, q, profile in profiles
            ],
            "repeatability": [
                {
                    "variable": rep.variable,
                    "all_hold": rep.all_hold,
                    "cells": [
                        {"j": j, "k": k, "holds": cell.holds, "vacuous": cell.vacuous}
                        for (j, k), cell in rep.cells.items()
                    ],
                }
                for rep in repeatability
            ],
            "sharpness": [
                {
                    "config": [
                        {**dict(item.labels), "count": n}
                        for item, n in record.preparation.counts
                    ],
                    "sharp_values": record.sharp_values,
                    "sharp_in_all_base": record.sharp_in_all_base,
                }
                for record in sharpness
            ],
            "incompatible": incompatible,
        }
        print(json.dumps(doc, indent=2))
    else:
        rows = [["pair", "order-exchange", "non-disturbance", "ignored", "witness"]]
        for p, q, profile in profiles:
            oe = profile[criteria.CriterionKind.ORDER_EXCHANGE]
            nd = profile[criteria.CriterionKind.NON_DISTURBANCE]
            ig = profile[criteria.CriterionKind.IGNORED_MEASUREMENT]
            rows.append(
                [
                    f"{p.variable}:{p.value} / {q.variable}:{q.value}",
                    oe.verdict,
                    nd.verdict + (" (vacuous)" if nd.vacuous else ""),
                    ig.verdict,
                    _witness_text(oe.witness),
                ]
            )
        print(_table(rows))
        print()
        for rep in repeatability:
            print(f"repeatability[{rep.variable}]: {'all delta' if rep.all_hold else 'fails'}")
            for (j, k), cell in rep.cells.items():
                if not cell.holds and cell.witness is not None:
                    print(
                        f"  ({j}|{k}) = {_fmt_rat(cell.witness.left)}"
                        f" expected {_fmt_rat(cell.witness.right)}"
                    )
        sharp_all = [r for r in sharpness if r.sharp_in_all_base]
        print(f"sharp-in-all-base states: {len(sharp_all)} of {len(sharpness)} reachable")
    if ns.assert_compatible and incompatible:
        return EXIT_INCOMPATIBLE
    return EXIT_OK


def _cmd_prob(ns: argparse.Namespace) -> int:
    system = _resolve_system(ns)
    state = _prepared_state(system, _parse_events(ns.prep) if ns.prep else [])
    seq = _parse_events(ns.seq)
    if not seq:
        raise ValueError("--seq needs at least one event")
    print(_fmt_rat(sequence_prob(system, state, seq)))
    return EXIT_OK


def _cmd_interfere(ns: argparse.Namespace) -> int:
    system = _resolve_system(ns)
    state = _prepared_state(system, _parse_events(ns.prep) if ns.prep else [])
    coarse = _parse_event(ns.coarse)
    if ns.fine:
        fine = _parse_events(ns.fine)
    else:
        cvar = system.variable(coarse.variable)
        fine = [Event(cvar.coarse_of or "", b) for b in cvar.block(coarse.value)]
    follow = _parse_event(ns.follow) if ns.follow else None
    record = criteria.interference_deficit(system, state, coarse, fine, follow)
    if ns.json:
        print(
            json.dumps(
                {
                    "coarse_path": {"num": str(record.coarse_path.numerator),
                                    "den": str(record.coarse_path.denominator)},
                    "fine_sum": {"num": str(record.fine_sum.numerator),
                                 "den": str(record.fine_sum.denominator)},
                    "deficit": {"num": str(record.deficit.numerator),
                                "den": str(record.deficit.denominator)},
                },
                indent=2,
            )
        )
    else:
        print(f"coarse path: {_fmt_rat(record.coarse_path)}")
        print(f"fine sum:    {_fmt_rat(record.fine_sum)}")
        print(f"deficit:     {_fmt_rat(record.deficit)}")
    return EXIT_OK


def _cmd_quantum(ns: argparse.Namespace) -> int:
    dims = [int(d) for d in ns.dims.split(",") if d]
    if ns.tolerance is not None:
        tol = ns.tolerance
    else:
        tol = float(os.environ.get("INCOMPAT_TOLERANCE", quantum.DEFAULT_TOL))
    report = quantum.equivalence_experiment(
        dims, ns.trials, ns.rho_samples, ns.seed, tol=tol
    )
    if ns.json:
        print(json.dumps(report.to_json_dict(), indent=2))
        return EXIT_OK
    print(f"trials: {report.trials}  dims: {','.join(map(str, report.dims))}  tol: {tol:g}")
    rows = [["check", "comm+holds", "comm+fails", "gen+holds", "gen+fails"]]
    for name, table in report.confusion().items():
        rows.append(
            [
                name,
                str(table["commuting_holds"]),
                str(table["commuting_fails"]),
                str(table["noncommuting_holds"]),
                str(table["noncommuting_fails"]),
            ]
        )
    print(_table(rows))
    print(f"off-diagonal total: {report.off_diagonal_total()}")
    generic = [r for r in report.records if r.mode == "generic" and r.witness]
    if generic:
        weakest = min(r.witness.violation for r in generic)
        print(f"weakest order-exchange witness among generic pairs: {_fmt_real(weakest)}")
    return EXIT_OK


def _cmd_simulate(ns: argparse.Namespace) -> int:
    system = _resolve_system(ns)
    prep = _parse_events(ns.prep) if ns.prep else []
    seq = _parse_events(ns.seq)
    result = monte_carlo_estimate(system, prep, seq, ns.trials, ns.seed)
    if ns.json:
        print(json.dumps(result.to_json_dict(), indent=2))
    else:
        print(f"hits:      {result.hits} / {result.trials}")
        print(f"estimate:  {_fmt_real(result.estimate)}")
        print(f"exact:     {_fmt_rat(result.exact)} = {_fmt_real(float(result.exact))}")
        print(f"bound:     {_fmt_real(result.bound)} (4 sigma)")
        print(f"within:    {'yes' if result.within_bound else 'NO'}")
    return EXIT_OK


def _cmd_search(ns: argparse.Namespace) -> int:
    names = "PQRSTU"
    variables = []
    for i, part in enumerate(v for v in ns.vars.split(",") if v):
        if i >= len(names):
            raise ValueError(f"at most {len(names)} variables are supported")
        variables.append((names[i], int(part)))
    hits = criteria.search_counterexamples(
        ns.trials, ns.seed, num_configs=ns.configs, variables=variables
    )
    if ns.json:
        print(json.dumps([h.to_json_dict() for h in hits], indent=2))
        return EXIT_OK
    if not hits:
        print("no separations found")
        return EXIT_OK
    rows = [["trial", "pair", "nd", "ignored", "oe", "patterns"]]
    for h in hits:
        rows.append(
            [
                str(h.trial),
                f"{h.p.variable}:{h.p.value} / {h.q.variable}:{h.q.value}",
                "holds" if h.nondisturbance else "fails",
                "holds" if h.ignored else "fails",
                "holds" if h.order_exchange else "fails",
                ",".join(h.patterns),
            ]
        )
    print(_table(rows))
    print(f"{len(hits)} separations in {ns.trials} trials (all re-verified by enumeration)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incompat",
        description="Exact compatibility analysis for classical stochastic "
        "measurement systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="criteria matrix, repeatability, sharpness")
    _add_system_args(analyze)
    analyze.add_argument("--pairs", action="append",
                         help="event pairs, e.g. Face:King,Suit:Spades;Face:Queen,Suit:Hearts")
    analyze.add_argument("--json", action="store_true")
    analyze.add_argument("--assert-compatible", action="store_true",
                         help="exit 1 when any order-exchange cell fails")
    analyze.set_defaults(handler=_cmd_analyze)

    prob = sub.add_parser("prob", help="exact sequential probability")
    _add_system_args(prob)
    prob.add_argument("--prep", help="preparation filter events, comma separated")
    prob.add_argument("--seq", required=True, help="event sequence, comma separated")
    prob.set_defaults(handler=_cmd_prob)

    interfere = sub.add_parser("interfere", help="coarse-vs-fine interference deficit")
    _add_system_args(interfere)
    interfere.add_argument("--prep", help="preparation filter events")
    interfere.add_argument("--coarse", required=True, help="coarse event, e.g. ColorBlind:Grue")
    interfere.add_argument("--fine", help="fine events (defaults to the block's base events)")
    interfere.add_argument("--follow", help="follow-up event; omit for a single measurement")
    interfere.add_argument("--json", action="store_true")
    interfere.set_defaults(handler=_cmd_interfere)

    quantum_p = sub.add_parser("quantum", help="criterion-commutation equivalence experiment")
    quantum_p.add_argument("--dims", default="2,3,4,5,6")
    quantum_p.add_argument("--trials", type=int, default=200)
    quantum_p.add_argument("--rho-samples", type=int, default=100)
    quantum_p.add_argument("--seed", type=int, required=True)
    quantum_p.add_argument("--tolerance", type=float, default=None,
                           help="overrides INCOMPAT_TOLERANCE and the 1e-9 default")
    quantum_p.add_argument("--json", action="store_true")
    quantum_p.set_defaults(handler=_cmd_quantum)

    simulate = sub.add_parser("simulate", help="Monte Carlo cross-check of exact values")
    _add_system_args(simulate)
    simulate.add_argument("--prep", help="preparation filter events")
    simulate.add_argument("--seq", required=True)
    simulate.add_argument("--trials", type=int, default=100_000)
    simulate.add_argument("--seed", type=int, required=True)
    simulate.add_argument("--json", action="store_true")
    simulate.set_defaults(handler=_cmd_simulate)

    search = sub.add_parser("search", help="random-table search for criterion separations")
    search.add_argument("--configs", type=int, default=4)
    search.add_argument("--vars", default="2,2", help="value counts per variable, e.g. 2,3")
    search.add_argument("--trials", type=int, default=20)
    search.add_argument("--seed", type=int, required=True)
    search.add_argument("--json", action="store_true")
    search.set_defaults(handler=_cmd_search)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return ns.handler(ns)
    except (SpecError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IncompatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
