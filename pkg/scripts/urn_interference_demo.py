#!/usr/bin/env python3
"""Walk through the urn system's quantum-like behaviors with exact numbers.

Shows, in order: von Neumann repeatability of both variables, the
order-exchange incompatibility witness, the statistical effect of an
ignored measurement, and the interference between the coarse Grue
manifestation and its fine Green/Blue alternatives.
"""
from __future__ import annotations

from incompat import (
    Event,
    PState,
    builtin_system,
    interference_deficit,
    repeatability_check,
    sequence_prob,
    single_event_prob,
    update_config,
)

E = Event


def rat(f):
    return f"{f.numerator}/{f.denominator}"


def main() -> None:
    urn = builtin_system("urn")
    full = urn.initial[0]

    print("= repeatability =")
    for variable in ("Color", "Pattern", "ColorBlind"):
        report = repeatability_check(urn, variable)
        print(f"  {variable}: {'delta_jk on every preparation' if report.all_hold else 'FAILS'}")

    print("= incompatibility of Color and Pattern =")
    plain = PState.point(update_config(urn, full, E("Pattern", "Plain")))
    gd = sequence_prob(urn, plain, (E("Color", "Green"), E("Pattern", "Dotted")))
    dg = sequence_prob(urn, plain, (E("Pattern", "Dotted"), E("Color", "Green")))
    print(f"  from the Plain state: Pr(Green & Dotted) = {rat(gd)}, Pr(Dotted & Green) = {rat(dg)}")

    print("= an ignored measurement has effects =")
    green = PState.point(update_config(urn, full, E("Color", "Green")))
    summed = sum(
        sequence_prob(urn, green, (E("Pattern", s), E("Color", "Green")))
        for s in ("Plain", "Dotted", "Striped")
    )
    direct = single_event_prob(urn, green, E("Color", "Green"))
    print(f"  from the Green state: sum_s Pr(Pattern=s & Green) = {rat(summed)}"
          f" but Pr(Green) = {rat(direct)}")

    print("= interference between Grue and Green-or-Blue =")
    fine = [E("Color", "Green"), E("Color", "Blue")]
    for follow in (E("Pattern", "Dotted"), E("ColorBlind", "Grue"), None):
        record = interference_deficit(urn, plain, E("ColorBlind", "Grue"), fine, follow)
        label = f"{follow.variable}:{follow.value}" if follow else "none (single measurement)"
        print(
            f"  follow {label}: coarse {rat(record.coarse_path)},"
            f" fine sum {rat(record.fine_sum)}, deficit {rat(record.deficit)}"
        )


if __name__ == "__main__":
    main()
