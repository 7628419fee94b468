"""Walk through one check of the three-component relay fixture: alignment,
the linear system, the verdict, the witness and a tampered replay."""

from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from lharv import check, replay_witness
from lharv.encoder import dump
from lharv.textio import emit_witness, parse_model, parse_pathset, parse_spec

FIX = Path(__file__).resolve().parents[1] / "fixtures"


def main():
    net = parse_model((FIX / "relay.lharv").read_text(), "relay.lharv")
    ps = parse_pathset((FIX / "relay.paths").read_text(), net, "relay.paths")
    spec = parse_spec((FIX / "relay.spec").read_text(), net, "relay.spec")

    res = check(net, ps, spec)
    print("sync events:")
    for ev in res.skeleton.events:
        print(f"  {ev.label}#{ev.occurrence} at", ", ".join(f"{c}@{p}" for c, p in ev.positions.items()))

    lines = dump(res.system).splitlines()
    print(f"\n{lines[0]}, {lines[1]}; a few rows:")
    for fam in ("sync:", "guard:", "reset:", "spec:"):
        print("  " + next(l for l in lines if l.startswith(fam)))

    print(f"\nverdict {res.verdict} via {res.method}")
    print(emit_witness(res.witness))

    # push S's first exit past what rate 1.1 allows in its dwell
    steps = list(res.witness.components["S"])
    steps[0] = replace(steps[0], exit={"s": Fraction(3)})
    bad = replace(res.witness, components={**res.witness.components, "S": tuple(steps)})
    report = replay_witness(net, ps, res.skeleton, spec, bad)
    print("tampered witness:")
    for v in report.violations:
        print(f"  {v}")

    other = parse_spec((FIX / "relay_unreachable.spec").read_text(), net)
    res = check(net, ps, other)
    print(f"\nwith t < 1 at the end: {res.verdict} ({res.method}; {res.detail})")


if __name__ == "__main__":
    main()
