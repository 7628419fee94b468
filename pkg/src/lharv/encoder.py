"""Compile a network, an aligned path set and a reachability specification
into one system of linear constraints over dwell times and entry/exit
valuations.

Row families, per component path ``v0 .. vn``:

* ``nonneg``     dwell(c,i) >= 0
* ``init``       entry(c,0,x) = a
* ``flow``       lo*dwell <= exit - entry <= hi*dwell (two rows)
* ``invariant``  location invariant at entry and at exit
* ``guard``      transition guard at the source exit, outer reads at the
                 owner's exit for the same synchronization event
* ``reset``/``carry``  entry of the next location
* ``sync``       cumulative dwell up to each participant's source location
* ``total``      total elapsed time equal across components
* ``spec``       specification constraints at the final exits
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

from .model import Constraint, FlowRange, LinearExpression, Network, Relation, owner_of
from .pathset import PathSet, SyncSkeleton


class EncodingError(ValueError):
    pass


class LPVar(NamedTuple):
    kind: str  # "dwell" | "entry" | "exit"
    component: str
    position: int
    var: Optional[str] = None

    def __str__(self) -> str:
        if self.kind == "dwell":
            return f"delta({self.component},{self.position})"
        return f"{self.kind}({self.component},{self.position},{self.var})"


def dwell(c: str, i: int) -> LinearExpression:
    return LinearExpression.var(LPVar("dwell", c, i))


def entry(c: str, i: int, x: str) -> LinearExpression:
    return LinearExpression.var(LPVar("entry", c, i, x))


def exit_(c: str, i: int, x: str) -> LinearExpression:
    return LinearExpression.var(LPVar("exit", c, i, x))


@dataclass(frozen=True)
class LinearSystem:
    variables: tuple
    constraints: tuple
    families: tuple

    @property
    def stats(self) -> tuple:
        return (len(self.constraints), len(self.variables))

    def with_constraints(self, extra, family: str = "spec") -> "LinearSystem":
        extra = tuple(extra)
        return LinearSystem(self.variables, self.constraints + extra, self.families + (family,) * len(extra))

    def rows(self, family: str) -> list:
        return [c for c, f in zip(self.constraints, self.families) if f == family]


def stats(sys: LinearSystem) -> tuple:
    """``(n_constraints, n_variables)``."""
    return sys.stats


def _var_order(sys: LinearSystem) -> dict:
    return {v: i for i, v in enumerate(sys.variables)}


def canonical_row(c: Constraint, order: dict) -> Constraint:
    """Terms sorted by variable order, leading coefficient positive."""
    lhs = LinearExpression(dict(sorted(c.lhs.terms.items(), key=lambda kv: order[kv[0]])))
    return Constraint(lhs, c.relation, c.rhs).canonical()


def format_row(c: Constraint) -> str:
    from .textio import format_constraint
    return format_constraint(c, name=str)


def dump(sys: LinearSystem) -> str:
    """Text form: a header, the variables, then ``family: row`` per line."""
    order = _var_order(sys)
    n, m = sys.stats
    lines = [f"constraints {n}", f"variables {m}"]
    lines += [f"var {v}" for v in sys.variables]
    for c, fam in zip(sys.constraints, sys.families):
        lines.append(f"{fam}: {format_row(canonical_row(c, order))}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------

def encode_base(net: Network, ps: PathSet, skel: SyncSkeleton) -> LinearSystem:
    """Every row family except the specification."""
    variables = []
    rows: list = []

    def emit(fam, left, rel, right=0):
        rows.append((fam, Constraint.make(left, rel, right)))

    for a in net:
        path = ps[a.name]
        for i in range(len(path)):
            variables.append(LPVar("dwell", a.name, i))
            variables += [LPVar("entry", a.name, i, x) for x in a.local_vars]
            variables += [LPVar("exit", a.name, i, x) for x in a.local_vars]

    for a in net:
        c = a.name
        path = ps[c]
        for i in range(len(path)):
            emit("nonneg", dwell(c, i), Relation.GE)
        loc0 = a.location(path.locations[0])
        for x, val in loc0.initial_conditions.items():
            emit("init", entry(c, 0, x), Relation.EQ, val)
        for i, lid in enumerate(path.locations):
            loc = a.location(lid)
            for x in a.local_vars:
                f = loc.flows[x]
                if not isinstance(f, FlowRange):
                    raise EncodingError(f"{c}.{lid}: flow of {x!r} is not a rate interval")
                change = exit_(c, i, x) - entry(c, i, x)
                emit("flow", change, Relation.GE, dwell(c, i) * f.lo)
                emit("flow", change, Relation.LE, dwell(c, i) * f.hi)
            for inv in loc.invariant:
                for kind in ("entry", "exit"):
                    emit("invariant", inv.lhs.rename(lambda x: LPVar(kind, c, i, x)), inv.relation, inv.rhs)
        for i, t in enumerate(path.transitions):
            reading = _reader(net, a, c, i, t, skel)
            for g in t.guards:
                emit("guard", g.lhs.rename(reading), g.relation, g.rhs)
            resets = t.reset_map()
            for x in a.local_vars:
                if x in resets:
                    emit("reset", entry(c, i + 1, x), Relation.EQ, resets[x].rename(reading))
                else:
                    emit("carry", entry(c, i + 1, x), Relation.EQ, exit_(c, i, x))

    for ev in skel.events:
        parts = list(ev.positions.items())
        (c0, p0) = parts[0]
        t0 = _cumulative(c0, p0)
        for ck, pk in parts[1:]:
            emit("sync", _cumulative(ck, pk), Relation.EQ, t0)

    names = net.names
    if names:
        total0 = _cumulative(names[0], len(ps[names[0]]) - 1)
        for ck in names[1:]:
            emit("total", _cumulative(ck, len(ps[ck]) - 1), Relation.EQ, total0)

    return LinearSystem(tuple(variables), tuple(r for _, r in rows), tuple(f for f, _ in rows))


_ONE = Fraction(1)


def _cumulative(c: str, upto: int) -> LinearExpression:
    return LinearExpression({LPVar("dwell", c, i): _ONE for i in range(upto + 1)})


def _reader(net, aut, comp, pos, t, skel):
    local = set(aut.local_vars)
    ev = skel.event_at(comp, pos)

    def read(x):
        if x in local:
            return LPVar("exit", comp, pos, x)
        owner = owner_of(net, x)
        if ev is None or owner not in ev.positions:
            raise EncodingError(
                f"{comp}: transition {t.describe()} reads {x!r} but its owner {owner} has no aligned occurrence")
        return LPVar("exit", owner, ev.positions[owner], x)
    return read


def spec_rows(net: Network, ps: PathSet, spec) -> list:
    def final(x):
        owner = owner_of(net, x)
        return LPVar("exit", owner, len(ps[owner]) - 1, x)
    return [Constraint(c.lhs.rename(final), c.relation, c.rhs) for c in spec.constraints]


def targets_match(ps: PathSet, spec) -> bool:
    return all(ps[a].final == loc for a, loc in spec.targets.items())


def encode(net: Network, ps: PathSet, skel: SyncSkeleton, spec) -> LinearSystem:
    """Full system; the caller has checked :func:`targets_match`."""
    if not targets_match(ps, spec):
        raise EncodingError("specification targets differ from the paths' final locations")
    return encode_base(net, ps, skel).with_constraints(spec_rows(net, ps, spec))


def substitute(sys: LinearSystem, values: dict) -> list:
    """Indices of rows violated by ``values`` (exact comparison)."""
    return [k for k, c in enumerate(sys.constraints) if not c.holds(values)]


def assignment_of(w) -> dict:
    """LP variable values read off a witness (inverse of witness extraction)."""
    out = {}
    for c, steps in w.components.items():
        for i, st in enumerate(steps):
            out[LPVar("dwell", c, i)] = st.dwell
            for x, v in st.entry.items():
                out[LPVar("entry", c, i, x)] = v
            for x, v in st.exit.items():
                out[LPVar("exit", c, i, x)] = v
    return out
