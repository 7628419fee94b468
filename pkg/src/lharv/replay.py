"""Ground-truth instruments: a witness replayer that re-checks a timed run
directly against the automaton semantics, and a brute-force grid oracle.

Neither uses the encoder.  The oracle walks dwell times on a rational grid
in event order and picks every flow slope from ``{lo, (lo+hi)/2, hi}``
(plus values that close an equality exactly), so finding nothing is not a
proof of unreachability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .model import FlowRange, Network, owner_of
from .pathset import PathSet, SyncSkeleton


@dataclass(frozen=True)
class Step:
    location: str
    dwell: object
    entry: dict
    exit: dict


@dataclass(frozen=True)
class Witness:
    mode: str  # "exact" | "float"
    components: dict  # component -> tuple of Step
    sync: dict = field(default_factory=dict)  # (label, occurrence) -> timestamp

    def total_time(self, component: str):
        t = 0
        for st in self.components[component]:
            t = t + st.dwell
        return t

    def final_valuation(self) -> dict:
        out = {}
        for steps in self.components.values():
            out.update(steps[-1].exit)
        return out


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class ReplayReport:
    violations: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def codes(self) -> set:
        return {v.code for v in self.violations}


DEFAULT_FLOAT_TOL = 1e-7


class _Checker:
    def __init__(self, tol):
        self.tol = tol
        self.out: list = []

    def fail(self, code, msg):
        self.out.append(Violation(code, msg))

    def eq(self, a, b) -> bool:
        return abs(a - b) <= self.tol

    def le(self, a, b) -> bool:
        return a - b <= self.tol


def replay_witness(net: Network, ps: PathSet, skel: SyncSkeleton, spec, w: Witness,
                   tol: Optional[float] = None) -> ReplayReport:
    """Check ``w`` against the semantics of ``net`` along ``ps``.

    ``tol`` defaults to 0 for exact witnesses and ``1e-7`` for float ones;
    it never relaxes a strict comparison.
    """
    if tol is None:
        tol = DEFAULT_FLOAT_TOL if w.mode == "float" else 0
    ck = _Checker(tol)

    if set(w.components) != set(ps.paths):
        ck.fail("structure", "witness components differ from the path set")
        return ReplayReport(tuple(ck.out))
    for name, path in ps.paths.items():
        steps = w.components[name]
        if tuple(s.location for s in steps) != path.locations:
            ck.fail("structure", f"{name}: witness locations differ from the path")
            return ReplayReport(tuple(ck.out))

    for a in net:
        name = a.name
        steps = w.components[name]
        path = ps[name]
        for i, st in enumerate(steps):
            loc = a.location(st.location)
            where = f"{name}[{i}] {st.location}"
            if set(st.entry) != set(a.local_vars) or set(st.exit) != set(a.local_vars):
                ck.fail("structure", f"{where}: valuation does not cover the local variables")
                continue
            if st.dwell < -tol or (tol == 0 and st.dwell < 0):
                ck.fail("nonnegativity", f"{where}: negative dwell {st.dwell}")
            for x in a.local_vars:
                f = loc.flows[x]
                if not isinstance(f, FlowRange):
                    ck.fail("flow", f"{where}: flow of {x} is not a rate interval")
                    continue
                change = st.exit[x] - st.entry[x]
                if st.dwell == 0:
                    if not ck.eq(change, 0):
                        ck.fail("flow", f"{where}: {x} changes in zero time")
                elif not (ck.le(f.lo * st.dwell, change) and ck.le(change, f.hi * st.dwell)):
                    ck.fail("flow", f"{where}: slope of {x} outside [{f.lo}, {f.hi}]")
            mid = {x: (st.entry[x] + st.exit[x]) / 2 for x in a.local_vars}
            for inv in loc.invariant:
                for tag, val in (("entry", st.entry), ("exit", st.exit)):
                    if not inv.holds(val, tol):
                        ck.fail("invariant", f"{where}: invariant violated at {tag}")
                if not inv.holds(mid, tol):
                    ck.fail("midpoint-invariant", f"{where}: invariant violated at the midpoint")
        loc0 = a.location(path.locations[0])
        for x, v in loc0.initial_conditions.items():
            if not ck.eq(steps[0].entry[x], v):
                ck.fail("init", f"{name}: initial value of {x} is {steps[0].entry[x]}, expected {v}")

        for i, t in enumerate(path.transitions):
            here = steps[i].exit
            ev = skel.event_at(name, i)

            def value(x, here=here, ev=ev):
                if x in here:
                    return here[x]
                owner = owner_of(net, x)
                if ev is None or owner not in ev.positions:
                    raise KeyError(x)
                return w.components[owner][ev.positions[owner]].exit[x]

            lab = f"{name} {t.describe()}"
            try:
                for g in t.guards:
                    if not g.relation.holds(g.lhs.evaluate(_Lazy(value)), g.rhs, tol):
                        code = "strict-guard" if g.relation.strict else "guard"
                        ck.fail(code, f"{lab}: guard violated")
                resets = t.reset_map()
                nxt = steps[i + 1].entry
                for x in a.local_vars:
                    want = resets[x].evaluate(_Lazy(value)) if x in resets else here[x]
                    if not ck.eq(nxt[x], want):
                        ck.fail("reset" if x in resets else "carry", f"{lab}: entry value of {x} is wrong")
            except KeyError as exc:
                ck.fail("read", f"{lab}: cannot sample {exc.args[0]!r} at this event")

    for ev in skel.events:
        times = []
        for comp, pos in ev.positions.items():
            t = 0
            for st in w.components[comp][:pos + 1]:
                t = t + st.dwell
            times.append(t)
        if any(not ck.eq(t, times[0]) for t in times):
            ck.fail("sync", f"event {ev.label}#{ev.occurrence}: participants disagree on its time")
        stamp = w.sync.get(ev.key)
        if stamp is None or not ck.eq(stamp, times[0]):
            ck.fail("sync", f"event {ev.label}#{ev.occurrence}: timestamp mismatch")

    totals = [w.total_time(n) for n in ps.paths]
    if totals and any(not ck.eq(t, totals[0]) for t in totals):
        ck.fail("total-time", "components spend different total time")

    if spec is not None:
        for aut, loc in spec.targets.items():
            if ps[aut].final != loc:
                ck.fail("target", f"{aut} ends in {ps[aut].final}, target is {loc}")
        final = w.final_valuation()
        for c in spec.constraints:
            if not c.holds(final, tol):
                ck.fail("spec", "specification constraint violated at the final valuation")
    return ReplayReport(tuple(ck.out))


class _Lazy(dict):
    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def __missing__(self, key):
        return self.fn(key)


# --------------------------------------------------------------------------
# grid oracle

class InstanceTooLarge(RuntimeError):
    """The oracle's node budget was exhausted before the search finished."""


@dataclass(frozen=True)
class Found:
    witness: Witness
    nodes: int = 0

    feasible = True


@dataclass(frozen=True)
class NotFound:
    nodes: int = 0
    reason: str = "no grid point satisfies the constraints (not a proof of unreachability)"

    feasible = False


def _slot_plan(ps: PathSet, skel: SyncSkeleton, names: tuple) -> list:
    """Order of (component, position, forced_kind) slots; forced slots take
    the dwell that makes an event or the end time line up."""
    cursor = {n: 0 for n in names}
    plan = []
    for ev in skel.events:
        parts = list(ev.positions.items())
        c0, q0 = parts[0]
        for i in range(cursor[c0], q0 + 1):
            plan.append((c0, i, None))
        for ck, qk in parts[1:]:
            for i in range(cursor[ck], qk):
                plan.append((ck, i, None))
            plan.append((ck, qk, (c0, q0)))
        for c, qq in parts:
            cursor[c] = qq + 1
    first = names[0]
    last0 = len(ps[first]) - 1
    for i in range(cursor[first], last0 + 1):
        plan.append((first, i, None))
    for c in names[1:]:
        end = len(ps[c]) - 1
        for i in range(cursor[c], end):
            plan.append((c, i, None))
        plan.append((c, end, (first, last0)))
    return plan


def sample_oracle(net: Network, ps: PathSet, skel: SyncSkeleton, spec, step, horizon,
                  node_budget: int = 400_000):
    """First grid run that replays cleanly, or :class:`NotFound`.

    Dwells range over ``{0, step, ..., horizon}`` (forced dwells at sync
    points and at the end), cumulative time per component stays within
    ``horizon``, variables without an initial condition start at 0.  Exit
    values come from the slopes ``lo``, ``(lo+hi)/2`` and ``hi``, plus the
    value that makes an equality check hold exactly when the slot carries
    that check's last unknown.  The search is depth-first with dwells
    ascending, so the lexicographically smallest dwell vector in slot order
    wins.  Raises :class:`InstanceTooLarge` after ``node_budget`` nodes.
    """
    step = Fraction(step)
    horizon = Fraction(horizon)
    if step <= 0:
        raise ValueError("step must be positive")
    if spec is not None and any(ps[a].final != loc for a, loc in spec.targets.items()):
        return NotFound(0, "target locations differ from the paths' final locations")

    names = net.names
    auts = {a.name: a for a in net}
    plan = _slot_plan(ps, skel, names)
    slot_of = {(c, i): k for k, (c, i, _) in enumerate(plan)}
    grid = [step * j for j in range(int(horizon / step) + 1)]
    values = {"entry": {}, "exit": {}}

    # a check is (constraint, refs) with refs: model var -> (kind, (component, position));
    # it runs at the slot that assigns its last input
    checks: list = [[] for _ in plan]

    def add(constraint, refs):
        k = max(slot_of[key] for _, key in refs.values())
        checks[k].append((constraint, refs))

    for a in net:
        path = ps[a.name]
        for i, lid in enumerate(path.locations):
            for inv in a.location(lid).invariant:
                for kind in ("entry", "exit"):
                    add(inv, {x: (kind, (a.name, i)) for x in inv.variables()})
        for i, t in enumerate(path.transitions):
            ev = skel.event_at(a.name, i)
            refs = {}
            for x in t.read_variables():
                if x in a.local_vars:
                    refs[x] = ("exit", (a.name, i))
                else:
                    o = owner_of(net, x)
                    refs[x] = ("exit", (o, ev.positions[o]))
            for g in t.guards:
                add(g, {x: refs[x] for x in g.variables()})
    if spec is not None:
        for c in spec.constraints:
            add(c, {x: ("exit", (owner_of(net, x), len(ps[owner_of(net, x)]) - 1)) for x in c.variables()})

    def holds(constraint, refs) -> bool:
        return constraint.holds({x: values[kind][key][x] for x, (kind, key) in refs.items()})

    def entry_values(c, i):
        a = auts[c]
        if i == 0:
            init = a.location(ps[c].locations[0]).initial_conditions
            return {x: init.get(x, Fraction(0)) for x in a.local_vars}
        t = ps[c].transitions[i - 1]
        here = values["exit"][(c, i - 1)]
        ev = skel.event_at(c, i - 1)

        def read(x):
            if x in here:
                return here[x]
            o = owner_of(net, x)
            return values["exit"][(o, ev.positions[o])][x]
        resets = t.reset_map()
        return {x: resets[x].evaluate(_Lazy(read)) if x in resets else here[x] for x in a.local_vars}

    def flows(c, i):
        loc = auts[c].location(ps[c].locations[i])
        out = []
        for x in auts[c].local_vars:
            f = loc.flows[x]
            slopes = []
            for r in (f.lo, (f.lo + f.hi) / 2, f.hi):
                if r not in slopes:
                    slopes.append(r)
            out.append((x, f, slopes))
        return out

    flow_of = {(c, i): flows(c, i) for c, i, _ in plan}

    # equalities whose last unknown at a slot is a given exit variable
    solvable: dict = {}
    for k, (c, i, _) in enumerate(plan):
        local = list(auts[c].local_vars)
        for constraint, refs in checks[k]:
            if constraint.relation.value != "=":
                continue
            here = [x for x, (kind, key) in refs.items() if kind == "exit" and key == (c, i)]
            if here:
                last = max(here, key=local.index)
                solvable.setdefault((c, i, last), []).append((constraint, refs))

    def solved(c, i, x, partial):
        out = []
        for constraint, refs in solvable.get((c, i, x), ()):
            rest = constraint.rhs
            for y, coef in constraint.lhs.terms.items():
                if y == x:
                    continue
                kind, key = refs[y]
                rest -= coef * (partial[y] if key == (c, i) and kind == "exit" else values[kind][key][y])
            out.append(rest / constraint.lhs.terms[x])
        return out

    dwell: dict = {}
    cum: dict = {n: [] for n in names}
    nodes = 0
    found = [None]

    def exits(c, i, d, ent, idx, partial):
        fl = flow_of[(c, i)]
        if idx == len(fl):
            yield partial
            return
        x, f, slopes = fl[idx]
        cands = [ent[x] + r * d for r in (slopes if d else slopes[:1])]
        for v in solved(c, i, x, partial):
            if v not in cands and f.lo * d <= v - ent[x] <= f.hi * d:
                cands.append(v)
        for v in cands:
            partial[x] = v
            yield from exits(c, i, d, ent, idx + 1, partial)
        partial.pop(x, None)

    def search(k):
        nonlocal nodes
        if k == len(plan):
            found[0] = _build()
            return replay_witness(net, ps, skel, spec, found[0], 0).passed
        c, i, forced = plan[k]
        prev = cum[c][i - 1] if i > 0 else Fraction(0)
        if forced is None:
            options = [d for d in grid if prev + d <= horizon]
        else:
            fc, fq = forced
            d = cum[fc][fq] - prev
            options = [d] if d >= 0 else []
        ent = entry_values(c, i)
        values["entry"][(c, i)] = ent
        for d in options:
            dwell[(c, i)] = d
            cum[c].append(prev + d)
            for ex in exits(c, i, d, ent, 0, {}):
                nodes += 1
                if nodes > node_budget:
                    raise InstanceTooLarge(f"oracle exceeded {node_budget} nodes")
                values["exit"][(c, i)] = dict(ex)
                if all(holds(cn, refs) for cn, refs in checks[k]) and search(k + 1):
                    return True
            cum[c].pop()
        return False

    def _build():
        comps = {}
        for n in names:
            comps[n] = tuple(Step(loc, dwell[(n, i)], dict(values["entry"][(n, i)]),
                                  dict(values["exit"][(n, i)])) for i, loc in enumerate(ps[n].locations))
        sync = {}
        for ev in skel.events:
            c, p = next(iter(ev.positions.items()))
            sync[ev.key] = sum((dwell[(c, j)] for j in range(p + 1)), Fraction(0))
        return Witness("exact", comps, sync)

    if not search(0):
        return NotFound(nodes)
    return Found(found[0], nodes)
