"""Scenario model of n trains on one line, parameter profiles, the
per-cycle monitor and the benchmark harness.

Each train ``Train<i>`` is a four-location automaton

    compute --cv<i>--> adjust --op<i>--> cruise --EBrake--> EBraking

with position ``x``, communication clock ``t`` (rate 1) and the
safe-braking point ``sbd`` held as a rate-0 variable fixed at start.
``compute`` lasts at most one 0.5 s cycle, the train keeps to ``x <= sbd``
while running, ``EBrake`` fires once ``t`` reaches the 5 s communication
timeout and braking takes at most 5 s.  During adjustment the speed lies
between the means of the current and granted bounds; braking is
abstracted as speed in ``[0, n']``.  ``EBrake`` is shared by all trains: the
scenario is a loss of communication seen by every train at once.

Collision of the adjacent pair (front ``i-1``, rear ``i``) is the
specification: all trains in ``EBraking`` with equal positions.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional

from .checker import decide
from .encoder import encode_base, spec_rows
from .lp import Exact, Prepared, prepare
from .lp.exact import DeadlineExceeded
from .model import (Automaton, Constraint, FlowRange, LinearExpression, Location, Network, Relation,
                    Transition)
from .pathset import PathSet, Path, align_occurrences
from .textio import ModelError, ReachSpec, iter_records

CYCLE = Fraction(1, 2)
TIMEOUT = Fraction(5)
BRAKE = Fraction(5)
LOCATIONS = ("compute", "adjust", "cruise", "EBraking")


@dataclass(frozen=True)
class TrainParams:
    id: str
    x0: Fraction
    cur_v: tuple
    new_v: tuple
    ma: Fraction
    sbd: Fraction
    rsd: Fraction = Fraction(0)

    def problems(self) -> list:
        out = []
        c, c2 = self.cur_v
        n, n2 = self.new_v
        if not 0 <= c <= c2:
            out.append(f"{self.id}: current velocity range must satisfy 0 <= c <= c'")
        if not 0 <= n <= n2:
            out.append(f"{self.id}: granted velocity range must satisfy 0 <= n <= n'")
        if not self.sbd <= self.ma:
            out.append(f"{self.id}: sbd must not exceed ma")
        if not self.x0 <= self.sbd:
            out.append(f"{self.id}: x0 must not exceed sbd")
        if self.rsd < 0:
            out.append(f"{self.id}: rsd must be nonnegative")
        return out


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    timestamp: Fraction
    trains: tuple

    def problems(self) -> list:
        out = [] if self.trains else ["record lists no trains"]
        for t in self.trains:
            out.extend(t.problems())
        ids = [t.id for t in self.trains]
        if len(set(ids)) != len(ids):
            out.append("train ids are not unique")
        for a, b in zip(self.trains, self.trains[1:]):
            if not a.x0 > b.x0:
                out.append(f"positions not strictly decreasing front to back at {a.id}/{b.id}")
        return out


@dataclass(frozen=True)
class Verdict:
    cycle: int
    result: str  # Unreachable | Reachable | Inconsistent | DeadlineMiss | Malformed
    pair: Optional[tuple] = None
    latency_ms: float = 0.0
    witness: object = None
    detail: str = ""


# --------------------------------------------------------------------------
# scenario

def _var(tid: str, name: str) -> str:
    return f"{tid}.{name}"


def train_automaton(p: TrainParams, shared: bool = True) -> Automaton:
    x, t, sbd = (_var(p.id, v) for v in ("x", "t", "sbd"))
    c, c2 = (Fraction(v) for v in p.cur_v)
    n, n2 = (Fraction(v) for v in p.new_v)
    X, T, S = (LinearExpression.var(v) for v in (x, t, sbd))
    short = Constraint.make(T, Relation.LE, CYCLE)
    running = Constraint.make(T, Relation.LE, TIMEOUT)
    before_sbd = Constraint.make(X - S, Relation.LE, 0)
    braking = Constraint.make(T, Relation.LE, BRAKE)
    one, zero = FlowRange(1, 1), FlowRange(0, 0)
    locs = (
        Location("compute", (short, before_sbd), {x: FlowRange(c, c2), t: one, sbd: zero},
                 {x: Fraction(p.x0), t: Fraction(0), sbd: Fraction(p.sbd)}),
        Location("adjust", (running, before_sbd), {x: FlowRange((c + n) / 2, (c2 + n2) / 2), t: one, sbd: zero}),
        Location("cruise", (running, before_sbd), {x: FlowRange(n, n2), t: one, sbd: zero}),
        Location("EBraking", (braking,), {x: FlowRange(0, n2), t: one, sbd: zero}),
    )
    cv, op = f"cv_{p.id}", f"op_{p.id}"
    trans = (
        Transition("compute", "adjust", cv),
        Transition("adjust", "cruise", op),
        Transition("cruise", "EBraking", "EBrake", (Constraint.make(T, Relation.GE, TIMEOUT),),
                   ((t, LinearExpression.const(0)),)),
    )
    labels = ((cv, op, "EBrake"), ()) if not shared else ((cv, op), ("EBrake",))
    return Automaton(p.id, (x, t, sbd), (), labels[0], labels[1], locs, ("compute",), trans)


@dataclass(frozen=True)
class Scenario:
    network: Network
    paths: PathSet
    pairs: tuple  # ((front id, rear id), ...)

    def spec(self, pair) -> ReachSpec:
        front, rear = pair
        diff = LinearExpression.var(_var(rear, "x")) - LinearExpression.var(_var(front, "x"))
        return ReachSpec({a.name: "EBraking" for a in self.network}, (Constraint.make(diff, Relation.EQ, 0),),
                         f"collision {front}/{rear}")


def generate_scenario(params) -> Scenario:
    params = tuple(params)
    problems = CycleRecord(0, Fraction(0), params).problems()
    if problems:
        raise ValueError("; ".join(problems))
    auts = tuple(train_automaton(p, shared=len(params) > 1) for p in params)
    net = Network(auts)
    paths = PathSet({a.name: Path(a.name, LOCATIONS, a.transitions) for a in auts})
    pairs = tuple((a.id, b.id) for a, b in zip(params, params[1:]))
    return Scenario(net, paths, pairs)


def margin(front: TrainParams, rear: TrainParams) -> Fraction:
    """Gap minus the rear safe distance minus the farthest the rear train can
    travel during the timeout and the braking phase."""
    vmax = max(Fraction(rear.cur_v[1]), Fraction(rear.new_v[1]))
    return Fraction(front.x0) - Fraction(rear.x0) - Fraction(rear.rsd) - (TIMEOUT + BRAKE) * vmax


# --------------------------------------------------------------------------
# parameter profiles (constructed values)

GAP = Fraction(600)
LEAD_POSITION = Fraction(1000)


def default_params(n: int, profile: str = "safe") -> tuple:
    """Deterministic parameters, front train first.

    ``safe`` keeps a 600 m spacing with speeds up to 20 m/s and a 50 m
    rear safe distance.  ``unsafe`` slows the second-to-last train down and
    puts the last one 120 m behind it, which breaks the margin for that
    pair only.
    """
    if n < 1:
        raise ValueError("need at least one train")
    if profile not in ("safe", "unsafe"):
        raise ValueError(f"unknown profile {profile!r}")
    trains = []
    for i in range(n):
        x0 = LEAD_POSITION + GAP * (n - 1 - i)
        cur = (Fraction(16 + i % 3), Fraction(18 + i % 3))
        new = (Fraction(17 + i % 2), Fraction(19 + i % 2))
        rsd = Fraction(50)
        ma = x0 + 2000 if i == 0 else trains[-1].x0 - rsd
        sbd = x0 + (ma - x0) * Fraction(4, 5)
        trains.append(TrainParams(f"Train{i + 1}", x0, cur, new, ma, sbd, rsd))
    if profile == "unsafe":
        if n < 2:
            raise ValueError("the unsafe profile needs two trains")
        front = replace(trains[-2], cur_v=(Fraction(5), Fraction(7)), new_v=(Fraction(4), Fraction(6)))
        x0 = front.x0 - 120
        rsd = Fraction(20)
        rear = TrainParams(trains[-1].id, x0, (Fraction(16), Fraction(18)), (Fraction(17), Fraction(19)),
                           front.x0 - rsd, front.x0 - rsd - 5, rsd)
        trains[-2:] = [front, rear]
    return tuple(trains)


def with_gap(params, pair_index: int, gap) -> tuple:
    """Move the rear train of pair ``pair_index`` and everything behind it
    so that the pair's initial gap becomes ``gap``."""
    params = list(params)
    front, rear = params[pair_index], params[pair_index + 1]
    shift = Fraction(front.x0) - Fraction(rear.x0) - Fraction(gap)
    for k in range(pair_index + 1, len(params)):
        p = params[k]
        params[k] = replace(p, x0=p.x0 + shift, ma=p.ma + shift, sbd=p.sbd + shift)
    return tuple(params)


# --------------------------------------------------------------------------
# checking a cycle

class _Prepared:
    """Scenario, skeleton and presolved base system shared by all pairs."""

    def __init__(self, params):
        self.scenario = generate_scenario(params)
        net, ps = self.scenario.network, self.scenario.paths
        self.skeleton = align_occurrences(ps, net)
        self.base = encode_base(net, ps, self.skeleton)
        self.prepared: Prepared = prepare(self.base)

    def pair_system(self, pair):
        spec = self.scenario.spec(pair)
        rows = spec_rows(self.scenario.network, self.scenario.paths, spec)
        return spec, self.base.with_constraints(rows), self.prepared.extend(rows)


def check_cycle(params, mode=Exact(), deadline: Optional[Callable[[], bool]] = None) -> tuple:
    """Check every adjacent pair; returns ``(result, pair, witness, stats)``
    where ``stats`` are the counts of one pair system."""
    prep = _Prepared(params)
    sc = prep.scenario
    stats = (len(prep.base.constraints) + 1, len(prep.base.variables))
    for pair in sc.pairs:
        if deadline is not None and deadline():
            raise DeadlineExceeded()
        spec, sys, pre = prep.pair_system(pair)
        res = decide(sc.network, sc.paths, prep.skeleton, spec, sys, mode, deadline, pre)
        if res.verdict == "Reachable":
            return "Reachable", pair, res.witness, stats
    return "Unreachable", None, None, stats


def monitor_step(rec, deadline_ms: float, mode=Exact(), clock: Callable[[], float] = time.perf_counter,
                 received: Optional[float] = None) -> Verdict:
    """Verdict for one record; ``DeadlineMiss`` if no confirmed answer is
    ready within ``deadline_ms`` of ``received``."""
    t0 = clock() if received is None else received
    limit = deadline_ms / 1000.0

    def late() -> bool:
        return clock() - t0 > limit

    def ms() -> float:
        return (clock() - t0) * 1000.0

    if isinstance(rec, ModelError):
        return Verdict(-1, "Malformed", None, ms(), detail=str(rec))
    problems = rec.problems()
    if problems:
        return Verdict(rec.cycle, "Malformed", None, ms(), detail="; ".join(problems))
    try:
        result, pair, witness, _ = check_cycle(rec.trains, mode, late)
    except DeadlineExceeded:
        return Verdict(rec.cycle, "DeadlineMiss", None, ms())
    if late():
        return Verdict(rec.cycle, "DeadlineMiss", None, ms(), detail="verdict ready after the deadline")
    return Verdict(rec.cycle, result, pair, ms(), witness)


def monitor(lines: Iterable[str], deadline_ms: float, mode=Exact(),
            clock: Callable[[], float] = time.perf_counter) -> Iterator[Verdict]:
    """Verdicts in record order; a malformed line yields a diagnostic verdict
    and monitoring continues."""
    it = iter(lines)
    while True:
        try:
            line = next(it)
        except StopIteration:
            return
        if not line.strip():
            continue
        received = clock()
        rec = next(iter_records([line]))
        v = monitor_step(rec, deadline_ms, mode, clock, received)
        if v.result == "Malformed" and v.cycle < 0:
            v = replace(v, cycle=_cycle_of(line))
        yield v


def _cycle_of(line: str) -> int:
    # best-effort cycle id of a malformed record, -1 when unreadable
    try:
        return int(json.loads(line)["cycle"])
    except (ValueError, KeyError, TypeError):
        return -1


# --------------------------------------------------------------------------
# records and bench

def safe_records(n: int, count: int, start_cycle: int = 0, profile: str = "safe") -> list:
    """``count`` records of one profile; positions advance a little every cycle."""
    base = default_params(n, profile)
    out = []
    for k in range(count):
        shift = Fraction(8 * (k % 7))
        trains = tuple(replace(p, x0=p.x0 + shift, ma=p.ma + shift, sbd=p.sbd + shift) for p in base)
        out.append(CycleRecord(start_cycle + k, CYCLE * (start_cycle + k), trains))
    return out


@dataclass(frozen=True)
class BenchRow:
    n: int
    constraints: int
    variables: int
    median_ms: float
    verdict: str
    samples: tuple = field(default=(), repr=False)


def bench(n_list, repetitions: int = 20, mode=Exact(), clock: Callable[[], float] = time.perf_counter) -> list:
    """Per train count: counts for one pair system and the median wall-clock
    time of a whole cycle check (all pairs, generation included)."""
    rows = []
    for n in n_list:
        params = default_params(n, "safe")
        samples = []
        verdict, stats = "", (0, 0)
        for _ in range(repetitions):
            t0 = clock()
            verdict, _, _, stats = check_cycle(params, mode)
            samples.append((clock() - t0) * 1000.0)
        rows.append(BenchRow(n, stats[0], stats[1], statistics.median(samples), verdict, tuple(samples)))
    return rows
