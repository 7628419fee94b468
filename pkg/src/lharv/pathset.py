"""Per-component paths, their alignment on shared labels, and (for small
networks only) explicit global paths with projection.

The alignment computed here is the structural half of the reachability
check: a path set can only be realized if every shared label occurs equally
often in all participants and the resulting synchronization events admit a
common order.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

from .model import Network, Transition, UnknownIdentifier, participants_of


@dataclass(frozen=True)
class Path:
    automaton: str
    locations: tuple
    transitions: tuple = ()

    def __post_init__(self):
        if len(self.locations) != len(self.transitions) + 1:
            raise ValueError("a path has exactly one more location than transitions")
        for i, t in enumerate(self.transitions):
            if t.source != self.locations[i] or t.target != self.locations[i + 1]:
                raise ValueError(f"transition {t.describe()} does not connect step {i} of {self.automaton}")

    def __len__(self) -> int:
        return len(self.locations)

    @property
    def final(self) -> str:
        return self.locations[-1]

    @property
    def labels(self) -> tuple:
        return tuple(t.label for t in self.transitions)


@dataclass(frozen=True)
class PathSet:
    paths: dict

    def __getitem__(self, name: str) -> Path:
        return self.paths[name]

    def __iter__(self):
        return iter(self.paths.values())

    def __len__(self) -> int:
        return len(self.paths)

    @classmethod
    def of(cls, net: Network, paths) -> "PathSet":
        """Build a path set ordered like the network; every component must have a path."""
        by_name = {p.automaton: p for p in paths}
        missing = [a.name for a in net if a.name not in by_name]
        if missing:
            raise ValueError(f"missing path for component {', '.join(missing)}")
        return cls({a.name: by_name[a.name] for a in net})


def path_from(aut, locations, labels) -> Path:
    """Resolve a location/label sequence against an automaton."""
    transitions = []
    for i, lab in enumerate(labels):
        cands = aut.find_transitions(locations[i], lab, locations[i + 1])
        if len(cands) != 1:
            raise UnknownIdentifier(
                f"{aut.name}: {len(cands)} transitions {locations[i]} -{lab}-> {locations[i + 1]}")
        transitions.append(cands[0])
    return Path(aut.name, tuple(locations), tuple(transitions))


@dataclass(frozen=True)
class SyncEvent:
    """The ``occurrence``-th firing (0-based) of a shared label; ``positions``
    maps each participant to the index of that transition in its path."""

    label: str
    occurrence: int
    positions: dict

    @property
    def key(self) -> tuple:
        return (self.label, self.occurrence)


@dataclass(frozen=True)
class SyncSkeleton:
    events: tuple

    def event_at(self, component: str, position: int) -> Optional[SyncEvent]:
        return self._index.get((component, position))

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {(c, p): ev for ev in self.events for c, p in ev.positions.items()}
            object.__setattr__(self, "_idx", idx)
        return idx

    @property
    def labels(self) -> tuple:
        return tuple(ev.label for ev in self.events)


@dataclass(frozen=True)
class Inconsistent:
    reason: str  # "occurrence-mismatch" | "cyclic-order"
    detail: str

    def __str__(self) -> str:
        return f"{self.reason}: {self.detail}"


def synchronizing_labels(net: Network) -> dict:
    """Shared labels with at least two participants, mapped to the participants."""
    out = {}
    for a in net:
        for lab in a.shared_labels:
            if lab in out:
                continue
            who = participants_of(net, lab)
            if len(who) >= 2:
                out[lab] = who
    return out


def align_occurrences(ps: PathSet, net: Network):
    """Match the m-th occurrence of each shared label across its participants
    and order the resulting events.

    Returns a :class:`SyncSkeleton` (events in one topological order) or an
    :class:`Inconsistent` verdict.
    """
    sync = synchronizing_labels(net)
    order = {a.name: i for i, a in enumerate(net)}
    occurrences: dict = {}
    for lab, who in sync.items():
        counts = {}
        for c in sorted(who, key=order.__getitem__):
            pos = [i for i, t in enumerate(ps[c].transitions) if t.label == lab]
            counts[c] = pos
        lens = {c: len(p) for c, p in counts.items()}
        if len(set(lens.values())) > 1:
            detail = ", ".join(f"{c} x{n}" for c, n in lens.items())
            return Inconsistent("occurrence-mismatch", f"label {lab!r} occurs {detail}")
        for m in range(next(iter(lens.values()))):
            occurrences[(lab, m)] = {c: counts[c][m] for c in counts}

    # precedence: consecutive sync events along each path
    succ: dict = {k: set() for k in occurrences}
    indeg = {k: 0 for k in occurrences}
    for comp in net.names:
        seq = sorted((pos[comp], k) for k, pos in occurrences.items() if comp in pos)
        for (_, a), (_, b) in zip(seq, seq[1:]):
            if b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1

    def rank(k):
        pos = occurrences[k]
        return (min(pos.values()), min(order[c] for c in pos), k)

    heap = [rank(k) for k, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    events = []
    while heap:
        *_, k = heapq.heappop(heap)
        events.append(SyncEvent(k[0], k[1], dict(sorted(occurrences[k].items(), key=lambda kv: order[kv[0]]))))
        for nxt in succ[k]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, rank(nxt))
    if len(events) < len(occurrences):
        stuck = sorted(f"{lab}#{m}" for (lab, m), d in indeg.items() if d > 0)
        return Inconsistent("cyclic-order", "no common order for events " + ", ".join(stuck))
    return SyncSkeleton(tuple(events))


# --------------------------------------------------------------------------
# explicit global paths (small networks, tests only)

@dataclass(frozen=True)
class GlobalStep:
    label: str
    moves: tuple  # ((component, Transition), ...)


@dataclass(frozen=True)
class GlobalPath:
    start: tuple  # ((component, location), ...)
    steps: tuple = ()


def initial_states(net: Network) -> Iterator[tuple]:
    for combo in itertools.product(*(a.initial_locations for a in net)):
        yield tuple(zip(net.names, combo))


def successors(net: Network, state: tuple) -> Iterator[tuple]:
    """Discrete successors of a product state: local moves and joint moves."""
    here = dict(state)
    sync = synchronizing_labels(net)
    for a in net:
        for t in a.transitions:
            if t.source == here[a.name] and t.label not in sync:
                yield GlobalStep(t.label, ((a.name, t),))
    for lab, who in sync.items():
        names = [n for n in net.names if n in who]
        options = [[t for t in net.automaton(n).transitions if t.source == here[n] and t.label == lab]
                   for n in names]
        for combo in itertools.product(*options):
            yield GlobalStep(lab, tuple(zip(names, combo)))


def enumerate_global_paths(net: Network, max_steps: int) -> Iterator[GlobalPath]:
    """Every global path of the product with at most ``max_steps`` steps,
    computed by explicit exploration; intended for tiny networks."""
    def walk(start, state, steps):
        yield GlobalPath(start, tuple(steps))
        if len(steps) == max_steps:
            return
        for st in successors(net, state):
            nxt = dict(state)
            for c, t in st.moves:
                nxt[c] = t.target
            steps.append(st)
            yield from walk(start, tuple(nxt.items()), steps)
            steps.pop()

    for s0 in initial_states(net):
        yield from walk(s0, s0, [])


def project(gp: GlobalPath, component: str) -> Path:
    start = dict(gp.start)
    if component not in start:
        raise UnknownIdentifier(f"component {component!r} is not in the network")
    locs = [start[component]]
    trans = []
    for st in gp.steps:
        for c, t in st.moves:
            if c == component:
                trans.append(t)
                locs.append(t.target)
    return Path(component, tuple(locs), tuple(trans))


def project_all(gp: GlobalPath, net: Network) -> PathSet:
    return PathSet({n: project(gp, n) for n in net.names})


def interleave(ps: PathSet, skel: SyncSkeleton, net: Network) -> GlobalPath:
    """A global path realizing the skeleton: local steps are flushed just
    before the next event of their component, events fire in skeleton order."""
    cursor = {n: 0 for n in net.names}
    steps = []

    def advance(comp, upto):
        path = ps[comp]
        while cursor[comp] < upto:
            t: Transition = path.transitions[cursor[comp]]
            steps.append(GlobalStep(t.label, ((comp, t),)))
            cursor[comp] += 1

    for ev in skel.events:
        for comp, pos in ev.positions.items():
            advance(comp, pos)
        moves = tuple((comp, ps[comp].transitions[pos]) for comp, pos in ev.positions.items())
        for comp, pos in ev.positions.items():
            cursor[comp] = pos + 1
        steps.append(GlobalStep(ev.label, moves))
    for comp in net.names:
        advance(comp, len(ps[comp].transitions))
    return GlobalPath(tuple((n, ps[n].locations[0]) for n in net.names), tuple(steps))
