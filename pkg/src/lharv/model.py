"""Intermediate representation for linear hybrid automata with readable
outer variables, and the structural checks a network must pass before it
can be verified.

All numbers in the IR are :class:`fractions.Fraction`; nothing here ever
touches binary floating point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Optional, Union

Number = Union[int, Fraction]


class UnknownIdentifier(KeyError):
    """Lookup of a variable, label, automaton or location that does not exist."""

    def __str__(self) -> str:  # KeyError repr-quotes its argument
        return str(self.args[0]) if self.args else "unknown identifier"


_ZERO = Fraction(0)
_ONE = Fraction(1)


class LinearExpression:
    """``sum(coef * var) + constant`` with exact coefficients.

    Keys may be any hashable (variable names in the model, LP variables in
    the encoder).  Zero coefficients are never stored.  Instances are treated
    as immutable.
    """

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Optional[Mapping[Hashable, Number]] = None, constant: Number = 0):
        clean = {}
        if terms:
            for k, v in terms.items():
                if v:
                    clean[k] = v if isinstance(v, Fraction) else Fraction(v)
        self.terms: dict = clean
        self.constant = constant if isinstance(constant, Fraction) else Fraction(constant)

    @classmethod
    def _raw(cls, terms: dict, constant: Fraction) -> "LinearExpression":
        # trusted constructor: Fraction values, zeros still dropped
        e = object.__new__(cls)
        e.terms = {k: v for k, v in terms.items() if v}
        e.constant = constant
        return e

    @classmethod
    def var(cls, name: Hashable, coef: Number = 1) -> "LinearExpression":
        if coef == 1:
            return cls._raw({name: _ONE}, _ZERO)
        return cls({name: coef})

    @classmethod
    def const(cls, value: Number) -> "LinearExpression":
        return cls(None, value)

    def variables(self) -> Iterable[Hashable]:
        return self.terms.keys()

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: Union["LinearExpression", Number]) -> "LinearExpression":
        if not isinstance(other, LinearExpression):
            return LinearExpression(self.terms, self.constant + other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms[k] + v if k in terms else v
        return LinearExpression._raw(terms, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "LinearExpression":
        return LinearExpression._raw({k: -v for k, v in self.terms.items()}, -self.constant)

    def __sub__(self, other: Union["LinearExpression", Number]) -> "LinearExpression":
        if not isinstance(other, LinearExpression):
            return LinearExpression(self.terms, self.constant - other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms[k] - v if k in terms else -v
        return LinearExpression._raw(terms, self.constant - other.constant)

    def __rsub__(self, other: Number) -> "LinearExpression":
        return (-self) + other

    def __mul__(self, k: Number) -> "LinearExpression":
        if isinstance(k, LinearExpression):
            if k.is_constant():
                k = k.constant
            elif self.is_constant():
                return k * self.constant
            else:
                raise TypeError("product of two non-constant expressions is not linear")
        return LinearExpression({v: c * k for v, c in self.terms.items()}, self.constant * k)

    __rmul__ = __mul__

    def rename(self, mapping: Callable[[Hashable], Hashable]) -> "LinearExpression":
        terms: dict = {}
        for k, v in self.terms.items():
            nk = mapping(k)
            terms[nk] = terms.get(nk, 0) + v
        return LinearExpression(terms, self.constant)

    def evaluate(self, valuation: Mapping[Hashable, object]):
        total = self.constant
        for k, v in self.terms.items():
            total = total + v * valuation[k]
        return total

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearExpression):
            return NotImplemented
        return self.terms == other.terms and self.constant == other.constant

    def __hash__(self) -> int:
        return hash((frozenset(self.terms.items()), self.constant))

    def __repr__(self) -> str:
        return f"LinearExpression({self.terms!r}, {self.constant!r})"


class Relation(enum.Enum):
    LT = "<"
    LE = "<="
    EQ = "="
    GE = ">="
    GT = ">"

    @property
    def strict(self) -> bool:
        return self in (Relation.LT, Relation.GT)

    def flipped(self) -> "Relation":
        return _FLIP[self]

    def holds(self, lhs, rhs, tol: float = 0) -> bool:
        """Evaluate ``lhs REL rhs``.  ``tol`` loosens non-strict relations only."""
        d = lhs - rhs
        if self is Relation.EQ:
            return abs(d) <= tol
        if self is Relation.LE:
            return d <= tol
        if self is Relation.GE:
            return d >= -tol
        if self is Relation.LT:
            return d < 0
        return d > 0

    @classmethod
    def parse(cls, text: str) -> "Relation":
        return _BY_SYMBOL[text]


_FLIP = {Relation.LT: Relation.GT, Relation.LE: Relation.GE, Relation.EQ: Relation.EQ,
         Relation.GE: Relation.LE, Relation.GT: Relation.LT}
_BY_SYMBOL = {r.value: r for r in Relation}
_BY_SYMBOL["=="] = Relation.EQ


@dataclass(frozen=True)
class Constraint:
    """``lhs REL rhs`` in normal form: every variable term on the left, a
    pure rational on the right (``lhs.constant`` is always zero)."""

    lhs: LinearExpression
    relation: Relation
    rhs: Fraction

    @classmethod
    def make(cls, left: Union[LinearExpression, Number], relation: Relation,
             right: Union[LinearExpression, Number] = 0) -> "Constraint":
        if not isinstance(left, LinearExpression):
            left = LinearExpression.const(left)
        diff = left - right
        return cls(LinearExpression._raw(diff.terms, _ZERO), relation, -diff.constant)

    def variables(self) -> Iterable[Hashable]:
        return self.lhs.terms.keys()

    def holds(self, valuation: Mapping[Hashable, object], tol: float = 0) -> bool:
        return self.relation.holds(self.lhs.evaluate(valuation), self.rhs, tol)

    def rename(self, mapping: Callable[[Hashable], Hashable]) -> "Constraint":
        return Constraint(self.lhs.rename(mapping), self.relation, self.rhs)

    def canonical(self) -> "Constraint":
        """Same constraint, sign-normalized so that the first term (in the
        expression's term order) has a positive coefficient."""
        if self.lhs.terms:
            first = next(iter(self.lhs.terms.values()))
            if first < 0:
                return Constraint(-self.lhs, self.relation.flipped(), -self.rhs)
        return self


@dataclass(frozen=True)
class FlowRange:
    """Rate interval ``lo <= dx/dt <= hi`` (units per second)."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))

    @property
    def empty(self) -> bool:
        return self.lo > self.hi


# A flow is either a rate interval (LHA_RV) or an arbitrary expression of the
# local variables (general HA_RV, parsed but rejected by validation).
Flow = Union[FlowRange, LinearExpression]


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    label: str
    guards: tuple = ()
    resets: tuple = ()  # ((var, LinearExpression), ...)

    def reset_map(self) -> dict:
        return dict(self.resets)

    def read_variables(self) -> set:
        out = set()
        for g in self.guards:
            out.update(g.variables())
        for _, e in self.resets:
            out.update(e.variables())
        return out

    def describe(self) -> str:
        return f"{self.source} -{self.label}-> {self.target}"


@dataclass(frozen=True)
class Location:
    id: str
    invariant: tuple = ()
    flows: Mapping[str, Flow] = field(default_factory=dict)
    initial_conditions: Mapping[str, Fraction] = field(default_factory=dict)


@dataclass(frozen=True)
class Automaton:
    name: str
    local_vars: tuple = ()
    readable_vars: tuple = ()
    local_labels: tuple = ()
    shared_labels: tuple = ()
    locations: tuple = ()
    initial_locations: tuple = ()
    transitions: tuple = ()

    @cached_property
    def _locations(self) -> dict:
        return {loc.id: loc for loc in self.locations}

    def location(self, loc_id: str) -> Location:
        try:
            return self._locations[loc_id]
        except KeyError:
            raise UnknownIdentifier(f"automaton {self.name} has no location {loc_id!r}") from None

    def has_location(self, loc_id: str) -> bool:
        return loc_id in self._locations

    @property
    def labels(self) -> tuple:
        return self.local_labels + self.shared_labels

    def find_transitions(self, source: str, label: str, target: str) -> list:
        return [t for t in self.transitions
                if t.source == source and t.label == label and t.target == target]


@dataclass(frozen=True)
class Network:
    automata: tuple

    def __post_init__(self):
        object.__setattr__(self, "automata", tuple(self.automata))

    def __iter__(self) -> Iterator[Automaton]:
        return iter(self.automata)

    def __len__(self) -> int:
        return len(self.automata)

    @cached_property
    def _by_name(self) -> dict:
        return {a.name: a for a in self.automata}

    @cached_property
    def _owners(self) -> dict:
        out: dict = {}
        for a in self.automata:
            for v in a.local_vars:
                out.setdefault(v, a.name)
        return out

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.automata)

    def automaton(self, name: str) -> Automaton:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownIdentifier(f"no automaton named {name!r}") from None

    def has_automaton(self, name: str) -> bool:
        return name in self._by_name

    def variables(self) -> tuple:
        return tuple(self._owners)

    def resolve_variable(self, ref: str) -> str:
        """Resolve a plain or ``Automaton.var`` qualified reference to the
        declared variable name."""
        if ref in self._owners:
            return ref
        if "." in ref:
            aut, _, local = ref.partition(".")
            a = self._by_name.get(aut)
            if a is not None and local in a.local_vars:
                return local
        raise UnknownIdentifier(f"unknown variable {ref!r}")


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str = ""
    span: Optional[object] = None  # textio.SourceSpan when produced by the parser

    def __str__(self) -> str:
        parts = []
        if self.span is not None:
            parts.append(str(self.span))
        elif self.where:
            parts.append(self.where)
        parts.append(f"{self.code}: {self.message}")
        return ": ".join(parts)


def owner_of(net: Network, var: str) -> str:
    """Name of the automaton that declares ``var`` as a local variable."""
    try:
        return net._owners[var]
    except KeyError:
        raise UnknownIdentifier(f"unknown variable {var!r}") from None


def participants_of(net: Network, label: str) -> frozenset:
    """Automata that must fire ``label`` jointly.

    For a shared label that is every automaton listing it as shared; a
    local label belongs to its single owner.
    """
    shared = frozenset(a.name for a in net if label in a.shared_labels)
    if shared:
        return shared
    local = frozenset(a.name for a in net if label in a.local_labels)
    if local:
        return local
    raise UnknownIdentifier(f"unknown label {label!r}")


def _dupes(items: Iterable[str]) -> list:
    seen, out = set(), []
    for x in items:
        if x in seen and x not in out:
            out.append(x)
        seen.add(x)
    return out


def _check_automaton(a: Automaton) -> Iterator[Diagnostic]:
    where = f"automaton {a.name}"
    local, readable = set(a.local_vars), set(a.readable_vars)
    for v in _dupes(a.local_vars):
        yield Diagnostic("duplicate-declaration", f"variable {v!r} declared twice", where)
    for v in sorted(local & readable):
        yield Diagnostic("var-overlap", f"variable {v!r} is both local and readable", where)
    for lab in sorted(set(a.local_labels) & set(a.shared_labels)):
        yield Diagnostic("label-overlap", f"label {lab!r} is both local and shared", where)
    for lab in _dupes(a.local_labels) + _dupes(a.shared_labels):
        yield Diagnostic("duplicate-declaration", f"label {lab!r} declared twice", where)
    for loc in _dupes([loc.id for loc in a.locations]):
        yield Diagnostic("duplicate-declaration", f"location {loc!r} declared twice", where)
    if not a.initial_locations:
        yield Diagnostic("no-initial-location", "automaton has no initial location", where)

    loc_ids = {loc.id for loc in a.locations}
    for v0 in a.initial_locations:
        if v0 not in loc_ids:
            yield Diagnostic("undeclared-location", f"initial location {v0!r} is not declared", where)

    for loc in a.locations:
        lw = f"{where}, location {loc.id}"
        for v in a.local_vars:
            if v not in loc.flows:
                yield Diagnostic("missing-flow", f"no flow condition for {v!r}", lw)
        for v, flow in loc.flows.items():
            if v not in local:
                yield Diagnostic("flow-nonlocal", f"flow given for non-local variable {v!r}", lw)
            if isinstance(flow, FlowRange):
                if flow.empty:
                    yield Diagnostic("empty-rate", f"empty rate interval for {v!r}", lw)
            else:
                yield Diagnostic("nonlinear-flow",
                                 f"flow of {v!r} depends on variables (not a rate interval)", lw)
        for c in loc.invariant:
            for v in c.variables():
                if v not in local:
                    yield Diagnostic("invariant-nonlocal",
                                     f"invariant reads non-local variable {v!r}", lw)
        if loc.initial_conditions and loc.id not in a.initial_locations:
            yield Diagnostic("init-noninitial", "initial conditions on a non-initial location", lw)
        for v in loc.initial_conditions:
            if v not in local:
                yield Diagnostic("init-nonlocal", f"initial condition for non-local variable {v!r}", lw)

    labels = set(a.local_labels) | set(a.shared_labels)
    for t in a.transitions:
        tw = f"{where}, transition {t.describe()}"
        for end in (t.source, t.target):
            if end not in loc_ids:
                yield Diagnostic("undeclared-location", f"endpoint {end!r} is not declared", tw)
        if t.label not in labels:
            yield Diagnostic("undeclared-label", f"label {t.label!r} is not declared", tw)
        for v, _ in t.resets:
            if v not in local:
                yield Diagnostic("reset-nonlocal", f"reset of non-local variable {v!r}", tw)
        for v, n in zip(*_count(v for v, _ in t.resets)):
            if n > 1:
                yield Diagnostic("duplicate-reset", f"variable {v!r} reset twice", tw)
        for v in sorted(t.read_variables()):
            if v in local:
                continue
            if v not in readable:
                yield Diagnostic("undeclared-variable", f"variable {v!r} is neither local nor readable", tw)
            elif t.label not in a.shared_labels:
                yield Diagnostic("read-on-local-label",
                                 f"outer variable {v!r} read on local label {t.label!r}", tw)


def _count(items: Iterable[str]) -> tuple:
    counts: dict = {}
    for x in items:
        counts[x] = counts.get(x, 0) + 1
    return tuple(counts), tuple(counts.values())


def validate_network(net: Network) -> list:
    """All structural violations of the network, or ``[]`` when well formed.

    The result only depends on the set of automata, not their order.
    """
    diags: list = []
    for a in net:
        diags.extend(_check_automaton(a))

    for name in _dupes(a.name for a in net):
        diags.append(Diagnostic("duplicate-automaton", f"automaton {name!r} declared twice"))

    owners: dict = {}
    for a in net:
        for v in set(a.local_vars):
            owners.setdefault(v, set()).add(a.name)
    for v, who in sorted(owners.items()):
        if len(who) > 1:
            diags.append(Diagnostic("duplicate-local-variable",
                                    f"duplicate local variable {v!r} in {', '.join(sorted(who))}"))

    local_owner: dict = {}
    for a in net:
        for lab in set(a.local_labels):
            local_owner.setdefault(lab, set()).add(a.name)
    for lab, who in sorted(local_owner.items()):
        if len(who) > 1:
            diags.append(Diagnostic("duplicate-local-label",
                                    f"local label {lab!r} declared by {', '.join(sorted(who))}"))
    shared_in = {}
    for a in net:
        for lab in a.shared_labels:
            shared_in.setdefault(lab, set()).add(a.name)
    for lab in sorted(set(local_owner) & set(shared_in)):
        diags.append(Diagnostic("label-kind-conflict",
                                f"label {lab!r} is local in {', '.join(sorted(local_owner[lab]))} "
                                f"but shared in {', '.join(sorted(shared_in[lab]))}"))

    for a in net:
        for v in sorted(set(a.readable_vars)):
            who = owners.get(v, set()) - {a.name}
            if not who:
                diags.append(Diagnostic("unowned-readable-variable",
                                        f"unowned readable variable {v!r}", f"automaton {a.name}"))
        for t in a.transitions:
            if t.label not in a.shared_labels:
                continue
            for v in sorted(t.read_variables() - set(a.local_vars)):
                who = owners.get(v)
                if not who or len(who) != 1:
                    continue
                (o,) = who
                if o not in shared_in.get(t.label, ()):
                    diags.append(Diagnostic(
                        "owner-not-participant",
                        f"read of {v!r} on {t.label!r} but its owner {o} does not take part in that label",
                        f"automaton {a.name}, transition {t.describe()}"))
    return diags
