"""Concrete syntax: model files (``.lharv``), path sets (``.paths``),
reachability specifications (``.spec``), witness reports (``.witness``) and
the line-delimited cycle-record / verdict streams used by the monitor.

The grammar is documented in ``docs/grammar.md``.  Every parse failure is
reported as a :class:`ModelError` carrying one or more diagnostics with
source spans; nothing in here lets a stray exception escape for bad input.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .model import (Automaton, Constraint, Diagnostic, FlowRange, LinearExpression, Location,
                    Network, Relation, Transition, UnknownIdentifier, owner_of)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ModelError(ValueError):
    """Input text could not be turned into a valid object."""

    def __init__(self, diagnostics: list):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


# --------------------------------------------------------------------------
# numbers

_DECIMAL = re.compile(r"^[+-]?\d+(\.\d+)?$")
_RATIONAL = re.compile(r"^[+-]?\d+/\d+$")


def parse_number(text: str) -> Fraction:
    """Exact value of a decimal (``0.9``) or rational (``9/10``) literal."""
    text = text.strip()
    if _DECIMAL.match(text) or _RATIONAL.match(text):
        value = Fraction(text)
        return value
    raise ValueError(f"not a number: {text!r}")


def format_number(value) -> str:
    """Inverse of :func:`parse_number`; finite decimals are printed as decimals."""
    if isinstance(value, float):
        return repr(value)
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    digits = max(twos, fives)
    if d == 1 and digits <= 12:
        scaled = abs(value.numerator) * (10 ** digits // value.denominator)
        sign = "-" if value < 0 else ""
        whole, frac = divmod(scaled, 10 ** digits)
        return f"{sign}{whole}.{frac:0{digits}d}".rstrip("0")
    return f"{value.numerator}/{value.denominator}"


# --------------------------------------------------------------------------
# lexer

@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, NUMBER, OP, EOF
    text: str
    span: SourceSpan


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>(\#|//)[^\n]*)
  | (?P<number>\d+/\d+|\d+\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<op>:=|->|<=|>=|==|[{}()\[\];,:=<>+\-*])
""", re.VERBOSE)


def tokenize(text: str, file: str = "<input>") -> list:
    tokens = []
    line, col = 1, 1
    pos = 0
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(file, line, col, 1)
            raise ModelError([Diagnostic("lexical", f"unexpected character {text[pos]!r}", span=span)])
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("number", "ident", "op"):
                tokens.append(Token(kind.upper(), s, SourceSpan(file, line, col, len(s))))
            col += len(s)
        pos = m.end()
    tokens.append(Token("EOF", "", SourceSpan(file, line, col, 1)))
    return tokens


class _Parser:
    def __init__(self, text: str, file: str):
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0
        self.diags: list = []

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ModelError(self.diags + [Diagnostic("syntax", msg, span=tok.span)])

    def error(self, code: str, msg: str, tok: Token):
        self.diags.append(Diagnostic(code, msg, span=tok.span))

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("OP", "IDENT") and self.tok.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind not in ("OP", "IDENT"):
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            self.fail(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def ident_list(self, what: str) -> list:
        out = [self.ident(what)]
        while self.accept(","):
            out.append(self.ident(what))
        return out

    def number(self) -> Fraction:
        neg = False
        while self.at("-", "+"):
            if self.advance().text == "-":
                neg = not neg
        if self.tok.kind != "NUMBER":
            self.fail(f"expected a number, found {self.tok.text or 'end of input'!r}")
        v = Fraction(self.advance().text)
        return -v if neg else v

    # linear expressions: terms are NUMBER, IDENT, NUMBER IDENT, NUMBER * IDENT,
    # IDENT * NUMBER; a product of two identifiers is rejected as nonlinear.
    def expr(self, resolve) -> LinearExpression:
        e = LinearExpression()
        sign = 1
        first = True
        while True:
            if self.at("+", "-"):
                while self.at("+", "-"):
                    if self.advance().text == "-":
                        sign = -sign
            elif not first:
                break
            e = e + self.term(resolve) * sign
            sign = 1
            first = False
            if not self.at("+", "-"):
                break
        return e

    def term(self, resolve) -> LinearExpression:
        if self.tok.kind == "NUMBER":
            coef = Fraction(self.advance().text)
            if self.accept("*"):
                if self.tok.kind == "NUMBER":
                    coef *= Fraction(self.advance().text)
                    return LinearExpression.const(coef)
                name = self.ident("variable")
                self._no_product()
                return LinearExpression.var(resolve(name), coef)
            if self.tok.kind == "IDENT" and not self._is_keyword_here():
                name = self.advance()
                self._no_product()
                return LinearExpression.var(resolve(name), coef)
            return LinearExpression.const(coef)
        if self.accept("("):
            e = self.expr(resolve)
            self.expect(")")
            if self.accept("*"):
                if self.tok.kind != "NUMBER":
                    self.fail("nonlinear term: only multiplication by a number is allowed")
                e = e * Fraction(self.advance().text)
            return e
        if self.tok.kind == "IDENT":
            name = self.advance()
            coef = Fraction(1)
            if self.accept("*"):
                if self.tok.kind != "NUMBER":
                    self.fail("nonlinear term: product of two variables")
                coef = Fraction(self.advance().text)
            return LinearExpression.var(resolve(name), coef)
        self.fail(f"expected a term, found {self.tok.text or 'end of input'!r}")

    def _no_product(self):
        if self.at("*"):
            self.fail("nonlinear term: product of two variables")

    def _is_keyword_here(self) -> bool:
        return self.tok.text in ("at", "assert", "and")

    def constraints(self, resolve) -> list:
        """``e1 REL e2 [REL e3]``; a chain yields one constraint per link."""
        start = self.tok
        exprs = [self.expr(resolve)]
        rels = []
        while self.at("<", "<=", "=", "==", ">=", ">"):
            rels.append(Relation.parse(self.advance().text))
            exprs.append(self.expr(resolve))
        if not rels:
            self.fail("expected a comparison operator", self.tok if self.tok.kind != "EOF" else start)
        return [Constraint.make(exprs[k], rels[k], exprs[k + 1]) for k in range(len(rels))]


# --------------------------------------------------------------------------
# model files

_DECL_KEYWORDS = ("var", "read", "shared", "local", "loc", "init", "trans")


def parse_model(text: str, file: str = "<model>") -> Network:
    """Parse a ``.lharv`` model into a :class:`Network`.

    Identifier resolution and local consistency (declared names, one flow
    per variable, non-empty rate intervals) are checked here; network-level
    rules live in :func:`lharv.model.validate_network`.
    """
    p = _Parser(text, file)
    automata = []
    while p.tok.kind != "EOF":
        if not p.at("automaton"):
            p.fail(f"expected 'automaton', found {p.tok.text!r}")
        automata.append(_parse_automaton(p))
    if p.diags:
        raise ModelError(p.diags)
    return Network(tuple(automata))


def _parse_automaton(p: _Parser) -> Automaton:
    p.expect("automaton")
    name_tok = p.ident("automaton name")
    name = name_tok.text
    p.expect("{")
    local_vars, readable, local_labels, shared_labels = [], [], [], []
    locations: dict = {}
    loc_tokens: dict = {}
    inits: dict = {}
    pending_trans = []

    def declare(bucket, toks, what):
        for t in toks:
            if t.text in local_vars or t.text in readable or t.text in local_labels or t.text in shared_labels:
                p.error("duplicate-declaration", f"{what} {t.text!r} already declared", t)
            bucket.append(t.text)

    while not p.at("}"):
        if p.tok.kind == "EOF":
            p.fail("unterminated automaton block", name_tok)
        kw = p.tok
        if p.accept("var"):
            declare(local_vars, p.ident_list("variable"), "variable")
            p.expect(";")
        elif p.accept("read"):
            declare(readable, p.ident_list("variable"), "variable")
            p.expect(";")
        elif p.accept("shared"):
            p.expect("label")
            declare(shared_labels, p.ident_list("label"), "label")
            p.expect(";")
        elif p.accept("local"):
            p.expect("label")
            declare(local_labels, p.ident_list("label"), "label")
            p.expect(";")
        elif p.accept("loc"):
            lt = p.ident("location name")
            if lt.text in loc_tokens:
                p.error("duplicate-declaration", f"location {lt.text!r} already declared", lt)
            loc_tokens[lt.text] = lt
            locations[lt.text] = _parse_location_body(p, lt, local_vars)
        elif p.accept("init"):
            lt = p.ident("location name")
            inits.setdefault(lt.text, (lt, {}))
            p.expect("{")
            while not p.accept("}"):
                vt = p.ident("variable")
                p.expect("=")
                val = p.number()
                p.expect(";")
                if vt.text not in local_vars:
                    p.error("undeclared-identifier", f"undeclared local variable {vt.text!r}", vt)
                elif vt.text in inits[lt.text][1]:
                    p.error("duplicate-init", f"second initial condition for {vt.text!r}", vt)
                else:
                    inits[lt.text][1][vt.text] = val
        elif p.accept("trans"):
            pending_trans.append(_parse_transition(p, local_vars, readable))
        else:
            p.fail(f"expected one of {', '.join(_DECL_KEYWORDS)}, found {kw.text!r}")
    p.expect("}")

    for lt, _ in inits.values():
        if lt.text not in locations:
            p.error("undeclared-identifier", f"undeclared location {lt.text!r}", lt)
    labels = set(local_labels) | set(shared_labels)
    transitions = []
    for src, dst, lab, tr in pending_trans:
        for t in (src, dst):
            if t.text not in locations:
                p.error("undeclared-identifier", f"undeclared location {t.text!r}", t)
        if lab.text not in labels:
            p.error("undeclared-identifier", f"undeclared label {lab.text!r}", lab)
        transitions.append(tr)

    locs = []
    for lid, loc in locations.items():
        if lid in inits:
            loc = Location(loc.id, loc.invariant, loc.flows, dict(inits[lid][1]))
        locs.append(loc)
    initial = tuple(lid for lid in locations if lid in inits)
    return Automaton(name, tuple(local_vars), tuple(readable), tuple(local_labels),
                     tuple(shared_labels), tuple(locs), initial, tuple(transitions))


def _resolver(p: _Parser, allowed: list):
    def resolve(tok: Token) -> str:
        if tok.text not in allowed:
            p.error("undeclared-identifier", f"undeclared variable {tok.text!r}", tok)
        return tok.text
    return resolve


def _parse_location_body(p: _Parser, lt: Token, local_vars: list) -> Location:
    flows: dict = {}
    invariant = []
    p.expect("{")
    resolve = _resolver(p, local_vars)
    while not p.accept("}"):
        if p.accept("flow"):
            vt = p.ident("variable")
            if vt.text not in local_vars:
                p.error("undeclared-identifier", f"undeclared local variable {vt.text!r}", vt)
            if vt.text in flows:
                p.error("duplicate-flow", f"second flow condition for {vt.text!r}", vt)
            if p.accept("in"):
                b = p.tok
                p.expect("[")
                lo = p.number()
                p.expect(",")
                hi = p.number()
                p.expect("]")
                if lo > hi:
                    p.error("empty-rate", f"empty rate interval [{format_number(lo)}, {format_number(hi)}]", b)
                flow = FlowRange(lo, hi)
            else:
                p.expect("=")
                e = p.expr(resolve)
                flow = FlowRange(e.constant, e.constant) if e.is_constant() else e
            p.expect(";")
            flows.setdefault(vt.text, flow)
        elif p.accept("inv"):
            invariant.extend(p.constraints(resolve))
            p.expect(";")
        else:
            p.fail(f"expected 'flow' or 'inv', found {p.tok.text!r}")
    return Location(lt.text, tuple(invariant), flows)


def _parse_transition(p: _Parser, local_vars: list, readable: list):
    src = p.ident("location name")
    p.expect("->")
    dst = p.ident("location name")
    p.expect("on")
    lab = p.ident("label")
    guards, resets = [], []
    resolve = _resolver(p, local_vars + readable)
    if p.accept("{"):
        while not p.accept("}"):
            if p.accept("guard"):
                guards.extend(p.constraints(resolve))
                p.expect(";")
            elif p.accept("reset"):
                vt = p.ident("variable")
                if vt.text not in local_vars:
                    p.error("undeclared-identifier", f"reset target {vt.text!r} is not a local variable", vt)
                if not p.accept(":="):
                    p.expect("=")
                e = p.expr(resolve)
                p.expect(";")
                if any(v == vt.text for v, _ in resets):
                    p.error("duplicate-reset", f"second reset of {vt.text!r}", vt)
                resets.append((vt.text, e))
            else:
                p.fail(f"expected 'guard' or 'reset', found {p.tok.text!r}")
    else:
        p.expect(";")
    return src, dst, lab, Transition(src.text, dst.text, lab.text, tuple(guards), tuple(resets))


def _fmt_var(name) -> str:
    return str(name)


def format_expression(e: LinearExpression, name=_fmt_var) -> str:
    parts = []
    for var, c in e.terms.items():
        mag = abs(c)
        body = name(var) if mag == 1 else f"{format_number(mag)}*{name(var)}"
        parts.append(("-" if c < 0 else "+", body))
    if e.constant or not parts:
        c = e.constant
        parts.append(("-" if c < 0 else "+", format_number(abs(c))))
    out = ""
    for i, (sign, body) in enumerate(parts):
        if i == 0:
            out = body if sign == "+" else f"-{body}"
        else:
            out += f" {sign} {body}"
    return out


def format_constraint(c: Constraint, name=_fmt_var) -> str:
    return f"{format_expression(LinearExpression(c.lhs.terms), name)} {c.relation.value} {format_number(c.rhs)}"


def format_model(net: Network) -> str:
    """Normal-form text of a network; ``parse_model(format_model(n)) == n``."""
    out = []
    for a in net:
        out.append(f"automaton {a.name} {{")
        if a.local_vars:
            out.append(f"  var {', '.join(a.local_vars)};")
        if a.readable_vars:
            out.append(f"  read {', '.join(a.readable_vars)};")
        if a.shared_labels:
            out.append(f"  shared label {', '.join(a.shared_labels)};")
        if a.local_labels:
            out.append(f"  local label {', '.join(a.local_labels)};")
        for loc in a.locations:
            out.append(f"  loc {loc.id} {{")
            for v, f in loc.flows.items():
                if isinstance(f, FlowRange):
                    out.append(f"    flow {v} in [{format_number(f.lo)}, {format_number(f.hi)}];")
                else:
                    out.append(f"    flow {v} = {format_expression(f)};")
            for c in loc.invariant:
                out.append(f"    inv {format_constraint(c)};")
            out.append("  }")
        for lid in a.initial_locations:
            loc = a.location(lid)
            body = " ".join(f"{v} = {format_number(x)};" for v, x in loc.initial_conditions.items())
            out.append(f"  init {lid} {{ {body} }}" if body else f"  init {lid} {{ }}")
        for t in a.transitions:
            head = f"  trans {t.source} -> {t.target} on {t.label}"
            if not t.guards and not t.resets:
                out.append(head + ";")
                continue
            out.append(head + " {")
            for g in t.guards:
                out.append(f"    guard {format_constraint(g)};")
            for v, e in t.resets:
                out.append(f"    reset {v} := {format_expression(e)};")
            out.append("  }")
        out.append("}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# path sets

def parse_pathset(text: str, net: Network, file: str = "<paths>"):
    """One line per automaton: ``Name: loc0 -label-> loc1 -label-> ...``."""
    from .pathset import Path, PathSet

    p = _Parser(text, file)
    paths: dict = {}
    while p.tok.kind != "EOF":
        at = p.ident("automaton name")
        p.expect(":")
        if not net.has_automaton(at.text):
            p.error("unknown-automaton", f"unknown automaton {at.text!r}", at)
            aut = None
        else:
            aut = net.automaton(at.text)
        if at.text in paths:
            p.error("duplicate-path", f"second path for {at.text!r}", at)
        locs = [p.ident("location name")]
        labels = []
        while p.accept("-"):
            labels.append(p.ident("label"))
            p.expect("->")
            locs.append(p.ident("location name"))
        p.accept(";")
        if aut is None:
            continue
        ok = True
        for lt in locs:
            if not aut.has_location(lt.text):
                p.error("unknown-location", f"{aut.name} has no location {lt.text!r}", lt)
                ok = False
        if not ok:
            continue
        if locs[0].text not in aut.initial_locations:
            p.error("non-initial-start", f"path of {aut.name} starts in non-initial location {locs[0].text!r}",
                    locs[0])
        transitions = []
        for k, lab in enumerate(labels):
            cands = aut.find_transitions(locs[k].text, lab.text, locs[k + 1].text)
            if not cands:
                p.error("unknown-transition",
                        f"{aut.name} has no transition {locs[k].text} -{lab.text}-> {locs[k + 1].text}", lab)
                ok = False
            elif len(cands) > 1:
                p.error("ambiguous-transition",
                        f"{aut.name} has several transitions {locs[k].text} -{lab.text}-> {locs[k + 1].text}",
                        lab)
                ok = False
            else:
                transitions.append(cands[0])
        if ok:
            paths[aut.name] = Path(aut.name, tuple(t.text for t in locs), tuple(transitions))
    for a in net:
        if a.name not in paths and not any(d.code == "unknown-location" or d.code.endswith("transition")
                                           for d in p.diags if a.name in d.message):
            p.diags.append(Diagnostic("missing-path", f"missing path for component {a.name}",
                                      span=SourceSpan(file, 1, 1, 1)))
    if p.diags:
        raise ModelError(p.diags)
    return PathSet({a.name: paths[a.name] for a in net})


def format_pathset(ps) -> str:
    lines = []
    for name, path in ps.paths.items():
        s = path.locations[0]
        for t, loc in zip(path.transitions, path.locations[1:]):
            s += f" -{t.label}-> {loc}"
        lines.append(f"{name}: {s}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# reachability specifications

@dataclass(frozen=True)
class ReachSpec:
    """Target locations per component plus constraints on final values."""

    targets: dict
    constraints: tuple = ()
    name: str = ""


def parse_spec(text: str, net: Network, file: str = "<spec>") -> ReachSpec:
    """Clauses ``at TARGETS [assert CONSTRAINTS]`` or ``assert CONSTRAINTS [at TARGETS]``.

    A target is ``Automaton.location``, a bare location name that belongs to
    exactly one automaton, or a parenthesized tuple of such names.
    Constraints are separated by ``;``, ``,`` or ``and``.
    """
    p = _Parser(text, file)
    targets: dict = {}
    constraints: list = []

    def resolve(tok: Token) -> str:
        try:
            return net.resolve_variable(tok.text)
        except UnknownIdentifier:
            p.error("undeclared-identifier", f"unknown variable {tok.text!r}", tok)
            return tok.text

    def target(tok: Token):
        name = tok.text
        found = []
        if "." in name:
            aut, _, loc = name.partition(".")
            if net.has_automaton(aut) and net.automaton(aut).has_location(loc):
                found = [(aut, loc)]
        if not found:
            found = [(a.name, name) for a in net if a.has_location(name)]
        if not found:
            p.error("unknown-location", f"unknown location {name!r}", tok)
            return
        if len(found) > 1:
            p.error("ambiguous-location", f"location {name!r} exists in several automata; qualify it", tok)
            return
        aut, loc = found[0]
        if aut in targets and targets[aut] != loc:
            p.error("conflicting-target", f"two target locations for {aut}", tok)
        targets[aut] = loc

    def target_list():
        if p.accept("("):
            target(p.ident("location"))
            while p.accept(","):
                target(p.ident("location"))
            p.expect(")")
            return
        target(p.ident("location"))
        while p.at(",") and p.peek().kind == "IDENT" and p.peek(2).text not in _REL_TEXT + ("+", "-", "*"):
            p.advance()
            target(p.ident("location"))

    def constraint_list():
        constraints.extend(p.constraints(resolve))
        while p.at(";", ",", "and"):
            p.advance()
            if p.tok.kind == "EOF" or p.at("at", "assert"):
                break
            constraints.extend(p.constraints(resolve))

    while p.tok.kind != "EOF":
        if p.accept("at"):
            target_list()
            if p.accept("assert"):
                constraint_list()
        elif p.accept("assert"):
            constraint_list()
            if p.accept("at"):
                target_list()
        else:
            p.fail(f"expected 'at' or 'assert', found {p.tok.text!r}")
        p.accept(";")
    if p.diags:
        raise ModelError(p.diags)
    return ReachSpec(targets, tuple(constraints))


_REL_TEXT = ("<", "<=", "=", "==", ">=", ">")


def format_spec(spec: ReachSpec) -> str:
    lines = []
    if spec.targets:
        lines.append("at " + ", ".join(f"{a}.{l}" for a, l in spec.targets.items()))
    if spec.constraints:
        lines.append("assert " + ";\n       ".join(format_constraint(c) for c in spec.constraints))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# witnesses

def emit_witness(w) -> str:
    """Deterministic text form of a :class:`lharv.replay.Witness`."""
    lines = [f"witness {w.mode}"]
    for comp, steps in w.components.items():
        lines.append(f"component {comp}")
        for st in steps:
            entry = " ".join(f"{v}={format_number(x)}" for v, x in st.entry.items())
            exit_ = " ".join(f"{v}={format_number(x)}" for v, x in st.exit.items())
            line = f"  loc {st.location} dwell {format_number(st.dwell)} entry"
            line += f" {entry}" if entry else ""
            line += " exit"
            line += f" {exit_}" if exit_ else ""
            lines.append(line)
    for (label, m), t in w.sync.items():
        lines.append(f"sync {label} {m} at {format_number(t)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_witness(text: str, file: str = "<witness>"):
    from .replay import Step, Witness

    def bad(n, msg):
        raise ModelError([Diagnostic("witness-syntax", msg, span=SourceSpan(file, n, 1, 1))])

    lines = text.replace("\r\n", "\n").split("\n")
    rows = [(n + 1, ln.split()) for n, ln in enumerate(lines) if ln.strip()]
    if not rows or rows[0][1][:1] != ["witness"] or len(rows[0][1]) != 2:
        bad(1, "expected 'witness <mode>' header")
    mode = rows[0][1][1]
    num = (lambda s: float(s)) if mode == "float" else parse_number
    components: dict = {}
    sync: dict = {}
    current = None
    for n, words in rows[1:]:
        head = words[0]
        try:
            if head == "component":
                current = words[1]
                components[current] = []
            elif head == "loc":
                if current is None:
                    bad(n, "location before component")
                loc, dwell = words[1], num(words[3])
                k = words.index("exit")
                entry = {kv.split("=", 1)[0]: num(kv.split("=", 1)[1]) for kv in words[5:k]}
                exit_ = {kv.split("=", 1)[0]: num(kv.split("=", 1)[1]) for kv in words[k + 1:]}
                components[current].append(Step(loc, dwell, entry, exit_))
            elif head == "sync":
                sync[(words[1], int(words[2]))] = num(words[4])
            elif head == "end":
                break
            else:
                bad(n, f"unexpected line starting with {head!r}")
        except (IndexError, ValueError) as exc:
            bad(n, f"malformed line: {exc}")
    return Witness(mode, {c: tuple(s) for c, s in components.items()}, sync)


# --------------------------------------------------------------------------
# cycle records and verdicts (one JSON object per line)

def _num(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_number(x)
    raise ValueError(f"not a number: {x!r}")


def parse_record(line: str):
    """Decode one cycle record.  Decimal numbers are read exactly."""
    from .cbtc import CycleRecord, TrainParams

    try:
        obj = json.loads(line, parse_float=Fraction, parse_int=Fraction)
        trains = []
        for t in obj["trains"]:
            trains.append(TrainParams(
                id=str(t["id"]), x0=_num(t["x0"]),
                cur_v=(_num(t["cur_v"][0]), _num(t["cur_v"][1])),
                new_v=(_num(t["new_v"][0]), _num(t["new_v"][1])),
                ma=_num(t["ma"]), sbd=_num(t["sbd"]), rsd=_num(t["rsd"])))
        return CycleRecord(int(obj["cycle"]), _num(obj.get("timestamp", 0)), tuple(trains))
    except (KeyError, TypeError, ValueError, IndexError, json.JSONDecodeError) as exc:
        raise ModelError([Diagnostic("record-syntax", f"malformed cycle record: {exc}")]) from None


def _jnum(x):
    if isinstance(x, Fraction) and x.denominator != 1:
        s = format_number(x)
        return float(s) if "/" not in s else s
    return int(x)


def format_record(rec) -> str:
    obj = {"cycle": rec.cycle, "timestamp": _jnum(Fraction(rec.timestamp)), "trains": [
        {"id": t.id, "x0": _jnum(t.x0), "cur_v": [_jnum(t.cur_v[0]), _jnum(t.cur_v[1])],
         "new_v": [_jnum(t.new_v[0]), _jnum(t.new_v[1])], "ma": _jnum(t.ma),
         "sbd": _jnum(t.sbd), "rsd": _jnum(t.rsd)} for t in rec.trains]}
    return json.dumps(obj, separators=(",", ":"))


def iter_records(lines: Iterable[str]) -> Iterator:
    """Yield a CycleRecord, or a ModelError for a malformed line, per non-blank line."""
    for line in lines:
        if not line.strip():
            continue
        try:
            yield parse_record(line)
        except ModelError as exc:
            yield exc


def format_verdict(v) -> str:
    pair = "-" if v.pair is None else f"{v.pair[0]}/{v.pair[1]}"
    obj = {"cycle": v.cycle, "result": v.result, "pair": pair, "latency_ms": round(v.latency_ms, 3)}
    if v.detail:
        obj["detail"] = v.detail
    return json.dumps(obj)


def qualified(net: Network, var: str) -> str:
    """``Automaton.var`` unless the name is already qualified by its owner."""
    owner = owner_of(net, var)
    return var if var.startswith(owner + ".") else f"{owner}.{var}"
