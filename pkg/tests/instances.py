"""Seeded random small instances: at most 3 automata, at most 2 variables
each, paths of at most 5 locations.

Each automaton is exactly the chain its path walks, built from one global
event sequence, so the path set always aligns.  Instances are emitted as
text and parsed back, which keeps the parser in the loop.
"""

import random
import re
from fractions import Fraction

from lharv.textio import parse_model, parse_pathset, parse_spec

RATES = [Fraction(-1), Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)]
CONSTS = [0, 1, 2, 3]


def _num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _events(rng, names, max_locs):
    """Global sequence of (label, participants) with every projection short enough."""
    count = {n: 0 for n in names}
    events = []
    shared = 0
    for _ in range(rng.randint(1, 6)):
        open_ = [n for n in names if count[n] < max_locs - 1]
        if not open_:
            break
        if len(open_) >= 2 and rng.random() < 0.45:
            k = rng.randint(2, len(open_))
            parts = sorted(rng.sample(open_, k), key=names.index)
            events.append((f"s{shared}", parts))
            shared += 1
        else:
            n = rng.choice(open_)
            parts = [n]
            events.append((f"l{len(events)}", parts))
        for n in parts:
            count[n] += 1
    return events


def random_instance(seed: int):
    rng = random.Random(seed)
    k = rng.randint(1, 3)
    names = ["A", "B", "C"][:k]
    nvars = {n: rng.randint(1, 2) for n in names}
    vars_ = {n: [f"{n.lower()}{i}" for i in range(nvars[n])] for n in names}
    events = _events(rng, names, 5)
    steps = {n: [] for n in names}  # per automaton: (label, participants)
    for lab, parts in events:
        for n in parts:
            steps[n].append((lab, parts))
    shared_labels = {lab for lab, parts in events if len(parts) > 1}

    def rel():
        return rng.choice(["<=", "<", ">=", ">"])

    def ctext(names_):
        # small linear constraint over the given variable names
        picked = rng.sample(names_, min(len(names_), rng.randint(1, 2)))
        terms = []
        for v in picked:
            c = rng.choice([1, 1, -1, 2])
            terms.append((c, v))
        out = ""
        for i, (c, v) in enumerate(terms):
            if i == 0:
                out = (f"-{v}" if c == -1 else (v if c == 1 else f"{c}*{v}"))
            else:
                out += (f" - {v}" if c == -1 else (f" + {v}" if c == 1 else f" + {c}*{v}"))
        return f"{out} {rel()} {rng.choice(CONSTS)}"

    model = []
    paths = []
    for n in names:
        locs = [f"{n.lower()}_{i}" for i in range(len(steps[n]) + 1)]
        labels = sorted({lab for lab, _ in steps[n]})
        sh = [l for l in labels if l in shared_labels]
        lo = [l for l in labels if l not in shared_labels]
        others = [v for m in names if m != n for v in vars_[m]]
        readable = []
        lines = [f"automaton {n} {{", f"  var {', '.join(vars_[n])};"]
        trans = []
        for i, (lab, parts) in enumerate(steps[n]):
            body = []
            if rng.random() < 0.4:
                pool = list(vars_[n])
                if len(parts) > 1 and rng.random() < 0.6:
                    outer = [v for m in parts if m != n for v in vars_[m]]
                    pool += outer
                body.append(f"guard {ctext(pool)};")
            if rng.random() < 0.3:
                x = rng.choice(vars_[n])
                rhs = _num(rng.choice(CONSTS))
                if len(parts) > 1 and rng.random() < 0.5:
                    outer = [v for m in parts if m != n for v in vars_[m]]
                    rhs = f"{rng.choice(outer)} + {rhs}"
                body.append(f"reset {x} := {rhs};")
            for b in body:
                for v in others:
                    if v in re.findall(r"[a-z]\d", b) and v not in readable:
                        readable.append(v)
            head = f"  trans {locs[i]} -> {locs[i + 1]} on {lab}"
            trans.append(head + (";" if not body else " { " + " ".join(body) + " }"))
        if readable:
            lines.append(f"  read {', '.join(readable)};")
        if sh:
            lines.append(f"  shared label {', '.join(sh)};")
        if lo:
            lines.append(f"  local label {', '.join(lo)};")
        for loc in locs:
            items = []
            for v in vars_[n]:
                a, b = sorted(rng.sample(RATES, 2)) if rng.random() < 0.7 else [rng.choice(RATES)] * 2
                items.append(f"flow {v} in [{_num(a)}, {_num(b)}];")
            if rng.random() < 0.3:
                items.append(f"inv {ctext(vars_[n])};")
            lines.append(f"  loc {loc} {{ {' '.join(items)} }}")
        init = " ".join(f"{v} = {_num(rng.choice(CONSTS))};" for v in vars_[n])
        lines.append(f"  init {locs[0]} {{ {init} }}")
        lines += trans
        lines.append("}")
        model.append("\n".join(lines))
        p = locs[0]
        for (lab, _), loc in zip(steps[n], locs[1:]):
            p += f" -{lab}-> {loc}"
        paths.append(f"{n}: {p}")
    finals = [f"{n}.{n.lower()}_{len(steps[n])}" for n in names]
    spec = "at " + ", ".join(finals)
    if rng.random() < 0.8:
        allv = [v for n in names for v in vars_[n]]
        c = ctext(allv)
        if rng.random() < 0.35:
            c = c.rsplit(" ", 2)[0] + f" = {rng.choice(CONSTS)}"
        spec += f" assert {c}"
    model_text = "\n\n".join(model) + "\n"
    paths_text = "\n".join(paths) + "\n"
    net = parse_model(model_text)
    ps = parse_pathset(paths_text, net)
    sp = parse_spec(spec + "\n", net)
    return net, ps, sp, (model_text, paths_text, spec)
