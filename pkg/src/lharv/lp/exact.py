"""Exact rational machinery: presolve by equality elimination and row
merging, a dictionary simplex with Bland's rule, and verification of
primal points and Farkas certificates.

Everything is computed over ``gmpy2.mpq`` when available (``Fraction``
otherwise); no floating point is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

ZERO = Q(0)
ONE = Q(1)


class DeadlineExceeded(Exception):
    """The caller's deadline passed during a solve."""


def q(x) -> "Q":
    if isinstance(x, Fraction):
        return Q(x.numerator, x.denominator)
    return Q(x)


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(int(x.numerator), int(x.denominator))


# --------------------------------------------------------------------------
# rows

@dataclass
class Row:
    """``lo (<|<=) sum(coeffs) (<|<=) hi``; the leading coefficient is 1."""

    coeffs: dict
    lo: Optional[object] = None
    hi: Optional[object] = None
    lo_strict: bool = False
    hi_strict: bool = False

    @property
    def strict(self) -> bool:
        return self.lo_strict or self.hi_strict

    def empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_strict or self.hi_strict)

    def is_equality(self) -> bool:
        return self.lo is not None and self.lo == self.hi and not self.strict

    def tighten(self, other: "Row"):
        if other.hi is not None:
            if self.hi is None or other.hi < self.hi:
                self.hi, self.hi_strict = other.hi, other.hi_strict
            elif other.hi == self.hi:
                self.hi_strict = self.hi_strict or other.hi_strict
        if other.lo is not None:
            if self.lo is None or other.lo > self.lo:
                self.lo, self.lo_strict = other.lo, other.lo_strict
            elif other.lo == self.lo:
                self.lo_strict = self.lo_strict or other.lo_strict

    def value_ok(self, v) -> bool:
        if self.lo is not None and (v < self.lo or (self.lo_strict and v == self.lo)):
            return False
        if self.hi is not None and (v > self.hi or (self.hi_strict and v == self.hi)):
            return False
        return True


def _make_row(coeffs: dict, rel: str, rhs, order: dict):
    """Normalize ``coeffs REL rhs``; returns (key, Row) or None for a constant row."""
    items = sorted(coeffs.items(), key=lambda kv: order[kv[0]])
    if not items:
        return None
    lead = items[0][1]
    norm = tuple((v, c / lead) for v, c in items)
    b = rhs / lead
    if lead < 0:
        rel = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}[rel]
    row = Row(dict(norm))
    if rel in ("<", "<="):
        row.hi, row.hi_strict = b, rel == "<"
    elif rel in (">", ">="):
        row.lo, row.lo_strict = b, rel == ">"
    else:
        row.lo = row.hi = b
    return norm, row


def _const_ok(rel: str, rhs) -> bool:
    # 0 REL rhs
    return {"<": 0 < rhs, "<=": 0 <= rhs, "=": rhs == 0, ">=": 0 >= rhs, ">": 0 > rhs}[rel]


# --------------------------------------------------------------------------
# presolve

class Reduced:
    """A system after exact equality elimination and duplicate-row merging.

    ``subst`` maps every eliminated variable to ``(coeffs, const)`` over the
    remaining variables; ``rows`` are the merged inequality rows; ``free``
    lists remaining variables in order.  ``infeasible`` holds a reason when
    presolve alone proved infeasibility.
    """

    def __init__(self, order: dict):
        self.order = order
        self.subst: dict = {}
        self._uses: dict = {}
        self._entries: dict = {}  # id -> (coeffs, rel, rhs, key, Row), reduced inequality rows
        self._groups: dict = {}   # key -> ids of entries with that normalized form
        self._merged: dict = {}   # key -> merged Row
        self._next = 0
        self.rows: list = []
        self.infeasible: Optional[str] = None

    @classmethod
    def build(cls, constraints, variables) -> "Reduced":
        r = cls({v: i for i, v in enumerate(variables)})
        r._feed(constraints)
        return r

    def copy(self) -> "Reduced":
        r = Reduced(self.order)
        r.subst = dict(self.subst)
        r._uses = {k: set(v) for k, v in self._uses.items()}
        r._entries = dict(self._entries)
        r._groups = {k: set(v) for k, v in self._groups.items()}
        r._merged = dict(self._merged)
        r._next = self._next
        r.rows = list(self.rows)
        r.infeasible = self.infeasible
        return r

    def extend(self, constraints) -> "Reduced":
        r = self.copy()
        if r.infeasible is None:
            r._feed(constraints)
        return r

    # -- internals
    def _sub(self, coeffs: dict, rhs):
        """Apply eliminations to ``coeffs <rel> rhs``."""
        out: dict = {}
        for v, c in coeffs.items():
            s = self.subst.get(v)
            if s is None:
                out[v] = out.get(v, ZERO) + c
            else:
                sc, k = s
                rhs = rhs - c * k
                for w, d in sc.items():
                    out[w] = out.get(w, ZERO) + c * d
        return {v: c for v, c in out.items() if c}, rhs

    def _eliminate(self, coeffs: dict, rhs):
        # pivot on the last variable in the fixed order
        p = max(coeffs, key=self.order.__getitem__)
        a = coeffs[p]
        expr = {v: -c / a for v, c in coeffs.items() if v != p}
        const = rhs / a
        for u in list(self._uses.get(p, ())):
            uc, uk = self.subst[u]
            uc = dict(uc)  # expressions are shared with copies; never mutate in place
            f = uc.pop(p)
            for w, d in expr.items():
                nv = uc.get(w, ZERO) + f * d
                if nv:
                    uc[w] = nv
                    self._uses.setdefault(w, set()).add(u)
                else:
                    uc.pop(w, None)
                    self._uses.get(w, set()).discard(u)
            self.subst[u] = (uc, uk + f * const)
        self._uses.pop(p, None)
        self.subst[p] = (expr, const)
        for w in expr:
            self._uses.setdefault(w, set()).add(p)
        return p

    def _add_entry(self, coeffs: dict, rel: str, rhs, touched: set) -> bool:
        coeffs, rhs = self._sub(coeffs, rhs)
        if not coeffs:
            if not _const_ok(rel, rhs):
                self.infeasible = "contradictory constant row"
                return False
            return True
        key, row = _make_row(coeffs, rel, rhs, self.order)
        i = self._next
        self._next += 1
        self._entries[i] = (coeffs, rel, rhs, key, row)
        self._groups.setdefault(key, set()).add(i)
        touched.add(key)
        return True

    def _feed(self, constraints):
        eqs, ineqs = [], []
        for c in constraints:
            coeffs = {v: q(k) for v, k in c.lhs.terms.items()}
            rel = c.relation.value
            if rel == "=":
                eqs.append((coeffs, q(c.rhs)))
            else:
                ineqs.append((coeffs, rel, q(c.rhs)))
        # eliminate the given equalities before any inequality is substituted
        new = self._eliminate_all(eqs)
        if new is None:
            return
        touched: set = set()
        if new and not self._resubstitute(new, touched):
            return
        for coeffs, rel, rhs in ineqs:
            if not self._add_entry(coeffs, rel, rhs, touched):
                return
        self._run([], touched)

    def _eliminate_all(self, eqs):
        new = set()
        for coeffs, rhs in eqs:
            coeffs, rhs = self._sub(coeffs, rhs)
            if not coeffs:
                if rhs != 0:
                    self.infeasible = "contradictory equalities"
                    return None
                continue
            new.add(self._eliminate(coeffs, rhs))
        return new

    def _resubstitute(self, new: set, touched: set) -> bool:
        # only rows mentioning a newly eliminated variable change
        hit = [i for i, e in self._entries.items() if not new.isdisjoint(e[0])]
        for i in hit:
            coeffs, rel, rhs, key, _ = self._entries.pop(i)
            self._groups[key].discard(i)
            touched.add(key)
            if not self._add_entry(coeffs, rel, rhs, touched):
                return False
        return True

    def _run(self, eqs: list, touched: set):
        while True:
            new = self._eliminate_all(eqs)
            if new is None:
                return
            eqs = []
            if new and not self._resubstitute(new, touched):
                return
            for key in touched:
                ids = self._groups.get(key)
                if not ids:
                    self._groups.pop(key, None)
                    self._merged.pop(key, None)
                    continue
                row = None
                for i in sorted(ids):
                    r = self._entries[i][4]
                    if row is None:
                        row = Row(r.coeffs, r.lo, r.hi, r.lo_strict, r.hi_strict)
                    else:
                        row.tighten(r)
                if row.empty():
                    self.infeasible = "empty interval for a row"
                    return
                if row.is_equality():
                    eqs.append((dict(key), row.lo))
                self._merged[key] = row
            touched = set()
            if not eqs:
                rows = list(self._merged.values())
                rows.sort(key=lambda r: [self.order[v] for v in r.coeffs])
                self.rows = rows
                return

    @property
    def free(self) -> list:
        seen = set()
        for r in self.rows:
            seen.update(r.coeffs)
        return sorted(seen, key=self.order.__getitem__)

    def reconstruct(self, point: dict, number=None) -> dict:
        """Full assignment from values of the remaining variables (missing ones are 0)."""
        conv = number or (lambda x: x)
        out = {}
        for v in self.order:
            if v in self.subst:
                sc, k = self.subst[v]
                val = conv(k)
                for w, d in sc.items():
                    val = val + conv(d) * point.get(w, 0)
                out[v] = val
            else:
                out[v] = point.get(v, conv(ZERO))
        return out

    def bounds(self, passes: int = 12) -> dict:
        """Variable ranges ``v -> (lo, hi)`` (None is unbounded) implied by
        the rows through exact bound propagation over their closure.  Any
        point of the system lies in these ranges.  Cached."""
        cached = self.__dict__.get("_bounds")
        if cached is not None:
            return cached
        lo: dict = {}
        hi: dict = {}

        def term_range(c, v):
            a, b = lo.get(v), hi.get(v)
            if c > 0:
                return (None if a is None else c * a), (None if b is None else c * b)
            return (None if b is None else c * b), (None if a is None else c * a)

        for _ in range(passes):
            changed = False
            for r in self.rows:
                ranges = {v: term_range(c, v) for v, c in r.coeffs.items()}
                for v, c in r.coeffs.items():
                    rest_lo = rest_hi = ZERO
                    for w, (a, b) in ranges.items():
                        if w == v:
                            continue
                        rest_lo = None if rest_lo is None or a is None else rest_lo + a
                        rest_hi = None if rest_hi is None or b is None else rest_hi + b
                    # c*v in [r.lo - rest_hi, r.hi - rest_lo]
                    tlo = None if r.lo is None or rest_hi is None else r.lo - rest_hi
                    thi = None if r.hi is None or rest_lo is None else r.hi - rest_lo
                    if c < 0:
                        tlo, thi = (None if thi is None else thi / c), (None if tlo is None else tlo / c)
                    else:
                        tlo, thi = (None if tlo is None else tlo / c), (None if thi is None else thi / c)
                    if tlo is not None and (lo.get(v) is None or tlo > lo[v]):
                        lo[v] = tlo
                        changed = True
                    if thi is not None and (hi.get(v) is None or thi < hi[v]):
                        hi[v] = thi
                        changed = True
                    ranges[v] = term_range(c, v)
            if not changed:
                break
        out = {v: (lo.get(v), hi.get(v)) for v in set(lo) | set(hi)}
        self.__dict__["_bounds"] = out
        return out

    def excludes(self, coeffs: dict, rel: str, rhs) -> bool:
        """True when the propagated bounds prove ``coeffs REL rhs`` false."""
        bnd = self.bounds()
        tot_lo = tot_hi = ZERO
        for v, c in coeffs.items():
            a, b = bnd.get(v, (None, None))
            if c < 0:
                a, b = b, a
            tot_lo = None if tot_lo is None or a is None else tot_lo + c * a
            tot_hi = None if tot_hi is None or b is None else tot_hi + c * b
        if rel in ("=", "<=", "<") and tot_lo is not None and (tot_lo > rhs or (rel == "<" and tot_lo == rhs)):
            return True
        if rel in ("=", ">=", ">") and tot_hi is not None and (tot_hi < rhs or (rel == ">" and tot_hi == rhs)):
            return True
        return False

    def check_point(self, point: dict) -> bool:
        for r in self.rows:
            val = ZERO
            for v, c in r.coeffs.items():
                val += c * point.get(v, ZERO)
            if not r.value_ok(val):
                return False
        return True


# --------------------------------------------------------------------------
# bland simplex over the reduced rows

@dataclass
class SimplexResult:
    feasible: bool
    point: Optional[dict] = None
    slack: Optional[object] = None  # optimal strictness slack, when strict rows exist
    pivots: int = 0


class _Dictionary:
    """``basic = const + sum(coef * nonbasic)`` rows plus an objective row."""

    def __init__(self):
        self.rows: dict = {}
        self.cols: dict = {}
        self.obj: dict = {}
        self.obj_const = ZERO

    def add_row(self, basic: int, const, coeffs: dict):
        self.rows[basic] = [const, coeffs]
        for j in coeffs:
            self.cols.setdefault(j, set()).add(basic)

    def pivot(self, enter: int, leave: int):
        const, coeffs = self.rows.pop(leave)
        for j in coeffs:
            self.cols[j].discard(leave)
        a = coeffs.pop(enter)
        # enter = (leave - const - sum coeffs) / a
        inv = -1 / a
        expr = {j: c * inv for j, c in coeffs.items()}
        expr[leave] = 1 / a
        econst = const * inv
        for b in list(self.cols.get(enter, ())):
            row = self.rows[b]
            f = row[1].pop(enter)
            row[0] += f * econst
            rc = row[1]
            for j, c in expr.items():
                nv = rc.get(j, ZERO) + f * c
                if nv:
                    if j not in rc:
                        self.cols.setdefault(j, set()).add(b)
                    rc[j] = nv
                elif j in rc:
                    del rc[j]
                    self.cols[j].discard(b)
        self.cols.pop(enter, None)
        self.add_row(enter, econst, expr)
        if enter in self.obj:
            f = self.obj.pop(enter)
            self.obj_const += f * econst
            for j, c in expr.items():
                nv = self.obj.get(j, ZERO) + f * c
                if nv:
                    self.obj[j] = nv
                else:
                    self.obj.pop(j, None)

    def optimize(self, check: Callable[[], None], start: int = 0) -> int:
        pivots = start
        while True:
            enter = min((j for j, c in self.obj.items() if c > 0), default=None)
            if enter is None:
                return pivots
            best = None
            for b in self.cols.get(enter, ()):
                c = self.rows[b][1][enter]
                if c < 0:
                    ratio = self.rows[b][0] / -c
                    if best is None or ratio < best[0] or (ratio == best[0] and b < best[1]):
                        best = (ratio, b)
            if best is None:
                raise ArithmeticError("unbounded direction in a bounded problem")
            self.pivot(enter, best[1])
            pivots += 1
            check()


def simplex(red: Reduced, check: Callable[[], None] = lambda: None) -> SimplexResult:
    """Decide the reduced system with a two-phase Bland simplex.

    Strict rows receive a common slack ``s`` (``0 <= s <= 1``) that phase two
    maximizes; the system is feasible iff phase one succeeds and, when any
    row is strict, the optimal ``s`` is positive.
    """
    if red.infeasible:
        return SimplexResult(False)
    free = red.free
    index = {v: k for k, v in enumerate(free)}
    n = len(free)

    # per-variable bounds from single-variable rows
    bound: dict = {}
    multi = []
    for r in red.rows:
        if len(r.coeffs) == 1:
            (v,) = r.coeffs
            bound.setdefault(v, Row({v: ONE})).tighten(r)
        else:
            multi.append(r)

    # x_v = shift + sign*y  or  y_pos - y_neg ; ids 0..n-1 for y / y_pos, extra ids for y_neg
    next_id = n
    maps: dict = {}
    leq: list = []  # (coeffs over ids, rhs, strict)
    for v in free:
        k = index[v]
        b = bound.get(v)
        if b is not None and b.lo is not None:
            maps[v] = (b.lo, {k: ONE})
            if b.lo_strict:
                leq.append(({k: -ONE}, ZERO, True))
            if b.hi is not None:
                leq.append(({k: ONE}, b.hi - b.lo, b.hi_strict))
        elif b is not None and b.hi is not None:
            maps[v] = (b.hi, {k: -ONE})
            if b.hi_strict:
                leq.append(({k: -ONE}, ZERO, True))
        else:
            maps[v] = (ZERO, {k: ONE, next_id: -ONE})
            next_id += 1
    for r in multi:
        lin: dict = {}
        const = ZERO
        for v, c in r.coeffs.items():
            shift, ys = maps[v]
            const += c * shift
            for j, d in ys.items():
                lin[j] = lin.get(j, ZERO) + c * d
        lin = {j: c for j, c in lin.items() if c}
        if r.hi is not None:
            leq.append((lin, r.hi - const, r.hi_strict))
        if r.lo is not None:
            leq.append(({j: -c for j, c in lin.items()}, const - r.lo, r.lo_strict))

    strict = any(s for _, _, s in leq)
    s_id = next_id
    x0 = -1  # phase-one auxiliary variable, smallest index
    slack_base = s_id + 1
    d = _Dictionary()
    for i, (lin, rhs, st) in enumerate(leq):
        coeffs = {j: -c for j, c in lin.items()}
        if st:
            coeffs[s_id] = -ONE
        coeffs[x0] = ONE
        d.add_row(slack_base + i, rhs, coeffs)
    if strict:
        d.add_row(slack_base + len(leq), ONE, {s_id: -ONE})

    pivots = 0
    worst = min(d.rows, key=lambda b: (d.rows[b][0], b), default=None)
    if worst is not None and d.rows[worst][0] < 0:
        d.obj = {x0: -ONE}
        d.pivot(x0, worst)
        pivots = d.optimize(check, 1)
        if d.obj_const < 0:
            return SimplexResult(False, pivots=pivots)
        if x0 in d.rows:
            _, coeffs = d.rows[x0]
            enter = min(coeffs, key=lambda j: j) if coeffs else None
            if enter is not None:
                d.pivot(enter, x0)
                pivots += 1
    # drop x0 from every row
    for b in list(d.cols.get(x0, ())):
        d.rows[b][1].pop(x0, None)
    d.cols.pop(x0, None)
    d.rows.pop(x0, None)

    slack_val = None
    if strict:
        d.obj = {}
        d.obj_const = ZERO
        if s_id in d.rows:
            const, coeffs = d.rows[s_id]
            d.obj_const = const
            d.obj = dict(coeffs)
        else:
            d.obj = {s_id: ONE}
        pivots = d.optimize(check, pivots)
        slack_val = d.obj_const
        if slack_val <= 0:
            return SimplexResult(False, slack=slack_val, pivots=pivots)

    values = {j: d.rows[j][0] for j in d.rows if j < s_id}
    point = {}
    for v in free:
        shift, ys = maps[v]
        val = shift
        for j, c in ys.items():
            val += c * values.get(j, ZERO)
        point[v] = val
    return SimplexResult(True, point, slack_val, pivots)


# --------------------------------------------------------------------------
# exact linear algebra for certificate snapping

def solve_linear(equations: list, unknowns: list, hint: dict) -> Optional[dict]:
    """Exact solution of ``sum(coeffs[u] * u) = rhs`` equations.

    Unknowns not fixed by the equations take their (rational) ``hint``
    value.  Returns None when the equations are inconsistent.
    """
    rows = [(dict(c), r) for c, r in equations]
    pivots = []  # (unknown, coeffs, rhs) with coeffs over later unknowns
    for u in unknowns:
        k = next((i for i, (c, _) in enumerate(rows) if c.get(u)), None)
        if k is None:
            continue
        c, r = rows.pop(k)
        a = c.pop(u)
        c = {w: x / a for w, x in c.items()}
        r = r / a
        new_rows = []
        for oc, orr in rows:
            f = oc.pop(u, None)
            if f:
                for w, x in c.items():
                    nv = oc.get(w, ZERO) - f * x
                    if nv:
                        oc[w] = nv
                    else:
                        oc.pop(w, None)
                orr = orr - f * r
            new_rows.append((oc, orr))
        rows = new_rows
        pivots.append((u, c, r))
    if any(r != 0 for c, r in rows if not c):
        return None
    if any(c for c, _ in rows):  # pragma: no cover - every unknown was offered as pivot
        return None
    sol = {u: hint.get(u, ZERO) for u in unknowns}
    for u, c, r in reversed(pivots):
        val = r
        for w, x in c.items():
            val -= x * sol[w]
        sol[u] = val
    return sol


def leq_form(red: Reduced) -> list:
    """Rows as ``(coeffs, rhs, strict)`` with meaning ``coeffs.x (<|<=) rhs``."""
    out = []
    for r in red.rows:
        if r.hi is not None:
            out.append((r.coeffs, r.hi, r.hi_strict))
        if r.lo is not None:
            out.append(({v: -c for v, c in r.coeffs.items()}, -r.lo, r.lo_strict))
    return out


def verify_farkas(rows: list, y: dict) -> bool:
    """``y >= 0``, ``y.A = 0`` and either ``y.b < 0`` or ``y.b = 0`` with
    positive weight on a strict row: the rows cannot hold together."""
    if any(v < 0 for v in y.values()):
        return False
    comb: dict = {}
    yb = ZERO
    strict_w = ZERO
    for i, w in y.items():
        if not w:
            continue
        coeffs, rhs, st = rows[i]
        for v, c in coeffs.items():
            comb[v] = comb.get(v, ZERO) + w * c
        yb += w * rhs
        if st:
            strict_w += w
    if any(comb.values()):
        return False
    return yb < 0 or (yb == 0 and strict_w > 0)
